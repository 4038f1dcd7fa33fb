//! Exact rational linear programming.
//!
//! A dense two-phase simplex over arbitrary-precision rationals. Problems in
//! this crate are small (at most a few hundred rows) but are solved many
//! times over the same feasible region with different objectives, so the
//! solver keeps its tableau alive between calls: phase 1 runs once in
//! [`LpSolver::new`], and each [`LpSolver::optimize`] call rebuilds only the
//! reduced-cost row before continuing with phase 2 pivots.
//!
//! Pivoting uses Dantzig's rule and falls back to Bland's rule after a run
//! of degenerate pivots, which guarantees termination.

use crate::error::{Error, Result};
use crate::linalg::{RatMat, RatVec};
use crate::rational::{rzero, Rational};
use num_traits::{One, Signed, Zero};

/// Optimization direction for [`LpSolver::optimize`] and [`solve_problem`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

/// A linear program over `num_vars` variables: rows of `a_ineq x <= b_ineq`
/// and `a_eq x = b_eq`. Variables are free unless `nonneg` is set, in which
/// case all of them are constrained to be nonnegative.
#[derive(Debug, Clone, Default)]
pub struct LpProblem {
    pub num_vars: usize,
    pub nonneg: bool,
    pub a_ineq: RatMat,
    pub b_ineq: RatVec,
    pub a_eq: RatMat,
    pub b_eq: RatVec,
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            ..Default::default()
        }
    }

    pub fn new_nonneg(num_vars: usize) -> Self {
        LpProblem {
            num_vars,
            nonneg: true,
            ..Default::default()
        }
    }

    pub fn add_ineq(&mut self, row: RatVec, rhs: Rational) {
        debug_assert_eq!(row.len(), self.num_vars);
        self.a_ineq.push(row);
        self.b_ineq.push(rhs);
    }

    pub fn add_eq(&mut self, row: RatVec, rhs: Rational) {
        debug_assert_eq!(row.len(), self.num_vars);
        self.a_eq.push(row);
        self.b_eq.push(rhs);
    }

    fn validate(&self) -> Result<()> {
        for row in self.a_ineq.iter().chain(&self.a_eq) {
            if row.len() != self.num_vars {
                return Err(Error::DimensionMismatch {
                    expected: self.num_vars,
                    got: row.len(),
                });
            }
        }
        if self.a_ineq.len() != self.b_ineq.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(Error::Malformed(
                "constraint matrix and right-hand side lengths differ".into(),
            ));
        }
        Ok(())
    }
}

/// Result of one optimization call.
#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: RatVec, value: Rational },
    Infeasible,
    Unbounded,
}

const DEGENERATE_PIVOT_LIMIT: usize = 60;
const PIVOT_CAP: usize = 100_000;

/// Simplex state reusable across objectives over one feasible region.
pub struct LpSolver {
    num_vars: usize,
    nonneg: bool,
    ncols: usize,
    first_artificial: usize,
    /// Rows of the tableau, each of length `ncols + 1` with the right-hand
    /// side in the last slot. Invariant outside of `pivot`: `rhs >= 0`.
    body: RatMat,
    basis: Vec<usize>,
    feasible: bool,
}

impl LpSolver {
    /// Builds the standard-form tableau and runs phase 1. A solver is
    /// returned even when the problem is infeasible; `optimize` then reports
    /// [`LpOutcome::Infeasible`] without further work.
    pub fn new(problem: &LpProblem) -> Result<LpSolver> {
        problem.validate()?;
        let n = problem.num_vars;
        let nx = if problem.nonneg { n } else { 2 * n };
        let nslack = problem.a_ineq.len();
        let nrows = nslack + problem.a_eq.len();

        // Assemble rows over [x columns | slacks], normalizing rhs >= 0.
        let mut rows: Vec<(RatVec, Rational)> = Vec::with_capacity(nrows);
        let expand = |row: &RatVec| -> RatVec {
            let mut out = Vec::with_capacity(nx);
            out.extend(row.iter().cloned());
            if !problem.nonneg {
                out.extend(row.iter().map(|v| -v));
            }
            out
        };
        for (i, row) in problem.a_ineq.iter().enumerate() {
            let mut r = expand(row);
            r.resize(nx + nslack, rzero());
            r[nx + i] = Rational::from_integer(1.into());
            rows.push((r, problem.b_ineq[i].clone()));
        }
        for (i, row) in problem.a_eq.iter().enumerate() {
            let mut r = expand(row);
            r.resize(nx + nslack, rzero());
            rows.push((r, problem.b_eq[i].clone()));
        }
        for (r, rhs) in &mut rows {
            if rhs.is_negative() {
                for v in r.iter_mut() {
                    *v = -v.clone();
                }
                *rhs = -rhs.clone();
            }
        }

        // Seed the basis with unit slack columns where possible; the rest of
        // the rows get artificial variables.
        let mut basis = Vec::with_capacity(nrows);
        let mut needs_artificial = Vec::new();
        for (i, (r, _)) in rows.iter().enumerate() {
            let natural = (nx..nx + nslack).find(|&c| {
                r[c].is_one()
                    && rows
                        .iter()
                        .enumerate()
                        .all(|(k, (rk, _))| k == i || rk[c].is_zero())
            });
            match natural {
                Some(c) => basis.push(c),
                None => {
                    basis.push(usize::MAX);
                    needs_artificial.push(i);
                }
            }
        }
        let first_artificial = nx + nslack;
        let ncols = first_artificial + needs_artificial.len();
        let mut body: RatMat = Vec::with_capacity(nrows);
        for (i, (mut r, rhs)) in rows.into_iter().enumerate() {
            r.resize(ncols, rzero());
            if let Some(k) = needs_artificial.iter().position(|&j| j == i) {
                let c = first_artificial + k;
                r[c] = Rational::from_integer(1.into());
                basis[i] = c;
            }
            r.push(rhs);
            body.push(r);
        }

        let mut solver = LpSolver {
            num_vars: n,
            nonneg: problem.nonneg,
            ncols,
            first_artificial,
            body,
            basis,
            feasible: false,
        };
        solver.run_phase1()?;
        Ok(solver)
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    fn run_phase1(&mut self) -> Result<()> {
        if self.ncols == self.first_artificial {
            // every row already has a slack basis; the all-slack point works
            self.feasible = true;
            return Ok(());
        }
        // Reduced costs for minimizing the sum of artificials.
        let mut obj = vec![rzero(); self.ncols + 1];
        for c in self.first_artificial..self.ncols {
            obj[c] = Rational::from_integer(1.into());
        }
        for (i, &b) in self.basis.iter().enumerate() {
            if b >= self.first_artificial {
                let row = self.body[i].clone();
                for (o, v) in obj.iter_mut().zip(&row) {
                    *o -= v;
                }
            }
        }
        match self.run_simplex(&mut obj, self.ncols)? {
            SimplexEnd::Optimal => {}
            SimplexEnd::Unbounded => {
                return Err(Error::Malformed(
                    "phase 1 of the simplex reported an unbounded objective".into(),
                ))
            }
        }
        let w = -obj[self.ncols].clone();
        if !w.is_zero() {
            self.feasible = false;
            return Ok(());
        }
        self.feasible = true;
        self.evict_artificials();
        Ok(())
    }

    /// After phase 1 ends at zero, any artificial still in the basis sits at
    /// value zero. Pivot it out on some structural column, or drop its row
    /// entirely when the row has become redundant.
    fn evict_artificials(&mut self) {
        let mut i = 0;
        while i < self.body.len() {
            if self.basis[i] < self.first_artificial {
                i += 1;
                continue;
            }
            let c = (0..self.first_artificial).find(|&c| !self.body[i][c].is_zero());
            match c {
                Some(c) => {
                    self.pivot(i, c, &mut Vec::new());
                    i += 1;
                }
                None => {
                    self.body.swap_remove(i);
                    self.basis.swap_remove(i);
                }
            }
        }
    }

    /// Optimizes `objective . x` (a vector over the original variables) over
    /// the stored feasible region.
    pub fn optimize(&mut self, objective: &[Rational], sense: Sense) -> Result<LpOutcome> {
        if objective.len() != self.num_vars {
            return Err(Error::DimensionMismatch {
                expected: self.num_vars,
                got: objective.len(),
            });
        }
        if !self.feasible {
            return Ok(LpOutcome::Infeasible);
        }
        // Standard-form costs for minimization.
        let mut cost = vec![rzero(); self.ncols];
        for (j, cj) in objective.iter().enumerate() {
            let cj = match sense {
                Sense::Minimize => cj.clone(),
                Sense::Maximize => -cj.clone(),
            };
            cost[j] = cj.clone();
            if !self.nonneg {
                cost[self.num_vars + j] = -cj;
            }
        }
        // Reduced-cost row relative to the current basis.
        let mut obj = vec![rzero(); self.ncols + 1];
        obj[..self.ncols].clone_from_slice(&cost);
        for (i, &b) in self.basis.iter().enumerate() {
            if !cost[b].is_zero() {
                let f = cost[b].clone();
                let row = self.body[i].clone();
                for (o, v) in obj.iter_mut().zip(&row) {
                    *o -= &f * v;
                }
            }
        }
        match self.run_simplex(&mut obj, self.first_artificial)? {
            SimplexEnd::Unbounded => Ok(LpOutcome::Unbounded),
            SimplexEnd::Optimal => {
                let value = -obj[self.ncols].clone();
                let value = match sense {
                    Sense::Minimize => value,
                    Sense::Maximize => -value,
                };
                Ok(LpOutcome::Optimal {
                    x: self.extract_x(),
                    value,
                })
            }
        }
    }

    fn extract_x(&self) -> RatVec {
        let mut vals = vec![rzero(); self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            vals[b] = self.body[i][self.ncols].clone();
        }
        (0..self.num_vars)
            .map(|j| {
                if self.nonneg {
                    vals[j].clone()
                } else {
                    &vals[j] - &vals[self.num_vars + j]
                }
            })
            .collect()
    }

    /// Minimizes the objective encoded in `obj` (reduced costs plus negated
    /// value in the last slot), pivoting on columns below `col_limit`.
    fn run_simplex(&mut self, obj: &mut RatVec, col_limit: usize) -> Result<SimplexEnd> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        for _ in 0..PIVOT_CAP {
            let entering = if bland {
                (0..col_limit).find(|&c| obj[c].is_negative())
            } else {
                (0..col_limit)
                    .filter(|&c| obj[c].is_negative())
                    .min_by(|&a, &b| obj[a].cmp(&obj[b]))
            };
            let Some(c) = entering else {
                return Ok(SimplexEnd::Optimal);
            };
            // Ratio test: smallest rhs / pivot over positive pivots, ties
            // broken by smallest basis index.
            let mut leave: Option<(usize, Rational)> = None;
            for i in 0..self.body.len() {
                if !self.body[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.body[i][self.ncols] / &self.body[i][c];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => {
                        ratio < *lr || (ratio == *lr && self.basis[i] < self.basis[*li])
                    }
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            let Some((r, ratio)) = leave else {
                return Ok(SimplexEnd::Unbounded);
            };
            if ratio.is_zero() {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_PIVOT_LIMIT {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c, obj);
        }
        Err(Error::PivotCapExceeded)
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut RatVec) {
        let inv = self.body[r][c].recip();
        for v in &mut self.body[r] {
            *v *= &inv;
        }
        let prow = self.body[r].clone();
        for (i, row) in self.body.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&prow) {
                *v -= &f * p;
            }
        }
        if !obj.is_empty() && !obj[c].is_zero() {
            let f = obj[c].clone();
            for (v, p) in obj.iter_mut().zip(&prow) {
                *v -= &f * p;
            }
        }
        self.basis[r] = c;
    }
}

enum SimplexEnd {
    Optimal,
    Unbounded,
}

/// One-shot convenience wrapper around [`LpSolver`].
pub fn solve_problem(problem: &LpProblem, objective: &[Rational], sense: Sense) -> Result<LpOutcome> {
    LpSolver::new(problem)?.optimize(objective, sense)
}

/// Phase-1 feasibility without an objective.
pub fn lp_feasible(problem: &LpProblem) -> Result<bool> {
    Ok(LpSolver::new(problem)?.is_feasible())
}
