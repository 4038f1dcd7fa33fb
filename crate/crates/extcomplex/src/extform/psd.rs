//! Exact positive semidefiniteness testing for rational symmetric matrices.
//!
//! The test runs an LDL^T factorization with symmetric pivoting on the
//! diagonal. A symmetric matrix is positive semidefinite exactly when the
//! factorization completes with nonnegative pivots and every zero pivot
//! eliminates a row and column that are entirely zero in the current Schur
//! complement. When the test fails we return a rational vector `v` with
//! `v^T M v < 0`, so callers can replay the refutation independently.

use num_traits::{Signed, Zero};

use crate::linalg::{identity, RatMat, RatVec};
use crate::rational::{rint, rzero, Rational};
use crate::{Error, Result};

/// Outcome of an exact PSD test.
#[derive(Clone, Debug)]
pub enum PsdCheck {
    /// The matrix is positive semidefinite; the factorization is returned so
    /// callers can reuse the pivots, permutation, and kernel information.
    Psd(LdltFactorization),
    /// The matrix is not positive semidefinite. The witness `v` satisfies
    /// `v^T M v < 0` exactly.
    NotPsd { witness: RatVec },
}

/// A rational factorization `P M P^T = L D L^T` of a symmetric PSD matrix,
/// where `P` is the row permutation sending original index `perm[i]` to
/// position `i`, `L` is unit lower triangular, and `D = diag(pivots)`.
///
/// Pivots are ordered so that the first `rank` entries are positive and the
/// rest are zero.
#[derive(Clone, Debug)]
pub struct LdltFactorization {
    /// `perm[i]` is the original index stored at permuted position `i`.
    pub perm: Vec<usize>,
    /// Unit lower triangular factor in the permuted ordering.
    pub unit_lower: RatMat,
    /// Diagonal of `D`; positive for the first `rank` entries, then zero.
    pub pivots: Vec<Rational>,
    /// Number of positive pivots, which equals the rank of the matrix.
    pub rank: usize,
}

impl LdltFactorization {
    /// Dimension of the factored matrix.
    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Reconstructs `P M P^T` from the factors. Intended for tests and
    /// consistency checks.
    pub fn reassemble_permuted(&self) -> RatMat {
        let n = self.dim();
        let mut out = vec![vec![rzero(); n]; n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = rzero();
                for k in 0..n {
                    acc += &self.unit_lower[i][k] * &self.pivots[k] * &self.unit_lower[j][k];
                }
                out[i][j] = acc;
            }
        }
        out
    }

    /// Basis of the kernel of the original matrix, one column per zero pivot.
    ///
    /// For position `p >= rank` the permuted vector solving `L^T w = e_p` is
    /// in the kernel of `P M P^T`; undoing the permutation gives a kernel
    /// vector of `M` itself.
    pub fn kernel_basis(&self) -> Vec<RatVec> {
        let n = self.dim();
        let mut basis = Vec::with_capacity(n - self.rank);
        for p in self.rank..n {
            let mut unit = vec![rzero(); n];
            unit[p] = rint(1);
            let permuted = solve_unit_upper(&self.unit_lower, &unit);
            let mut original = vec![rzero(); n];
            for i in 0..n {
                original[self.perm[i]] = permuted[i].clone();
            }
            basis.push(original);
        }
        basis
    }
}

/// Tests whether a symmetric rational matrix is positive semidefinite.
///
/// Returns an error when the input is not square or not exactly symmetric.
pub fn ldlt_psd(m: &RatMat) -> Result<PsdCheck> {
    let n = m.len();
    for row in m {
        if row.len() != n {
            return Err(Error::Malformed("psd test requires a square matrix".into()));
        }
    }
    for i in 0..n {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::Malformed(
                    "psd test requires a symmetric matrix".into(),
                ));
            }
        }
    }

    let mut a: RatMat = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut lower = identity(n);
    let mut pivots = vec![rzero(); n];

    for k in 0..n {
        // Largest remaining diagonal entry. For a PSD Schur complement the
        // diagonal dominates in the sense that a zero maximal diagonal forces
        // the whole remaining block to vanish.
        let mut best = k;
        for i in k + 1..n {
            if a[i][i] > a[best][best] {
                best = i;
            }
        }

        if a[best][best].is_positive() {
            symmetric_swap(&mut a, &mut lower, &mut perm, k, best);
            let d = a[k][k].clone();
            pivots[k] = d.clone();
            for i in k + 1..n {
                lower[i][k] = &a[i][k] / &d;
            }
            for i in k + 1..n {
                for j in k + 1..=i {
                    let upd = &lower[i][k] * &a[k][j];
                    a[i][j] -= &upd;
                    if i != j {
                        a[j][i] = a[i][j].clone();
                    }
                }
            }
            continue;
        }

        // No positive diagonal remains. Either the rest of the Schur
        // complement is zero (PSD, rank k) or we can exhibit a vector with
        // negative quadratic form supported on at most two coordinates.
        for i in k..n {
            if a[i][i].is_negative() {
                let mut w = vec![rzero(); n];
                w[i] = rint(1);
                return Ok(not_psd_witness(&lower, &perm, w));
            }
        }
        for i in k..n {
            for j in k..i {
                if !a[i][j].is_zero() {
                    // Diagonal entries i,i and j,j are zero here, so the form
                    // on (e_i, e_j) is 2 s w_i w_j with s = a[i][j] != 0.
                    let mut w = vec![rzero(); n];
                    w[i] = rint(1);
                    w[j] = if a[i][j].is_positive() { rint(-1) } else { rint(1) };
                    return Ok(not_psd_witness(&lower, &perm, w));
                }
            }
        }
        return Ok(PsdCheck::Psd(LdltFactorization {
            perm,
            unit_lower: lower,
            pivots,
            rank: k,
        }));
    }

    Ok(PsdCheck::Psd(LdltFactorization {
        perm,
        unit_lower: lower,
        pivots,
        rank: n,
    }))
}

/// Convenience wrapper returning just the verdict.
pub fn is_psd(m: &RatMat) -> Result<bool> {
    Ok(matches!(ldlt_psd(m)?, PsdCheck::Psd(_)))
}

/// Maps a witness `w` for the current Schur complement back to the original
/// coordinates. With the permuted matrix factored as
/// `L [D 0; 0 S] L^T` and `w^T S w < 0` (here `w` lives in the full permuted
/// space but is supported on the uneliminated coordinates), the vector
/// `v = L^{-T} w` satisfies `v^T (P M P^T) v = w^T S w < 0`.
fn not_psd_witness(lower: &RatMat, perm: &[usize], w: RatVec) -> PsdCheck {
    let n = perm.len();
    let permuted = solve_unit_upper(lower, &w);
    let mut witness = vec![rzero(); n];
    for i in 0..n {
        witness[perm[i]] = permuted[i].clone();
    }
    PsdCheck::NotPsd { witness }
}

/// Solves `L^T v = w` for unit lower triangular `L` by back substitution.
fn solve_unit_upper(lower: &RatMat, w: &[Rational]) -> RatVec {
    let n = w.len();
    let mut v = vec![rzero(); n];
    for i in (0..n).rev() {
        let mut acc = w[i].clone();
        for j in i + 1..n {
            acc -= &lower[j][i] * &v[j];
        }
        v[i] = acc;
    }
    v
}

/// Swaps permuted positions `k` and `j` (rows and columns of the working
/// matrix, rows of the partial `L`, and the permutation record).
fn symmetric_swap(a: &mut RatMat, lower: &mut RatMat, perm: &mut [usize], k: usize, j: usize) {
    if k == j {
        return;
    }
    a.swap(k, j);
    for row in a.iter_mut() {
        row.swap(k, j);
    }
    // Only the already computed columns 0..k of L are nontrivial; swapping
    // the full rows also exchanges the diagonal ones, so restore them.
    lower.swap(k, j);
    lower[k][k] = rint(1);
    lower[j][j] = rint(1);
    lower[k][j] = rzero();
    lower[j][k] = rzero();
    perm.swap(k, j);
}

/// Evaluates the quadratic form `v^T M v` exactly.
pub fn quadratic_form(m: &RatMat, v: &[Rational]) -> Rational {
    let mut acc = rzero();
    for (i, row) in m.iter().enumerate() {
        for (j, entry) in row.iter().enumerate() {
            acc += &v[i] * entry * &v[j];
        }
    }
    acc
}
