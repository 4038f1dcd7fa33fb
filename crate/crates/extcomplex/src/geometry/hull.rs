//! Convex hull facets and vertex enumeration, both by exact brute force.
//!
//! Hulls work at desk scale (a few dozen vertices, dimension up to six), so
//! facet candidates are enumerated as point subsets and checked for
//! one-sidedness. To keep the inner loop in integer arithmetic the vertex
//! coordinates are rescaled per axis onto integers first; candidate normals
//! then come from fraction-free cofactor expansion.

use crate::error::{Error, Result};
use crate::geometry::lp::{LpOutcome, Sense};
use crate::geometry::polytope::{HPolyhedron, VPolytope};
use crate::linalg::{self, RatMat, RatVec};
use crate::rational::{rzero, Rational};
use itertools::Itertools;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeSet;

/// Exact H-description of `conv(vertices)`: affine-hull equations plus one
/// canonical inequality per facet. Facet normals are primitive integer
/// vectors oriented by the geometry; equations are primitive with the first
/// nonzero entry positive.
pub fn convex_hull_facets(p: &VPolytope) -> Result<HPolyhedron> {
    if p.is_empty() {
        return Err(Error::EmptyInput("convex_hull_facets needs a non-empty polytope"));
    }
    let d = p.dim();
    let verts = p.vertices();
    let v0 = &verts[0];
    let diffs: RatMat = verts[1..]
        .iter()
        .map(|v| linalg::vec_sub(v, v0))
        .collect();

    // Affine-hull equations: every vector annihilating all difference
    // directions yields one.
    let null_basis = if diffs.is_empty() {
        linalg::identity(d)
    } else {
        linalg::nullspace(&diffs)
    };
    let mut eqs: Vec<(RatVec, Rational)> = Vec::new();
    for a in &null_basis {
        let (a, b) = canonical_equation(a, &linalg::dot(a, v0));
        eqs.push((a, b));
    }
    eqs.sort();

    // Pivot coordinates parametrize the affine hull; facets are computed in
    // that projection, where the polytope is full-dimensional.
    let pivots = {
        let mut reduced = diffs.clone();
        linalg::rref(&mut reduced)
    };
    let r = pivots.len();
    if r == 0 {
        return HPolyhedron::new(d, Vec::new(), eqs);
    }

    // Per-axis integer rescaling of the projected vertices.
    let mut scales: Vec<BigInt> = vec![BigInt::one(); r];
    for (j, &c) in pivots.iter().enumerate() {
        for v in verts {
            scales[j] = scales[j].lcm(v[c].denom());
        }
    }
    let pts: Vec<Vec<BigInt>> = verts
        .iter()
        .map(|v| {
            pivots
                .iter()
                .enumerate()
                .map(|(j, &c)| v[c].numer() * &scales[j] / v[c].denom())
                .collect()
        })
        .collect();

    let mut facets: BTreeSet<(Vec<BigInt>, BigInt)> = BTreeSet::new();
    if r == 1 {
        let lo = pts.iter().map(|q| q[0].clone()).min().unwrap();
        let hi = pts.iter().map(|q| q[0].clone()).max().unwrap();
        facets.insert(reduce_facet(vec![-BigInt::one()], -lo));
        facets.insert(reduce_facet(vec![BigInt::one()], hi));
    } else {
        for combo in (0..pts.len()).combinations(r) {
            let base = &pts[combo[0]];
            let rows: Vec<Vec<BigInt>> = combo[1..]
                .iter()
                .map(|&i| pts[i].iter().zip(base).map(|(x, y)| x - y).collect())
                .collect();
            let normal = linalg::integer_cross(&rows);
            if normal.iter().all(Zero::is_zero) {
                continue;
            }
            let b: BigInt = normal.iter().zip(base).map(|(n, x)| n * x).sum();
            let mut above = false;
            let mut below = false;
            for q in &pts {
                let val: BigInt = normal.iter().zip(q).map(|(n, x)| n * x).sum();
                match val.cmp(&b) {
                    std::cmp::Ordering::Greater => above = true,
                    std::cmp::Ordering::Less => below = true,
                    std::cmp::Ordering::Equal => {}
                }
                if above && below {
                    break;
                }
            }
            if above && below {
                continue;
            }
            if !above {
                facets.insert(reduce_facet(normal.clone(), b.clone()));
            }
            if !below {
                facets.insert(reduce_facet(
                    normal.iter().map(|n| -n).collect(),
                    -b,
                ));
            }
        }
    }

    // Undo the per-axis scaling and lift normals back into R^d on the pivot
    // coordinates.
    let mut ineqs: Vec<(RatVec, Rational)> = Vec::new();
    for (normal, b) in facets {
        let lifted: Vec<BigInt> = {
            let mut full = vec![BigInt::zero(); d];
            for (j, &c) in pivots.iter().enumerate() {
                full[c] = &normal[j] * &scales[j];
            }
            full
        };
        let (lifted, b) = reduce_ints(lifted, b);
        ineqs.push((
            lifted.into_iter().map(Rational::from_integer).collect(),
            Rational::from_integer(b),
        ));
    }
    ineqs.sort();
    HPolyhedron::new(d, ineqs, eqs)
}

/// Divides an integer row and right-hand side by their common gcd.
fn reduce_ints(mut a: Vec<BigInt>, mut b: BigInt) -> (Vec<BigInt>, BigInt) {
    let mut g = b.abs();
    for v in &a {
        g = g.gcd(v);
    }
    if !g.is_zero() && !g.is_one() {
        for v in &mut a {
            *v /= &g;
        }
        b /= &g;
    }
    (a, b)
}

fn reduce_facet(a: Vec<BigInt>, b: BigInt) -> (Vec<BigInt>, BigInt) {
    reduce_ints(a, b)
}

/// Canonical equation form: primitive integer coefficients, first nonzero
/// entry positive.
fn canonical_equation(a: &[Rational], b: &Rational) -> (RatVec, Rational) {
    let mut row: Vec<Rational> = a.to_vec();
    row.push(b.clone());
    let mut ints = linalg::primitive_integer_row(&row);
    if let Some(first) = ints.iter().find(|v| !v.is_zero()) {
        if first.is_negative() {
            for v in &mut ints {
                *v = -v.clone();
            }
        }
    }
    let b = Rational::from_integer(ints.pop().unwrap());
    (ints.into_iter().map(Rational::from_integer).collect(), b)
}

/// All vertices of a bounded H-polyhedron, by solving every maximal
/// independent subsystem of active constraints.
pub fn enumerate_vertices(h: &HPolyhedron) -> Result<VPolytope> {
    let d = h.dim();
    if d == 0 {
        // constructible zero-dimensional systems are feasible by the
        // trivially-empty-row check, so the single point of R^0 remains
        return VPolytope::from_extreme_points(0, vec![Vec::new()]);
    }
    let mut solver = h.lp_solver()?;
    if !solver.is_feasible() {
        return Ok(VPolytope::empty(d));
    }
    for j in 0..d {
        for sense in [Sense::Maximize, Sense::Minimize] {
            let mut obj = vec![rzero(); d];
            obj[j] = Rational::one();
            if let LpOutcome::Unbounded = solver.optimize(&obj, sense)? {
                return Err(Error::Unbounded);
            }
        }
    }

    let rows: Vec<&(RatVec, Rational)> = h.eqs().iter().chain(h.ineqs()).collect();
    let mut found: BTreeSet<RatVec> = BTreeSet::new();
    for combo in (0..rows.len()).combinations(d) {
        let a: RatMat = combo.iter().map(|&i| rows[i].0.clone()).collect();
        let b: RatVec = combo.iter().map(|&i| rows[i].1.clone()).collect();
        if linalg::rank(&a) != d {
            continue;
        }
        let x = linalg::solve_unique(&a, &b)?;
        if h.contains(&x) {
            found.insert(x);
        }
    }
    VPolytope::from_extreme_points(d, found.into_iter().collect())
}
