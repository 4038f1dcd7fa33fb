//! Exact Euclidean distances between points and polytopes.
//!
//! All results are squared distances in rational arithmetic; square roots
//! only happen at reporting boundaries elsewhere. The point-to-polytope
//! distance enumerates affinely independent vertex subsets, projects onto
//! each subset's affine hull, and keeps projections with nonnegative
//! barycentric coordinates. The nearest point lies in the relative interior
//! of some face and is the orthogonal projection onto any independent
//! subset spanning that face, so the minimum over candidates is exact.

use crate::error::{Error, Result};
use crate::geometry::polytope::VPolytope;
use crate::linalg::{self, RatMat, RatVec};
use crate::rational::{rone, Rational};
use itertools::Itertools;
use num_traits::Signed;

/// Squared distance from `p` to `conv(vertices of poly)`.
pub fn point_polytope_distance_sq(p: &[Rational], poly: &VPolytope) -> Result<Rational> {
    if poly.is_empty() {
        return Err(Error::EmptyInput("distance to an empty polytope"));
    }
    if p.len() != poly.dim() {
        return Err(Error::DimensionMismatch {
            expected: poly.dim(),
            got: p.len(),
        });
    }
    let verts = poly.vertices();
    let mut best: Option<Rational> = None;
    let mut consider = |cand: Rational| {
        if best.as_ref().is_none_or(|b| cand < *b) {
            best = Some(cand);
        }
    };
    for v in verts {
        consider(linalg::norm_sq(&linalg::vec_sub(p, v)));
    }
    let max_k = (poly.dim() + 1).min(verts.len());
    for k in 2..=max_k {
        for combo in verts.iter().combinations(k) {
            if let Some(d) = projection_distance_sq(p, &combo) {
                consider(d);
            }
        }
    }
    Ok(best.unwrap())
}

/// Projects `p` onto the affine hull of `pts` and returns the squared
/// distance when the projection has nonnegative barycentric coordinates;
/// `None` for dependent subsets or projections outside the simplex.
fn projection_distance_sq(p: &[Rational], pts: &[&RatVec]) -> Option<Rational> {
    let q0 = pts[0];
    let dirs: RatMat = pts[1..].iter().map(|q| linalg::vec_sub(q, q0)).collect();
    let gram: RatMat = dirs
        .iter()
        .map(|di| dirs.iter().map(|dj| linalg::dot(di, dj)).collect())
        .collect();
    let rel = linalg::vec_sub(p, q0);
    let rhs: RatVec = dirs.iter().map(|di| linalg::dot(di, &rel)).collect();
    let mu = linalg::solve_unique(&gram, &rhs).ok()?;
    if mu.iter().any(Signed::is_negative) {
        return None;
    }
    let mu_sum: Rational = mu.iter().sum();
    if mu_sum > rone() {
        return None;
    }
    let mut x = q0.clone();
    for (m, dir) in mu.iter().zip(&dirs) {
        x = linalg::vec_add(&x, &linalg::vec_scale(m, dir));
    }
    Some(linalg::norm_sq(&linalg::vec_sub(p, &x)))
}

/// Squared Hausdorff distance between two polytopes. Point-to-convex-set
/// distance is convex, so each directed supremum is attained at a vertex.
pub fn hausdorff_distance_sq(a: &VPolytope, b: &VPolytope) -> Result<Rational> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("Hausdorff distance of an empty polytope"));
    }
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    let mut best = crate::rational::rzero();
    for (from, to) in [(a, b), (b, a)] {
        for v in from.vertices() {
            let d = point_polytope_distance_sq(v, to)?;
            if d > best {
                best = d;
            }
        }
    }
    Ok(best)
}
