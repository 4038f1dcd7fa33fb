//! Maximum-volume inscribed (John) ellipsoids.
//!
//! This is the one deliberately floating-point corner of the geometry
//! stack. The optimizer maximizes `log det B` over ellipsoids
//! `{B u + c : ‖u‖ ≤ 1}` subject to the per-facet support conditions
//! `‖B aᵢ‖ ≤ bᵢ − aᵢ·c`, via a log-barrier on
//! `hᵢ = (bᵢ − aᵢ·c)² − ‖B aᵢ‖²` with damped Newton steps. Simplices skip
//! the optimizer: their John ellipsoid is the centroid paired with the
//! scaled vertex scatter matrix, which the triangle's Steiner inellipse
//! pins down in tests.
//!
//! Results are certified a posteriori: the inner inclusion by facet slacks
//! (with a final shrink making it hold outright) and the outer inclusion
//! `P ⊆ c + d·(E − c)` on the exact vertex set.

use crate::error::{Error, Result};
use crate::geometry::hull::enumerate_vertices;
use crate::geometry::lp::{LpOutcome, LpProblem, LpSolver, Sense};
use crate::geometry::polytope::{Ellipsoid, HPolyhedron, VPolytope};
use crate::linalg::RatVec;
use crate::rational::{self, rone, rzero, Rational};
use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};

/// Ellipsoid plus the diagnostics of its certificate.
#[derive(Debug, Clone)]
pub struct JohnResult {
    pub ellipsoid: Ellipsoid,
    /// Exact vertex set of the input, reusable by callers for their own
    /// outer-inclusion checks.
    pub vertices: VPolytope,
    pub newton_iterations: usize,
    /// max(0, ‖B aᵢ‖/slackᵢ − 1) after the final shrink; 0 means the inner
    /// inclusion holds in floating point outright.
    pub inner_violation: f64,
    /// max over vertices of ‖B⁻¹(v − c)‖; at most dim for the exact John
    /// ellipsoid.
    pub outer_factor: f64,
}

const NEWTON_CAP: usize = 10_000;

/// Maximum-volume ellipsoid inscribed in a bounded full-dimensional
/// H-polyhedron, to barrier gap `tol` (default callers pass 1e-8).
pub fn john_ellipsoid(p: &HPolyhedron, tol: f64) -> Result<JohnResult> {
    let d = p.dim();
    if d == 0 {
        return Err(Error::NotFullDimensional);
    }
    if p.eqs().iter().any(|(a, _)| a.iter().any(|v| !v.is_zero())) {
        return Err(Error::NotFullDimensional);
    }
    let (c0, r0) = chebyshev_center(p)?;
    if !r0.is_positive() {
        return Err(Error::NotFullDimensional);
    }
    let verts = enumerate_vertices(p)?;

    let rows: Vec<(DVector<f64>, f64)> = p
        .ineqs()
        .iter()
        .filter(|(a, _)| a.iter().any(|v| !v.is_zero()))
        .map(|(a, b)| {
            (
                DVector::from_iterator(d, a.iter().map(rational::to_f64)),
                rational::to_f64(b),
            )
        })
        .collect();

    let (center, shape, iters) = if verts.num_vertices() == d + 1 {
        let (c, b) = simplex_john(&verts);
        (c, b, 0)
    } else {
        let c0f = DVector::from_iterator(d, c0.iter().map(rational::to_f64));
        barrier_john(&rows, d, c0f, rational::to_f64(&r0), tol)?
    };
    certify(center, shape, &rows, &verts, iters, tol)
}

/// Largest `t` with `aᵢ·c + t·‖aᵢ‖₁ ≤ bᵢ`: positive iff the polyhedron has
/// interior (the L1 ball of radius t around c fits inside).
fn chebyshev_center(p: &HPolyhedron) -> Result<(RatVec, Rational)> {
    let d = p.dim();
    let mut lp = LpProblem::new(d + 1);
    for (a, b) in p.ineqs() {
        let mut row = a.clone();
        let l1: Rational = a.iter().map(|v| v.abs()).sum();
        row.push(l1);
        lp.add_ineq(row, b.clone());
    }
    let mut obj = vec![rzero(); d + 1];
    obj[d] = rone();
    match LpSolver::new(&lp)?.optimize(&obj, Sense::Maximize)? {
        LpOutcome::Optimal { x, value } => Ok((x[..d].to_vec(), value)),
        LpOutcome::Unbounded => Err(Error::Unbounded),
        LpOutcome::Infeasible => Err(Error::Malformed(
            "interior-radius program cannot be infeasible".into(),
        )),
    }
}

/// Closed-form John ellipsoid of a full-dimensional simplex: centroid plus
/// the square root of the vertex scatter scaled by 1/(d(d+1)).
fn simplex_john(verts: &VPolytope) -> (DVector<f64>, DMatrix<f64>) {
    let d = verts.dim();
    let pts: Vec<DVector<f64>> = verts
        .vertices()
        .iter()
        .map(|v| DVector::from_iterator(d, v.iter().map(rational::to_f64)))
        .collect();
    let mut center = DVector::zeros(d);
    for p in &pts {
        center += p;
    }
    center /= pts.len() as f64;
    let mut scatter = DMatrix::zeros(d, d);
    for p in &pts {
        let r = p - &center;
        scatter += &r * r.transpose();
    }
    scatter /= (d * (d + 1)) as f64;
    let eig = scatter.symmetric_eigen();
    let sqrt_vals = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| v.max(0.0).sqrt()));
    let shape = &eig.eigenvectors * sqrt_vals * eig.eigenvectors.transpose();
    (center, shape)
}

struct BarrierState {
    c: DVector<f64>,
    b: DMatrix<f64>,
}

/// Damped Newton ascent on `t·logdet B + Σ log hᵢ` along an 8x barrier
/// schedule until the gap `2m/t` falls under `tol`.
fn barrier_john(
    rows: &[(DVector<f64>, f64)],
    d: usize,
    c0: DVector<f64>,
    r0: f64,
    tol: f64,
) -> Result<(DVector<f64>, DMatrix<f64>, usize)> {
    let m = rows.len();
    let mut state = BarrierState {
        c: c0,
        b: DMatrix::identity(d, d) * (0.9 * r0),
    };
    let mut t = 1.0f64;
    let mut total = 0usize;
    loop {
        total += newton_at_t(rows, d, &mut state, t)?;
        if total > NEWTON_CAP {
            return Err(Error::EllipsoidFailure(format!(
                "no convergence within {NEWTON_CAP} Newton steps"
            )));
        }
        if 2.0 * m as f64 / t <= tol {
            return Ok((state.c, state.b, total));
        }
        t *= 8.0;
    }
}

/// Parameter layout: first the `d` center coordinates, then the upper
/// triangle of `B` row by row.
fn triu_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for k in 0..d {
        for l in k..d {
            out.push((k, l));
        }
    }
    out
}

fn objective(rows: &[(DVector<f64>, f64)], state: &BarrierState, t: f64) -> f64 {
    let Some(chol) = state.b.clone().cholesky() else {
        return f64::NEG_INFINITY;
    };
    let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let mut f = t * logdet;
    for (a, b) in rows {
        let s = b - a.dot(&state.c);
        let v = &state.b * a;
        let h = s * s - v.dot(&v);
        if s <= 0.0 || h <= 0.0 {
            return f64::NEG_INFINITY;
        }
        f += h.ln();
    }
    f
}

fn newton_at_t(
    rows: &[(DVector<f64>, f64)],
    d: usize,
    state: &mut BarrierState,
    t: f64,
) -> Result<usize> {
    let pairs = triu_pairs(d);
    let q = d + pairs.len();
    let mut steps = 0usize;
    for _ in 0..80 {
        steps += 1;
        let f0 = objective(rows, state, t);
        let binv = state
            .b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::EllipsoidFailure("singular shape matrix".into()))?;

        let mut grad: DVector<f64> = DVector::zeros(q);
        let mut hess: DMatrix<f64> = DMatrix::zeros(q, q);

        // log-determinant block: gradient t·⟨B⁻¹,E⟩, curvature
        // −t·tr(B⁻¹ E_p B⁻¹ E_q)
        let mats: Vec<DMatrix<f64>> = pairs
            .iter()
            .map(|&(k, l)| {
                let mut e = DMatrix::zeros(d, d);
                e[(k, l)] = 1.0;
                e[(l, k)] = 1.0;
                e
            })
            .collect();
        let binv_e: Vec<DMatrix<f64>> = mats.iter().map(|e| &binv * e).collect();
        for (p, &(k, l)) in pairs.iter().enumerate() {
            grad[d + p] = t * if k == l { binv[(k, k)] } else { 2.0 * binv[(k, l)] };
            for pq in p..pairs.len() {
                let tr = (&binv_e[p] * &binv_e[pq]).trace();
                hess[(d + p, d + pq)] -= t * tr;
                if pq != p {
                    hess[(d + pq, d + p)] -= t * tr;
                }
            }
        }

        // facet barrier blocks
        for (a, b) in rows {
            let s = b - a.dot(&state.c);
            let v = &state.b * a;
            let h = s * s - v.dot(&v);
            // E_p a for every B-parameter
            let ea: Vec<DVector<f64>> = pairs
                .iter()
                .map(|&(k, l)| {
                    let mut w = DVector::zeros(d);
                    if k == l {
                        w[k] = a[k];
                    } else {
                        w[k] = a[l];
                        w[l] = a[k];
                    }
                    w
                })
                .collect();
            let mut gh = DVector::zeros(q);
            for i in 0..d {
                gh[i] = -2.0 * s * a[i];
            }
            for (p, w) in ea.iter().enumerate() {
                gh[d + p] = -2.0 * v.dot(w);
            }
            // Hessian of h: 2aaᵀ on the center block, −2(E_p a)·(E_q a) on
            // the shape block, zero cross terms
            for i in 0..d {
                for j in 0..d {
                    hess[(i, j)] += 2.0 * a[i] * a[j] / h;
                }
            }
            for p in 0..pairs.len() {
                for pq in 0..pairs.len() {
                    hess[(d + p, d + pq)] += -2.0 * ea[p].dot(&ea[pq]) / h;
                }
            }
            for i in 0..q {
                grad[i] += gh[i] / h;
                for j in 0..q {
                    hess[(i, j)] -= gh[i] * gh[j] / (h * h);
                }
            }
        }

        // Levenberg-damped ascent direction from the negated Hessian.
        let neg = -hess;
        let scale = neg.diagonal().amax().max(1.0);
        let mut lambda = 1e-12 * scale;
        let step = loop {
            let damped = &neg + DMatrix::identity(q, q) * lambda;
            if let Some(chol) = damped.cholesky() {
                break chol.solve(&grad);
            }
            lambda *= 10.0;
            if lambda > 1e12 * scale {
                return Err(Error::EllipsoidFailure(
                    "could not stabilize the Newton system".into(),
                ));
            }
        };

        let decrement = grad.dot(&step);
        if decrement.abs() <= 1e-13 * (1.0 + f0.abs()) {
            return Ok(steps);
        }
        let mut alpha = 1.0f64;
        let mut advanced = false;
        for _ in 0..60 {
            let mut cand = BarrierState {
                c: state.c.clone(),
                b: state.b.clone(),
            };
            for i in 0..d {
                cand.c[i] += alpha * step[i];
            }
            for (p, &(k, l)) in pairs.iter().enumerate() {
                cand.b[(k, l)] += alpha * step[d + p];
                if k != l {
                    cand.b[(l, k)] += alpha * step[d + p];
                }
            }
            if objective(rows, &cand, t) > f0 + 1e-4 * alpha * decrement {
                *state = cand;
                advanced = true;
                break;
            }
            alpha *= 0.5;
        }
        if !advanced {
            return Ok(steps);
        }
    }
    Ok(80)
}

/// Final shrink-and-check: force the inner inclusion by scaling, then
/// measure the outer factor on the exact vertices.
fn certify(
    center: DVector<f64>,
    mut shape: DMatrix<f64>,
    rows: &[(DVector<f64>, f64)],
    verts: &VPolytope,
    iterations: usize,
    tol: f64,
) -> Result<JohnResult> {
    let d = verts.dim();
    let mut kappa = 0.0f64;
    for (a, b) in rows {
        let s = b - a.dot(&center);
        if s <= 0.0 {
            return Err(Error::EllipsoidFailure(
                "ellipsoid center escaped the polyhedron".into(),
            ));
        }
        kappa = kappa.max((&shape * a).norm() / s);
    }
    if kappa > 1.0 {
        shape /= kappa * (1.0 + 1e-14);
    }
    let mut inner_violation = 0.0f64;
    for (a, b) in rows {
        let s = b - a.dot(&center);
        inner_violation = inner_violation.max((&shape * a).norm() / s - 1.0);
    }
    let inv = shape
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::EllipsoidFailure("degenerate shape matrix".into()))?;
    let mut outer_factor = 0.0f64;
    for v in verts.vertices() {
        let vf = DVector::from_iterator(d, v.iter().map(rational::to_f64));
        outer_factor = outer_factor.max((&inv * (vf - &center)).norm());
    }
    if outer_factor > d as f64 * (1.0 + (100.0 * tol).max(1e-7)) {
        return Err(Error::EllipsoidFailure(format!(
            "outer inclusion factor {outer_factor:.12} exceeds the dimension bound {d}"
        )));
    }
    Ok(JohnResult {
        ellipsoid: Ellipsoid {
            center: center.iter().copied().collect(),
            shape: (0..d)
                .map(|i| (0..d).map(|j| shape[(i, j)]).collect())
                .collect(),
        },
        vertices: verts.clone(),
        newton_iterations: iterations,
        inner_violation: inner_violation.max(0.0),
        outer_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn pt(vals: &[i64]) -> RatVec {
        vals.iter().map(|&v| rint(v)).collect()
    }

    fn box_hrep(d: usize, lo: i64, hi: i64) -> HPolyhedron {
        let mut rows = Vec::new();
        for j in 0..d {
            let mut up = vec![rzero(); d];
            up[j] = rone();
            rows.push((up, rint(hi)));
            let mut dn = vec![rzero(); d];
            dn[j] = -rone();
            rows.push((dn, rint(-lo)));
        }
        HPolyhedron::new(d, rows, vec![]).unwrap()
    }

    #[test]
    fn symmetric_cube_gives_the_unit_ball() {
        for d in 2..=3 {
            let res = john_ellipsoid(&box_hrep(d, -1, 1), 1e-8).unwrap();
            for i in 0..d {
                assert!(res.ellipsoid.center[i].abs() < 1e-7, "center off: {res:?}");
                for j in 0..d {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((res.ellipsoid.shape[i][j] - want).abs() < 1e-6);
                }
            }
            assert!(res.inner_violation == 0.0);
            assert!(res.outer_factor <= d as f64 * (1.0 + 1e-7));
        }
    }

    #[test]
    fn triangle_recovers_the_steiner_inellipse() {
        let tri = HPolyhedron::new(
            2,
            vec![
                (pt(&[-1, 0]), rint(0)),
                (pt(&[0, -1]), rint(0)),
                (pt(&[1, 1]), rint(1)),
            ],
            vec![],
        )
        .unwrap();
        let res = john_ellipsoid(&tri, 1e-8).unwrap();
        assert!((res.ellipsoid.center[0] - 1.0 / 3.0).abs() < 1e-9);
        assert!((res.ellipsoid.center[1] - 1.0 / 3.0).abs() < 1e-9);
        // Steiner inellipse touches the edge midpoints; the hypotenuse
        // midpoint (1/2, 1/2) must sit on the boundary, and the vertices at
        // exactly twice the ellipse radius.
        assert!((res.outer_factor - 2.0).abs() < 1e-9);
        let b = &res.ellipsoid.shape;
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        assert!((det - (1.0f64 / 108.0).sqrt()).abs() < 1e-9);
    }

    #[test]
    fn regular_polygon_hugs_its_incircle() {
        let k = 8usize;
        let mut rows = Vec::new();
        for j in 0..k {
            let ang = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
            let a = vec![
                crate::rational::from_f64_exact(ang.cos()).unwrap(),
                crate::rational::from_f64_exact(ang.sin()).unwrap(),
            ];
            rows.push((a, rone()));
        }
        let poly = HPolyhedron::new(2, rows, vec![]).unwrap();
        let res = john_ellipsoid(&poly, 1e-9).unwrap();
        for i in 0..2 {
            assert!(res.ellipsoid.center[i].abs() < 1e-6);
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((res.ellipsoid.shape[i][j] - want).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn asymmetric_box_centers_itself() {
        let res = john_ellipsoid(&box_hrep(2, 0, 4), 1e-8).unwrap();
        assert!((res.ellipsoid.center[0] - 2.0).abs() < 1e-6);
        assert!((res.ellipsoid.center[1] - 2.0).abs() < 1e-6);
        assert!((res.ellipsoid.shape[0][0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn lower_dimensional_input_is_rejected() {
        let flat = HPolyhedron::new(
            2,
            vec![(pt(&[1, 0]), rint(1)), (pt(&[-1, 0]), rint(0))],
            vec![(pt(&[0, 1]), rint(0))],
        )
        .unwrap();
        assert!(matches!(
            john_ellipsoid(&flat, 1e-8),
            Err(Error::NotFullDimensional)
        ));
        let thin = HPolyhedron::new(
            1,
            vec![(pt(&[1]), rint(0)), (pt(&[-1]), rint(0))],
            vec![],
        )
        .unwrap();
        assert!(matches!(
            john_ellipsoid(&thin, 1e-8),
            Err(Error::NotFullDimensional)
        ));
    }

    #[test]
    fn unbounded_input_is_rejected() {
        let half = HPolyhedron::new(2, vec![(pt(&[1, 0]), rint(1))], vec![]).unwrap();
        assert!(matches!(john_ellipsoid(&half, 1e-8), Err(Error::Unbounded)));
    }

    #[test]
    fn tetrahedron_uses_the_closed_form() {
        let tet = HPolyhedron::new(
            3,
            vec![
                (pt(&[-1, 0, 0]), rint(0)),
                (pt(&[0, -1, 0]), rint(0)),
                (pt(&[0, 0, -1]), rint(0)),
                (pt(&[1, 1, 1]), rint(1)),
            ],
            vec![],
        )
        .unwrap();
        let res = john_ellipsoid(&tet, 1e-8).unwrap();
        assert_eq!(res.newton_iterations, 0);
        for c in &res.ellipsoid.center {
            assert!((c - 0.25).abs() < 1e-12);
        }
        assert!(res.inner_violation == 0.0);
        assert!(res.outer_factor <= 3.0 * (1.0 + 1e-10));
    }

    #[test]
    fn steiner_check_against_exact_quarter_slack() {
        // midpoint (1/2, 0) of the triangle's bottom edge lies on the
        // Steiner inellipse: ‖B⁻¹(p − c)‖ = 1 there
        let tri = HPolyhedron::new(
            2,
            vec![
                (pt(&[-1, 0]), rint(0)),
                (pt(&[0, -1]), rint(0)),
                (pt(&[1, 1]), rint(1)),
            ],
            vec![],
        )
        .unwrap();
        let res = john_ellipsoid(&tri, 1e-8).unwrap();
        let b = &res.ellipsoid.shape;
        let c = &res.ellipsoid.center;
        let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
        let inv = [
            [b[1][1] / det, -b[0][1] / det],
            [-b[1][0] / det, b[0][0] / det],
        ];
        let p = [0.5 - c[0], 0.0 - c[1]];
        let u = [
            inv[0][0] * p[0] + inv[0][1] * p[1],
            inv[1][0] * p[0] + inv[1][1] * p[1],
        ];
        let norm = (u[0] * u[0] + u[1] * u[1]).sqrt();
        assert!((norm - 1.0).abs() < 1e-9, "midpoint norm {norm}");
    }

    #[test]
    fn certificate_quality_matches_rat(){
        let res = john_ellipsoid(&box_hrep(3, -2, 2), 1e-8).unwrap();
        assert!((res.ellipsoid.shape[0][0] - 2.0).abs() < 1e-6);
        assert_eq!(
            res.vertices.circumradius_sq(),
            rat(12, 1)
        );
    }
}
