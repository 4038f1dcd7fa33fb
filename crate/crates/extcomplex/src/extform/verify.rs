//! Exact verification that a linear extended formulation projects onto a
//! prescribed polytope.
//!
//! `proj(Q) = conv(V)` is checked in two sweeps. Containment of the target
//! in the projection asks, for every vertex `v` of the target, whether
//! `{x in Q : proj(x) = v}` is feasible. Containment of the projection in
//! the target maximizes every facet functional of the target (and both
//! directions of every affine-hull equation) over `Q` and compares against
//! the right-hand side. All arithmetic is rational, so a failed check comes
//! with a replayable witness.

use serde::{Deserialize, Serialize};

use crate::extform::LinearEF;
use crate::geometry::hull::convex_hull_facets;
use crate::geometry::lp::{LpOutcome, LpSolver, Sense};
use crate::geometry::polytope::VPolytope;
use crate::linalg::{dot, RatVec};
use crate::rational::{format_rational, parse_rational, rzero, Rational};
use crate::{Error, Result};

/// Outcome of `verify_linear_ef`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReportWire", into = "ReportWire")]
pub enum VerificationReport {
    /// Projection equals the target; counts record the work performed.
    Verified {
        vertices_checked: usize,
        facets_checked: usize,
        equations_checked: usize,
    },
    /// A vertex of the target has no preimage in the lifted set.
    MissingVertex { vertex: RatVec },
    /// The projection leaves the target halfspace `normal . y <= rhs`
    /// (affine-hull equations are checked as two opposite halfspaces).
    /// `witness` is the lifted optimizer and `point` its projection.
    HalfspaceViolated {
        normal: RatVec,
        rhs: Rational,
        witness: RatVec,
        point: RatVec,
    },
}

impl VerificationReport {
    pub fn is_verified(&self) -> bool {
        matches!(self, VerificationReport::Verified { .. })
    }
}

/// Checks `proj(lifted) = conv(target)` exactly.
///
/// The lifted polyhedron must be bounded; target must be non-empty.
pub fn verify_linear_ef(ef: &LinearEF, target: &VPolytope) -> Result<VerificationReport> {
    if target.is_empty() {
        return Err(Error::EmptyInput("verification target has no vertices"));
    }
    let proj = ef.proj();
    if proj.out_dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: target.dim(),
            got: proj.out_dim(),
        });
    }
    let n = ef.lifted().dim();
    let base = ef.lifted().to_lp_problem();
    let mut solver = LpSolver::new(&base)?;
    if !solver.is_feasible() {
        return Ok(VerificationReport::MissingVertex {
            vertex: target.vertices()[0].clone(),
        });
    }

    // Boundedness scan along all signed coordinate directions.
    for j in 0..n {
        for sign in [1i64, -1] {
            let mut obj = vec![rzero(); n];
            obj[j] = crate::rational::rint(sign);
            if matches!(solver.optimize(&obj, Sense::Maximize)?, LpOutcome::Unbounded) {
                return Err(Error::Unbounded);
            }
        }
    }

    // Every target vertex needs a lifted preimage.
    for v in target.vertices() {
        let mut problem = base.clone();
        for (i, (coeff_row, off)) in proj.matrix().iter().zip(proj.offset()).enumerate() {
            problem.add_eq(coeff_row.clone(), &v[i] - off);
        }
        let vertex_solver = LpSolver::new(&problem)?;
        if !vertex_solver.is_feasible() {
            return Ok(VerificationReport::MissingVertex { vertex: v.clone() });
        }
    }

    // The projection must respect every facet and affine-hull equation of
    // the target.
    let hull = convex_hull_facets(target)?;
    let mut facets_checked = 0;
    let mut equations_checked = 0;
    let check_halfspace =
        |solver: &mut LpSolver, normal: &RatVec, rhs: &Rational| -> Result<Option<VerificationReport>> {
            let pulled = pull_back(normal, proj.matrix());
            let shift = dot(normal, proj.offset());
            match solver.optimize(&pulled, Sense::Maximize)? {
                LpOutcome::Optimal { x, value } => {
                    if &(&value + &shift) > rhs {
                        let point = proj.apply(&x);
                        Ok(Some(VerificationReport::HalfspaceViolated {
                            normal: normal.clone(),
                            rhs: rhs.clone(),
                            witness: x,
                            point,
                        }))
                    } else {
                        Ok(None)
                    }
                }
                LpOutcome::Unbounded => Err(Error::Unbounded),
                LpOutcome::Infeasible => unreachable!("feasibility established above"),
            }
        };
    for (a, b) in hull.ineqs() {
        if let Some(report) = check_halfspace(&mut solver, a, b)? {
            return Ok(report);
        }
        facets_checked += 1;
    }
    for (a, b) in hull.eqs() {
        if let Some(report) = check_halfspace(&mut solver, a, b)? {
            return Ok(report);
        }
        let neg_a: RatVec = a.iter().map(|c| -c).collect();
        let neg_b = -b;
        if let Some(report) = check_halfspace(&mut solver, &neg_a, &neg_b)? {
            return Ok(report);
        }
        equations_checked += 1;
    }

    Ok(VerificationReport::Verified {
        vertices_checked: target.num_vertices(),
        facets_checked,
        equations_checked,
    })
}

/// Composes a linear functional with the projection matrix: the objective
/// on the lifted space whose value at `x` is `normal . (M x)`.
fn pull_back(normal: &[Rational], matrix: &[RatVec]) -> RatVec {
    let n = matrix.first().map(|r| r.len()).unwrap_or(0);
    let mut out = vec![rzero(); n];
    for (ai, row) in normal.iter().zip(matrix) {
        for (o, mij) in out.iter_mut().zip(row) {
            *o += ai * mij;
        }
    }
    out
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
enum ReportWire {
    Verified {
        vertices_checked: usize,
        facets_checked: usize,
        equations_checked: usize,
    },
    MissingVertex {
        vertex: Vec<String>,
    },
    HalfspaceViolated {
        normal: Vec<String>,
        rhs: String,
        witness: Vec<String>,
        point: Vec<String>,
    },
}

fn vec_to_strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(format_rational).collect()
}

fn strings_to_vec(v: &[String]) -> Result<RatVec> {
    v.iter().map(|s| parse_rational(s)).collect()
}

impl From<VerificationReport> for ReportWire {
    fn from(r: VerificationReport) -> Self {
        match r {
            VerificationReport::Verified {
                vertices_checked,
                facets_checked,
                equations_checked,
            } => ReportWire::Verified {
                vertices_checked,
                facets_checked,
                equations_checked,
            },
            VerificationReport::MissingVertex { vertex } => ReportWire::MissingVertex {
                vertex: vec_to_strings(&vertex),
            },
            VerificationReport::HalfspaceViolated {
                normal,
                rhs,
                witness,
                point,
            } => ReportWire::HalfspaceViolated {
                normal: vec_to_strings(&normal),
                rhs: format_rational(&rhs),
                witness: vec_to_strings(&witness),
                point: vec_to_strings(&point),
            },
        }
    }
}

impl TryFrom<ReportWire> for VerificationReport {
    type Error = Error;
    fn try_from(w: ReportWire) -> Result<Self> {
        Ok(match w {
            ReportWire::Verified {
                vertices_checked,
                facets_checked,
                equations_checked,
            } => VerificationReport::Verified {
                vertices_checked,
                facets_checked,
                equations_checked,
            },
            ReportWire::MissingVertex { vertex } => VerificationReport::MissingVertex {
                vertex: strings_to_vec(&vertex)?,
            },
            ReportWire::HalfspaceViolated {
                normal,
                rhs,
                witness,
                point,
            } => VerificationReport::HalfspaceViolated {
                normal: strings_to_vec(&normal)?,
                rhs: parse_rational(&rhs)?,
                witness: strings_to_vec(&witness)?,
                point: strings_to_vec(&point)?,
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::polytope::{AffineMap, HPolyhedron};
    use crate::rational::rint;

    fn square_vertices() -> VPolytope {
        VPolytope::from_points(
            2,
            vec![
                vec![rint(0), rint(0)],
                vec![rint(1), rint(0)],
                vec![rint(0), rint(1)],
                vec![rint(1), rint(1)],
            ],
        )
        .unwrap()
    }

    fn square_h() -> HPolyhedron {
        HPolyhedron::new(
            2,
            vec![
                (vec![rint(-1), rint(0)], rint(0)),
                (vec![rint(0), rint(-1)], rint(0)),
                (vec![rint(1), rint(0)], rint(1)),
                (vec![rint(0), rint(1)], rint(1)),
            ],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn identity_formulation_of_square_verifies() {
        let ef = LinearEF::new(square_h(), AffineMap::identity(2)).unwrap();
        let report = verify_linear_ef(&ef, &square_vertices()).unwrap();
        assert!(report.is_verified(), "{report:?}");
        match report {
            VerificationReport::Verified {
                vertices_checked,
                facets_checked,
                equations_checked,
            } => {
                assert_eq!(vertices_checked, 4);
                assert_eq!(facets_checked, 4);
                assert_eq!(equations_checked, 0);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn square_against_triangle_reports_facet_violation() {
        let ef = LinearEF::new(square_h(), AffineMap::identity(2)).unwrap();
        let triangle = VPolytope::from_points(
            2,
            vec![
                vec![rint(0), rint(0)],
                vec![rint(1), rint(0)],
                vec![rint(0), rint(1)],
            ],
        )
        .unwrap();
        match verify_linear_ef(&ef, &triangle).unwrap() {
            VerificationReport::HalfspaceViolated { normal, rhs, point, .. } => {
                assert_eq!(normal, vec![rint(1), rint(1)]);
                assert_eq!(rhs, rint(1));
                assert_eq!(point, vec![rint(1), rint(1)]);
            }
            other => panic!("expected facet violation, got {other:?}"),
        }
    }

    #[test]
    fn triangle_formulation_against_square_misses_a_vertex() {
        let triangle_h = HPolyhedron::new(
            2,
            vec![
                (vec![rint(-1), rint(0)], rint(0)),
                (vec![rint(0), rint(-1)], rint(0)),
                (vec![rint(1), rint(1)], rint(1)),
            ],
            vec![],
        )
        .unwrap();
        let ef = LinearEF::new(triangle_h, AffineMap::identity(2)).unwrap();
        match verify_linear_ef(&ef, &square_vertices()).unwrap() {
            VerificationReport::MissingVertex { vertex } => {
                assert_eq!(vertex, vec![rint(1), rint(1)]);
            }
            other => panic!("expected missing vertex, got {other:?}"),
        }
    }

    #[test]
    fn unbounded_lifted_set_is_an_error() {
        let halfplane = HPolyhedron::new(2, vec![(vec![rint(1), rint(0)], rint(1))], vec![]).unwrap();
        let ef = LinearEF::new(halfplane, AffineMap::identity(2)).unwrap();
        assert!(matches!(
            verify_linear_ef(&ef, &square_vertices()),
            Err(Error::Unbounded)
        ));
    }

    #[test]
    fn projection_from_lifted_simplex_verifies_segment() {
        // Q = standard simplex in R^2, proj(x) = x1 - x2 maps onto [-1, 1].
        let simplex = HPolyhedron::new(
            2,
            vec![
                (vec![rint(-1), rint(0)], rint(0)),
                (vec![rint(0), rint(-1)], rint(0)),
            ],
            vec![(vec![rint(1), rint(1)], rint(1))],
        )
        .unwrap();
        let proj = AffineMap::new(2, vec![vec![rint(1), rint(-1)]], vec![rint(0)]).unwrap();
        let ef = LinearEF::new(simplex, proj).unwrap();
        let segment =
            VPolytope::from_points(1, vec![vec![rint(-1)], vec![rint(1)]]).unwrap();
        assert!(verify_linear_ef(&ef, &segment).unwrap().is_verified());
    }

    #[test]
    fn lower_dimensional_target_checks_equations() {
        // Diagonal segment in R^2 from a lifted interval.
        let interval = HPolyhedron::new(
            1,
            vec![
                (vec![rint(-1)], rint(0)),
                (vec![rint(1)], rint(1)),
            ],
            vec![],
        )
        .unwrap();
        let proj = AffineMap::new(1, vec![vec![rint(1)], vec![rint(1)]], vec![rint(0), rint(0)])
            .unwrap();
        let ef = LinearEF::new(interval, proj).unwrap();
        let diagonal = VPolytope::from_points(
            2,
            vec![vec![rint(0), rint(0)], vec![rint(1), rint(1)]],
        )
        .unwrap();
        let report = verify_linear_ef(&ef, &diagonal).unwrap();
        match &report {
            VerificationReport::Verified { equations_checked, .. } => {
                assert_eq!(*equations_checked, 1);
            }
            other => panic!("expected verified, got {other:?}"),
        }
    }

    #[test]
    fn report_round_trips_through_json() {
        let report = VerificationReport::HalfspaceViolated {
            normal: vec![rint(1), rint(1)],
            rhs: rint(1),
            witness: vec![rint(1), rint(1)],
            point: vec![rint(1), rint(1)],
        };
        let text = serde_json::to_string(&report).unwrap();
        let back: VerificationReport = serde_json::from_str(&text).unwrap();
        assert_eq!(back, report);
    }
}
