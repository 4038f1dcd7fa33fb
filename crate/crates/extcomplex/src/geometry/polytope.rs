//! Polytope representations and affine maps.
//!
//! [`VPolytope`] is a canonicalized vertex list: construction strips
//! duplicates and non-extreme points and sorts lexicographically, so two
//! values describe the same polytope iff they are equal. [`HPolyhedron`] is
//! an inequality/equation system whose `size` deliberately counts only the
//! inequalities. Both serialize to JSON with rationals as `"p"`/`"p/q"`
//! strings.

use crate::error::{Error, Result};
use crate::geometry::lp::{LpOutcome, LpProblem, LpSolver, Sense};
use crate::linalg::{self, RatMat, RatVec};
use crate::rational::{format_rational, parse_rational, rone, rzero, Rational};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::BTreeSet;

/// Convex hull of a finite vertex list in `R^dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VPolytope {
    dim: usize,
    vertices: Vec<RatVec>,
}

impl VPolytope {
    /// Canonicalizes an arbitrary point list: deduplicates, drops every
    /// point lying in the hull of the others, sorts lexicographically.
    pub fn from_points(dim: usize, points: Vec<RatVec>) -> Result<Self> {
        check_point_dims(dim, &points)?;
        let dedup: Vec<RatVec> = points.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut vertices = Vec::new();
        for (i, p) in dedup.iter().enumerate() {
            let others: Vec<&RatVec> = dedup
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| q)
                .collect();
            if others.is_empty() || !in_hull(p, &others)? {
                vertices.push(p.clone());
            }
        }
        Ok(VPolytope { dim, vertices })
    }

    /// Trusted constructor for points already known to be extreme (0/1
    /// points, distinct parabola points); skips the hull-membership filter
    /// but still deduplicates and sorts.
    pub fn from_extreme_points(dim: usize, points: Vec<RatVec>) -> Result<Self> {
        check_point_dims(dim, &points)?;
        let vertices: Vec<RatVec> = points.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        Ok(VPolytope { dim, vertices })
    }

    pub fn empty(dim: usize) -> Self {
        VPolytope {
            dim,
            vertices: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[RatVec] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Dimension of the affine hull; `None` for the empty polytope.
    pub fn affine_dim(&self) -> Option<usize> {
        let first = self.vertices.first()?;
        let diffs: RatMat = self.vertices[1..]
            .iter()
            .map(|v| linalg::vec_sub(v, first))
            .collect();
        Some(linalg::rank(&diffs))
    }

    /// Exact membership via a convex-combination feasibility LP.
    pub fn contains(&self, p: &[Rational]) -> Result<bool> {
        if p.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.len(),
            });
        }
        if self.vertices.is_empty() {
            return Ok(false);
        }
        let refs: Vec<&RatVec> = self.vertices.iter().collect();
        in_hull(&p.to_vec(), &refs)
    }

    /// Largest squared vertex norm, zero for the empty polytope.
    pub fn circumradius_sq(&self) -> Rational {
        self.vertices
            .iter()
            .map(|v| linalg::norm_sq(v))
            .max()
            .unwrap_or_else(rzero)
    }
}

fn check_point_dims(dim: usize, points: &[RatVec]) -> Result<()> {
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    Ok(())
}

/// Is `p` a convex combination of `points`? Exact LP feasibility over the
/// simplex of weights.
fn in_hull(p: &RatVec, points: &[&RatVec]) -> Result<bool> {
    let k = points.len();
    let mut lp = LpProblem::new_nonneg(k);
    for (coord, target) in p.iter().enumerate() {
        let row: RatVec = points.iter().map(|q| q[coord].clone()).collect();
        lp.add_eq(row, target.clone());
    }
    lp.add_eq(vec![rone(); k], rone());
    Ok(LpSolver::new(&lp)?.is_feasible())
}

/// The point of `{0,1}^d` whose bits are read from `mask`, coordinate 0 at
/// the least significant bit.
pub fn zero_one_point(d: usize, mask: u64) -> RatVec {
    (0..d)
        .map(|i| {
            if mask >> i & 1 == 1 {
                rone()
            } else {
                rzero()
            }
        })
        .collect()
}

/// Intersection of half-spaces `a·x <= b` and hyperplanes `a·x = b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HPolyhedron {
    dim: usize,
    ineqs: Vec<(RatVec, Rational)>,
    eqs: Vec<(RatVec, Rational)>,
}

impl HPolyhedron {
    /// Rejects rows with a zero coefficient vector that make the system
    /// trivially empty (`0·x <= b` with `b < 0`, or `0·x = b` with `b != 0`);
    /// emptiness must come from honest geometry, not degenerate rows.
    pub fn new(
        dim: usize,
        ineqs: Vec<(RatVec, Rational)>,
        eqs: Vec<(RatVec, Rational)>,
    ) -> Result<Self> {
        for (a, b) in &ineqs {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.len(),
                });
            }
            if a.iter().all(Zero::is_zero) && b.is_negative() {
                return Err(Error::TriviallyEmptyConstraint);
            }
        }
        for (a, b) in &eqs {
            if a.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: a.len(),
                });
            }
            if a.iter().all(Zero::is_zero) && !b.is_zero() {
                return Err(Error::TriviallyEmptyConstraint);
            }
        }
        Ok(HPolyhedron { dim, ineqs, eqs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ineqs(&self) -> &[(RatVec, Rational)] {
        &self.ineqs
    }

    pub fn eqs(&self) -> &[(RatVec, Rational)] {
        &self.eqs
    }

    /// Number of inequalities; equations are free.
    pub fn size(&self) -> usize {
        self.ineqs.len()
    }

    pub fn contains(&self, x: &[Rational]) -> bool {
        debug_assert_eq!(x.len(), self.dim);
        self.ineqs.iter().all(|(a, b)| linalg::dot(a, x) <= *b)
            && self.eqs.iter().all(|(a, b)| linalg::dot(a, x) == *b)
    }

    pub fn to_lp_problem(&self) -> LpProblem {
        let mut lp = LpProblem::new(self.dim);
        for (a, b) in &self.ineqs {
            lp.add_ineq(a.clone(), b.clone());
        }
        for (a, b) in &self.eqs {
            lp.add_eq(a.clone(), b.clone());
        }
        lp
    }

    /// Warm-restartable solver over this feasible set.
    pub fn lp_solver(&self) -> Result<LpSolver> {
        LpSolver::new(&self.to_lp_problem())
    }

    pub fn is_feasible(&self) -> Result<bool> {
        Ok(self.lp_solver()?.is_feasible())
    }
}

/// Optimizes a linear objective over an H-polyhedron.
pub fn solve_lp(objective: &[Rational], feasible: &HPolyhedron, sense: Sense) -> Result<LpOutcome> {
    feasible.lp_solver()?.optimize(objective, sense)
}

/// `x -> matrix · x + offset`, from `R^in_dim` to `R^out_dim`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineMap {
    in_dim: usize,
    out_dim: usize,
    matrix: RatMat,
    offset: RatVec,
}

impl AffineMap {
    pub fn new(in_dim: usize, matrix: RatMat, offset: RatVec) -> Result<Self> {
        let out_dim = offset.len();
        if matrix.len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                got: matrix.len(),
            });
        }
        for row in &matrix {
            if row.len() != in_dim {
                return Err(Error::DimensionMismatch {
                    expected: in_dim,
                    got: row.len(),
                });
            }
        }
        Ok(AffineMap {
            in_dim,
            out_dim,
            matrix,
            offset,
        })
    }

    pub fn identity(dim: usize) -> Self {
        AffineMap {
            in_dim: dim,
            out_dim: dim,
            matrix: linalg::identity(dim),
            offset: vec![rzero(); dim],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn matrix(&self) -> &RatMat {
        &self.matrix
    }

    pub fn offset(&self) -> &RatVec {
        &self.offset
    }

    pub fn apply(&self, x: &[Rational]) -> RatVec {
        assert_eq!(x.len(), self.in_dim, "affine map applied to wrong dimension");
        linalg::vec_add(&linalg::mat_vec(&self.matrix, x), &self.offset)
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &AffineMap) -> Result<AffineMap> {
        if inner.out_dim != self.in_dim {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim,
                got: inner.out_dim,
            });
        }
        Ok(AffineMap {
            in_dim: inner.in_dim,
            out_dim: self.out_dim,
            matrix: linalg::mat_mul(&self.matrix, &inner.matrix),
            offset: linalg::vec_add(&linalg::mat_vec(&self.matrix, &inner.offset), &self.offset),
        })
    }

    /// Inverse of a square invertible map: `y -> M⁻¹(y - offset)`.
    pub fn inverse(&self) -> Result<AffineMap> {
        if self.in_dim != self.out_dim {
            return Err(Error::DimensionMismatch {
                expected: self.out_dim,
                got: self.in_dim,
            });
        }
        let inv = linalg::inverse(&self.matrix)?;
        let offset = linalg::vec_scale(
            &-rone(),
            &linalg::mat_vec(&inv, &self.offset),
        );
        Ok(AffineMap {
            in_dim: self.out_dim,
            out_dim: self.in_dim,
            matrix: inv,
            offset,
        })
    }
}

/// Image of the unit ball under `shape`, translated to `center`. The only
/// floating-point geometry object in the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
}

// ---------------------------------------------------------------------------
// JSON wire formats

fn strings_to_rationals(row: &[String]) -> Result<RatVec> {
    row.iter().map(|s| parse_rational(s)).collect()
}

fn rationals_to_strings(row: &[Rational]) -> Vec<String> {
    row.iter().map(format_rational).collect()
}

#[derive(Serialize, Deserialize)]
struct VPolytopeWire {
    dim: usize,
    vertices: Vec<Vec<String>>,
}

impl Serialize for VPolytope {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        VPolytopeWire {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| rationals_to_strings(v)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for VPolytope {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = VPolytopeWire::deserialize(d)?;
        let points = wire
            .vertices
            .iter()
            .map(|v| strings_to_rationals(v))
            .collect::<Result<Vec<_>>>()
            .map_err(serde::de::Error::custom)?;
        VPolytope::from_points(wire.dim, points).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct ConstraintWire {
    a: Vec<String>,
    b: String,
}

#[derive(Serialize, Deserialize)]
struct HPolyhedronWire {
    dim: usize,
    ineqs: Vec<ConstraintWire>,
    eqs: Vec<ConstraintWire>,
}

fn constraints_to_wire(rows: &[(RatVec, Rational)]) -> Vec<ConstraintWire> {
    rows.iter()
        .map(|(a, b)| ConstraintWire {
            a: rationals_to_strings(a),
            b: format_rational(b),
        })
        .collect()
}

fn constraints_from_wire(rows: &[ConstraintWire]) -> Result<Vec<(RatVec, Rational)>> {
    rows.iter()
        .map(|c| Ok((strings_to_rationals(&c.a)?, parse_rational(&c.b)?)))
        .collect()
}

impl Serialize for HPolyhedron {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        HPolyhedronWire {
            dim: self.dim,
            ineqs: constraints_to_wire(&self.ineqs),
            eqs: constraints_to_wire(&self.eqs),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for HPolyhedron {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = HPolyhedronWire::deserialize(d)?;
        let build = || -> Result<HPolyhedron> {
            HPolyhedron::new(
                wire.dim,
                constraints_from_wire(&wire.ineqs)?,
                constraints_from_wire(&wire.eqs)?,
            )
        };
        build().map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct AffineMapWire {
    matrix: Vec<Vec<String>>,
    offset: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    in_dim: Option<usize>,
}

impl Serialize for AffineMap {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AffineMapWire {
            matrix: self.matrix.iter().map(|r| rationals_to_strings(r)).collect(),
            offset: rationals_to_strings(&self.offset),
            // only needed to round-trip maps out of a zero-dimensional space
            in_dim: if self.out_dim == 0 || self.matrix.is_empty() {
                Some(self.in_dim)
            } else {
                None
            },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AffineMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = AffineMapWire::deserialize(d)?;
        let build = || -> Result<AffineMap> {
            let matrix = wire
                .matrix
                .iter()
                .map(|r| strings_to_rationals(r))
                .collect::<Result<RatMat>>()?;
            let offset = strings_to_rationals(&wire.offset)?;
            let in_dim = wire
                .in_dim
                .or_else(|| matrix.first().map(Vec::len))
                .unwrap_or(0);
            AffineMap::new(in_dim, matrix, offset)
        };
        build().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn pt(vals: &[i64]) -> RatVec {
        vals.iter().map(|&v| rint(v)).collect()
    }

    #[test]
    fn from_points_filters_interior_and_duplicate_points() {
        let points = vec![
            pt(&[0, 0]),
            pt(&[1, 0]),
            pt(&[0, 1]),
            pt(&[1, 1]),
            pt(&[1, 1]),
            vec![rat(1, 2), rat(1, 2)],
            vec![rat(1, 2), rint(0)],
        ];
        let square = VPolytope::from_points(2, points).unwrap();
        assert_eq!(square.num_vertices(), 4);
        assert_eq!(
            square.vertices(),
            &[pt(&[0, 0]), pt(&[0, 1]), pt(&[1, 0]), pt(&[1, 1])]
        );
    }

    #[test]
    fn canonical_form_ignores_input_order() {
        let a = VPolytope::from_points(1, vec![pt(&[0]), pt(&[2]), pt(&[1])]).unwrap();
        let b = VPolytope::from_points(1, vec![pt(&[2]), pt(&[0])]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn membership_of_hull_points() {
        let tri =
            VPolytope::from_extreme_points(2, vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[0, 1])]).unwrap();
        assert!(tri.contains(&[rat(1, 4), rat(1, 4)]).unwrap());
        assert!(tri.contains(&[rint(1), rint(0)]).unwrap());
        assert!(!tri.contains(&[rint(1), rint(1)]).unwrap());
    }

    #[test]
    fn affine_dim_of_degenerate_sets() {
        let seg = VPolytope::from_extreme_points(3, vec![pt(&[0, 0, 0]), pt(&[1, 1, 0])]).unwrap();
        assert_eq!(seg.affine_dim(), Some(1));
        let point = VPolytope::from_extreme_points(3, vec![pt(&[1, 2, 3])]).unwrap();
        assert_eq!(point.affine_dim(), Some(0));
        assert_eq!(VPolytope::empty(3).affine_dim(), None);
    }

    #[test]
    fn zero_one_points_follow_the_mask() {
        assert_eq!(zero_one_point(3, 0b101), pt(&[1, 0, 1]));
        assert_eq!(zero_one_point(2, 0), pt(&[0, 0]));
    }

    #[test]
    fn hpolyhedron_rejects_trivially_empty_rows() {
        let bad = HPolyhedron::new(2, vec![(pt(&[0, 0]), rint(-1))], vec![]);
        assert!(matches!(bad, Err(Error::TriviallyEmptyConstraint)));
        let bad_eq = HPolyhedron::new(2, vec![], vec![(pt(&[0, 0]), rint(5))]);
        assert!(matches!(bad_eq, Err(Error::TriviallyEmptyConstraint)));
    }

    #[test]
    fn solve_lp_over_unit_square() {
        let square = HPolyhedron::new(
            2,
            vec![
                (pt(&[1, 0]), rint(1)),
                (pt(&[-1, 0]), rint(0)),
                (pt(&[0, 1]), rint(1)),
                (pt(&[0, -1]), rint(0)),
            ],
            vec![],
        )
        .unwrap();
        let out = solve_lp(&pt(&[1, 1]), &square, Sense::Maximize).unwrap();
        assert_eq!(
            out,
            LpOutcome::Optimal {
                x: pt(&[1, 1]),
                value: rint(2)
            }
        );
    }

    #[test]
    fn affine_map_apply_compose_invert() {
        let f = AffineMap::new(
            2,
            vec![pt(&[2, 0]), pt(&[0, 1])],
            pt(&[1, 0]),
        )
        .unwrap();
        assert_eq!(f.apply(&pt(&[1, 1])), pt(&[3, 1]));
        let g = f.compose(&AffineMap::identity(2)).unwrap();
        assert_eq!(g, f);
        let inv = f.inverse().unwrap();
        assert_eq!(inv.apply(&f.apply(&pt(&[5, -2]))), pt(&[5, -2]));
    }

    #[test]
    fn vpolytope_json_round_trip() {
        let tri = VPolytope::from_points(
            2,
            vec![pt(&[0, 0]), pt(&[1, 0]), vec![rat(1, 2), rat(3, 2)]],
        )
        .unwrap();
        let json = serde_json::to_string(&tri).unwrap();
        assert!(json.contains("\"1/2\""));
        let back: VPolytope = serde_json::from_str(&json).unwrap();
        assert_eq!(back, tri);
    }

    #[test]
    fn hpolyhedron_json_round_trip() {
        let h = HPolyhedron::new(
            2,
            vec![(vec![rat(1, 3), rint(1)], rat(5, 2))],
            vec![(pt(&[1, -1]), rint(0))],
        )
        .unwrap();
        let json = serde_json::to_string(&h).unwrap();
        let back: HPolyhedron = serde_json::from_str(&json).unwrap();
        assert_eq!(back, h);
    }
}
