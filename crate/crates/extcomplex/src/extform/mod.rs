//! Extended formulations of polytopes.
//!
//! An extended formulation describes a polytope `P` in `R^d` as the affine
//! image `P = proj(Q)` of a feasible set `Q` in a lifted space `R^n`. Two
//! flavours are supported: `Q` cut out by linear inequalities, and `Q` cut
//! out by linear matrix inequalities (a spectrahedron with block-diagonal
//! structure). Membership testing is exact over the rationals in both cases.

pub mod psd;
mod triple;
mod verify;

pub use triple::{
    spectral_norm, triple_distance_bound, triple_norms, validate_normalized, BlockLinearMap,
    EncodingTriple, NormalizationCertificate, TripleNorms,
};
pub use verify::{verify_linear_ef, VerificationReport};

use num_traits::Zero;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::geometry::polytope::{AffineMap, HPolyhedron};
use crate::linalg::RatMat;
use crate::rational::{format_rational, parse_rational, rzero, Rational};
use crate::{Error, Result};
use psd::{is_psd, ldlt_psd, PsdCheck};

/// A linear map `x -> S(x) + T` from `R^n` into symmetric `m x m` matrices,
/// stored as one coefficient matrix per input coordinate plus the constant
/// part. Entries are rational so evaluation and PSD testing stay exact.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMatrixMap {
    coeffs: Vec<RatMat>,
    constant: RatMat,
}

impl AffineMatrixMap {
    /// Builds the map after checking that all matrices are square, symmetric,
    /// and of a common size.
    pub fn new(coeffs: Vec<RatMat>, constant: RatMat) -> Result<Self> {
        let m = constant.len();
        check_symmetric(&constant, m)?;
        for c in &coeffs {
            if c.len() != m {
                return Err(Error::MixedBlockSizes);
            }
            check_symmetric(c, m)?;
        }
        Ok(AffineMatrixMap { coeffs, constant })
    }

    /// Input dimension `n`.
    pub fn in_dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Matrix size `m`.
    pub fn block_size(&self) -> usize {
        self.constant.len()
    }

    /// Coefficient matrix of the `j`-th input coordinate.
    pub fn coeff(&self, j: usize) -> &RatMat {
        &self.coeffs[j]
    }

    /// Constant part `T`.
    pub fn constant(&self) -> &RatMat {
        &self.constant
    }

    /// Evaluates `S(x) + T`.
    pub fn eval(&self, x: &[Rational]) -> Result<RatMat> {
        if x.len() != self.coeffs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.coeffs.len(),
                got: x.len(),
            });
        }
        let m = self.block_size();
        let mut out = self.constant.clone();
        for (xj, cj) in x.iter().zip(&self.coeffs) {
            if xj.is_zero() {
                continue;
            }
            for r in 0..m {
                for c in 0..m {
                    out[r][c] += xj * &cj[r][c];
                }
            }
        }
        Ok(out)
    }

    /// The linear part alone, `x -> S(x)`.
    pub fn eval_linear(&self, x: &[Rational]) -> Result<RatMat> {
        let mut out = self.eval(x)?;
        let m = self.block_size();
        for r in 0..m {
            for c in 0..m {
                out[r][c] -= &self.constant[r][c];
            }
        }
        Ok(out)
    }
}

fn check_symmetric(m: &RatMat, size: usize) -> Result<()> {
    for row in m {
        if row.len() != size {
            return Err(Error::Malformed("matrix block is not square".into()));
        }
    }
    for i in 0..size {
        for j in 0..i {
            if m[i][j] != m[j][i] {
                return Err(Error::Malformed("matrix block is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Extended formulation with a polyhedral lifted set: `P = proj(lifted)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LinearEFWire", into = "LinearEFWire")]
pub struct LinearEF {
    lifted: HPolyhedron,
    proj: AffineMap,
}

impl LinearEF {
    pub fn new(lifted: HPolyhedron, proj: AffineMap) -> Result<Self> {
        if proj.in_dim() != lifted.dim() {
            return Err(Error::DimensionMismatch {
                expected: lifted.dim(),
                got: proj.in_dim(),
            });
        }
        Ok(LinearEF { lifted, proj })
    }

    pub fn lifted(&self) -> &HPolyhedron {
        &self.lifted
    }

    pub fn proj(&self) -> &AffineMap {
        &self.proj
    }

    /// Number of inequalities; equations are free in this size measure.
    pub fn size(&self) -> usize {
        self.lifted.size()
    }
}

/// Extended formulation whose lifted set is a spectrahedron given by `l`
/// matrix inequalities `M_i(x)` PSD, all of a common size `m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SemidefEFWire", into = "SemidefEFWire")]
pub struct SemidefEF {
    blocks: Vec<AffineMatrixMap>,
    proj: AffineMap,
}

impl SemidefEF {
    pub fn new(blocks: Vec<AffineMatrixMap>, proj: AffineMap) -> Result<Self> {
        let n = proj.in_dim();
        let mut block_size = None;
        for b in &blocks {
            if b.in_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: b.in_dim(),
                });
            }
            match block_size {
                None => block_size = Some(b.block_size()),
                Some(m) if m != b.block_size() => return Err(Error::MixedBlockSizes),
                Some(_) => {}
            }
        }
        Ok(SemidefEF { blocks, proj })
    }

    pub fn blocks(&self) -> &[AffineMatrixMap] {
        &self.blocks
    }

    pub fn proj(&self) -> &AffineMap {
        &self.proj
    }

    /// Common block size `m`; zero when there are no blocks.
    pub fn block_size(&self) -> usize {
        self.blocks.first().map(|b| b.block_size()).unwrap_or(0)
    }

    /// Total LMI size `k = l * m`.
    pub fn total_size(&self) -> usize {
        self.blocks.len() * self.block_size()
    }
}

/// Either kind of extended formulation.
#[derive(Clone, Debug, PartialEq)]
pub enum ExtendedFormulation {
    Linear(LinearEF),
    Semidef(SemidefEF),
}

impl ExtendedFormulation {
    pub fn proj(&self) -> &AffineMap {
        match self {
            ExtendedFormulation::Linear(ef) => ef.proj(),
            ExtendedFormulation::Semidef(ef) => ef.proj(),
        }
    }
}

impl From<LinearEF> for ExtendedFormulation {
    fn from(ef: LinearEF) -> Self {
        ExtendedFormulation::Linear(ef)
    }
}

impl From<SemidefEF> for ExtendedFormulation {
    fn from(ef: SemidefEF) -> Self {
        ExtendedFormulation::Semidef(ef)
    }
}

/// Tests whether the lifted point `x` belongs to the lifted feasible set.
///
/// Linear formulations evaluate every inequality and equation exactly;
/// semidefinite formulations run an exact rational PSD test on each block.
pub fn ef_membership(ef: &ExtendedFormulation, x: &[Rational]) -> Result<bool> {
    let (_, _, n, _) = ef_project_size(ef);
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    match ef {
        ExtendedFormulation::Linear(lef) => Ok(lef.lifted.contains(x)),
        ExtendedFormulation::Semidef(sef) => {
            for block in &sef.blocks {
                if !is_psd(&block.eval(x)?)? {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

/// Like `ef_membership`, but on failure returns the index of the violated
/// block and a rational vector `v` with `v^T M_i(x) v < 0`. Linear
/// formulations report the index of the violated inequality (counting
/// equations after the inequalities) with an empty witness vector.
pub fn ef_membership_witness(
    ef: &ExtendedFormulation,
    x: &[Rational],
) -> Result<Option<(usize, Vec<Rational>)>> {
    let (_, _, n, _) = ef_project_size(ef);
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    match ef {
        ExtendedFormulation::Linear(lef) => {
            let poly = &lef.lifted;
            for (i, (a, b)) in poly.ineqs().iter().enumerate() {
                if &crate::linalg::dot(a, x) > b {
                    return Ok(Some((i, Vec::new())));
                }
            }
            for (i, (a, b)) in poly.eqs().iter().enumerate() {
                if &crate::linalg::dot(a, x) != b {
                    return Ok(Some((poly.ineqs().len() + i, Vec::new())));
                }
            }
            Ok(None)
        }
        ExtendedFormulation::Semidef(sef) => {
            for (i, block) in sef.blocks.iter().enumerate() {
                if let PsdCheck::NotPsd { witness } = ldlt_psd(&block.eval(x)?)? {
                    return Ok(Some((i, witness)));
                }
            }
            Ok(None)
        }
    }
}

/// Size parameters `(l, m, n, d)`: number of (matrix) inequalities, block
/// size (1 for linear formulations, 0 for an empty block list), lifted
/// dimension, and target dimension.
pub fn ef_project_size(ef: &ExtendedFormulation) -> (usize, usize, usize, usize) {
    match ef {
        ExtendedFormulation::Linear(lef) => (
            lef.size(),
            if lef.size() == 0 { 0 } else { 1 },
            lef.lifted.dim(),
            lef.proj.out_dim(),
        ),
        ExtendedFormulation::Semidef(sef) => (
            sef.blocks.len(),
            sef.block_size(),
            sef.proj.in_dim(),
            sef.proj.out_dim(),
        ),
    }
}

#[derive(Serialize, Deserialize)]
struct LinearEFWire {
    kind: String,
    n: usize,
    proj: AffineMap,
    lifted: HPolyhedron,
}

impl From<LinearEF> for LinearEFWire {
    fn from(ef: LinearEF) -> Self {
        LinearEFWire {
            kind: "linear".into(),
            n: ef.lifted.dim(),
            proj: ef.proj,
            lifted: ef.lifted,
        }
    }
}

impl TryFrom<LinearEFWire> for LinearEF {
    type Error = Error;
    fn try_from(w: LinearEFWire) -> Result<Self> {
        if w.kind != "linear" {
            return Err(Error::Malformed(format!(
                "expected kind \"linear\", got {:?}",
                w.kind
            )));
        }
        if w.lifted.dim() != w.n {
            return Err(Error::Malformed(
                "lifted dimension disagrees with declared n".into(),
            ));
        }
        LinearEF::new(w.lifted, w.proj)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixMapWire {
    #[serde(rename = "S")]
    s: Vec<Vec<Vec<String>>>,
    #[serde(rename = "T")]
    t: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct SemidefEFWire {
    kind: String,
    n: usize,
    proj: AffineMap,
    blocks: Vec<MatrixMapWire>,
}

fn strings_to_mat(rows: &[Vec<String>]) -> Result<RatMat> {
    rows.iter()
        .map(|row| row.iter().map(|s| parse_rational(s)).collect())
        .collect()
}

fn mat_to_strings(m: &RatMat) -> Vec<Vec<String>> {
    m.iter()
        .map(|row| row.iter().map(format_rational).collect())
        .collect()
}

impl From<SemidefEF> for SemidefEFWire {
    fn from(ef: SemidefEF) -> Self {
        SemidefEFWire {
            kind: "semidef".into(),
            n: ef.proj.in_dim(),
            proj: ef.proj,
            blocks: ef
                .blocks
                .into_iter()
                .map(|b| MatrixMapWire {
                    s: b.coeffs.iter().map(mat_to_strings).collect(),
                    t: mat_to_strings(&b.constant),
                })
                .collect(),
        }
    }
}

impl TryFrom<SemidefEFWire> for SemidefEF {
    type Error = Error;
    fn try_from(w: SemidefEFWire) -> Result<Self> {
        if w.kind != "semidef" {
            return Err(Error::Malformed(format!(
                "expected kind \"semidef\", got {:?}",
                w.kind
            )));
        }
        let mut blocks = Vec::with_capacity(w.blocks.len());
        for bw in &w.blocks {
            if bw.s.len() != w.n {
                return Err(Error::Malformed(
                    "block coefficient count disagrees with declared n".into(),
                ));
            }
            let coeffs = bw.s.iter().map(|m| strings_to_mat(m)).collect::<Result<_>>()?;
            blocks.push(AffineMatrixMap::new(coeffs, strings_to_mat(&bw.t)?)?);
        }
        SemidefEF::new(blocks, w.proj)
    }
}

impl Serialize for ExtendedFormulation {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ExtendedFormulation::Linear(ef) => ef.serialize(ser),
            ExtendedFormulation::Semidef(ef) => ef.serialize(ser),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedFormulation {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(de)?;
        match value.get("kind").and_then(|k| k.as_str()) {
            Some("linear") => serde_json::from_value::<LinearEF>(value)
                .map(ExtendedFormulation::Linear)
                .map_err(D::Error::custom),
            Some("semidef") => serde_json::from_value::<SemidefEF>(value)
                .map(ExtendedFormulation::Semidef)
                .map_err(D::Error::custom),
            other => Err(D::Error::custom(format!(
                "unknown formulation kind {other:?}"
            ))),
        }
    }
}

/// Convenience constructor for the lifted set of a spectrahedron block list
/// with a shared symmetric pattern, used by tests.
pub fn symmetric_basis_map(pattern: &[(usize, usize)], m: usize) -> Result<AffineMatrixMap> {
    use crate::rational::rint;
    let mut coeffs = Vec::with_capacity(pattern.len());
    for &(r, c) in pattern {
        let mut mat = vec![vec![rzero(); m]; m];
        mat[r][c] = rint(1);
        mat[c][r] = rint(1);
        coeffs.push(mat);
    }
    AffineMatrixMap::new(coeffs, vec![vec![rzero(); m]; m])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::rational::{rat, rint};

    /// The spectrahedron in R^3 given by the 3x3 matrix with unit diagonal
    /// and off-diagonal entries x1, x2, x3, projected onto (x1, x2). Its
    /// image is the square [-1,1]^2.
    fn elliptope_square_ef() -> SemidefEF {
        let block = AffineMatrixMap::new(
            vec![
                strings_to_mat(&mat_lit(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 0]])).unwrap(),
                strings_to_mat(&mat_lit(&[&[0, 0, 1], &[0, 0, 0], &[1, 0, 0]])).unwrap(),
                strings_to_mat(&mat_lit(&[&[0, 0, 0], &[0, 0, 1], &[0, 1, 0]])).unwrap(),
            ],
            identity(3),
        )
        .unwrap();
        let proj = AffineMap::new(
            3,
            vec![
                vec![rint(1), rint(0), rint(0)],
                vec![rint(0), rint(1), rint(0)],
            ],
            vec![rint(0), rint(0)],
        )
        .unwrap();
        SemidefEF::new(vec![block], proj).unwrap()
    }

    fn mat_lit(rows: &[&[i64]]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect()
    }

    fn unit_square_h() -> HPolyhedron {
        let ineqs = vec![
            (vec![rint(-1), rint(0)], rint(0)),
            (vec![rint(0), rint(-1)], rint(0)),
            (vec![rint(1), rint(0)], rint(1)),
            (vec![rint(0), rint(1)], rint(1)),
        ];
        HPolyhedron::new(2, ineqs, vec![]).unwrap()
    }

    #[test]
    fn elliptope_membership_at_origin_and_outside() {
        let ef = ExtendedFormulation::Semidef(elliptope_square_ef());
        assert!(ef_membership(&ef, &[rint(0), rint(0), rint(0)]).unwrap());
        // Determinant at (1,1,-1) is -4, so the point must be rejected.
        assert!(!ef_membership(&ef, &[rint(1), rint(1), rint(-1)]).unwrap());
        let witness = ef_membership_witness(&ef, &[rint(1), rint(1), rint(-1)])
            .unwrap()
            .expect("witness expected");
        assert_eq!(witness.0, 0);
        let source = elliptope_square_ef();
        let block = source.blocks()[0]
            .eval(&[rint(1), rint(1), rint(-1)])
            .unwrap();
        assert!(psd::quadratic_form(&block, &witness.1) < rint(0));
    }

    #[test]
    fn elliptope_boundary_point_is_inside() {
        // x3 = x1 x2 keeps the matrix PSD for any x1, x2 in [-1,1].
        let ef = ExtendedFormulation::Semidef(elliptope_square_ef());
        assert!(ef_membership(&ef, &[rint(1), rat(1, 2), rat(1, 2)]).unwrap());
    }

    #[test]
    fn elliptope_size_parameters() {
        let ef = ExtendedFormulation::Semidef(elliptope_square_ef());
        assert_eq!(ef_project_size(&ef), (1, 3, 3, 2));
    }

    #[test]
    fn square_hrep_membership() {
        let ef = ExtendedFormulation::Linear(
            LinearEF::new(unit_square_h(), AffineMap::identity(2)).unwrap(),
        );
        assert!(!ef_membership(&ef, &[rint(2), rint(0)]).unwrap());
        assert!(ef_membership(&ef, &[rat(1, 2), rat(1, 2)]).unwrap());
        assert_eq!(ef_project_size(&ef), (4, 1, 2, 2));
    }

    #[test]
    fn point_formulation_has_size_zero() {
        let lifted = HPolyhedron::new(0, vec![], vec![]).unwrap();
        let proj = AffineMap::new(0, vec![vec![], vec![]], vec![rint(3), rint(-1)]).unwrap();
        let ef = ExtendedFormulation::Linear(LinearEF::new(lifted, proj).unwrap());
        assert_eq!(ef_project_size(&ef), (0, 0, 0, 2));
        assert!(ef_membership(&ef, &[]).unwrap());
    }

    #[test]
    fn mixed_block_sizes_rejected() {
        let b1 = symmetric_basis_map(&[(0, 0)], 1).unwrap();
        let b2 = symmetric_basis_map(&[(0, 1)], 2).unwrap();
        let proj = AffineMap::identity(1);
        assert!(matches!(
            SemidefEF::new(vec![b1, b2], proj),
            Err(Error::MixedBlockSizes)
        ));
    }

    #[test]
    fn membership_dimension_checked() {
        let ef = ExtendedFormulation::Semidef(elliptope_square_ef());
        assert!(ef_membership(&ef, &[rint(0)]).is_err());
    }

    #[test]
    fn json_round_trip_both_kinds() {
        let lin = ExtendedFormulation::Linear(
            LinearEF::new(unit_square_h(), AffineMap::identity(2)).unwrap(),
        );
        let text = serde_json::to_string(&lin).unwrap();
        assert!(text.contains("\"kind\":\"linear\""));
        let back: ExtendedFormulation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, lin);

        let sd = ExtendedFormulation::Semidef(elliptope_square_ef());
        let text = serde_json::to_string(&sd).unwrap();
        assert!(text.contains("\"kind\":\"semidef\""));
        let back: ExtendedFormulation = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sd);
    }

    #[test]
    fn affine_matrix_map_rejects_asymmetry() {
        let bad = vec![vec![rint(0), rint(1)], vec![rint(0), rint(0)]];
        assert!(AffineMatrixMap::new(vec![bad], identity(2)).is_err());
    }
}
