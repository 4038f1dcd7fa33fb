//! Normalized-formulation triples `(A, phi, t)` and their operator-norm
//! certificates.
//!
//! A triple encodes the body `P = {phi(x) + t : A(x) + I PSD}` with `A`
//! linear into block-diagonal symmetric matrices (`l` blocks of size `m`).
//! Entries are floating point: triples arise from numeric normalization, and
//! the quantities certified about them (operator norms, distance bounds) are
//! real-valued. Exactly computable checks are still done in rationals by
//! lifting the float entries losslessly.
//!
//! The operator norm of a matrix-valued linear map has no cheap exact
//! formula for `m >= 2`, so we certify a bracket: a sampled lower bound and
//! a subadditive upper bound. For `m = 1` the two sides coincide.

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::geometry::polytope::HPolyhedron;
use crate::rational::{from_f64_exact, rint};
use crate::{Error, Result};

/// Number of random unit directions used by sampling-based bounds.
const NORM_SAMPLES: usize = 1200;
/// Relative slack accepted by the boolean certificate checks.
const CERT_SLACK: f64 = 1e-6;

/// One linear map `x -> sum_j x_j C_j` into symmetric `m x m` matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockLinearMap {
    coeffs: Vec<DMatrix<f64>>,
}

impl BlockLinearMap {
    pub fn new(coeffs: Vec<DMatrix<f64>>, m: usize) -> Result<Self> {
        for c in &coeffs {
            if c.nrows() != m || c.ncols() != m {
                return Err(Error::MixedBlockSizes);
            }
            let scale = 1.0 + c.amax();
            for i in 0..m {
                for j in 0..i {
                    if (c[(i, j)] - c[(j, i)]).abs() > 1e-9 * scale {
                        return Err(Error::Malformed(
                            "block coefficient matrix is not symmetric".into(),
                        ));
                    }
                }
            }
        }
        Ok(BlockLinearMap { coeffs })
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    /// Evaluates the block at `x`.
    pub fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.coeffs.first().map(|c| c.nrows()).unwrap_or(0);
        let mut out = DMatrix::zeros(m, m);
        for (xj, c) in x.iter().zip(&self.coeffs) {
            out += c * *xj;
        }
        out
    }
}

/// The triple `(A, phi, t)` of a normalized extended formulation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TripleWire", into = "TripleWire")]
pub struct EncodingTriple {
    m: usize,
    blocks: Vec<BlockLinearMap>,
    phi: DMatrix<f64>,
    t: DVector<f64>,
}

impl EncodingTriple {
    /// Builds a triple; `phi` is `d x n`, every block takes `n` coefficient
    /// matrices of size `m x m`, and `t` has length `d`.
    pub fn new(
        m: usize,
        blocks: Vec<BlockLinearMap>,
        phi: DMatrix<f64>,
        t: DVector<f64>,
    ) -> Result<Self> {
        if t.len() != phi.nrows() {
            return Err(Error::DimensionMismatch {
                expected: phi.nrows(),
                got: t.len(),
            });
        }
        for b in &blocks {
            if b.coeffs.len() != phi.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: phi.ncols(),
                    got: b.coeffs.len(),
                });
            }
            if let Some(c) = b.coeffs.first() {
                if c.nrows() != m {
                    return Err(Error::MixedBlockSizes);
                }
            }
        }
        Ok(EncodingTriple { m, blocks, phi, t })
    }

    /// Triple describing the single point `{t}` (`n = l = 0`).
    pub fn point(t: DVector<f64>) -> Self {
        let d = t.len();
        EncodingTriple {
            m: 0,
            blocks: Vec::new(),
            phi: DMatrix::zeros(d, 0),
            t,
        }
    }

    pub fn l(&self) -> usize {
        self.blocks.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    pub fn d(&self) -> usize {
        self.phi.nrows()
    }

    pub fn blocks(&self) -> &[BlockLinearMap] {
        &self.blocks
    }

    pub fn phi(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn t(&self) -> &DVector<f64> {
        &self.t
    }

    /// Shape tuple `(l, m, n, d)`.
    pub fn shape(&self) -> (usize, usize, usize, usize) {
        (self.l(), self.m, self.n(), self.d())
    }

    /// Image of a lifted point under the affine projection.
    pub fn project_point(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.phi * x + &self.t
    }

    /// Smallest eigenvalue of `A(x)` across all blocks; `x` is feasible for
    /// the formulation precisely when this is `>= -1`.
    pub fn min_eigenvalue(&self, x: &DVector<f64>) -> f64 {
        let mut min = f64::INFINITY;
        for b in &self.blocks {
            let eig = b.eval(x).symmetric_eigen().eigenvalues;
            for v in eig.iter() {
                min = min.min(*v);
            }
        }
        min
    }

    /// For `m = 1` triples, the lifted feasible set as an exact halfspace
    /// description: `A_b(x) + 1 >= 0` becomes `-a_b . x <= 1`, with the
    /// float coefficients lifted losslessly to rationals.
    pub fn linear_q_hpoly(&self) -> Result<HPolyhedron> {
        if self.m != 1 {
            return Err(Error::Malformed(
                "halfspace description requires blocks of size 1".into(),
            ));
        }
        let n = self.n();
        let mut ineqs = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let row = b
                .coeffs
                .iter()
                .map(|c| from_f64_exact(c[(0, 0)]).map(|r| -r))
                .collect::<Result<Vec<_>>>()?;
            ineqs.push((row, rint(1)));
        }
        HPolyhedron::new(n, ineqs, vec![])
    }
}

/// Norm data reported by `triple_norms`. The `a` norm is a bracket; the
/// sides agree exactly when `a_exact` is set (blocks of size 1, or no
/// blocks at all).
#[derive(Clone, Debug, PartialEq)]
pub struct TripleNorms {
    pub a_lower: f64,
    pub a_upper: f64,
    pub phi: f64,
    pub t: f64,
    pub a_exact: bool,
}

/// Operator norms of the three components.
///
/// `phi` is the largest singular value (power iteration, relative tolerance
/// 1e-10); `t` is the Euclidean norm; the `A` bracket samples unit inputs
/// for the lower side and combines the coordinate images for the upper side.
pub fn triple_norms(tr: &EncodingTriple) -> TripleNorms {
    let phi = spectral_norm(&tr.phi);
    let t = tr.t.norm();
    let (a_lower, a_upper, a_exact) = a_norm_bracket(tr);
    TripleNorms {
        a_lower,
        a_upper,
        phi,
        t,
        a_exact,
    }
}

fn a_norm_bracket(tr: &EncodingTriple) -> (f64, f64, bool) {
    let n = tr.n();
    if n == 0 || tr.blocks.is_empty() {
        return (0.0, 0.0, true);
    }
    if tr.m == 1 {
        // Each block is a scalar functional; its operator norm is the
        // Euclidean norm of the coefficient vector, and the block-diagonal
        // norm is the largest of them.
        let mut best: f64 = 0.0;
        for b in &tr.blocks {
            let norm_sq: f64 = b.coeffs.iter().map(|c| c[(0, 0)] * c[(0, 0)]).sum();
            best = best.max(norm_sq.sqrt());
        }
        return (best, best, true);
    }

    // Upper side: for unit x, |A_b(x)| <= sum_j |x_j| |C_j| <= min of the
    // l1 and Cauchy-Schwarz combinations of the coordinate image norms.
    let mut upper: f64 = 0.0;
    for b in &tr.blocks {
        let norms: Vec<f64> = b.coeffs.iter().map(symmetric_spectral_norm).collect();
        let l1: f64 = norms.iter().sum();
        let l2: f64 = norms.iter().map(|v| v * v).sum::<f64>().sqrt();
        upper = upper.max(l1.min(l2));
    }

    // Lower side: evaluate at coordinate directions and random unit vectors.
    let mut lower: f64 = 0.0;
    let mut eval_at = |x: &DVector<f64>| {
        for b in &tr.blocks {
            lower = lower.max(symmetric_spectral_norm(&b.eval(x)));
        }
    };
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        eval_at(&e);
    }
    let mut rng = StdRng::seed_from_u64(0x7a3f_11d2);
    for _ in 0..NORM_SAMPLES {
        if let Some(x) = random_unit(&mut rng, n) {
            eval_at(&x);
        }
    }
    (lower, upper.max(lower), false)
}

fn random_unit(rng: &mut StdRng, n: usize) -> Option<DVector<f64>> {
    let x = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let norm = x.norm();
    if norm < 1e-12 {
        None
    } else {
        Some(x / norm)
    }
}

/// Largest singular value by power iteration on the Gram matrix, restarted
/// from every coordinate direction so a start vector orthogonal to the top
/// eigenspace cannot report a smaller value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = m.transpose() * m;
    let n = gram.nrows();
    let mut best: f64 = 0.0;
    let mut starts: Vec<DVector<f64>> = Vec::with_capacity(n + 1);
    starts.push(DVector::from_element(n, 1.0 / (n as f64).sqrt()));
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        starts.push(e);
    }
    for mut v in starts {
        let mut lambda = 0.0f64;
        for _ in 0..100_000 {
            let w = &gram * &v;
            let next = w.norm();
            if next < 1e-300 {
                lambda = 0.0;
                break;
            }
            v = w / next;
            if (next - lambda).abs() <= 1e-10 * next.max(1.0) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        best = best.max(lambda);
    }
    best.sqrt()
}

fn symmetric_spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Upper bound on the Hausdorff distance between the bodies of two triples
/// of identical shape: `rho n^2 |A - A'| + n |phi - phi'| + |t - t'|`, with
/// the `A` difference taken at its upper bracket so the bound stays valid.
pub fn triple_distance_bound(tr: &EncodingTriple, other: &EncodingTriple, rho: f64) -> Result<f64> {
    if tr.shape() != other.shape() {
        return Err(Error::Malformed(format!(
            "triple shapes differ: {:?} vs {:?}",
            tr.shape(),
            other.shape()
        )));
    }
    let n = tr.n() as f64;
    let diff_blocks = tr
        .blocks
        .iter()
        .zip(&other.blocks)
        .map(|(b, b2)| {
            let coeffs = b
                .coeffs
                .iter()
                .zip(&b2.coeffs)
                .map(|(c, c2)| c - c2)
                .collect();
            BlockLinearMap { coeffs }
        })
        .collect();
    let diff = EncodingTriple {
        m: tr.m,
        blocks: diff_blocks,
        phi: &tr.phi - &other.phi,
        t: &tr.t - &other.t,
    };
    let norms = triple_norms(&diff);
    Ok(rho * n * n * norms.a_upper + n * norms.phi + norms.t)
}

/// Certificate produced by `validate_normalized`. Boolean fields record the
/// checks; the `*_exact` flags say whether the corresponding check was a
/// complete decision procedure or a sampled probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CertificateWire", into = "CertificateWire")]
pub struct NormalizationCertificate {
    pub norm_a_lower: f64,
    pub norm_a_upper: f64,
    pub norm_phi: f64,
    pub norm_t: f64,
    pub a_exact: bool,
    /// `n <= l m^2`, checked in exact integers.
    pub n_check: bool,
    /// Unit ball inside the lifted set, certified via `|A| <= 1`.
    pub inner_ball: bool,
    /// Lifted set inside `n` times the unit ball.
    pub outer_ball: bool,
    /// Whether the outer check was exact (halfspace case) or sampled.
    pub outer_exact: bool,
    pub norm_phi_ok: bool,
    pub norm_t_ok: bool,
}

impl NormalizationCertificate {
    pub fn all_pass(&self) -> bool {
        self.n_check && self.inner_ball && self.outer_ball && self.norm_phi_ok && self.norm_t_ok
    }
}

/// Checks the defining inequalities of a normalized formulation: `|A| <= 1`,
/// `|phi| <= rho`, `|t| <= rho`, `n <= l m^2`, and the ball sandwich
/// `B^n ⊆ Q ⊆ n B^n`. Failures are recorded, not raised.
pub fn validate_normalized(tr: &EncodingTriple, rho: f64) -> NormalizationCertificate {
    let norms = triple_norms(tr);
    let n = tr.n();
    let n_check = n <= tr.l() * tr.m * tr.m;
    let inner_ball = norms.a_upper <= 1.0 + CERT_SLACK;
    let (outer_ball, outer_exact) = outer_ball_check(tr);
    NormalizationCertificate {
        norm_a_lower: norms.a_lower,
        norm_a_upper: norms.a_upper,
        norm_phi: norms.phi,
        norm_t: norms.t,
        a_exact: norms.a_exact,
        n_check,
        inner_ball,
        outer_ball,
        outer_exact,
        norm_phi_ok: norms.phi <= rho * (1.0 + CERT_SLACK),
        norm_t_ok: norms.t <= rho * (1.0 + CERT_SLACK),
    }
}

fn outer_ball_check(tr: &EncodingTriple) -> (bool, bool) {
    let n = tr.n();
    if n == 0 {
        return (true, true);
    }
    if tr.blocks.is_empty() {
        // No constraints: the lifted set is all of R^n.
        return (false, true);
    }
    if tr.m == 1 {
        return (exact_outer_halfspaces(tr), true);
    }
    // Sampled ray probe. Along direction u the feasible stretch is
    // -1/lambda_min(A(u)) (infinite when A(u) has no negative eigenvalue),
    // and containment in n B^n needs every stretch <= n.
    let bound = n as f64 * (1.0 + CERT_SLACK);
    let mut rng = StdRng::seed_from_u64(0xbead_5eed);
    let mut directions = Vec::new();
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        directions.push(e.clone());
        directions.push(-e);
    }
    for _ in 0..NORM_SAMPLES {
        if let Some(u) = random_unit(&mut rng, n) {
            directions.push(u);
        }
    }
    for u in &directions {
        let min_eig = tr.min_eigenvalue(u);
        if min_eig >= 0.0 {
            return (false, false);
        }
        let stretch = -1.0 / min_eig;
        if stretch > bound {
            return (false, false);
        }
    }
    (true, false)
}

/// Exact outer check for the halfspace case: enumerate the vertices of
/// `Q = {x : -a_b . x <= 1}` and compare the largest squared vertex norm
/// with `(n (1 + slack))^2` in rational arithmetic. An unbounded `Q` fails.
fn exact_outer_halfspaces(tr: &EncodingTriple) -> bool {
    use crate::geometry::hull::enumerate_vertices;
    use crate::rational::rat;

    let n = tr.n();
    let h = match tr.linear_q_hpoly() {
        Ok(h) => h,
        Err(_) => return false,
    };
    let verts = match enumerate_vertices(&h) {
        Ok(v) => v,
        Err(_) => return false,
    };
    if verts.is_empty() {
        return false;
    }
    let slack = rat(1_000_001, 1_000_000);
    let budget = rint(n as i64) * rint(n as i64) * &slack * &slack;
    verts.circumradius_sq() <= budget
}

#[derive(Serialize, Deserialize)]
struct TripleWire {
    l: usize,
    m: usize,
    n: usize,
    #[serde(rename = "A_blocks")]
    a_blocks: Vec<Vec<Vec<Vec<String>>>>,
    phi: Vec<Vec<String>>,
    t: Vec<String>,
}

fn f64_to_string(x: f64) -> String {
    format!("{x:?}")
}

fn f64_from_string(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Malformed(format!("bad numeric literal {s:?}")))
}

impl From<EncodingTriple> for TripleWire {
    fn from(tr: EncodingTriple) -> Self {
        let (l, m, n, _) = tr.shape();
        TripleWire {
            l,
            m,
            n,
            a_blocks: tr
                .blocks
                .iter()
                .map(|b| {
                    b.coeffs
                        .iter()
                        .map(|c| {
                            (0..c.nrows())
                                .map(|i| (0..c.ncols()).map(|j| f64_to_string(c[(i, j)])).collect())
                                .collect()
                        })
                        .collect()
                })
                .collect(),
            phi: (0..tr.phi.nrows())
                .map(|i| {
                    (0..tr.phi.ncols())
                        .map(|j| f64_to_string(tr.phi[(i, j)]))
                        .collect()
                })
                .collect(),
            t: tr.t.iter().map(|x| f64_to_string(*x)).collect(),
        }
    }
}

impl TryFrom<TripleWire> for EncodingTriple {
    type Error = Error;
    fn try_from(w: TripleWire) -> Result<Self> {
        if w.a_blocks.len() != w.l {
            return Err(Error::Malformed(
                "declared block count disagrees with A_blocks".into(),
            ));
        }
        let d = w.phi.len();
        let mut phi = DMatrix::zeros(d, w.n);
        for (i, row) in w.phi.iter().enumerate() {
            if row.len() != w.n {
                return Err(Error::Malformed("ragged phi matrix".into()));
            }
            for (j, s) in row.iter().enumerate() {
                phi[(i, j)] = f64_from_string(s)?;
            }
        }
        let mut t = DVector::zeros(d);
        for (i, s) in w.t.iter().enumerate() {
            t[i] = f64_from_string(s)?;
        }
        let mut blocks = Vec::with_capacity(w.l);
        for bw in &w.a_blocks {
            if bw.len() != w.n {
                return Err(Error::Malformed(
                    "block coefficient count disagrees with n".into(),
                ));
            }
            let mut coeffs = Vec::with_capacity(w.n);
            for cm in bw {
                if cm.len() != w.m {
                    return Err(Error::MixedBlockSizes);
                }
                let mut mat = DMatrix::zeros(w.m, w.m);
                for (i, row) in cm.iter().enumerate() {
                    if row.len() != w.m {
                        return Err(Error::MixedBlockSizes);
                    }
                    for (j, s) in row.iter().enumerate() {
                        mat[(i, j)] = f64_from_string(s)?;
                    }
                }
                coeffs.push(mat);
            }
            blocks.push(BlockLinearMap::new(coeffs, w.m)?);
        }
        EncodingTriple::new(w.m, blocks, phi, t)
    }
}

#[derive(Serialize, Deserialize)]
struct CertificateWire {
    norm_a_lower: String,
    norm_a_upper: String,
    norm_phi: String,
    norm_t: String,
    a_exact: bool,
    n_check: bool,
    inner_ball: bool,
    outer_ball: bool,
    outer_exact: bool,
    norm_phi_ok: bool,
    norm_t_ok: bool,
}

impl From<NormalizationCertificate> for CertificateWire {
    fn from(c: NormalizationCertificate) -> Self {
        CertificateWire {
            norm_a_lower: f64_to_string(c.norm_a_lower),
            norm_a_upper: f64_to_string(c.norm_a_upper),
            norm_phi: f64_to_string(c.norm_phi),
            norm_t: f64_to_string(c.norm_t),
            a_exact: c.a_exact,
            n_check: c.n_check,
            inner_ball: c.inner_ball,
            outer_ball: c.outer_ball,
            outer_exact: c.outer_exact,
            norm_phi_ok: c.norm_phi_ok,
            norm_t_ok: c.norm_t_ok,
        }
    }
}

impl TryFrom<CertificateWire> for NormalizationCertificate {
    type Error = Error;
    fn try_from(w: CertificateWire) -> Result<Self> {
        Ok(NormalizationCertificate {
            norm_a_lower: f64_from_string(&w.norm_a_lower)?,
            norm_a_upper: f64_from_string(&w.norm_a_upper)?,
            norm_phi: f64_from_string(&w.norm_phi)?,
            norm_t: f64_from_string(&w.norm_t)?,
            a_exact: w.a_exact,
            n_check: w.n_check,
            inner_ball: w.inner_ball,
            outer_ball: w.outer_ball,
            outer_exact: w.outer_exact,
            norm_phi_ok: w.norm_phi_ok,
            norm_t_ok: w.norm_t_ok,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_block(coeffs: &[f64]) -> BlockLinearMap {
        BlockLinearMap::new(
            coeffs
                .iter()
                .map(|&c| DMatrix::from_element(1, 1, c))
                .collect(),
            1,
        )
        .unwrap()
    }

    fn interval_triple() -> EncodingTriple {
        // Two scalar blocks x and -x: the lifted set is [-1, 1].
        EncodingTriple::new(
            1,
            vec![scalar_block(&[1.0]), scalar_block(&[-1.0])],
            DMatrix::identity(1, 1),
            DVector::zeros(1),
        )
        .unwrap()
    }

    fn elliptope_triple() -> EncodingTriple {
        let e = |r: usize, c: usize| {
            let mut m = DMatrix::zeros(3, 3);
            m[(r, c)] = 1.0;
            m[(c, r)] = 1.0;
            m
        };
        let block = BlockLinearMap::new(vec![e(0, 1), e(0, 2), e(1, 2)], 3).unwrap();
        let phi = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        EncodingTriple::new(3, vec![block], phi, DVector::zeros(2)).unwrap()
    }

    #[test]
    fn zero_triple_has_zero_norms() {
        let zero_block = BlockLinearMap::new(vec![DMatrix::zeros(2, 2); 2], 2).unwrap();
        let tr = EncodingTriple::new(2, vec![zero_block], DMatrix::zeros(2, 2), DVector::zeros(2))
            .unwrap();
        let norms = triple_norms(&tr);
        assert_eq!(
            (norms.a_lower, norms.a_upper, norms.phi, norms.t),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn scalar_blocks_have_exact_norm() {
        let tr = EncodingTriple::new(
            1,
            vec![scalar_block(&[0.6, 0.8]), scalar_block(&[0.0, 1.0])],
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .unwrap();
        let norms = triple_norms(&tr);
        assert!(norms.a_exact);
        assert!((norms.a_lower - 1.0).abs() < 1e-12);
        assert_eq!(norms.a_lower, norms.a_upper);
        assert!((norms.phi - 1.0).abs() < 1e-10);
    }

    #[test]
    fn power_iteration_matches_svd() {
        use rand::rngs::StdRng;
        use rand::SeedableRng;
        let mut rng = StdRng::seed_from_u64(42);
        for _ in 0..20 {
            let m = DMatrix::from_fn(3, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
            let svd_norm = m.clone().svd(false, false).singular_values[0];
            assert!((spectral_norm(&m) - svd_norm).abs() <= 1e-8 * (1.0 + svd_norm));
        }
    }

    #[test]
    fn power_iteration_survives_adversarial_start() {
        // Top eigenvector (1,-1)/sqrt(2) is orthogonal to the all-ones
        // start; the coordinate restarts must still find eigenvalue 2.
        let m = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
        let expected = 2.0f64.sqrt(); // singular value of the PSD root factor
        let g = m.clone();
        // Use the matrix itself: spectral_norm works on the Gram matrix of
        // its argument, so feed a symmetric square root via eigendecomp.
        let eig = g.symmetric_eigen();
        let sqrt = &eig.eigenvectors
            * DMatrix::from_diagonal(&eig.eigenvalues.map(|v: f64| v.sqrt()))
            * eig.eigenvectors.transpose();
        assert!((spectral_norm(&sqrt) - expected).abs() < 1e-8);
    }

    #[test]
    fn elliptope_bracket_orders_correctly() {
        let tr = elliptope_triple();
        let norms = triple_norms(&tr);
        assert!(!norms.a_exact);
        assert!(norms.a_lower <= norms.a_upper + 1e-12);
        // At x = (1,1,1)/sqrt(3) the block has eigenvalue 2/sqrt(3).
        let target = 2.0 / 3.0f64.sqrt();
        assert!(norms.a_lower >= 1.0, "sampled lower bound {}", norms.a_lower);
        assert!(norms.a_lower <= target + 1e-9);
        assert!(norms.a_upper <= 3.0f64.sqrt() + 1e-12);
    }

    #[test]
    fn distance_bound_formula() {
        let tr = interval_triple();
        assert_eq!(triple_distance_bound(&tr, &tr, 5.0).unwrap(), 0.0);

        // Same A and t, phi differs by 0.1 in one singular direction, n = 2.
        let block = scalar_block(&[1.0, 0.0]);
        let phi = DMatrix::identity(2, 2);
        let mut phi2 = phi.clone();
        phi2[(0, 0)] += 0.1;
        let a = EncodingTriple::new(1, vec![block.clone()], phi, DVector::zeros(2)).unwrap();
        let b = EncodingTriple::new(1, vec![block], phi2, DVector::zeros(2)).unwrap();
        let bound = triple_distance_bound(&a, &b, 7.0).unwrap();
        assert!((bound - 0.2).abs() < 1e-12, "bound {bound}");
        assert_eq!(
            bound,
            triple_distance_bound(&b, &a, 7.0).unwrap()
        );
    }

    #[test]
    fn distance_bound_rejects_shape_mismatch() {
        let a = interval_triple();
        let b = elliptope_triple();
        assert!(triple_distance_bound(&a, &b, 1.0).is_err());
    }

    #[test]
    fn interval_certificate_passes_all_checks() {
        let cert = validate_normalized(&interval_triple(), 1.0);
        assert!(cert.all_pass(), "{cert:?}");
        assert!(cert.a_exact);
        assert!(cert.outer_exact);
    }

    #[test]
    fn n_check_fails_when_lift_is_too_small() {
        // n = 2 with a single scalar block: 2 > 1 * 1^2.
        let tr = EncodingTriple::new(
            1,
            vec![scalar_block(&[0.5, 0.5])],
            DMatrix::identity(2, 2),
            DVector::zeros(2),
        )
        .unwrap();
        let cert = validate_normalized(&tr, 1.0);
        assert!(!cert.n_check);
    }

    #[test]
    fn oversized_translation_fails_norm_check() {
        let mut tr = interval_triple();
        tr.t = DVector::from_element(1, 2.0);
        let cert = validate_normalized(&tr, 1.0);
        assert!(!cert.norm_t_ok);
        assert!(cert.n_check && cert.inner_ball);
    }

    #[test]
    fn elliptope_certificate_flags_inner_violation() {
        // The sampled lower bound already exceeds 1, so the failure is
        // genuine, not bracketing slack: the unit ball pokes out of the
        // lifted set near -(1,1,1)/sqrt(3).
        let cert = validate_normalized(&elliptope_triple(), 3.0f64.sqrt());
        assert!(!cert.inner_ball);
        assert!(cert.norm_a_lower > 1.0);
        assert!(cert.n_check);
        assert!(cert.outer_ball && !cert.outer_exact);
    }

    #[test]
    fn unbounded_lifted_set_fails_outer_check() {
        // Single block x >= -1 leaves the positive ray free.
        let tr = EncodingTriple::new(
            1,
            vec![scalar_block(&[1.0])],
            DMatrix::identity(1, 1),
            DVector::zeros(1),
        )
        .unwrap();
        let cert = validate_normalized(&tr, 1.0);
        assert!(!cert.outer_ball);
        assert!(cert.outer_exact);
    }

    #[test]
    fn point_triple_is_trivially_normalized() {
        let tr = EncodingTriple::point(DVector::from_vec(vec![0.25, -0.5]));
        let cert = validate_normalized(&tr, 1.0);
        assert!(cert.all_pass(), "{cert:?}");
    }

    #[test]
    fn triple_round_trips_through_json() {
        for tr in [interval_triple(), elliptope_triple()] {
            let text = serde_json::to_string(&tr).unwrap();
            let back: EncodingTriple = serde_json::from_str(&text).unwrap();
            assert_eq!(back, tr);
        }
        let cert = validate_normalized(&interval_triple(), 1.0);
        let text = serde_json::to_string(&cert).unwrap();
        let back: NormalizationCertificate = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cert);
    }
}
