//! Rewriting verified extended formulations into the centered monic form
//! `{y : A(y) + I PSD}` whose lifted set is wedged between the unit ball and
//! `n` times the unit ball.
//!
//! The pipeline has four stages. [`bounded_section`] cuts away recession
//! directions until the lifted set is bounded, without losing any point of
//! the projection. A change of coordinates onto the affine hull then makes
//! the section full-dimensional. [`sandwich_transform`] maps an inscribed
//! John ellipsoid to the unit ball, which centers and rescales the body.
//! Finally [`helton_vinnikov_reduce`] turns each semidefinite block
//! `S(y) + T` into a monic block `A(y) + I` cutting out the same region.
//!
//! Everything up to the sandwich stage runs in exact rational arithmetic.
//! The ellipsoid step is the single point where floating point enters; the
//! optional [`SandwichMode::InscribedBox`] mode substitutes an exact
//! inscribed-cube scaling for linear formulations, keeping the whole chain
//! rational at the price of a weaker outer radius.
//!
//! Spectrahedral inputs get the honest but partial treatment that exact
//! arithmetic permits: recession directions are found through the lineality
//! space of the block maps (plus long-ray feasibility probes for anything
//! the lineality space misses), and the interior point required by the
//! monic reduction is searched among a fixed list of rational candidates.
//! Failures in either search surface as errors rather than silently wrong
//! output.

use crate::error::{Error, Result};
use crate::extform::psd::{is_psd, ldlt_psd, PsdCheck};
use crate::extform::{
    spectral_norm, AffineMatrixMap, BlockLinearMap, EncodingTriple, ExtendedFormulation, LinearEF,
    SemidefEF,
};
use crate::geometry::ellipsoid::john_ellipsoid;
use crate::geometry::hull::enumerate_vertices;
use crate::geometry::lp::{solve_problem, LpOutcome, Sense};
use crate::geometry::polytope::{AffineMap, HPolyhedron, VPolytope};
use crate::geometry::recession::recession_direction;
use crate::linalg::{self, RatMat, RatVec};
use crate::rational::{from_f64_exact, rat, rone, rzero, to_f64, Rational};
use nalgebra::{DMatrix, DVector};
use num_traits::{Signed, Zero};

/// Residual above which the kernel of the constant block visibly fails to
/// annihilate the linear part, signalling the origin is not interior.
const KERNEL_RESIDUAL_TOL: f64 = 1e-8;

/// Positive pivots smaller than this fraction of the largest pivot make the
/// `1/sqrt(pivot)` column scaling numerically meaningless.
const PIVOT_RELATIVE_CUTOFF: f64 = 1e-9;

/// Parameter value for the long-ray feasibility probes that look for
/// unbounded directions lineality analysis cannot see.
const PROBE_RAY: i64 = 1 << 32;

/// Affine subspace `offset + basis * R^{n'}` of `R^n`, stored with a basis
/// of full column rank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSection {
    basis: RatMat,
    offset: RatVec,
}

impl AffineSection {
    /// Builds a section from an `n x n'` basis (given as `n` rows) and an
    /// offset in the ambient space; the basis columns must be independent.
    pub fn new(basis: RatMat, offset: RatVec) -> Result<Self> {
        let n = offset.len();
        if basis.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: basis.len(),
            });
        }
        let cols = basis.first().map_or(0, Vec::len);
        if basis.iter().any(|row| row.len() != cols) {
            return Err(Error::Malformed("section basis has ragged rows".into()));
        }
        if linalg::rank(&linalg::transpose(&basis)) != cols {
            return Err(Error::Malformed(
                "section basis columns are linearly dependent".into(),
            ));
        }
        Ok(AffineSection { basis, offset })
    }

    /// The whole of `R^n` as a section of itself.
    pub fn identity(n: usize) -> Self {
        AffineSection {
            basis: linalg::identity(n),
            offset: vec![rzero(); n],
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.offset.len()
    }

    /// Dimension of the subspace (number of basis columns).
    pub fn dim(&self) -> usize {
        self.basis.first().map_or(0, Vec::len)
    }

    pub fn basis(&self) -> &RatMat {
        &self.basis
    }

    pub fn offset(&self) -> &RatVec {
        &self.offset
    }

    /// Embeds section coordinates into the ambient space.
    pub fn apply(&self, y: &[Rational]) -> RatVec {
        linalg::vec_add(&linalg::mat_vec(&self.basis, y), &self.offset)
    }

    /// `self ∘ inner`: `inner` must live in this section's coordinates.
    pub fn compose(&self, inner: &AffineSection) -> Result<AffineSection> {
        if inner.ambient_dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: inner.ambient_dim(),
            });
        }
        Ok(AffineSection {
            basis: linalg::mat_mul(&self.basis, &inner.basis),
            offset: self.apply(&inner.offset),
        })
    }

    /// The same subspace as an affine map from `R^{n'}` into `R^n`.
    pub fn as_map(&self) -> AffineMap {
        AffineMap::new(self.dim(), self.basis.clone(), self.offset.clone())
            .expect("section invariants guarantee a well-formed map")
    }
}

/// Linear symmetric-matrix map `A(y) = sum_j y_j A_j` describing the monic
/// region `{y : A(y) + I PSD}`.
#[derive(Debug, Clone)]
pub struct MonicBlock {
    coeffs: Vec<DMatrix<f64>>,
    block_size: usize,
}

impl MonicBlock {
    pub fn new(coeffs: Vec<DMatrix<f64>>, block_size: usize) -> Result<Self> {
        for c in &coeffs {
            if c.nrows() != block_size || c.ncols() != block_size {
                return Err(Error::MixedBlockSizes);
            }
            let scale = 1.0 + c.amax();
            for i in 0..block_size {
                for j in 0..i {
                    if (c[(i, j)] - c[(j, i)]).abs() > 1e-9 * scale {
                        return Err(Error::Malformed(
                            "monic coefficient matrix is not symmetric".into(),
                        ));
                    }
                }
            }
        }
        Ok(MonicBlock { coeffs, block_size })
    }

    pub fn coeffs(&self) -> &[DMatrix<f64>] {
        &self.coeffs
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn in_dim(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluates the linear part; callers add the identity themselves.
    pub fn eval(&self, y: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.block_size, self.block_size);
        for (yj, c) in y.iter().zip(&self.coeffs) {
            out += c * *yj;
        }
        out
    }
}

/// Strategy for fitting the full-dimensional section between two balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SandwichMode {
    /// John ellipsoid mapped to the unit ball; outer radius at most `n'`
    /// and certified exactly, but the map itself comes from the
    /// floating-point barrier optimizer.
    Ellipsoid,
    /// Largest inscribed axis-aligned cube, computed by an exact LP. The
    /// whole pipeline stays rational, at the price of an outer radius that
    /// is not bounded by `n'` for skewed bodies. Only meaningful for
    /// linear formulations; semidefinite inputs ignore the mode.
    InscribedBox,
}

/// Finds an affine subspace `L` such that the lifted set meets `L` in a
/// bounded set that still projects onto `conv(target)`.
///
/// Recession directions are eliminated one at a time: pick a direction `u`
/// the lifted set recedes along, pick one preimage per target vertex, and
/// cut with the hyperplane orthogonal to `u` through the preimage
/// maximizing `u . y`. Every ray from a preimage along `+u` meets that
/// hyperplane, so each vertex keeps a preimage inside the cut; the
/// dimension drops by one per step, so at most `n` steps run.
///
/// For polyhedra the recession directions come from an exact LP. For
/// spectrahedra only lineality directions of the block maps are found
/// exactly; anything beyond is probed along long rays and reported as
/// [`Error::Unbounded`] when detected.
pub fn bounded_section(ef: &ExtendedFormulation, target: &VPolytope) -> Result<AffineSection> {
    if target.is_empty() {
        return Err(Error::EmptyInput("bounded_section target"));
    }
    if ef.proj().out_dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: ef.proj().out_dim(),
            got: target.dim(),
        });
    }
    match ef {
        ExtendedFormulation::Linear(lef) => polyhedron_section(lef.lifted(), lef.proj(), target),
        ExtendedFormulation::Semidef(sef) => spectrahedron_section(sef, target),
    }
}

fn polyhedron_section(
    lifted: &HPolyhedron,
    proj: &AffineMap,
    target: &VPolytope,
) -> Result<AffineSection> {
    let n = lifted.dim();
    let mut section = AffineSection::identity(n);
    let mut h = lifted.clone();
    for _ in 0..=n {
        let Some(u) = recession_direction(&h)? else {
            return Ok(section);
        };
        let cur_proj = proj.compose(&section.as_map())?;
        let mut level: Option<Rational> = None;
        for (i, v) in target.vertices().iter().enumerate() {
            let y = match fiber_point(&h, &cur_proj, v) {
                Ok(y) => y,
                Err(Error::Infeasible) => return Err(Error::PreimageNotFound { index: i }),
                Err(e) => return Err(e),
            };
            let val = linalg::dot(&u, &y);
            if level.as_ref().is_none_or(|best| val > *best) {
                level = Some(val);
            }
        }
        let cut = hyperplane_section(&u, &level.expect("target has vertices"))?;
        h = restrict_polyhedron(&h, &cut)?;
        section = section.compose(&cut)?;
    }
    Err(Error::Malformed(
        "recession elimination did not terminate within the ambient dimension".into(),
    ))
}

fn spectrahedron_section(sef: &SemidefEF, target: &VPolytope) -> Result<AffineSection> {
    let n = sef.proj().in_dim();
    let mut section = AffineSection::identity(n);
    let mut blocks: Vec<AffineMatrixMap> = sef.blocks().to_vec();
    for _ in 0..=n {
        let Some(u) = lineality_direction(&blocks, section.dim()) else {
            break;
        };
        let cur_proj = sef.proj().compose(&section.as_map())?;
        let mut level: Option<Rational> = None;
        for (i, v) in target.vertices().iter().enumerate() {
            let y = spectra_fiber_point(&blocks, &cur_proj, v)
                .ok_or(Error::PreimageNotFound { index: i })?;
            let val = linalg::dot(&u, &y);
            if level.as_ref().is_none_or(|best| val > *best) {
                level = Some(val);
            }
        }
        let cut = hyperplane_section(&u, &level.expect("target has vertices"))?;
        blocks = blocks
            .iter()
            .map(|b| restrict_matrix_map(b, &cut))
            .collect::<Result<_>>()?;
        section = section.compose(&cut)?;
    }
    if let Some(anchor) = feasible_candidates(&blocks, section.dim())
        .into_iter()
        .find(|c| all_blocks_psd(&blocks, c).unwrap_or(false))
    {
        probe_boundedness(&blocks, &anchor)?;
    }
    Ok(section)
}

/// Any point of `{y in h : proj(y) = v}`, found by a zero-objective LP.
fn fiber_point(h: &HPolyhedron, proj: &AffineMap, v: &[Rational]) -> Result<RatVec> {
    let mut lp = h.to_lp_problem();
    for (row, (off, vi)) in proj
        .matrix()
        .iter()
        .zip(proj.offset().iter().zip(v.iter()))
    {
        lp.add_eq(row.clone(), vi - off);
    }
    match solve_problem(&lp, &vec![rzero(); h.dim()], Sense::Minimize)? {
        LpOutcome::Optimal { x, .. } => Ok(x),
        LpOutcome::Infeasible => Err(Error::Infeasible),
        LpOutcome::Unbounded => Err(Error::Malformed(
            "zero objective reported unbounded".into(),
        )),
    }
}

/// A solution of `proj(y) = v` that all blocks accept, if the particular
/// solution of the linear system happens to be feasible. Searching the
/// whole fiber would be semidefinite feasibility, which is out of reach of
/// exact arithmetic, so failures are reported instead.
fn spectra_fiber_point(
    blocks: &[AffineMatrixMap],
    proj: &AffineMap,
    v: &[Rational],
) -> Option<RatVec> {
    let rhs = linalg::vec_sub(v, proj.offset());
    let y = linalg::solve_any(proj.matrix(), &rhs).ok()?;
    match all_blocks_psd(blocks, &y) {
        Ok(true) => Some(y),
        _ => None,
    }
}

fn all_blocks_psd(blocks: &[AffineMatrixMap], y: &[Rational]) -> Result<bool> {
    for b in blocks {
        if !is_psd(&b.eval(y)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Hyperplane `{y : u . y = level}` parametrized as an affine section.
fn hyperplane_section(u: &[Rational], level: &Rational) -> Result<AffineSection> {
    let nn = linalg::norm_sq(u);
    if nn.is_zero() {
        return Err(Error::Malformed("zero recession direction".into()));
    }
    let y0 = linalg::vec_scale(&(level / nn), u);
    let kernel = linalg::nullspace(&vec![u.to_vec()]);
    let basis = columns_to_matrix(&kernel, u.len());
    AffineSection::new(basis, y0)
}

fn columns_to_matrix(cols: &[RatVec], rows: usize) -> RatMat {
    (0..rows)
        .map(|i| cols.iter().map(|c| c[i].clone()).collect())
        .collect()
}

/// Substitutes `x = map(y)` into every constraint of `h`. Inequality rows
/// are kept one-for-one, including rows that become vacuous; equations that
/// collapse to `0 = 0` are dropped.
fn restrict_affine(h: &HPolyhedron, map: &AffineMap) -> Result<HPolyhedron> {
    debug_assert_eq!(h.dim(), map.out_dim());
    let bt = linalg::transpose(map.matrix());
    let mut ineqs = Vec::with_capacity(h.size());
    for (a, b) in h.ineqs() {
        ineqs.push((linalg::mat_vec(&bt, a), b - linalg::dot(a, map.offset())));
    }
    let mut eqs = Vec::new();
    for (a, b) in h.eqs() {
        let row = linalg::mat_vec(&bt, a);
        let rhs = b - linalg::dot(a, map.offset());
        if row.iter().all(Zero::is_zero) {
            if !rhs.is_zero() {
                return Err(Error::Infeasible);
            }
        } else {
            eqs.push((row, rhs));
        }
    }
    HPolyhedron::new(map.in_dim(), ineqs, eqs)
}

fn restrict_polyhedron(h: &HPolyhedron, sec: &AffineSection) -> Result<HPolyhedron> {
    restrict_affine(h, &sec.as_map())
}

/// Substitutes `x = sec(y)` into an affine matrix map.
fn restrict_matrix_map(mm: &AffineMatrixMap, sec: &AffineSection) -> Result<AffineMatrixMap> {
    let m = mm.block_size();
    let constant = mm.eval(sec.offset())?;
    let mut coeffs = Vec::with_capacity(sec.dim());
    for j in 0..sec.dim() {
        let mut acc = vec![vec![rzero(); m]; m];
        for (i, row) in sec.basis().iter().enumerate() {
            mat_axpy(&mut acc, &row[j], mm.coeff(i));
        }
        coeffs.push(acc);
    }
    AffineMatrixMap::new(coeffs, constant)
}

fn mat_axpy(acc: &mut RatMat, c: &Rational, m: &RatMat) {
    if c.is_zero() {
        return;
    }
    for (ar, mr) in acc.iter_mut().zip(m) {
        for (a, v) in ar.iter_mut().zip(mr) {
            *a += c * v;
        }
    }
}

/// First direction along which every block map vanishes identically, i.e.
/// a line the spectrahedron contains through each of its points.
fn lineality_direction(blocks: &[AffineMatrixMap], n: usize) -> Option<RatVec> {
    if n == 0 {
        return None;
    }
    let mut stacked: RatMat = Vec::new();
    for b in blocks {
        let m = b.block_size();
        for r in 0..m {
            for c in r..m {
                stacked.push((0..n).map(|j| b.coeff(j)[r][c].clone()).collect());
            }
        }
    }
    if stacked.is_empty() {
        stacked.push(vec![rzero(); n]);
    }
    linalg::nullspace(&stacked).into_iter().next()
}

/// Rational points worth testing for feasibility or interiority: the
/// origin of the section coordinates and nothing else for now; callers
/// append problem-specific candidates.
fn feasible_candidates(_blocks: &[AffineMatrixMap], n: usize) -> Vec<RatVec> {
    vec![vec![rzero(); n]]
}

/// Walks far along coordinate rays and the diagonal from a feasible anchor;
/// exact feasibility at distance `2^32` is taken as proof of an unbounded
/// direction the lineality analysis missed.
fn probe_boundedness(blocks: &[AffineMatrixMap], anchor: &[Rational]) -> Result<()> {
    let n = anchor.len();
    if n == 0 || blocks.is_empty() {
        return Ok(());
    }
    let t = rat(PROBE_RAY, 1);
    let mut directions: Vec<RatVec> = Vec::new();
    for j in 0..n {
        for sign in [rone(), -rone()] {
            let mut u = vec![rzero(); n];
            u[j] = sign;
            directions.push(u);
        }
    }
    directions.push(vec![rone(); n]);
    directions.push(vec![-rone(); n]);
    for u in &directions {
        let far = linalg::vec_add(anchor, &linalg::vec_scale(&t, u));
        if all_blocks_psd(blocks, &far)? {
            return Err(Error::Unbounded);
        }
    }
    Ok(())
}

/// Affine bijection `tau` with `B ⊆ tau(Q) ⊆ n(1+1e-6) B` for a bounded
/// full-dimensional H-polytope `Q`, built from the John ellipsoid.
///
/// The float ellipsoid is snapped to exact rationals and re-certified: the
/// inner inclusion by the facet conditions `|B^T a| <= b - a . c` (with a
/// geometric shrink ladder absorbing the float-to-rational rounding), the
/// outer one by mapping every vertex and bounding its norm. Either check
/// failing is an [`Error::EllipsoidFailure`].
pub fn sandwich_transform(q: &HPolyhedron) -> Result<AffineMap> {
    let n = q.dim();
    if n == 0 {
        return Err(Error::NotFullDimensional);
    }
    let john = john_ellipsoid(q, 1e-8)?;
    let center: RatVec = john
        .ellipsoid
        .center
        .iter()
        .map(|&c| from_f64_exact(c))
        .collect::<Result<_>>()?;
    let shape0: RatMat = john
        .ellipsoid
        .shape
        .iter()
        .map(|row| row.iter().map(|&v| from_f64_exact(v)).collect::<Result<_>>())
        .collect::<Result<_>>()?;

    let facets: Vec<(&RatVec, Rational)> = q
        .ineqs()
        .iter()
        .filter(|(a, _)| a.iter().any(|v| !v.is_zero()))
        .map(|(a, b)| (a, b - linalg::dot(a, &center)))
        .collect();
    if facets.iter().any(|(_, slack)| !slack.is_positive()) {
        return Err(Error::EllipsoidFailure(
            "ellipsoid center is not interior".into(),
        ));
    }

    let mut certified: Option<RatMat> = None;
    for k in [0u32, 50, 40, 30] {
        let kappa = if k == 0 {
            rone()
        } else {
            rone() - rat(1, 1i64 << k)
        };
        let cand: RatMat = shape0
            .iter()
            .map(|row| row.iter().map(|v| v * &kappa).collect())
            .collect();
        let ct = linalg::transpose(&cand);
        let inner_ok = facets
            .iter()
            .all(|(a, slack)| linalg::norm_sq(&linalg::mat_vec(&ct, a)) <= slack * slack);
        if inner_ok {
            certified = Some(cand);
            break;
        }
    }
    let Some(shape) = certified else {
        return Err(Error::EllipsoidFailure(
            "inscribed ellipsoid failed exact facet certification".into(),
        ));
    };

    let minv = linalg::inverse(&shape)
        .map_err(|_| Error::EllipsoidFailure("degenerate ellipsoid shape".into()))?;
    let moff = linalg::vec_scale(&-rone(), &linalg::mat_vec(&minv, &center));
    let tau = AffineMap::new(n, minv, moff)?;

    let cap = rat(n as i64, 1) * rat(1_000_001, 1_000_000);
    let cap_sq = &cap * &cap;
    for v in john.vertices.vertices() {
        if linalg::norm_sq(&tau.apply(v)) > cap_sq {
            return Err(Error::EllipsoidFailure(
                "a vertex escapes the outer ball after the ellipsoid map".into(),
            ));
        }
    }
    Ok(tau)
}

/// Exact-rational sandwich for a bounded full-dimensional H-polytope:
/// maps the largest inscribed axis-aligned cube onto `[-1,1]^n`. The unit
/// ball lands inside the image by LP optimality; no bound on the outer
/// radius is claimed.
pub fn inscribed_box_transform(q: &HPolyhedron) -> Result<AffineMap> {
    let n = q.dim();
    if n == 0 {
        return Err(Error::NotFullDimensional);
    }
    if q.eqs().iter().any(|(a, _)| a.iter().any(|v| !v.is_zero())) {
        return Err(Error::NotFullDimensional);
    }
    // An extra variable for the cube radius: a . c + t sum_j |a_j| <= b.
    let mut lp = crate::geometry::lp::LpProblem::new(n + 1);
    for (a, b) in q.ineqs() {
        let mut row = a.clone();
        row.push(a.iter().map(|v| v.abs()).sum());
        lp.add_ineq(row, b.clone());
    }
    let mut tpos = vec![rzero(); n + 1];
    tpos[n] = -rone();
    lp.add_ineq(tpos, rzero());
    let mut objective = vec![rzero(); n + 1];
    objective[n] = rone();
    match solve_problem(&lp, &objective, Sense::Maximize)? {
        LpOutcome::Optimal { x, .. } => {
            let t = x[n].clone();
            if !t.is_positive() {
                return Err(Error::NotFullDimensional);
            }
            let mut matrix = vec![vec![rzero(); n]; n];
            let mut offset = vec![rzero(); n];
            for j in 0..n {
                matrix[j][j] = rone() / &t;
                offset[j] = -&x[j] / &t;
            }
            AffineMap::new(n, matrix, offset)
        }
        LpOutcome::Infeasible => Err(Error::Infeasible),
        LpOutcome::Unbounded => Err(Error::Unbounded),
    }
}

/// Rewrites a block `M(y) = S(y) + T` with `T` PSD into a monic block with
/// `A(y) + I` PSD exactly where `M(y)` is PSD.
///
/// The constant part is factored exactly as `T = W diag(d_1..d_r, 0) W^T`
/// with `W` rational; dividing the first `r` columns by `sqrt(d_i)` (the
/// single floating-point step) gives a congruence `U` with
/// `U^T T U = diag(I_r, 0)`. The origin being interior to the PSD region
/// forces the kernel columns of `U` to annihilate every `S(e_j)`; that is
/// checked in exact arithmetic before the reduction `A_j` = top-left `r x r`
/// corner of `U^T S(e_j) U`, zero-padded back to full block size.
pub fn helton_vinnikov_reduce(block: &AffineMatrixMap) -> Result<MonicBlock> {
    let m = block.block_size();
    let n = block.in_dim();
    let fact = match ldlt_psd(block.constant())? {
        PsdCheck::Psd(f) => f,
        PsdCheck::NotPsd { .. } => return Err(Error::ConstantBlockNotPsd),
    };
    let r = fact.rank;

    let pivf: Vec<f64> = fact.pivots[..r].iter().map(to_f64).collect();
    if let Some(&pmax) = pivf
        .iter()
        .max_by(|a, b| a.partial_cmp(b).expect("pivots are finite"))
    {
        if pivf.iter().any(|&p| p < PIVOT_RELATIVE_CUTOFF * pmax) {
            return Err(Error::PivotCapExceeded);
        }
    }

    // Columns of W = P L^{-T} in original coordinates; W^T T W = diag(d, 0).
    let mut w_cols: Vec<RatVec> = Vec::with_capacity(m);
    for k in 0..m {
        let mut e = vec![rzero(); m];
        e[k] = rone();
        let permuted = solve_unit_upper_transpose(&fact.unit_lower, &e);
        let mut orig = vec![rzero(); m];
        for (i, &p) in fact.perm.iter().enumerate() {
            orig[p] = permuted[i].clone();
        }
        w_cols.push(orig);
    }

    // Exact kernel property: columns past the rank must annihilate every
    // coefficient matrix, otherwise the origin is not interior.
    let mut worst_residual = 0.0f64;
    for z in &w_cols[r..] {
        for j in 0..n {
            let sj = block.coeff(j);
            let image = linalg::mat_vec(sj, z);
            if image.iter().all(Zero::is_zero) {
                continue;
            }
            let scale = 1.0
                + sj.iter()
                    .flatten()
                    .map(|v| to_f64(v).abs())
                    .fold(0.0, f64::max)
                    * z.iter().map(|v| to_f64(v).abs()).fold(0.0, f64::max);
            let res = image
                .iter()
                .map(|v| to_f64(v).abs())
                .fold(0.0, f64::max)
                / scale;
            worst_residual = worst_residual.max(res);
        }
    }
    if worst_residual > KERNEL_RESIDUAL_TOL {
        return Err(Error::KernelResidual {
            residual: worst_residual,
            tol: KERNEL_RESIDUAL_TOL,
        });
    }

    // Float congruence on the range part only.
    let mut u_range = DMatrix::zeros(m, r);
    for (k, col) in w_cols[..r].iter().enumerate() {
        let scale = 1.0 / pivf[k].sqrt();
        for i in 0..m {
            u_range[(i, k)] = to_f64(&col[i]) * scale;
        }
    }
    let mut coeffs = Vec::with_capacity(n);
    for j in 0..n {
        let sj = DMatrix::from_fn(m, m, |i, k| to_f64(&block.coeff(j)[i][k]));
        let reduced = u_range.transpose() * sj * &u_range;
        let mut a = DMatrix::zeros(m, m);
        for i in 0..r {
            for k in 0..r {
                a[(i, k)] = 0.5 * (reduced[(i, k)] + reduced[(k, i)]);
            }
        }
        coeffs.push(a);
    }
    MonicBlock::new(coeffs, m)
}

/// Back-substitution for `L^T v = w` with `L` unit lower triangular.
fn solve_unit_upper_transpose(l: &RatMat, w: &[Rational]) -> RatVec {
    let m = w.len();
    let mut v = w.to_vec();
    for i in (0..m).rev() {
        let mut acc = v[i].clone();
        for k in i + 1..m {
            acc -= &l[k][i] * &v[k];
        }
        v[i] = acc;
    }
    v
}

/// Full pipeline from a verified extended formulation of `conv(target)` to
/// an encoding triple in monic form, using the John-ellipsoid sandwich.
pub fn normalize(ef: &ExtendedFormulation, target: &VPolytope) -> Result<EncodingTriple> {
    normalize_with_mode(ef, target, SandwichMode::Ellipsoid)
}

/// [`normalize`] with an explicit sandwich strategy.
///
/// Empty and zero-dimensional targets short-circuit to the size-zero
/// sentinel triple (their complexity is zero by convention); an empty
/// target anchors the sentinel at the origin for lack of a better point.
/// The `(l, m)` shape of the input is preserved in every other case:
/// linear formulations map row-for-row to `1 x 1` blocks (vacuous rows
/// become zero blocks), semidefinite ones block-for-block through the
/// monic reduction followed by a norm rescale that puts the unit ball
/// inside the lifted set by the certificate's own upper bracket.
pub fn normalize_with_mode(
    ef: &ExtendedFormulation,
    target: &VPolytope,
    mode: SandwichMode,
) -> Result<EncodingTriple> {
    let d = target.dim();
    if ef.proj().out_dim() != d {
        return Err(Error::DimensionMismatch {
            expected: ef.proj().out_dim(),
            got: d,
        });
    }
    if target.is_empty() {
        return Ok(EncodingTriple::point(DVector::zeros(d)));
    }
    if target.affine_dim() == Some(0) {
        let v = &target.vertices()[0];
        return Ok(EncodingTriple::point(DVector::from_iterator(
            d,
            v.iter().map(to_f64),
        )));
    }
    let section = bounded_section(ef, target)?;
    match ef {
        ExtendedFormulation::Linear(lef) => normalize_linear(lef, &section, mode),
        ExtendedFormulation::Semidef(sef) => normalize_semidef(sef, &section),
    }
}

fn normalize_linear(
    lef: &LinearEF,
    section: &AffineSection,
    mode: SandwichMode,
) -> Result<EncodingTriple> {
    let h1 = restrict_polyhedron(lef.lifted(), section)?;
    let verts = enumerate_vertices(&h1)?;
    if verts.is_empty() {
        return Err(Error::Infeasible);
    }
    let hull = affine_hull_section(&verts)?;
    let full_to_section = lef.proj().compose(&section.as_map())?;
    if hull.dim() == 0 {
        let anchor = full_to_section.apply(hull.offset());
        return Ok(EncodingTriple::point(DVector::from_iterator(
            anchor.len(),
            anchor.iter().map(to_f64),
        )));
    }
    let h2 = restrict_polyhedron(&h1, &hull)?;
    let tau = match mode {
        SandwichMode::Ellipsoid => sandwich_transform(&h2)?,
        SandwichMode::InscribedBox => inscribed_box_transform(&h2)?,
    };
    let psi = tau.inverse()?;
    let h3 = restrict_affine(&h2, &psi)?;

    let n1 = h3.dim();
    let mut blocks = Vec::with_capacity(h3.size());
    for (a, b) in h3.ineqs() {
        let coeffs: Vec<DMatrix<f64>> = if a.iter().all(Zero::is_zero) {
            (0..n1).map(|_| DMatrix::zeros(1, 1)).collect()
        } else {
            if !b.is_positive() {
                return Err(Error::Malformed(
                    "facet right-hand side is not positive after centering".into(),
                ));
            }
            a.iter()
                .map(|ai| DMatrix::from_element(1, 1, to_f64(&(-(ai / b)))))
                .collect()
        };
        blocks.push(BlockLinearMap::new(coeffs, 1)?);
    }

    let chain = full_to_section.compose(&hull.as_map())?.compose(&psi)?;
    finish_triple(1, blocks, &chain)
}

fn normalize_semidef(sef: &SemidefEF, section: &AffineSection) -> Result<EncodingTriple> {
    let m = sef.block_size();
    let blocks0: Vec<AffineMatrixMap> = sef
        .blocks()
        .iter()
        .map(|b| restrict_matrix_map(b, section))
        .collect::<Result<_>>()?;
    let n1 = section.dim();
    let base = sef.proj().compose(&section.as_map())?;
    if n1 == 0 {
        let anchor = base.apply(&[]);
        return Ok(EncodingTriple::point(DVector::from_iterator(
            anchor.len(),
            anchor.iter().map(to_f64),
        )));
    }

    let center = feasible_candidates(&blocks0, n1)
        .into_iter()
        .find(|c| all_blocks_pd(&blocks0, c).unwrap_or(false))
        .ok_or_else(|| {
            Error::EllipsoidFailure("no strictly interior rational point located".into())
        })?;

    let mut monics = Vec::with_capacity(blocks0.len());
    for b in &blocks0 {
        let shifted = AffineMatrixMap::new(
            (0..n1).map(|j| b.coeff(j).clone()).collect(),
            b.eval(&center)?,
        )?;
        monics.push(helton_vinnikov_reduce(&shifted)?);
    }

    // Upper bracket of the block-diagonal operator norm; scaling by it puts
    // the unit ball inside the lifted set with the bracket itself as the
    // certificate.
    let mut beta = 0.0f64;
    for mb in &monics {
        let norms: Vec<f64> = mb.coeffs().iter().map(spectral_norm).collect();
        let sum: f64 = norms.iter().sum();
        let sumsq: f64 = norms.iter().map(|v| v * v).sum::<f64>().sqrt();
        beta = beta.max(sum.min(sumsq));
    }
    if !(beta > 0.0) {
        // Nothing constrains a positive-dimensional section.
        return Err(Error::Unbounded);
    }
    let scale = beta * (1.0 + 1e-12);
    let blocks: Vec<BlockLinearMap> = monics
        .into_iter()
        .map(|mb| {
            BlockLinearMap::new(mb.coeffs().iter().map(|c| c / scale).collect(), m)
        })
        .collect::<Result<_>>()?;

    let scale_rat = from_f64_exact(scale)?;
    let offset = base.apply(&center);
    let matrix: RatMat = base
        .matrix()
        .iter()
        .map(|row| row.iter().map(|v| v / &scale_rat).collect())
        .collect();
    let chain = AffineMap::new(n1, matrix, offset)?;
    finish_triple(m, blocks, &chain)
}

fn finish_triple(
    m: usize,
    blocks: Vec<BlockLinearMap>,
    chain: &AffineMap,
) -> Result<EncodingTriple> {
    let d = chain.out_dim();
    let n = chain.in_dim();
    let phi = DMatrix::from_fn(d, n, |i, j| to_f64(&chain.matrix()[i][j]));
    let t = DVector::from_iterator(d, chain.offset().iter().map(to_f64));
    let triple = EncodingTriple::new(m, blocks, phi, t)?;
    if triple.n() > triple.l() * triple.m() * triple.m() {
        return Err(Error::Malformed(
            "section dimension exceeds the size bound of the formulation".into(),
        ));
    }
    Ok(triple)
}

fn all_blocks_pd(blocks: &[AffineMatrixMap], y: &[Rational]) -> Result<bool> {
    for b in blocks {
        match ldlt_psd(&b.eval(y)?)? {
            PsdCheck::Psd(f) if f.rank == b.block_size() => {}
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Re-coordinatization onto the affine hull of a vertex set: the offset is
/// the first vertex, the basis a maximal independent set of differences.
fn affine_hull_section(verts: &VPolytope) -> Result<AffineSection> {
    let vs = verts.vertices();
    let v0 = vs[0].clone();
    let mut chosen: Vec<RatVec> = Vec::new();
    for v in &vs[1..] {
        let diff = linalg::vec_sub(v, &v0);
        if diff.iter().all(Zero::is_zero) {
            continue;
        }
        chosen.push(diff);
        if linalg::rank(&chosen) != chosen.len() {
            chosen.pop();
        }
    }
    let basis = columns_to_matrix(&chosen, verts.dim());
    AffineSection::new(basis, v0)
}
