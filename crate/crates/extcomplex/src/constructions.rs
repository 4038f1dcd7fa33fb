//! Builders for linear extended formulations: the vertex-simplex lift, the
//! Cartesian product, the disjunctive union, and a divide-and-conquer
//! construction for 0/1-polytopes that splits vertices into a prefix part
//! and a suffix part and unions the resulting product pieces.

use serde::{Deserialize, Serialize};

use crate::extform::LinearEF;
use crate::geometry::lp::{LpOutcome, LpSolver, Sense};
use crate::geometry::polytope::{AffineMap, HPolyhedron, VPolytope};
use crate::linalg::{RatMat, RatVec};
use crate::rational::{rint, rone, rzero, Rational};
use crate::{Error, Result};

/// The simplex lift: `conv(V)` as the image of the standard simplex in
/// `R^{|V|}` under the vertex matrix. Uses `|V|` inequalities.
pub fn trivial_vrep_ef(v: &VPolytope) -> Result<LinearEF> {
    let verts = v.vertices();
    if verts.is_empty() {
        return Err(Error::EmptyInput("vertex lift needs at least one vertex"));
    }
    let k = verts.len();
    let d = v.dim();
    let mut ineqs = Vec::with_capacity(k);
    for i in 0..k {
        let mut row = vec![rzero(); k];
        row[i] = rint(-1);
        ineqs.push((row, rzero()));
    }
    let eqs = vec![(vec![rone(); k], rone())];
    let lifted = HPolyhedron::new(k, ineqs, eqs)?;
    // Projection columns are the vertices themselves.
    let matrix: RatMat = (0..d)
        .map(|coord| verts.iter().map(|w| w[coord].clone()).collect())
        .collect();
    let proj = AffineMap::new(k, matrix, vec![rzero(); d])?;
    LinearEF::new(lifted, proj)
}

/// Cartesian product formulation: stacks the two lifted systems and the two
/// projections block-wise. The size is the sum of the input sizes.
pub fn product_ef(a: &LinearEF, b: &LinearEF) -> Result<LinearEF> {
    let (na, nb) = (a.lifted().dim(), b.lifted().dim());
    let (da, db) = (a.proj().out_dim(), b.proj().out_dim());
    let pad_left = |row: &RatVec| -> RatVec {
        let mut out = row.clone();
        out.extend(std::iter::repeat_with(rzero).take(nb));
        out
    };
    let pad_right = |row: &RatVec| -> RatVec {
        let mut out = vec![rzero(); na];
        out.extend(row.iter().cloned());
        out
    };
    let mut ineqs = Vec::with_capacity(a.lifted().ineqs().len() + b.lifted().ineqs().len());
    for (r, rhs) in a.lifted().ineqs() {
        ineqs.push((pad_left(r), rhs.clone()));
    }
    for (r, rhs) in b.lifted().ineqs() {
        ineqs.push((pad_right(r), rhs.clone()));
    }
    let mut eqs = Vec::with_capacity(a.lifted().eqs().len() + b.lifted().eqs().len());
    for (r, rhs) in a.lifted().eqs() {
        eqs.push((pad_left(r), rhs.clone()));
    }
    for (r, rhs) in b.lifted().eqs() {
        eqs.push((pad_right(r), rhs.clone()));
    }
    let lifted = HPolyhedron::new(na + nb, ineqs, eqs)?;

    let mut matrix = Vec::with_capacity(da + db);
    for row in a.proj().matrix() {
        matrix.push(pad_left(row));
    }
    for row in b.proj().matrix() {
        matrix.push(pad_right(row));
    }
    let mut offset = a.proj().offset().to_vec();
    offset.extend(b.proj().offset().iter().cloned());
    let proj = AffineMap::new(na + nb, matrix, offset)?;
    LinearEF::new(lifted, proj)
}

/// Disjunctive union: an extended formulation of the convex hull of the
/// union of the input images, of size `l + sum of input sizes`.
///
/// Each lifted system is homogenized against its own multiplier
/// (`A_i x^i <= lambda_i b_i`), the multipliers form a convex combination,
/// and the projection sums the per-piece affine images. Soundness of the
/// homogenization needs every piece non-empty and bounded, which is checked
/// by linear programming up front.
pub fn balas_union(pieces: &[LinearEF]) -> Result<LinearEF> {
    if pieces.is_empty() {
        return Err(Error::EmptyInput("union of zero formulations"));
    }
    let d = pieces[0].proj().out_dim();
    for p in pieces {
        if p.proj().out_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.proj().out_dim(),
            });
        }
    }
    for (index, p) in pieces.iter().enumerate() {
        let mut solver = LpSolver::new(&p.lifted().to_lp_problem())?;
        if !solver.is_feasible() {
            return Err(Error::EmptyPiece { index });
        }
        for j in 0..p.lifted().dim() {
            for sign in [1i64, -1] {
                let mut obj = vec![rzero(); p.lifted().dim()];
                obj[j] = rint(sign);
                if matches!(solver.optimize(&obj, Sense::Maximize)?, LpOutcome::Unbounded) {
                    return Err(Error::UnboundedPiece { index });
                }
            }
        }
    }

    let l = pieces.len();
    let piece_dims: Vec<usize> = pieces.iter().map(|p| p.lifted().dim()).collect();
    let total: usize = piece_dims.iter().sum::<usize>() + l;
    let piece_offset: Vec<usize> = piece_dims
        .iter()
        .scan(0usize, |acc, &n| {
            let start = *acc;
            *acc += n;
            Some(start)
        })
        .collect();
    let lambda_offset = total - l;

    let place = |i: usize, row: &RatVec, rhs: &Rational| -> RatVec {
        let mut out = vec![rzero(); total];
        out[piece_offset[i]..piece_offset[i] + row.len()].clone_from_slice(row);
        out[lambda_offset + i] = -rhs;
        out
    };

    let mut ineqs = Vec::new();
    let mut eqs = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        for (row, rhs) in p.lifted().ineqs() {
            ineqs.push((place(i, row, rhs), rzero()));
        }
        for (row, rhs) in p.lifted().eqs() {
            eqs.push((place(i, row, rhs), rzero()));
        }
    }
    for i in 0..l {
        let mut row = vec![rzero(); total];
        row[lambda_offset + i] = rint(-1);
        ineqs.push((row, rzero()));
    }
    let mut convex = vec![rzero(); total];
    for i in 0..l {
        convex[lambda_offset + i] = rone();
    }
    eqs.push((convex, rone()));
    let lifted = HPolyhedron::new(total, ineqs, eqs)?;

    // y = sum_i (M_i x^i + lambda_i o_i).
    let mut matrix = vec![vec![rzero(); total]; d];
    for (i, p) in pieces.iter().enumerate() {
        for (coord, row) in p.proj().matrix().iter().enumerate() {
            matrix[coord][piece_offset[i]..piece_offset[i] + row.len()].clone_from_slice(row);
        }
        for (coord, off) in p.proj().offset().iter().enumerate() {
            matrix[coord][lambda_offset + i] = off.clone();
        }
    }
    let proj = AffineMap::new(total, matrix, vec![rzero(); d])?;
    LinearEF::new(lifted, proj)
}

/// Decomposition plan for a 0/1 vertex set: vertices `(x, y)` are split
/// into a prefix `x` of width `d - s` and a suffix `y` of width `s`, and
/// prefixes are grouped by their suffix fiber `{y : (x, y) in V}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShannonPlan {
    pub d: usize,
    pub s: usize,
    pub groups: Vec<ShannonGroup>,
    pub declared_bound: u64,
}

/// One group: all prefixes `X` sharing the common suffix fiber `Y`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShannonGroup {
    #[serde(rename = "Y")]
    pub suffixes: Vec<Vec<u8>>,
    #[serde(rename = "X")]
    pub prefixes: Vec<Vec<u8>>,
}

impl ShannonPlan {
    /// Number of materialized (non-empty) groups.
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    /// The exact size of the formulation the plan yields:
    /// one multiplier per group plus each group's product formulation,
    /// where a single-point piece costs 1 instead of `|X| + |Y|`.
    pub fn formulation_size(&self) -> u64 {
        let mut size = self.groups.len() as u64;
        for g in &self.groups {
            let piece = (g.prefixes.len() + g.suffixes.len()) as u64;
            size += if g.prefixes.len() == 1 && g.suffixes.len() == 1 {
                1
            } else {
                piece
            };
        }
        size
    }
}

/// Default suffix width: `floor(log2(d / 4))` for `d >= 4`, zero otherwise.
pub fn default_suffix_width(d: usize) -> usize {
    if d < 4 {
        0
    } else {
        (usize::BITS - 1 - d.leading_zeros()) as usize - 2
    }
}

/// The size bound declared by the decomposition with suffix width `s`:
/// `2^{d-s} + 2^{2^s} (2^s + 1)`, counting one multiplier and one suffix
/// vertex set per possible fiber and one prefix per prefix pattern.
pub fn declared_bound(d: usize, s: usize) -> Result<u64> {
    if s > d {
        return Err(Error::SuffixWidthOutOfRange { s, d });
    }
    if s > 5 || d - s > 60 {
        return Err(Error::Malformed(format!(
            "declared bound overflows for d={d}, s={s}"
        )));
    }
    let fibers = 1u64 << (1u64 << s);
    Ok((1u64 << (d - s)) + fibers * ((1u64 << s) + 1))
}

fn vertex_bits(v: &[Rational]) -> Result<Vec<u8>> {
    v.iter()
        .map(|c| {
            if c == &rzero() {
                Ok(0u8)
            } else if c == &rone() {
                Ok(1u8)
            } else {
                Err(Error::NonZeroOneVertex)
            }
        })
        .collect()
}

/// Groups the vertex set by suffix fiber. `s` defaults to
/// `default_suffix_width(d)` when not given.
pub fn shannon_01_plan(v: &VPolytope, s: Option<usize>) -> Result<ShannonPlan> {
    use std::collections::BTreeMap;

    if v.is_empty() {
        return Err(Error::EmptyInput("decomposition of an empty vertex set"));
    }
    let d = v.dim();
    let s = s.unwrap_or_else(|| default_suffix_width(d));
    if s > d {
        return Err(Error::SuffixWidthOutOfRange { s, d });
    }
    let bound = declared_bound(d, s)?;

    let mut fibers: BTreeMap<Vec<u8>, Vec<Vec<u8>>> = BTreeMap::new();
    for vert in v.vertices() {
        let bits = vertex_bits(vert)?;
        let (prefix, suffix) = bits.split_at(d - s);
        fibers
            .entry(prefix.to_vec())
            .or_default()
            .push(suffix.to_vec());
    }
    // Regroup prefixes by identical fiber; the fiber itself is the key.
    let mut groups: BTreeMap<Vec<Vec<u8>>, Vec<Vec<u8>>> = BTreeMap::new();
    for (prefix, mut suffixes) in fibers {
        suffixes.sort();
        groups.entry(suffixes).or_default().push(prefix);
    }
    let groups = groups
        .into_iter()
        .map(|(suffixes, prefixes)| ShannonGroup { suffixes, prefixes })
        .collect();
    Ok(ShannonPlan {
        d,
        s,
        groups,
        declared_bound: bound,
    })
}

fn bits_polytope(dim: usize, patterns: &[Vec<u8>]) -> Result<VPolytope> {
    let points = patterns
        .iter()
        .map(|p| p.iter().map(|&b| rint(b as i64)).collect())
        .collect();
    // Every 0/1 point is extreme among 0/1 points, so the full pattern list
    // survives canonicalization.
    VPolytope::from_extreme_points(dim, points)
}

/// Builds the decomposition formulation for a 0/1 vertex set: each group
/// becomes the product `conv(X) x conv(Y)` of two simplex lifts (a single
/// point directly becomes its one-inequality lift), and the pieces are
/// joined by the disjunctive union.
pub fn shannon_01_ef(v: &VPolytope, s: Option<usize>) -> Result<LinearEF> {
    let plan = shannon_01_plan(v, s)?;
    let d = plan.d;
    let mut pieces = Vec::with_capacity(plan.groups.len());
    for g in &plan.groups {
        if g.prefixes.len() == 1 && g.suffixes.len() == 1 {
            let mut point = g.prefixes[0].clone();
            point.extend_from_slice(&g.suffixes[0]);
            pieces.push(trivial_vrep_ef(&bits_polytope(d, &[point])?)?);
            continue;
        }
        let prefix_ef = trivial_vrep_ef(&bits_polytope(d - plan.s, &g.prefixes)?)?;
        let suffix_ef = trivial_vrep_ef(&bits_polytope(plan.s, &g.suffixes)?)?;
        pieces.push(product_ef(&prefix_ef, &suffix_ef)?);
    }
    let ef = balas_union(&pieces)?;
    assert_eq!(ef.size() as u64, plan.formulation_size());
    assert!(
        ef.size() as u64 <= plan.declared_bound,
        "size {} exceeds declared bound {}",
        ef.size(),
        plan.declared_bound
    );
    Ok(ef)
}
