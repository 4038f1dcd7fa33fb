//! The size lower bound for families of polytopes and its two derived
//! specializations.
//!
//! The central quantity is
//!
//! ```text
//! B = log2(N) / (8 d (1 + log2(2 rho / delta) + log2 log2 N))
//! ```
//!
//! for a family of `N` polytopes of dimension at least one in `R^d`, all
//! inside the ball of radius `rho` and pairwise at Hausdorff distance at
//! least `delta`. Some member then needs a semidefinite lift of block size
//! at least `B^{1/4}` and a linear lift of size at least `B^{1/2}`.
//!
//! The module provides the bound evaluator in configurable-precision
//! arithmetic, generators for the two concrete families it gets applied to
//! (sub-polytopes of the 0/1 cube, and polygons with vertices on the
//! parabola), exact separation and circumradius certificates for those
//! families, and the derived threshold formulas.

use crate::error::{Error, Result};
use crate::geometry::distance::point_polytope_distance_sq;
use crate::geometry::polytope::{zero_one_point, VPolytope};
use crate::highprec::Ctx;
use crate::linalg::RatVec;
use crate::rational::{format_rational, parse_rational, rint, Rational};
use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};

/// Hard ceiling on the number of family members any generator will emit.
const FAMILY_CAP: u64 = 100_000;

/// Inputs to the main bound: ambient dimension, circumradius, minimum
/// pairwise separation, and family cardinality.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    d: usize,
    rho: f64,
    delta: f64,
    n: BigUint,
}

impl BoundInputs {
    /// Validates `d >= 1`, `rho, delta > 0`, `delta <= 2 rho` (two bodies
    /// inside `rho B^d` cannot be further apart), and `N >= 2`.
    pub fn new(d: usize, rho: f64, delta: f64, n: BigUint) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidBoundInputs(
                "dimension must be at least 1".into(),
            ));
        }
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(Error::InvalidBoundInputs(
                "circumradius must be positive and finite".into(),
            ));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidBoundInputs(
                "separation must be positive and finite".into(),
            ));
        }
        if delta > 2.0 * rho {
            return Err(Error::InvalidBoundInputs(
                "separation cannot exceed the diameter bound 2 rho".into(),
            ));
        }
        if n < BigUint::from(2u32) {
            return Err(Error::InvalidBoundInputs(
                "family must have at least 2 members".into(),
            ));
        }
        Ok(BoundInputs { d, rho, delta, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cardinality(&self) -> &BigUint {
        &self.n
    }
}

/// Evaluated bound plus the integer floors it implies for the two
/// complexity measures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValue {
    /// The bound itself.
    #[serde(rename = "B")]
    pub b: f64,
    /// Smallest admissible max block size: `ceil(B^{1/4})`.
    pub sxc_floor: u64,
    /// Smallest admissible max inequality count: `ceil(B^{1/2})`.
    pub xc_floor: u64,
}

/// Evaluates `B = log2 N / (8 d (1 + log2(2 rho/delta) + log2 log2 N))`
/// along with the ceilings of its fourth and square roots.
///
/// Arithmetic runs at the precision configured through
/// `EXTCOMPLEX_PRECISION` (default 80 bits), so the cardinality may be an
/// astronomically large integer without overflow or precision collapse.
pub fn theorem1_bound(inputs: &BoundInputs) -> Result<BoundValue> {
    let mut ctx = Ctx::new();
    let n_float = ctx.from_biguint(&inputs.n);
    let log_n = ctx.log2(&n_float);
    let ratio = ctx.div(
        &ctx.mul(&ctx.from_f64(2.0), &ctx.from_f64(inputs.rho)),
        &ctx.from_f64(inputs.delta),
    );
    let log_ratio = ctx.log2(&ratio);
    let log_log_n = ctx.log2(&log_n);
    let one = ctx.from_u64(1);
    let paren = ctx.add(&ctx.add(&one, &log_ratio), &log_log_n);
    let denom = ctx.mul(&ctx.from_u64(8 * inputs.d as u64), &paren);
    let b = ctx.div(&log_n, &denom);
    let sxc_floor = ctx.ceil_u64(&ctx.root4(&b))?;
    let xc_floor = ctx.ceil_u64(&ctx.sqrt(&b))?;
    Ok(BoundValue {
        b: ctx.to_f64(&b),
        sxc_floor,
        xc_floor,
    })
}

/// One of the two combinatorial families the bound gets applied to, or an
/// explicit list.
#[derive(Debug, Clone)]
pub enum FamilySpec {
    /// Convex hulls of subsets of `{0,1}^d`.
    ZeroOne { d: usize },
    /// Hulls of `n`-element subsets of `{(t, t^2) : t = 1..s}`.
    Parabola { s: u64, n: usize },
    /// A family given outright.
    Explicit(Vec<VPolytope>),
}

impl FamilySpec {
    pub fn zero_one(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidBoundInputs(
                "zero-one family needs dimension at least 1".into(),
            ));
        }
        Ok(FamilySpec::ZeroOne { d })
    }

    pub fn parabola_ngon(s: u64, n: usize) -> Result<Self> {
        if n < 2 || (s as u128) < n as u128 {
            return Err(Error::InvalidBoundInputs(
                "parabola family needs s >= n >= 2".into(),
            ));
        }
        Ok(FamilySpec::Parabola { s, n })
    }
}

/// Which members of a combinatorial family to produce.
#[derive(Debug, Clone)]
pub enum FamilySelector {
    /// Every member, subject to the generation cap.
    All,
    /// Zero-one only: one bitmask per member, bit `v` selecting the vertex
    /// with coordinate pattern `v`. Limited to `d <= 6` by the mask width.
    ZeroOneMasks(Vec<u64>),
    /// Parabola only: one parameter subset per member, values in `1..=s`.
    ParabolaSubsets(Vec<Vec<u64>>),
}

/// Materializes family members as exact vertex lists.
pub fn generate_family(spec: &FamilySpec, selector: &FamilySelector) -> Result<Vec<VPolytope>> {
    match spec {
        FamilySpec::ZeroOne { d } => zero_one_family(*d, selector),
        FamilySpec::Parabola { s, n } => parabola_family(*s, *n, selector),
        FamilySpec::Explicit(list) => match selector {
            FamilySelector::All => Ok(list.clone()),
            _ => Err(Error::Malformed(
                "explicit families take no selector".into(),
            )),
        },
    }
}

fn zero_one_family(d: usize, selector: &FamilySelector) -> Result<Vec<VPolytope>> {
    if d == 0 {
        return Err(Error::InvalidBoundInputs(
            "zero-one family needs dimension at least 1".into(),
        ));
    }
    let masks: Vec<u64> = match selector {
        FamilySelector::All => {
            if d > 4 {
                return Err(Error::FamilyTooLarge(format!(
                    "2^(2^{d}) - 1 subsets exceed the generation cap"
                )));
            }
            (1..(1u64 << (1usize << d))).collect()
        }
        FamilySelector::ZeroOneMasks(masks) => {
            if d > 6 {
                return Err(Error::Malformed(
                    "bitmask selectors support dimensions up to 6".into(),
                ));
            }
            let limit = if d == 6 { u64::MAX } else { (1u64 << (1usize << d)) - 1 };
            for &m in masks {
                if m == 0 || m > limit {
                    return Err(Error::Malformed(format!(
                        "mask {m:#x} does not select a non-empty subset of the {d}-cube"
                    )));
                }
            }
            masks.clone()
        }
        FamilySelector::ParabolaSubsets(_) => {
            return Err(Error::Malformed(
                "parabola selector applied to a zero-one family".into(),
            ))
        }
    };
    if masks.len() as u64 > FAMILY_CAP {
        return Err(Error::FamilyTooLarge(format!(
            "{} members exceed the generation cap",
            masks.len()
        )));
    }
    masks
        .into_iter()
        .map(|mask| {
            let pts: Vec<RatVec> = (0..(1u64 << d))
                .filter(|v| mask >> v & 1 == 1)
                .map(|v| zero_one_point(d, v))
                .collect();
            VPolytope::from_points(d, pts)
        })
        .collect()
}

fn parabola_point(t: u64) -> RatVec {
    vec![rint(t as i64), rint((t * t) as i64)]
}

fn parabola_family(s: u64, n: usize, selector: &FamilySelector) -> Result<Vec<VPolytope>> {
    if n < 2 || (s as u128) < n as u128 {
        return Err(Error::InvalidBoundInputs(
            "parabola family needs s >= n >= 2".into(),
        ));
    }
    let subsets: Vec<Vec<u64>> = match selector {
        FamilySelector::All => {
            if checked_binomial(s, n as u64).is_none_or(|c| c > FAMILY_CAP as u128) {
                return Err(Error::FamilyTooLarge(format!(
                    "C({s}, {n}) members exceed the generation cap"
                )));
            }
            (1..=s).combinations(n).collect()
        }
        FamilySelector::ParabolaSubsets(sets) => {
            for set in sets {
                if set.len() != n || !set.iter().all_unique() {
                    return Err(Error::Malformed(format!(
                        "subset {set:?} is not a set of {n} distinct parameters"
                    )));
                }
                if set.iter().any(|&t| t == 0 || t > s) {
                    return Err(Error::Malformed(format!(
                        "subset {set:?} leaves the parameter range 1..={s}"
                    )));
                }
            }
            sets.clone()
        }
        FamilySelector::ZeroOneMasks(_) => {
            return Err(Error::Malformed(
                "zero-one selector applied to a parabola family".into(),
            ))
        }
    };
    if subsets.len() as u64 > FAMILY_CAP {
        return Err(Error::FamilyTooLarge(format!(
            "{} members exceed the generation cap",
            subsets.len()
        )));
    }
    subsets
        .into_iter()
        .map(|set| {
            VPolytope::from_points(2, set.iter().map(|&t| parabola_point(t)).collect())
        })
        .collect()
}

/// `C(s, n)` while it stays below `2^127`, `None` once it overflows.
fn checked_binomial(s: u64, n: u64) -> Option<u128> {
    if n > s {
        return Some(0);
    }
    let n = n.min(s - n);
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc.checked_mul((s - i) as u128)?;
        acc /= (i + 1) as u128;
    }
    Some(acc)
}

/// Exact minimum squared Hausdorff distance over all unordered pairs.
///
/// The Hausdorff distance between members decomposes into point-to-member
/// distances, and the generated families reuse the same few vertices over
/// and over, so the distinct `(vertex, member)` queries are collected
/// first, solved once each (in parallel under the ambient rayon pool), and
/// the pairwise scan then runs over the cached values.
pub fn min_pairwise_separation_sq(family: &[VPolytope]) -> Result<Rational> {
    if family.len() < 2 {
        return Err(Error::EmptyInput(
            "pairwise separation needs at least two members",
        ));
    }
    if family.iter().any(VPolytope::is_empty) {
        return Err(Error::EmptyInput("family member without vertices"));
    }
    let mut queries: BTreeSet<(RatVec, usize)> = BTreeSet::new();
    for (i, member) in family.iter().enumerate() {
        for v in member.vertices() {
            for j in 0..family.len() {
                if j != i {
                    queries.insert((v.clone(), j));
                }
            }
        }
    }
    let queries: Vec<(RatVec, usize)> = queries.into_iter().collect();
    let distances: Vec<Rational> = queries
        .par_iter()
        .map(|(v, j)| point_polytope_distance_sq(v, &family[*j]))
        .collect::<Result<_>>()?;
    let cache: BTreeMap<(RatVec, usize), Rational> =
        queries.into_iter().zip(distances).collect();
    let dist_to = |v: &RatVec, j: usize| cache[&(v.clone(), j)].clone();
    let mut min: Option<Rational> = None;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            let mut pair_max = Rational::zero();
            for v in family[i].vertices() {
                pair_max = pair_max.max(dist_to(v, j));
            }
            for v in family[j].vertices() {
                pair_max = pair_max.max(dist_to(v, i));
            }
            if min.as_ref().is_none_or(|m| pair_max < *m) {
                min = Some(pair_max);
            }
        }
    }
    Ok(min.expect("at least one pair"))
}

/// Largest squared vertex norm across the family, the exact value that the
/// paper-level choices of `rho` must dominate.
pub fn circumradius_sq(family: &[VPolytope]) -> Result<Rational> {
    if family.is_empty() {
        return Err(Error::EmptyInput("circumradius of an empty family"));
    }
    Ok(family
        .iter()
        .map(VPolytope::circumradius_sq)
        .max()
        .expect("non-empty family"))
}

/// Threshold values for the random 0/1 polytope statement in dimension `d`:
/// semidefinite threshold `2^{d/4}/(3 sqrt(d))`, linear threshold
/// `2^{d/2}/(9d)`, and the probability exponent `-2^{d-1}` (the probability
/// itself is far below what a float could hold).
#[derive(Debug, Clone, PartialEq)]
pub struct Corollary41 {
    pub sxc_threshold: f64,
    pub xc_threshold: f64,
    pub prob_exponent: i128,
}

pub fn corollary41_thresholds(d: usize) -> Result<Corollary41> {
    if d < 3 {
        return Err(Error::InvalidBoundInputs(
            "thresholds are stated for d >= 3".into(),
        ));
    }
    if d > 120 {
        return Err(Error::InvalidBoundInputs(
            "probability exponent overflows beyond d = 120".into(),
        ));
    }
    let df = d as f64;
    Ok(Corollary41 {
        sxc_threshold: (df / 4.0).exp2() / (3.0 * df.sqrt()),
        xc_threshold: (df / 2.0).exp2() / (9.0 * df),
        prob_exponent: -(1i128 << (d - 1)),
    })
}

/// Lower bounds for `n`-gons with vertices on the parabola, plus the
/// intermediate inequality they rest on.
#[derive(Debug, Clone, PartialEq)]
pub struct Corollary42 {
    /// `n^{1/4} / 4`.
    pub sxc_lower: f64,
    /// `sqrt(n) / 15`.
    pub xc_lower: f64,
    /// The main bound with the substitutions `s = n^2`, `rho = 2 s^2`,
    /// `delta = 1/(3s)`, `N = C(s, n)`.
    pub b: f64,
    /// The floor `n / 208` that `b` is certified against.
    pub b_floor: f64,
}

pub fn corollary42_bounds(n: usize) -> Result<Corollary42> {
    if n < 2 {
        return Err(Error::InvalidBoundInputs(
            "parabola bound needs n >= 2".into(),
        ));
    }
    let nf = n as f64;
    let s = (n as u64) * (n as u64);
    let big_n = num_integer::binomial(BigUint::from(s), BigUint::from(n as u64));
    let rho = 2.0 * (s as f64) * (s as f64);
    let delta = 1.0 / (3.0 * s as f64);
    let value = theorem1_bound(&BoundInputs::new(2, rho, delta, big_n)?)?;
    Ok(Corollary42 {
        sxc_lower: 0.25 * nf.powf(0.25),
        xc_lower: nf.sqrt() / 15.0,
        b: value.b,
        b_floor: nf / 208.0,
    })
}

/// Outcome of measuring a family exactly and testing a claimed uniform
/// formulation size `(l, m)` against the bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedReport {
    pub d: usize,
    pub rho_sq: Rational,
    pub delta_sq: Rational,
    pub members: BigUint,
    pub b: f64,
    pub sxc_floor: u64,
    pub xc_floor: u64,
    /// Set when `l^2 m^4 < B`, i.e. the claim contradicts the bound.
    pub violation: bool,
}

/// Measures `rho` and `delta` of the family exactly, evaluates the bound,
/// and reports whether every member admitting an `(l, m)` formulation would
/// contradict it.
pub fn certify_family_bound(family: &[VPolytope], ef_size: (u64, u64)) -> Result<CertifiedReport> {
    if family.len() < 2 {
        return Err(Error::EmptyInput(
            "certification needs at least two members",
        ));
    }
    let d = family[0].dim();
    for p in family {
        if p.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: p.dim(),
            });
        }
        if p.affine_dim().is_none_or(|a| a == 0) {
            return Err(Error::InvalidBoundInputs(
                "family members must have dimension at least 1".into(),
            ));
        }
    }
    let rho_sq = circumradius_sq(family)?;
    let delta_sq = min_pairwise_separation_sq(family)?;
    if delta_sq.is_zero() {
        return Err(Error::InvalidBoundInputs(
            "family members must be pairwise distinct".into(),
        ));
    }
    let members = BigUint::from(family.len());
    let inputs = BoundInputs::new(
        d,
        crate::rational::to_f64(&rho_sq).sqrt(),
        crate::rational::to_f64(&delta_sq).sqrt(),
        members.clone(),
    )?;
    let value = theorem1_bound(&inputs)?;
    let (l, m) = ef_size;
    let claim = (l as f64) * (l as f64) * (m as f64).powi(4);
    Ok(CertifiedReport {
        d,
        rho_sq,
        delta_sq,
        members,
        b: value.b,
        sxc_floor: value.sxc_floor,
        xc_floor: value.xc_floor,
        violation: claim < value.b,
    })
}

#[derive(Serialize, Deserialize)]
struct ReportWire {
    d: usize,
    rho_sq: String,
    delta_sq: String,
    #[serde(rename = "N")]
    members: String,
    #[serde(rename = "B")]
    b: f64,
    sxc_floor: u64,
    xc_floor: u64,
    violation: bool,
}

impl Serialize for CertifiedReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        ReportWire {
            d: self.d,
            rho_sq: format_rational(&self.rho_sq),
            delta_sq: format_rational(&self.delta_sq),
            members: self.members.to_string(),
            b: self.b,
            sxc_floor: self.sxc_floor,
            xc_floor: self.xc_floor,
            violation: self.violation,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CertifiedReport {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let wire = ReportWire::deserialize(deserializer)?;
        Ok(CertifiedReport {
            d: wire.d,
            rho_sq: parse_rational(&wire.rho_sq).map_err(D::Error::custom)?,
            delta_sq: parse_rational(&wire.delta_sq).map_err(D::Error::custom)?,
            members: wire
                .members
                .parse::<BigUint>()
                .map_err(D::Error::custom)?,
            b: wire.b,
            sxc_floor: wire.sxc_floor,
            xc_floor: wire.xc_floor,
            violation: wire.violation,
        })
    }
}
