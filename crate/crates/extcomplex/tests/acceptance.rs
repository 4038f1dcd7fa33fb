//! Full-system checks, one test per advertised guarantee of the crate.
//!
//! Each test prints a single PASS line naming the guarantee and the
//! tolerance it enforced (run with `--nocapture` to see them); a failure
//! carries enough context to replay the offending instance. The two
//! enumeration-heavy checks are budgeted to stay well inside ten and
//! fifteen minutes of single-core time respectively.

use std::collections::BTreeSet;

use nalgebra::DVector;
use num_bigint::BigUint;
use num_traits::One;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use extcomplex::bounds::{
    corollary42_bounds, generate_family, min_pairwise_separation_sq, theorem1_bound, BoundInputs,
    FamilySelector, FamilySpec,
};
use extcomplex::constructions::{
    declared_bound, default_suffix_width, shannon_01_ef, trivial_vrep_ef,
};
use extcomplex::extform::psd::is_psd;
use extcomplex::extform::{
    triple_distance_bound, validate_normalized, verify_linear_ef, AffineMatrixMap,
    EncodingTriple, ExtendedFormulation,
};
use extcomplex::geometry::ellipsoid::john_ellipsoid;
use extcomplex::geometry::hull::convex_hull_facets;
use extcomplex::geometry::lp::{solve_problem, LpOutcome, Sense};
use extcomplex::geometry::polytope::{zero_one_point, HPolyhedron, VPolytope};
use extcomplex::linalg::{RatMat, RatVec};
use extcomplex::normalization::{helton_vinnikov_reduce, normalize};
use extcomplex::rational::{from_f64_exact, rat, rint, to_f64, Rational};

fn subset_polytope(d: usize, mask: u64) -> VPolytope {
    let pts: Vec<RatVec> = (0..(1u64 << d))
        .filter(|v| mask >> v & 1 == 1)
        .map(|v| zero_one_point(d, v))
        .collect();
    VPolytope::from_points(d, pts).unwrap()
}

#[test]
fn construction_verifies_exhaustively_and_respects_size_bounds() {
    for mask in 1u64..256 {
        let target = subset_polytope(3, mask);
        let ef = shannon_01_ef(&target, None).unwrap();
        let report = verify_linear_ef(&ef, &target).unwrap();
        assert!(report.is_verified(), "d=3 mask {mask:#x}: {report:?}");
    }
    let mut rng = StdRng::seed_from_u64(501);
    for trial in 0..200u32 {
        let mask = rng.random_range(1..(1u64 << 32));
        let target = subset_polytope(5, mask);
        let width = [None, Some(1), Some(2)][(trial % 3) as usize];
        let ef = shannon_01_ef(&target, width).unwrap();
        let report = verify_linear_ef(&ef, &target).unwrap();
        assert!(
            report.is_verified(),
            "d=5 trial {trial} mask {mask:#x} width {width:?}: {report:?}"
        );
    }
    let declared = declared_bound(6, default_suffix_width(6)).unwrap();
    for trial in 0..100u32 {
        let mask = rng.random_range(1..=u64::MAX);
        let ef = shannon_01_ef(&subset_polytope(6, mask), None).unwrap();
        let size = ef.size() as u64;
        assert!(size <= 96, "d=6 trial {trial}: size {size} > 96");
        assert!(
            size <= declared,
            "d=6 trial {trial}: size {size} > declared {declared}"
        );
    }
    println!(
        "PASS construction: 255 exhaustive d=3 and 200 random d=5 sets verified exactly; \
         100 random d=6 sizes <= 96 and <= declared bound {declared}"
    );
}

#[test]
fn bound_formula_matches_hand_value_and_simplified_chain() {
    let inputs = BoundInputs::new(
        3,
        3f64.sqrt(),
        1.0 / 3f64.sqrt(),
        BigUint::from(256u32),
    )
    .unwrap();
    let b = theorem1_bound(&inputs).unwrap().b;
    let hand = 8.0 / (24.0 * (4.0 + 6f64.log2()));
    assert!(
        (b - hand).abs() <= 1e-12,
        "b = {b}, hand value = {hand}, diff = {}",
        (b - hand).abs()
    );
    for d in 3usize..=12 {
        for loglog in [d - 1, d] {
            let n = BigUint::one() << (1usize << loglog);
            let inputs = BoundInputs::new(
                d,
                (d as f64).sqrt(),
                1.0 / (d as f64).sqrt(),
                n,
            )
            .unwrap();
            let value = theorem1_bound(&inputs).unwrap();
            let log_n = (1u64 << loglog) as f64;
            let floor = log_n / (32.0 * (d * d) as f64);
            assert!(
                value.b >= floor * (1.0 - 1e-12),
                "d = {d}, log2 log2 N = {loglog}: b = {} < floor {floor}",
                value.b
            );
        }
    }
    println!(
        "PASS bound formula: hand value matched to 1e-12; \
         simplified floor log2(N)/(32 d^2) held for d = 3..=12"
    );
}

#[test]
fn separation_certificates_are_exact() {
    let family = generate_family(&FamilySpec::zero_one(3).unwrap(), &FamilySelector::All).unwrap();
    assert_eq!(family.len(), 255);
    let separation = min_pairwise_separation_sq(&family).unwrap();
    assert!(
        separation >= rat(1, 3),
        "d=3 separation^2 = {separation} < 1/3"
    );
    let mut parabola_cases = 0;
    for s in 2u64..=8 {
        for n in 2usize..=4.min(s as usize) {
            let family = generate_family(
                &FamilySpec::parabola_ngon(s, n).unwrap(),
                &FamilySelector::All,
            )
            .unwrap();
            if family.len() < 2 {
                continue;
            }
            let separation = min_pairwise_separation_sq(&family).unwrap();
            assert!(
                separation >= rat(1, (9 * s * s) as i64),
                "s={s} n={n}: separation^2 = {separation} < 1/(9 s^2)"
            );
            parabola_cases += 1;
        }
    }
    println!(
        "PASS separation: d=3 exhaustive pairs >= 1/3 and {parabola_cases} exhaustive \
         parabola families (s <= 8, n <= 4) >= 1/(9 s^2), all in exact rationals"
    );
}

#[test]
fn parabola_bound_chain_reproduces_closed_forms() {
    for &n in &[2usize, 16, 256, 4096] {
        let c = corollary42_bounds(n).unwrap();
        let nf = n as f64;
        let sxc = (0.25 * nf.ln()).exp() / 4.0;
        let xc = (0.5 * nf.ln()).exp() / 15.0;
        assert!(
            (c.sxc_lower - sxc).abs() <= 1e-10,
            "n={n}: sxc lower {} vs {sxc}",
            c.sxc_lower
        );
        assert!(sxc <= c.b.powf(0.25) + 1e-10, "n={n}: sxc form exceeds B^(1/4)");
        assert!(
            (c.xc_lower - xc).abs() <= 1e-10,
            "n={n}: xc lower {} vs {xc}",
            c.xc_lower
        );
        assert!(
            c.b >= c.b_floor - 1e-10,
            "n={n}: B = {} below floor n/208 = {}",
            c.b,
            c.b_floor
        );
        let log_n = nf.log2();
        let estimate = 5.0 + 7.0 * log_n + log_n.log2();
        assert!(
            estimate <= 13.0 * log_n,
            "n={n}: denominator estimate {estimate} > 13 log2 n"
        );
    }
    println!(
        "PASS parabola chain: closed forms (n^(1/4)/4, sqrt(n)/15) to 1e-10, B >= n/208, \
         and the denominator estimate held for n in {{2, 16, 256, 4096}}"
    );
}

#[test]
fn normalization_certificates_hold_for_random_polytopes() {
    let mut rng = StdRng::seed_from_u64(505);
    let mut done = 0;
    while done < 50 {
        let d = rng.random_range(1..=3);
        let k = rng.random_range(2..=8);
        let pts: Vec<RatVec> = (0..k)
            .map(|_| {
                (0..d)
                    .map(|_| rat(rng.random_range(-8..=8), rng.random_range(1..=4)))
                    .collect()
            })
            .collect();
        let target = VPolytope::from_points(d, pts).unwrap();
        if target.affine_dim().is_none_or(|a| a == 0) {
            continue;
        }
        let ef = trivial_vrep_ef(&target).unwrap();
        let (l0, m0) = (ef.size(), 1);
        let triple = normalize(&ExtendedFormulation::from(ef), &target).unwrap();
        let rho = to_f64(&target.circumradius_sq()).sqrt();
        let cert = validate_normalized(&triple, rho);
        assert!(
            cert.norm_a_upper <= 1.0 + 1e-6,
            "case {done}: |A| = {}",
            cert.norm_a_upper
        );
        assert!(
            cert.norm_phi <= rho * (1.0 + 1e-6),
            "case {done}: |phi| = {} > rho = {rho}",
            cert.norm_phi
        );
        assert!(
            cert.norm_t <= rho * (1.0 + 1e-6),
            "case {done}: |t| = {} > rho = {rho}",
            cert.norm_t
        );
        assert!(
            triple.n() <= triple.l() * triple.m() * triple.m(),
            "case {done}: n = {} > l m^2",
            triple.n()
        );
        assert_eq!(
            (triple.l(), triple.m()),
            (l0, m0),
            "case {done}: formulation shape changed"
        );
        assert!(cert.all_pass(), "case {done}: {cert:?}");
        done += 1;
    }
    println!(
        "PASS normalization: 50 random targets (d <= 3, <= 8 vertices) certified with \
         |A| <= 1+1e-6, |phi|, |t| <= rho (1+1e-6), n <= l m^2, and (l, m) preserved"
    );
}

/// Random invertible integer frame: unit lower times unit upper triangular.
fn random_frame(k: usize, rng: &mut StdRng) -> RatMat {
    let mut lower = vec![vec![rint(0); k]; k];
    let mut upper = vec![vec![rint(0); k]; k];
    for i in 0..k {
        lower[i][i] = rint(1);
        upper[i][i] = rint(1);
        for j in 0..i {
            lower[i][j] = rint(rng.random_range(-2..=2));
            upper[j][i] = rint(rng.random_range(-2..=2));
        }
    }
    mat_mul_rat(&lower, &upper)
}

fn mat_mul_rat(a: &RatMat, b: &RatMat) -> RatMat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![rint(0); m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut acc = rint(0);
            for (l, row_b) in b.iter().enumerate().take(k) {
                acc += &a[i][l] * &row_b[j];
            }
            out[i][j] = acc;
        }
    }
    out
}

/// `W diag(block, 0) W^T` for a symmetric `r x r` block inside size `k`.
fn framed_block(w: &RatMat, block: &RatMat, k: usize) -> RatMat {
    let r = block.len();
    let mut padded = vec![vec![rint(0); k]; k];
    for i in 0..r {
        for j in 0..r {
            padded[i][j] = block[i][j].clone();
        }
    }
    let wt: RatMat = (0..k)
        .map(|i| (0..k).map(|j| w[j][i].clone()).collect())
        .collect();
    mat_mul_rat(&mat_mul_rat(w, &padded), &wt)
}

#[test]
fn reduced_spectrahedra_agree_with_their_originals() {
    let mut rng = StdRng::seed_from_u64(606);
    let mut total_excluded = 0usize;
    for trial in 0..30 {
        let k = rng.random_range(2..=5);
        let r = rng.random_range(1..k);
        let nv = rng.random_range(1..=3);
        let w = random_frame(k, &mut rng);
        let diag: RatMat = (0..r)
            .map(|i| {
                (0..r)
                    .map(|j| {
                        if i == j {
                            rint(rng.random_range(1..=4))
                        } else {
                            rint(0)
                        }
                    })
                    .collect()
            })
            .collect();
        let constant = framed_block(&w, &diag, k);
        let coeffs: Vec<RatMat> = (0..nv)
            .map(|_| {
                let mut sym = vec![vec![rint(0); r]; r];
                for i in 0..r {
                    for j in 0..=i {
                        let e = rint(rng.random_range(-3..=3));
                        sym[i][j] = e.clone();
                        sym[j][i] = e;
                    }
                }
                framed_block(&w, &sym, k)
            })
            .collect();
        let map = AffineMatrixMap::new(coeffs, constant).unwrap();
        let monic = helton_vinnikov_reduce(&map).unwrap();
        let mut excluded = 0;
        for _ in 0..500 {
            let x: Vec<Rational> = (0..nv)
                .map(|_| rat(rng.random_range(-400..=400), 100))
                .collect();
            let exact_member = is_psd(&map.eval(&x).unwrap()).unwrap();
            let xf = DVector::from_iterator(nv, x.iter().map(to_f64));
            let mut reduced = monic.eval(&xf);
            for i in 0..monic.block_size() {
                reduced[(i, i)] += 1.0;
            }
            let min_eig = reduced
                .symmetric_eigenvalues()
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            if min_eig.abs() <= 1e-7 {
                excluded += 1;
                continue;
            }
            assert_eq!(
                exact_member,
                min_eig > 0.0,
                "trial {trial}: disagreement at x = {x:?}, min eig {min_eig}"
            );
        }
        assert!(
            excluded <= 5,
            "trial {trial}: {excluded}/500 samples fell in the boundary band"
        );
        total_excluded += excluded;
    }
    let worked = AffineMatrixMap::new(
        vec![vec![vec![rint(1), rint(0)], vec![rint(0), rint(0)]]],
        vec![vec![rint(1), rint(0)], vec![rint(0), rint(0)]],
    )
    .unwrap();
    let monic = helton_vinnikov_reduce(&worked).unwrap();
    let coeff = &monic.coeffs()[0];
    for i in 0..2 {
        for j in 0..2 {
            let want = if (i, j) == (0, 0) { 1.0 } else { 0.0 };
            assert!(
                (coeff[(i, j)] - want).abs() <= 1e-8,
                "worked example coefficient ({i},{j}) = {}",
                coeff[(i, j)]
            );
        }
    }
    println!(
        "PASS reduction: 30 singular spectrahedra agreed with their monic forms on 500 \
         samples each ({total_excluded} total boundary-band exclusions at 1e-7); worked \
         example gave A(x) = diag(x, 0) to 1e-8"
    );
}

/// Support value of the projected body `phi(Q_A) + t` in direction `u`,
/// with the lifted feasible region passed in so callers build it once.
fn support_value(triple: &EncodingTriple, q: &HPolyhedron, u: &[f64]) -> f64 {
    let objective: Vec<Rational> = (0..triple.n())
        .map(|j| {
            let val: f64 = (0..triple.d()).map(|i| triple.phi()[(i, j)] * u[i]).sum();
            from_f64_exact(val).unwrap()
        })
        .collect();
    let outcome = solve_problem(&q.to_lp_problem(), &objective, Sense::Maximize).unwrap();
    let LpOutcome::Optimal { value, .. } = outcome else {
        panic!("support LP not optimal: {outcome:?}");
    };
    let shift: f64 = (0..triple.d()).map(|i| triple.t()[i] * u[i]).sum();
    to_f64(&value) + shift
}

#[test]
fn projected_bodies_respect_the_triple_distance_bound() {
    let mut rng = StdRng::seed_from_u64(707);
    for trial in 0..100 {
        let k = rng.random_range(3usize..=6);
        let mut params: BTreeSet<i64> = BTreeSet::new();
        while params.len() < k {
            params.insert(rng.random_range(-16i64..=16));
        }
        let params: Vec<i64> = params.into_iter().collect();
        let on_parabola = |offsets: &[Rational]| -> VPolytope {
            let pts = params
                .iter()
                .zip(offsets)
                .map(|(&p, off)| {
                    let t = rat(p, 8) + off;
                    vec![t.clone(), &t * &t]
                })
                .collect();
            VPolytope::from_points(2, pts).unwrap()
        };
        let zero = vec![rat(0, 1); k];
        let jitter: Vec<Rational> = (0..k)
            .map(|_| rat(rng.random_range(-1..=1), 256))
            .collect();
        let a = on_parabola(&zero);
        let b = on_parabola(&jitter);
        if a.num_vertices() != k || b.num_vertices() != k {
            continue;
        }
        let tr_a = normalize(&ExtendedFormulation::from(trivial_vrep_ef(&a).unwrap()), &a).unwrap();
        let tr_b = normalize(&ExtendedFormulation::from(trivial_vrep_ef(&b).unwrap()), &b).unwrap();
        assert_eq!(tr_a.shape(), tr_b.shape(), "trial {trial}");
        let rho = to_f64(&a.circumradius_sq().max(b.circumradius_sq())).sqrt();
        assert!(validate_normalized(&tr_a, rho).all_pass(), "trial {trial}");
        assert!(validate_normalized(&tr_b, rho).all_pass(), "trial {trial}");
        let bound = triple_distance_bound(&tr_a, &tr_b, rho).unwrap();
        let q_a = tr_a.linear_q_hpoly().unwrap();
        let q_b = tr_b.linear_q_hpoly().unwrap();
        let mut estimate = 0f64;
        for step in 0..32 {
            let angle = std::f64::consts::TAU * step as f64 / 32.0;
            let u = [angle.cos(), angle.sin()];
            let gap = (support_value(&tr_a, &q_a, &u) - support_value(&tr_b, &q_b, &u)).abs();
            estimate = estimate.max(gap);
        }
        assert!(
            estimate <= bound + 1e-8,
            "trial {trial}: sampled Hausdorff {estimate} > bound {bound}"
        );
    }
    println!(
        "PASS distance bound: 100 random normalized triple pairs kept the sampled support-gap \
         below rho n^2 |A - A'| + n |phi - phi'| + |t - t'| + 1e-8"
    );
}

#[test]
fn john_ellipsoid_recovers_the_ball_and_sandwiches() {
    for n in 1usize..=4 {
        let mut rows: Vec<(RatVec, Rational)> = Vec::new();
        for i in 0..n {
            for sign in [1i64, -1] {
                let mut a = vec![rint(0); n];
                a[i] = rint(sign);
                rows.push((a, rint(1)));
            }
        }
        let cube = HPolyhedron::new(n, rows, vec![]).unwrap();
        let res = john_ellipsoid(&cube, 1e-8).unwrap();
        for i in 0..n {
            assert!(
                res.ellipsoid.center[i].abs() <= 1e-6,
                "cube n={n}: center {:?}",
                res.ellipsoid.center
            );
            for j in 0..n {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (res.ellipsoid.shape[i][j] - want).abs() <= 1e-6,
                    "cube n={n}: shape[{i}][{j}] = {}",
                    res.ellipsoid.shape[i][j]
                );
            }
        }
    }
    let mut rng = StdRng::seed_from_u64(808);
    let mut done = 0;
    while done < 20 {
        let d = rng.random_range(2usize..=3);
        let k = rng.random_range(d + 2..=8);
        let pts: Vec<RatVec> = (0..k)
            .map(|_| (0..d).map(|_| rat(rng.random_range(-6..=6), 2)).collect())
            .collect();
        let target = VPolytope::from_points(d, pts).unwrap();
        if target.affine_dim() != Some(d) {
            continue;
        }
        let hrep = convex_hull_facets(&target).unwrap();
        let res = john_ellipsoid(&hrep, 1e-8).unwrap();
        assert!(
            res.inner_violation <= 1e-5,
            "case {done}: inner violation {}",
            res.inner_violation
        );
        assert!(
            res.outer_factor <= d as f64 * (1.0 + 1e-5),
            "case {done}: outer factor {} > {d}",
            res.outer_factor
        );
        done += 1;
    }
    println!(
        "PASS ellipsoid: cubes up to n = 4 recovered the unit ball to 1e-6; 20 random \
         full-dimensional polytopes satisfied both sandwich inclusions within 1e-5"
    );
}
