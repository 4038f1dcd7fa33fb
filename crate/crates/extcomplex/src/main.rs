//! Batch command-line front end.
//!
//! Six verbs wire the library into file-based pipelines: `construct`,
//! `verify`, `normalize`, `bound`, `family`, and `distance`. Each
//! invocation writes one JSON document to standard output; human-readable
//! summaries and errors go to standard error. Exit code 0 means success, 1
//! means a verification or certification failure, 2 means malformed input.
//!
//! The environment variable `EXTCOMPLEX_PRECISION` overrides the working
//! precision of the bound evaluator in bits. `--seed` fixes every
//! randomized sampling step and `--jobs` sizes the thread pool behind the
//! internal sweeps.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use extcomplex::bounds::{
    circumradius_sq, corollary41_thresholds, generate_family, min_pairwise_separation_sq,
    theorem1_bound, BoundInputs, FamilySelector, FamilySpec,
};
use extcomplex::constructions::{shannon_01_ef, shannon_01_plan};
use extcomplex::extform::{validate_normalized, verify_linear_ef, ExtendedFormulation};
use extcomplex::geometry::distance::hausdorff_distance_sq;
use extcomplex::geometry::polytope::VPolytope;
use extcomplex::normalization::{normalize_with_mode, SandwichMode};
use extcomplex::rational::{format_rational, to_f64};

#[derive(Parser)]
#[command(
    name = "extcomplex",
    version,
    about = "Exact-arithmetic toolkit for extended formulations of polytopes"
)]
struct Cli {
    /// Seed for every randomized sampling step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads for internal sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a linear extended formulation of a 0/1-polytope from its
    /// vertices.
    Construct(ConstructArgs),
    /// Check that a linear formulation projects exactly onto a target
    /// polytope.
    Verify(VerifyArgs),
    /// Normalize a formulation over a target and certify the normal form.
    Normalize(NormalizeArgs),
    /// Evaluate the family-size lower bound and its complexity floors.
    Bound(BoundArgs),
    /// Generate members of a combinatorial polytope family.
    Family(FamilyArgs),
    /// Exact squared Hausdorff distance between two polytopes.
    Distance(DistanceArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Use the suffix-fiber construction (the only mode).
    #[arg(long, required = true)]
    shannon: bool,

    /// Target vertex set, a JSON polytope with 0/1 coordinates.
    #[arg(long, value_name = "FILE")]
    vertices: PathBuf,

    /// Suffix width override.
    #[arg(long)]
    s: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Formulation file.
    #[arg(long, value_name = "FILE")]
    ef: PathBuf,

    /// Target polytope file.
    #[arg(long, value_name = "FILE")]
    target: PathBuf,
}

#[derive(Args)]
struct NormalizeArgs {
    /// Formulation file.
    #[arg(long, value_name = "FILE")]
    ef: PathBuf,

    /// Target polytope file.
    #[arg(long, value_name = "FILE")]
    target: PathBuf,

    /// Rounding body for the sandwiching step.
    #[arg(long, value_enum, default_value = "ellipsoid")]
    rounding: Rounding,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rounding {
    Ellipsoid,
    Box,
}

#[derive(Args)]
struct BoundArgs {
    /// Ambient dimension of the family.
    #[arg(long, required_unless_present = "thresholds")]
    d: Option<usize>,

    /// Radius of a ball containing every member.
    #[arg(long, required_unless_present = "thresholds")]
    rho: Option<f64>,

    /// Minimum pairwise Hausdorff distance between members.
    #[arg(long, required_unless_present = "thresholds")]
    delta: Option<f64>,

    /// Number of members, an arbitrary-size integer.
    #[arg(long = "N", required_unless_present = "thresholds")]
    n: Option<String>,

    /// Emit the random 0/1-polytope threshold table for dimensions 3..=MAX
    /// as CSV instead of evaluating a single bound.
    #[arg(long, value_name = "MAX", conflicts_with_all = ["d", "rho", "delta", "n"])]
    thresholds: Option<usize>,
}

#[derive(Args)]
struct FamilyArgs {
    /// Family kind.
    #[arg(long, value_enum)]
    kind: FamilyKind,

    /// Cube dimension (zero_one).
    #[arg(long)]
    d: Option<usize>,

    /// Largest parameter value (parabola).
    #[arg(long)]
    s: Option<u64>,

    /// Vertices per member (parabola).
    #[arg(long)]
    n: Option<usize>,

    /// Explicit members as vertex bitmasks (zero_one).
    #[arg(long, value_delimiter = ',', conflicts_with = "sample")]
    masks: Option<Vec<u64>>,

    /// Explicit members as parameter subsets, e.g. "1,2,3;2,4,6" (parabola).
    #[arg(long, conflicts_with = "sample")]
    subsets: Option<String>,

    /// Draw this many members uniformly at random instead of enumerating.
    #[arg(long)]
    sample: Option<usize>,

    /// Also report the exact minimum pairwise separation and circumradius.
    #[arg(long)]
    separation: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    #[value(name = "zero_one")]
    ZeroOne,
    Parabola,
}

#[derive(Args)]
struct DistanceArgs {
    /// First polytope file.
    #[arg(long, value_name = "FILE")]
    a: PathBuf,

    /// Second polytope file.
    #[arg(long, value_name = "FILE")]
    b: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.jobs == 0 {
        eprintln!("extcomplex: --jobs must be at least 1");
        return ExitCode::from(2);
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build() {
        Ok(pool) => pool,
        Err(err) => {
            eprintln!("extcomplex: {err}");
            return ExitCode::from(2);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("extcomplex: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Construct(args) => cmd_construct(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Normalize(args) => cmd_normalize(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Family(args) => cmd_family(args, cli.seed),
        Command::Distance(args) => cmd_distance(args),
    }
}

fn cmd_construct(args: &ConstructArgs) -> Result<ExitCode> {
    let target: VPolytope = read_json(&args.vertices)?;
    let plan = shannon_01_plan(&target, args.s)?;
    let ef = shannon_01_ef(&target, args.s)?;
    emit(&json!({ "ef": ExtendedFormulation::from(ef), "plan": plan }))?;
    eprintln!(
        "suffix width {}, declared size bound {}",
        plan.s, plan.declared_bound
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode> {
    let ef: ExtendedFormulation = read_json(&args.ef)?;
    let target: VPolytope = read_json(&args.target)?;
    let ExtendedFormulation::Linear(linear) = ef else {
        bail!("verification supports linear formulations only");
    };
    let report = verify_linear_ef(&linear, &target)?;
    emit(&report)?;
    if report.is_verified() {
        eprintln!("verified");
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification failed");
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_normalize(args: &NormalizeArgs) -> Result<ExitCode> {
    let ef: ExtendedFormulation = read_json(&args.ef)?;
    let target: VPolytope = read_json(&args.target)?;
    let mode = match args.rounding {
        Rounding::Ellipsoid => SandwichMode::Ellipsoid,
        Rounding::Box => SandwichMode::InscribedBox,
    };
    let triple = normalize_with_mode(&ef, &target, mode)?;
    let rho = to_f64(&target.circumradius_sq()).sqrt();
    let certificate = validate_normalized(&triple, rho);
    emit(&json!({ "certificate": certificate, "triple": triple }))?;
    if certificate.all_pass() {
        eprintln!(
            "normalized: l = {}, m = {}, n = {}",
            triple.l(),
            triple.m(),
            triple.n()
        );
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("normalization certificate failed");
        Ok(ExitCode::FAILURE)
    }
}

fn cmd_bound(args: &BoundArgs) -> Result<ExitCode> {
    if let Some(max) = args.thresholds {
        println!("d,sxc_threshold,xc_threshold,prob_exponent");
        for d in 3..=max {
            let row = corollary41_thresholds(d)?;
            println!(
                "{d},{},{},{}",
                row.sxc_threshold, row.xc_threshold, row.prob_exponent
            );
        }
        eprintln!("threshold table for d = 3..={max}");
        return Ok(ExitCode::SUCCESS);
    }
    let n: BigUint = args
        .n
        .as_deref()
        .expect("clap enforces --N")
        .parse()
        .map_err(|_| anyhow::anyhow!("--N must be a non-negative integer"))?;
    let inputs = BoundInputs::new(
        args.d.expect("clap enforces --d"),
        args.rho.expect("clap enforces --rho"),
        args.delta.expect("clap enforces --delta"),
        n,
    )?;
    let value = theorem1_bound(&inputs)?;
    emit(&value)?;
    eprintln!(
        "B = {} (sxc floor {}, xc floor {})",
        value.b, value.sxc_floor, value.xc_floor
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_family(args: &FamilyArgs, seed: u64) -> Result<ExitCode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (spec, selector) = match args.kind {
        FamilyKind::ZeroOne => {
            let Some(d) = args.d else {
                bail!("--kind zero_one needs --d");
            };
            if args.s.is_some() || args.n.is_some() || args.subsets.is_some() {
                bail!("--s, --n, and --subsets do not apply to zero_one");
            }
            let spec = FamilySpec::zero_one(d)?;
            let selector = if let Some(count) = args.sample {
                FamilySelector::ZeroOneMasks(sample_masks(d, count, &mut rng)?)
            } else if let Some(masks) = args.masks.clone() {
                FamilySelector::ZeroOneMasks(masks)
            } else {
                FamilySelector::All
            };
            (spec, selector)
        }
        FamilyKind::Parabola => {
            let (Some(s), Some(n)) = (args.s, args.n) else {
                bail!("--kind parabola needs --s and --n");
            };
            if args.d.is_some() || args.masks.is_some() {
                bail!("--d and --masks do not apply to parabola");
            }
            let spec = FamilySpec::parabola_ngon(s, n)?;
            let selector = if let Some(count) = args.sample {
                FamilySelector::ParabolaSubsets(sample_subsets(s, n, count, &mut rng))
            } else if let Some(text) = args.subsets.as_deref() {
                FamilySelector::ParabolaSubsets(parse_subsets(text)?)
            } else {
                FamilySelector::All
            };
            (spec, selector)
        }
    };
    let members = generate_family(&spec, &selector)?;
    if args.separation {
        let separation = min_pairwise_separation_sq(&members)?;
        let radius = circumradius_sq(&members)?;
        emit(&json!({
            "members": members,
            "min_separation_sq": format_rational(&separation),
            "circumradius_sq": format_rational(&radius),
        }))?;
        eprintln!(
            "{} members, min separation^2 = {}",
            members.len(),
            format_rational(&separation)
        );
    } else {
        eprintln!("{} members", members.len());
        emit(&members)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_distance(args: &DistanceArgs) -> Result<ExitCode> {
    let a: VPolytope = read_json(&args.a)?;
    let b: VPolytope = read_json(&args.b)?;
    let dist = hausdorff_distance_sq(&a, &b)?;
    emit(&json!({ "hausdorff_sq": format_rational(&dist) }))?;
    eprintln!("hausdorff^2 = {}", format_rational(&dist));
    Ok(ExitCode::SUCCESS)
}

/// Uniform non-empty vertex masks of the `d`-cube.
fn sample_masks(d: usize, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<u64>> {
    if d > 6 {
        bail!("mask sampling supports dimensions up to 6");
    }
    let limit = if d == 6 {
        u64::MAX
    } else {
        (1u64 << (1usize << d)) - 1
    };
    Ok((0..count).map(|_| rng.random_range(1..=limit)).collect())
}

/// Uniform `n`-element subsets of `1..=s` by rejection; the caller has
/// already checked `n <= s`.
fn sample_subsets(s: u64, n: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    (0..count)
        .map(|_| {
            let mut set = BTreeSet::new();
            while set.len() < n {
                set.insert(rng.random_range(1..=s));
            }
            set.into_iter().collect()
        })
        .collect()
}

fn parse_subsets(text: &str) -> Result<Vec<Vec<u64>>> {
    text.split(';')
        .map(|chunk| {
            chunk
                .split(',')
                .map(|part| {
                    part.trim()
                        .parse::<u64>()
                        .with_context(|| format!("bad parameter {part:?} in --subsets"))
                })
                .collect()
        })
        .collect()
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit<T: Serialize + ?Sized>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}
