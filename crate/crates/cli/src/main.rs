mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::Value;

use folim_core::convergence::{
    convergence_verdict, density_trace, elementary_distance, fo_split_check, DensityMode, ElementaryDistance,
    DEFAULT_KMAX, DEFAULT_WINDOW,
};
use folim_core::density::{density_exact_with, ExactOptions, DEFAULT_BUDGET};
use folim_core::graphing::{
    clean, debruijn_graphing, graphing_ball_stats, hanf_check, parse_graphing, stats_from_points, BallStatistics,
    Coord, Graphing, Point, DEFAULT_RESOLUTION,
};
use folim_core::io::{parse_any, Loaded, Manifest};
use folim_core::local::{agreement_radius, ball_distribution, rho, tv_distance, tv_maps};
use folim_core::{density_sampled, satisfies, DensityValue, Error, Formula};

use report::{Report, Row};

/// Largest finite component accepted for `--inject`.
const INJECT_LIMIT: usize = 10_000;

#[derive(Parser)]
#[command(name = "folim", version, about = "First-order densities, local statistics and limits of finite structures")]
struct Cli {
    /// Emit the report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Number of worker threads (output does not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a formula at an assignment.
    Eval {
        structure: PathBuf,
        #[arg(short, long)]
        formula: String,
        /// `var=label`, one per free variable.
        #[arg(short, long = "assign", value_name = "VAR=LABEL")]
        assignments: Vec<String>,
    },
    /// Stone pairing: the fraction of tuples satisfying a formula.
    #[command(group(ArgGroup::new("mode").args(["exact", "samples"])))]
    Density {
        #[arg(required = true)]
        structures: Vec<PathBuf>,
        #[arg(short, long)]
        formula: String,
        /// Enumerate all tuples (the default).
        #[arg(long)]
        exact: bool,
        /// Estimate from this many uniformly sampled tuples.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Distribution of radius-r ball types.
    Balls {
        structure: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        radius: usize,
    },
    /// Local distance between two rooted structures.
    Rho {
        first: PathBuf,
        first_root: String,
        second: PathBuf,
        second_root: String,
        #[arg(long, default_value_t = 4)]
        max_radius: usize,
    },
    /// Total variation between ball distributions.
    Tv {
        first: PathBuf,
        second: PathBuf,
        #[arg(short, long, default_value_t = 1)]
        radius: usize,
    },
    /// Quantifier-rank distance via Ehrenfeucht–Fraïssé games.
    Ef {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: usize,
    },
    /// Convergence diagnostics for a sequence listed in a manifest.
    Converge {
        manifest: PathBuf,
        /// Formula whose density trace to report (repeatable).
        #[arg(short, long)]
        formula: Vec<String>,
        #[arg(long, default_value_t = 2)]
        rmax: usize,
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: usize,
        #[arg(long, default_value = "1/100", value_parser = parse_rational)]
        epsilon: BigRational,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        /// Samples per structure when a density exceeds the budget.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sampled ball statistics of a piecewise-affine graphing.
    #[command(group(ArgGroup::new("source").args(["builtin", "spec"]).required(true)))]
    Graphing {
        #[arg(long, value_enum)]
        builtin: Option<Builtin>,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(short, long, default_value_t = 2)]
        radius: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fractional bits of sampled coordinates.
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        bits: u32,
        /// Drop ball types with estimated measure below this (0 disables).
        #[arg(long, default_value = "1/10000", value_parser = parse_rational)]
        clean: BigRational,
        /// Add the finite component of the point `x,y` to the samples (repeatable).
        #[arg(long, value_name = "X,Y")]
        inject: Vec<String>,
        /// Finite graph to compare against.
        #[arg(long)]
        compare: Option<PathBuf>,
        /// Hanf threshold for the comparison.
        #[arg(long, default_value_t = 3)]
        hanf_t: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    Debruijn,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Syntax { .. }
            | Error::UnknownRelation(_)
            | Error::ArityMismatch { .. }
            | Error::NoAdjacency
            | Error::ShadowsConstant(_)
            | Error::NotLocal { .. }
            | Error::FreeVariableCount { .. }
            | Error::Unassigned(_)
            | Error::AssignmentLength { .. }
            | Error::NoFreeVariables
            | Error::NoSamples
            | Error::WindowTooSmall(_)
            | Error::BadThreshold
            | Error::DebruijnOrder(_) => 2,
            Error::Format(_)
            | Error::DuplicateSymbol(_)
            | Error::ZeroArity(_)
            | Error::ElementOutOfRange { .. }
            | Error::TupleArity { .. }
            | Error::RelationCount { .. }
            | Error::ConstantCount { .. }
            | Error::SignatureMismatch
            | Error::EmptyStructure
            | Error::EmptySequence
            | Error::TraceTooShort { .. }
            | Error::InvalidMap { .. } => 3,
            _ => 1,
        };
        let mut message = e.to_string();
        if matches!(e, Error::BudgetExceeded { .. }) {
            message.push_str(" (rerun with --samples N, or raise --budget)");
        }
        Failure { code, message }
    }
}

type Outcome<T> = Result<T, Failure>;

/// Accepts `a/b`, decimals such as `0.05`, and `1e-4`.
fn parse_rational(text: &str) -> Result<BigRational, String> {
    let bad = || format!("`{text}` is not a rational number");
    if text.contains('/') {
        return text.parse::<BigRational>().map_err(|_| bad());
    }
    let (mantissa, exponent) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (text, 0),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int}{frac}");
    if digits.is_empty() || digits == "-" {
        return Err(bad());
    }
    let numer: BigInt = digits.parse().map_err(|_| bad())?;
    let shift = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    Ok(if shift >= 0 {
        BigRational::from_integer(numer * ten.pow(shift as u32))
    } else {
        BigRational::new(numer, ten.pow(shift.unsigned_abs()))
    })
}

fn read(path: &Path) -> Outcome<String> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Outcome<Loaded> {
    parse_any(&read(path)?).map_err(|e| {
        let f = Failure::from(e);
        Failure::input(format!("{}: {}", path.display(), f.message))
    })
}

fn element(loaded: &Loaded, label: &str, path: &Path) -> Outcome<usize> {
    loaded
        .element(label)
        .ok_or_else(|| Failure::usage(format!("no element labelled `{label}` in {}", path.display())))
}

fn float(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn density_row(path: &Path, value: &DensityValue) -> Row {
    let row = Row::new(format!("{}\t{value}", path.display())).field("structure", path.display().to_string());
    match value {
        DensityValue::Exact(v) => row
            .field("mode", "exact")
            .field("value", v.to_string())
            .field("approx", float(v)),
        DensityValue::Sampled(s) => row
            .field("mode", "sampled")
            .field("estimate", s.estimate)
            .field("hits", s.hits)
            .field("samples", s.samples)
            .field("radius", s.radius)
            .field("seed", s.seed),
    }
}

fn cmd_eval(structure: &Path, formula: &str, assignments: &[String]) -> Outcome<Report> {
    let loaded = load(structure)?;
    let f = Formula::parse(formula, loaded.structure.signature())?;
    let mut values = Vec::with_capacity(f.arity());
    for var in f.free_vars() {
        let label = assignments
            .iter()
            .filter_map(|a| a.split_once('='))
            .find(|(v, _)| v.trim() == var)
            .map(|(_, l)| l.trim())
            .ok_or_else(|| Failure::usage(format!("free variable `{var}` needs --assign {var}=<label>")))?;
        values.push(element(&loaded, label, structure)?);
    }
    if let Some(a) = assignments.iter().find(|a| {
        a.split_once('=')
            .is_none_or(|(v, _)| !f.free_vars().iter().any(|x| x == v.trim()))
    }) {
        return Err(Failure::usage(format!("`{a}` does not assign a free variable of the formula")));
    }
    let result = satisfies(&loaded.structure, &f, &values)?;
    let mut report = Report::new("eval");
    report.param("structure", structure.display()).param("formula", &f);
    for (var, a) in f.free_vars().iter().zip(&values) {
        report.param(var, &loaded.labels[*a]);
    }
    report.row(Row::new(result.to_string()).field("satisfied", result));
    Ok(report)
}

fn cmd_density(
    structures: &[PathBuf],
    formula: &str,
    samples: Option<u64>,
    seed: u64,
    budget: u64,
) -> Outcome<Report> {
    let mut report = Report::new("density");
    report.param("formula", formula);
    match samples {
        Some(n) => report.param("mode", "sampled").param("samples", n).param("seed", seed),
        None => report.param("mode", "exact").param("budget", budget),
    };
    for path in structures {
        let loaded = load(path)?;
        let f = Formula::parse(formula, loaded.structure.signature())?;
        let value = match samples {
            Some(n) => density_sampled(&loaded.structure, &f, n, seed)?,
            None => density_exact_with(&loaded.structure, &f, &ExactOptions { budget, parallel: true })?,
        };
        report.row(density_row(path, &value));
    }
    Ok(report)
}

fn cmd_balls(structure: &Path, radius: usize) -> Outcome<Report> {
    let loaded = load(structure)?;
    let dist = ball_distribution(&loaded.structure, radius)?;
    let mut report = Report::new("balls");
    report.param("structure", structure.display()).param("radius", radius);
    for (code, freq) in &dist.frequencies {
        let size = dist.representatives[code].structure.size();
        report.row(
            Row::new(format!("{} {freq}", code.hex()))
                .field("code", code.hex())
                .field("frequency", freq.to_string())
                .field("ball_size", size),
        );
    }
    Ok(report)
}

fn cmd_rho(first: &Path, r1: &str, second: &Path, r2: &str, max_radius: usize) -> Outcome<Report> {
    let (a, b) = (load(first)?, load(second)?);
    let (o1, o2) = (element(&a, r1, first)?, element(&b, r2, second)?);
    let value = rho(&a.structure, o1, &b.structure, o2, max_radius)?;
    let agreed = agreement_radius(&a.structure, o1, &b.structure, o2, max_radius)?;
    let mut report = Report::new("rho");
    report
        .param("first", format!("{} @ {r1}", first.display()))
        .param("second", format!("{} @ {r2}", second.display()))
        .param("max_radius", max_radius);
    let agreed_text = agreed.map_or("none".to_string(), |r| r.to_string());
    report.row(
        Row::new(format!("{value}\t(balls agree up to radius {agreed_text})"))
            .field("rho", value.to_string())
            .field("agreement_radius", agreed.map_or(Value::Null, Value::from)),
    );
    Ok(report)
}

fn cmd_tv(first: &Path, second: &Path, radius: usize) -> Outcome<Report> {
    let (a, b) = (load(first)?, load(second)?);
    let tv = tv_distance(&ball_distribution(&a.structure, radius)?, &ball_distribution(&b.structure, radius)?)?;
    let mut report = Report::new("tv");
    report
        .param("first", first.display())
        .param("second", second.display())
        .param("radius", radius);
    report.row(
        Row::new(tv.to_string())
            .field("tv", tv.to_string())
            .field("approx", float(&tv)),
    );
    Ok(report)
}

fn cmd_ef(first: &Path, second: &Path, kmax: usize) -> Outcome<Report> {
    let (a, b) = (load(first)?, load(second)?);
    let d = elementary_distance(&a.structure, &b.structure, kmax)?;
    let mut report = Report::new("ef");
    report
        .param("first", first.display())
        .param("second", second.display())
        .param("kmax", kmax);
    report.row(
        Row::new(d.to_string())
            .field("distance", d.to_string())
            .field("exponent", d.exponent().map_or(Value::Null, Value::from))
            .field("exact", !matches!(d, ElementaryDistance::UpperBound(_))),
    );
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn cmd_converge(
    manifest: &Path,
    formulas: &[String],
    rmax: usize,
    kmax: usize,
    epsilon: &BigRational,
    window: usize,
    budget: u64,
    samples: u64,
    seed: u64,
) -> Outcome<Report> {
    let base = manifest.parent().unwrap_or(Path::new("."));
    let m = Manifest::parse(&read(manifest)?, base).map_err(|e| Failure::input(format!("{}: {e}", manifest.display())))?;
    let mut seq = Vec::with_capacity(m.entries.len());
    for entry in &m.entries {
        let loaded = load(&entry.path)?;
        let label = entry.label.clone().unwrap_or_else(|| {
            entry
                .path
                .file_stem()
                .map_or_else(|| entry.path.display().to_string(), |s| s.to_string_lossy().into_owned())
        });
        seq.push((label, loaded.structure));
    }
    let mut report = Report::new("converge");
    report
        .param("manifest", manifest.display())
        .param("structures", seq.len())
        .param("rmax", rmax)
        .param("kmax", kmax)
        .param("epsilon", epsilon)
        .param("window", window)
        .param("budget", budget)
        .param("samples", samples)
        .param("seed", seed);
    for (i, (label, s)) in seq.iter().enumerate() {
        report.row(
            Row::new(format!("#{i}\t{label}\tn={}\tmax_degree={}", s.size(), s.max_degree()))
                .field("kind", "structure")
                .field("index", i)
                .field("label", label.clone())
                .field("size", s.size())
                .field("max_degree", s.max_degree()),
        );
    }
    let mode = DensityMode::Auto { budget, samples, seed };
    for text in formulas {
        let f = Formula::parse(text, seq[0].1.signature())?;
        let trace = density_trace(&seq, &f, mode)?;
        for (i, (label, value)) in trace.entries.iter().enumerate() {
            report.row(
                Row::new(format!("density\t{f}\t#{i}\t{label}\t{value}"))
                    .field("kind", "density")
                    .field("formula", f.to_string())
                    .field("index", i)
                    .field("value", value.to_rational().to_string())
                    .field("exact", value.is_exact()),
            );
        }
        let v = convergence_verdict(&trace.values(), epsilon, window)?;
        report.row(
            Row::new(format!("density\t{f}\tverdict\t{v}"))
                .field("kind", "density_verdict")
                .field("formula", f.to_string())
                .field("status", v.status.as_str())
                .field("gap", v.witness.gap.to_string()),
        );
    }
    let structures: Vec<_> = seq.into_iter().map(|(_, s)| s).collect();
    let split = fo_split_check(&structures, rmax, kmax, epsilon, window)?;
    for rv in &split.bs.per_radius {
        report.row(
            Row::new(format!("bs\tr={}\t{}", rv.radius, rv.verdict))
                .field("kind", "bs")
                .field("radius", rv.radius)
                .field("status", rv.verdict.status.as_str())
                .field("gap", rv.verdict.witness.gap.to_string()),
        );
    }
    for w in &split.bs.warnings {
        report.row(Row::new(format!("warning\t{w}")).field("kind", "warning").field("message", w.clone()));
    }
    report.row(
        Row::new(format!("bs\t{}", split.bs.status()))
            .field("kind", "bs_verdict")
            .field("status", split.bs.status().as_str()),
    );
    let e = &split.elementary;
    let witness = e.witness.map_or(Value::Null, |(i, j, k)| serde_json::json!([i, j, k]));
    report.row(
        Row::new(format!("elementary\t{e}"))
            .field("kind", "elementary_verdict")
            .field("status", e.status.as_str())
            .field("witness", witness),
    );
    report.row(
        Row::new(format!("fo\t{}", split.fo))
            .field("kind", "fo_verdict")
            .field("status", split.fo.as_str()),
    );
    Ok(report)
}

fn parse_point(text: &str) -> Outcome<Point> {
    let bad = || Failure::usage(format!("`{text}` is not a point `x,y` with rational coordinates"));
    let (x, y) = text.split_once(',').ok_or_else(bad)?;
    let x: Coord = x.trim().parse().map_err(|_| bad())?;
    let y: Coord = y.trim().parse().map_err(|_| bad())?;
    Ok(Point::new(x, y))
}

#[allow(clippy::too_many_arguments)]
fn cmd_graphing(
    builtin: Option<Builtin>,
    spec: Option<&Path>,
    radius: usize,
    samples: u64,
    seed: u64,
    bits: u32,
    theta: &BigRational,
    inject: &[String],
    compare: Option<&Path>,
    hanf_t: u64,
) -> Outcome<Report> {
    let (source, g): (String, Graphing) = match (builtin, spec) {
        (Some(Builtin::Debruijn), _) => ("builtin debruijn".into(), debruijn_graphing()),
        (None, Some(path)) => (
            path.display().to_string(),
            parse_graphing(&read(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        ),
        (None, None) => return Err(Failure::usage("one of --builtin or --spec is required")),
    };
    if !(1..=120).contains(&bits) {
        return Err(Failure::usage("--bits must lie in 1..=120"));
    }
    let mut report = Report::new("graphing");
    report
        .param("source", &source)
        .param("radius", radius)
        .param("samples", samples)
        .param("seed", seed)
        .param("bits", bits)
        .param("clean", if theta.is_zero() { "off".to_string() } else { theta.to_string() })
        .param("inject", if inject.is_empty() { "none".to_string() } else { inject.join(" ") });
    if let Some(path) = compare {
        report.param("compare", path.display()).param("hanf_t", hanf_t);
    }
    let mut stats = graphing_ball_stats(&g, radius, samples, seed, bits)?;
    for text in inject {
        let p = parse_point(text)?;
        let (component, points) = g.component(&p, INJECT_LIMIT)?.ok_or_else(|| Failure {
            code: 1,
            message: format!("the orbit of {p} has more than {INJECT_LIMIT} points"),
        })?;
        stats = stats.merge(&stats_from_points(&g, radius, &points)?)?;
        report.row(
            Row::new(format!("injected\t{p}\tcomponent order {}", component.size()))
                .field("kind", "injected")
                .field("point", p.to_string())
                .field("order", component.size()),
        );
    }
    if !theta.is_zero() {
        stats = clean(&stats, theta)?;
        for (code, hits) in &stats.removed {
            report.row(
                Row::new(format!("removed\t{}\t{hits}", code.hex()))
                    .field("kind", "removed")
                    .field("code", code.hex())
                    .field("hits", *hits),
            );
        }
    }
    let freqs = stats.frequencies();
    for (code, hits) in &stats.counts {
        let f = &freqs[code];
        report.row(
            Row::new(format!("{}\t{hits}\t{f}", code.hex()))
                .field("kind", "ball")
                .field("code", code.hex())
                .field("hits", *hits)
                .field("estimate", f.to_string()),
        );
    }
    if let Some(path) = compare {
        let loaded = load(path)?;
        let finite = ball_distribution(&loaded.structure, radius)?;
        let tv = tv_maps(&finite.frequencies, &freqs);
        report.row(
            Row::new(format!("tv\t{tv}\t{:.6}", float(&tv)))
                .field("kind", "tv")
                .field("tv", tv.to_string())
                .field("approx", float(&tv)),
        );
        let hanf = hanf_check(&stats, &finite, hanf_t, loaded.structure.size() as u64)?;
        for row in &hanf.rows {
            report.row(
                Row::new(format!(
                    "hanf\t{}\t{}\t{}\t{}",
                    row.code.hex(),
                    row.left,
                    row.right,
                    if row.passes() { "ok" } else { "differs" }
                ))
                .field("kind", "hanf")
                .field("code", row.code.hex())
                .field("graphing", row.left)
                .field("finite", row.right),
            );
        }
        let verdict = if hanf.passes() { "pass" } else { "fail" };
        report.row(
            Row::new(format!("hanf\t{verdict}"))
                .field("kind", "hanf_verdict")
                .field("passes", hanf.passes()),
        );
    }
    Ok(report)
}

fn run(cli: &Cli) -> Outcome<Report> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Eval {
            structure,
            formula,
            assignments,
        } => cmd_eval(structure, formula, assignments),
        Command::Density {
            structures,
            formula,
            exact: _,
            samples,
            seed,
            budget,
        } => cmd_density(structures, formula, *samples, *seed, *budget),
        Command::Balls { structure, radius } => cmd_balls(structure, *radius),
        Command::Rho {
            first,
            first_root,
            second,
            second_root,
            max_radius,
        } => cmd_rho(first, first_root, second, second_root, *max_radius),
        Command::Tv { first, second, radius } => cmd_tv(first, second, *radius),
        Command::Ef { first, second, kmax } => cmd_ef(first, second, *kmax),
        Command::Converge {
            manifest,
            formula,
            rmax,
            kmax,
            epsilon,
            window,
            budget,
            samples,
            seed,
        } => cmd_converge(manifest, formula, *rmax, *kmax, epsilon, *window, *budget, *samples, *seed),
        Command::Graphing {
            builtin,
            spec,
            radius,
            samples,
            seed,
            bits,
            clean,
            inject,
            compare,
            hanf_t,
        } => cmd_graphing(
            *builtin,
            spec.as_deref(),
            *radius,
            *samples,
            *seed,
            *bits,
            clean,
            inject,
            compare.as_deref(),
            *hanf_t,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render(cli.json));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
