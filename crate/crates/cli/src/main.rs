mod input;
mod output;
mod verify;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use crflow::entropy::{run_with_options, EntropyConfig, EntropyKind};
use crflow::flow::{classify_dynamics, fixed_points, phase_field, FixedPointSet};
use crflow::lie_algebra::{classify_geometry, Geometry};
use crflow::presets::{Preset, PRESET_NAMES};
use crflow::solver::Method;
use crflow::{integrate, Error, FlowKind, IntegratorOptions};

use input::{Initial, Problem, Source};
use verify::Fault;

#[derive(Parser)]
#[command(name = "crflow", version, about = "Torsion flow on homogeneous CR 3-manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry, unimodularity, torsion-free structures and dynamics of a Lie algebra
    Classify(SourceArgs),
    /// Integrate a flow and write the trajectory as CSV
    Simulate(RunArgs),
    /// Sample the normalized vector field on a grid
    Portrait(PortraitArgs),
    /// Track an entropy functional along its coupled flow
    Entropy(RunArgs),
    /// Run the randomized self-checks
    Verify(VerifyArgs),
    /// List the built-in presets
    Presets,
}

#[derive(Args)]
struct SourceArgs {
    /// JSON input document
    #[arg(short, long)]
    input: Option<PathBuf>,
    /// Preset name, optionally with its parameter as NAME:X
    #[arg(long)]
    preset: Option<String>,
    /// Parameter for pdq and prequant
    #[arg(long = "K", allow_hyphen_values = true)]
    k: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c0: Option<f64>,
    /// Initial B = b²
    #[arg(long, allow_hyphen_values = true)]
    b0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi0: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    tau0: Option<f64>,
    /// unnormalized | normalized | f | wplus | wminus
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    rtol: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    atol: Option<f64>,
    /// Fixed RK4 step; switches off the adaptive integrator
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    /// Number of output samples
    #[arg(long)]
    samples: Option<usize>,
    /// Give up after this many integrator steps
    #[arg(long)]
    max_steps: Option<usize>,
    /// Base volume for the entropy functionals
    #[arg(long, allow_hyphen_values = true)]
    vol0: Option<f64>,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PortraitArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Grid size NxM (a nodes by c nodes)
    #[arg(long, default_value = "20x20")]
    grid: String,
    #[arg(long, default_value = "-2:2", allow_hyphen_values = true)]
    a_range: String,
    /// A lower bound of 0 means the half-open range (0, HI]
    #[arg(long, default_value = "0:2")]
    c_range: String,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    cases: usize,
    /// Where to write the failing case, if any
    #[arg(short, long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

/// Failure classes and their exit codes.
enum Failure {
    Input(anyhow::Error),
    Integrator(anyhow::Error),
    Verify,
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 1,
            Failure::Integrator(_) => 2,
            Failure::Verify => 3,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

/// Errors raised while integrating are input errors unless the integrator itself gave up.
fn run_error(e: Error) -> Failure {
    match e {
        Error::IntegratorFailure(_) => Failure::Integrator(e.into()),
        other => Failure::Input(other.into()),
    }
}

type CmdResult = Result<(), Failure>;

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) {
    let mut out = io::stdout().lock();
    if let Err(e) = out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error: cannot write to stdout: {e}");
        }
    }
}

macro_rules! say {
    ($($arg:tt)*) => {
        emit(&format!("{}\n", format_args!($($arg)*)))
    };
}

fn write_out(path: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            emit(text);
            Ok(())
        }
    }
}

fn load(src: &SourceArgs) -> anyhow::Result<Problem> {
    input::load(src.input.as_deref(), src.preset.as_deref(), src.k)
}

fn parse_range(s: &str, what: &str) -> anyhow::Result<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| anyhow!("{what} must look like LO:HI, got `{s}`"))?;
    let lo: f64 = lo.trim().parse().with_context(|| format!("bad {what} lower bound `{lo}`"))?;
    let hi: f64 = hi.trim().parse().with_context(|| format!("bad {what} upper bound `{hi}`"))?;
    Ok((lo, hi))
}

fn parse_grid(s: &str) -> anyhow::Result<(usize, usize)> {
    let (n, m) = s.split_once(['x', 'X']).ok_or_else(|| anyhow!("grid must look like NxM, got `{s}`"))?;
    Ok((n.trim().parse().context("bad grid size")?, m.trim().parse().context("bad grid size")?))
}

fn fmt_num(x: f64) -> String {
    if x == x.round() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.6}")
    }
}

fn cmd_classify(args: &SourceArgs) -> CmdResult {
    let problem = load(args)?;
    let nd = &problem.nd;
    let class = classify_geometry(nd);
    let unimodular = match problem.source {
        Source::Raw { unimodular } => unimodular,
        _ => class.geometry != Geometry::NotUnimodular,
    };
    let dynamics = classify_dynamics(nd);
    let fp = fixed_points(nd);
    let summary = match &fp {
        FixedPointSet::All => format!("{}, fixed points: all", class.geometry),
        FixedPointSet::Empty => format!("{}, no torsion-free J", class.geometry),
        FixedPointSet::Isolated(points) => {
            let pts: Vec<String> = points.iter().map(|(a, c)| format!("({},{})", fmt_num(*a), fmt_num(*c))).collect();
            format!(
                "{}, {}, fixed point {}, {dynamics}",
                class.geometry,
                if unimodular { "unimodular" } else { "not unimodular" },
                pts.join(" ")
            )
        }
    };
    say!("{summary}");
    say!("source: {}", problem.label());
    say!(
        "constants: c2_13={} c2_23={} c3_12={} c3_23={}",
        nd.c2_13(),
        nd.c2_23(),
        nd.c3_12(),
        nd.c3_23()
    );
    say!("geometry: {}", class.geometry);
    say!("unimodular: {}", if unimodular { "yes" } else { "no" });
    say!("torsion-free J: {}", if class.admits_torsion_free { "yes" } else { "no" });
    let fp_text = match &fp {
        FixedPointSet::All => "all".to_string(),
        FixedPointSet::Empty => "none".to_string(),
        FixedPointSet::Isolated(p) => p.iter().map(|(a, c)| format!("(a={a}, c={c})")).collect::<Vec<_>>().join(" "),
    };
    say!("fixed points: {fp_text}");
    say!("dynamics: {dynamics}");
    Ok(())
}

struct Prepared {
    problem: Problem,
    kind: FlowKind,
    start: crflow::FlowState,
    t_end: f64,
    opts: IntegratorOptions,
}

fn prepare(args: &RunArgs, default_kind: FlowKind) -> anyhow::Result<Prepared> {
    let problem = load(&args.source)?;
    let kind = match &args.kind {
        Some(k) => k.parse::<FlowKind>()?,
        None => problem.kind.unwrap_or(default_kind),
    };
    let overrides = Initial {
        a: args.a0,
        c: args.c0,
        b: args.b0,
        phi: args.phi0,
        tau: args.tau0,
    };
    let start = problem.start(kind, overrides)?;
    let t_end = args.t_end.or(problem.t_end).unwrap_or(10.0);
    if !(t_end > 0.0 && t_end.is_finite()) {
        bail!("t-end must be positive and finite, got {t_end}");
    }
    let mut opts = match args.dt {
        Some(dt) => IntegratorOptions::rk4(dt),
        None => IntegratorOptions::default(),
    };
    if let Some(r) = args.rtol {
        opts.rtol = r;
    }
    if let Some(a) = args.atol {
        opts.atol = a;
    }
    if let Some(n) = args.samples {
        opts.samples = n;
    }
    if let Some(n) = args.max_steps {
        opts.max_steps = n;
    }
    if opts.method == Method::Rk4 && (args.rtol.is_some() || args.atol.is_some()) {
        bail!("--rtol/--atol have no effect with a fixed --dt");
    }
    opts.validate()?;
    Ok(Prepared {
        problem,
        kind,
        start,
        t_end,
        opts,
    })
}

fn cmd_simulate(args: &RunArgs) -> CmdResult {
    let p = prepare(args, FlowKind::Unnormalized)?;
    let traj = integrate(p.kind, &p.problem.nd, &p.start, p.t_end, &p.opts).map_err(run_error)?;
    write_out(args.out.as_deref(), &output::trajectory_csv(&traj))?;
    if args.out.is_some() {
        say!(
            "{} {} on [0, {}]: {} samples, event: {}",
            p.problem.label(),
            p.kind,
            p.t_end,
            traj.times.len(),
            traj.terminal_event.describe()
        );
    }
    Ok(())
}

fn cmd_portrait(args: &PortraitArgs) -> CmdResult {
    let problem = load(&args.source)?;
    let grid = parse_grid(&args.grid)?;
    let a_range = parse_range(&args.a_range, "a-range")?;
    let c_range = parse_range(&args.c_range, "c-range")?;
    let samples = phase_field(&problem.nd, a_range, c_range, grid).map_err(anyhow::Error::from)?;
    write_out(args.out.as_deref(), &output::portrait_csv(&samples))?;
    if args.out.is_some() {
        say!("{} grid {}x{}: {} nodes", problem.label(), grid.0, grid.1, samples.len());
    }
    Ok(())
}

fn cmd_entropy(args: &RunArgs) -> CmdResult {
    if args.phi0.is_some() {
        return Err(anyhow!("phi0 is fixed by the normalization constraint and cannot be set").into());
    }
    let p = prepare(args, FlowKind::CoupledF)?;
    let functional = EntropyKind::for_flow(p.kind)
        .ok_or_else(|| anyhow!("flow kind {} has no entropy functional", p.kind))?;
    let mut cfg = EntropyConfig::new(functional);
    if let Some(v) = args.vol0 {
        cfg.vol0 = v;
    }
    let report = run_with_options(p.kind, &p.problem.nd, &p.start, p.t_end, &cfg, &p.opts).map_err(run_error)?;
    let summary = output::entropy_summary(&report);
    let mut text = output::entropy_csv(&report);
    for line in &summary {
        text.push_str("# ");
        text.push_str(line);
        text.push('\n');
    }
    write_out(args.out.as_deref(), &text)?;
    if args.out.is_some() {
        for line in &summary {
            say!("{line}");
        }
    }
    Ok(())
}

fn cmd_verify(args: &VerifyArgs) -> CmdResult {
    let fault = if args.inject_fault { Fault::CorruptConstants } else { Fault::None };
    let start = Instant::now();
    let results = verify::run_all(args.seed, args.cases, fault);
    let elapsed = start.elapsed().as_secs_f64();
    for r in &results {
        say!(
            "suite {}: {} ({} cases, worst {:.3e}, tol {:.0e})",
            r.name,
            if r.passed() { "pass" } else { "FAIL" },
            r.cases,
            r.worst,
            r.tolerance
        );
    }
    let failures: Vec<_> = results.iter().filter_map(|r| r.failure.as_ref()).collect();
    if failures.is_empty() {
        say!("all suites pass (seed {}, wall time {elapsed:.2} s)", args.seed);
        return Ok(());
    }
    let json = serde_json::to_string_pretty(&failures).map_err(anyhow::Error::from)?;
    match &args.out {
        Some(path) => {
            fs::write(path, &json).with_context(|| format!("cannot write {}", path.display()))?;
            say!("failing cases written to {}", path.display());
        }
        None => say!("failing cases:\n{json}"),
    }
    say!("{} of {} suites failed (wall time {elapsed:.2} s)", failures.len(), results.len());
    Err(Failure::Verify)
}

fn cmd_presets() -> CmdResult {
    for name in PRESET_NAMES {
        let param = match name {
            "pdq" | "prequant" => Some(1.0),
            "rossi" => Some(0.5),
            _ => None,
        };
        let preset = Preset::parse(name, param).map_err(anyhow::Error::from)?;
        let usage = match name {
            "pdq" | "prequant" => format!("{name}:K"),
            "rossi" => format!("{name}:t"),
            _ => name.to_string(),
        };
        say!("{usage:<16} {}", preset.description());
    }
    Ok(())
}

fn main() -> ExitCode {
    // usage errors are input errors; exit code 2 is reserved for the integrator
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Classify(a) => cmd_classify(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Portrait(a) => cmd_portrait(a),
        Command::Entropy(a) => cmd_entropy(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Presets => cmd_presets(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) => eprintln!("error: {e:#}"),
                Failure::Integrator(e) => eprintln!("integrator failure: {e:#}"),
                Failure::Verify => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
