use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use rayon::prelude::*;

use hk::config::{read_instance, write_instance, Configuration};
use hk::instances;
use hk::jsonl;
use hk::noisy::{sample_etas, NoisyParams, NoisySidecar};
use hk::one_dim::leftmove_certificate;
use hk::scalar::Scalar;
use hk::sim::{default_max_steps, simulate, MonitorId, SimParams, Trajectory};
use hk::verify;

#[derive(Parser)]
#[command(name = "hk", about = "Hegselmann-Krause bounded-confidence simulation lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an instance file from one of the named generators.
    Generate(GenerateArgs),
    /// Simulate an instance and write the trajectory.
    Run(RunArgs),
    /// Run a verification suite and report per-property counts.
    Verify(VerifyArgs),
    /// Sweep generators and emit a convergence-time CSV.
    Bench(BenchArgs),
    /// Emit the analytic n-gon side-length recurrence as CSV.
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Float,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Generator {
    UnitLine,
    Ngon,
    RandomInterval,
    RandomBox,
}

impl Generator {
    fn name(&self) -> &'static str {
        match self {
            Generator::UnitLine => "unit_line",
            Generator::Ngon => "ngon",
            Generator::RandomInterval => "random_interval",
            Generator::RandomBox => "random_box",
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    /// Number of agents.
    #[arg(long)]
    n: usize,
    /// Dimension (random-box only).
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Interval span / box side for the random generators.
    #[arg(long, default_value = "1")]
    span: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Mode::Float)]
    mode: Mode,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Global eta for a noisy sidecar; per-agent values are drawn in
    /// (0, eta) from the seed and written next to the instance file.
    #[arg(long)]
    eta: Option<String>,
}

#[derive(Args, Clone)]
struct SimFlags {
    #[arg(long, value_enum, default_value_t = Mode::Float)]
    mode: Mode,
    /// Slack added to the squared neighbor threshold (float mode).
    #[arg(long, default_value_t = 1e-9)]
    neighbor_eps: f64,
    /// Fixed-point displacement slack (float mode).
    #[arg(long, default_value_t = 1e-12)]
    conv_tol: f64,
    /// Coincidence tolerance (float mode).
    #[arg(long, default_value_t = 1e-9)]
    merge_tol: f64,
    /// Step budget; defaults to 2(n+2n^3)+2 in 1D and n^4 d^2 otherwise.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Comma list of monitors: order,gaps,weights,symmetry,hull,potential,movefar,order_swaps.
    #[arg(long, default_value = "")]
    monitors: String,
    /// Calibration file overriding the shipped constants.
    #[arg(long)]
    calibration: Option<PathBuf>,
}

impl SimFlags {
    fn monitor_set(&self) -> Result<BTreeSet<MonitorId>> {
        let mut set = BTreeSet::new();
        for tok in self.monitors.split(',').filter(|s| !s.is_empty()) {
            let id = MonitorId::parse(tok).ok_or_else(|| anyhow!("unknown monitor {tok:?}"))?;
            set.insert(id);
        }
        Ok(set)
    }

    fn params<T: Scalar>(&self, n: usize, d: usize) -> Result<SimParams<T>> {
        let max_steps = self.max_steps.unwrap_or_else(|| default_max_steps(n, d));
        let mut params = match self.mode {
            Mode::Exact => SimParams::exact(max_steps),
            Mode::Float => {
                let mut p = SimParams::<T>::float_defaults(max_steps);
                p.neighbor_eps = T::from_f64_exact(self.neighbor_eps);
                p.conv_tol = T::from_f64_exact(self.conv_tol);
                p.merge_tol = T::from_f64_exact(self.merge_tol);
                p
            }
        };
        params.monitors = self.monitor_set()?;
        if let Some(path) = &self.calibration {
            params.movefar_c = hk::calibration::load(path)?.movefar_c;
        }
        Ok(params)
    }
}

#[derive(Args)]
struct RunArgs {
    /// Instance file (one agent per line; "p/q" literals in exact mode).
    #[arg(long)]
    instance: PathBuf,
    #[command(flatten)]
    sim: SimFlags,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Jsonl)]
    format: OutputFormat,
    /// Global eta: runs the noisy 1D dynamics (rational literal in exact
    /// mode, e.g. 1/2).
    #[arg(long)]
    eta: Option<String>,
    /// JSON sidecar with {eta, etas[]}; defaults to <instance>.noisy.json
    /// when --eta is set and the sidecar exists.
    #[arg(long)]
    etas_file: Option<PathBuf>,
    /// Seed for drawing per-agent etas when no sidecar is available.
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Jsonl,
    Csv,
}

#[derive(Args)]
struct VerifyArgs {
    /// one_dim, noisy, potential, movefar, ngon, gooddir, or all.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Override the per-suite instance counts (smoke runs).
    #[arg(long)]
    count: Option<usize>,
    /// Test-only negative control: corrupt the update rule so the suite
    /// must fail.
    #[arg(long, hide = true)]
    corrupt_step: bool,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum)]
    generator: Generator,
    /// Comma list of agent counts.
    #[arg(long, value_delimiter = ',')]
    n_list: Vec<usize>,
    /// Comma list of dimensions (random-box only).
    #[arg(long, value_delimiter = ',', default_value = "1")]
    d_list: Vec<usize>,
    /// Comma list of seeds.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    seeds: Vec<u64>,
    #[command(flatten)]
    sim: SimFlags,
    /// Span for the random generators.
    #[arg(long, default_value = "1")]
    span: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    n: usize,
    /// Number of recurrence steps; stops at the validity horizon when
    /// omitted.
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Generate(args) => cmd_generate(args).map(|_| 0),
        Command::Run(args) => cmd_run(args).map(|_| 0),
        Command::Verify(args) => cmd_verify(args),
        Command::Bench(args) => cmd_bench(args).map(|_| 0),
        Command::Oracle(args) => cmd_oracle(args).map(|_| 0),
    }
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let mut out = open_out(&args.out)?;
    match args.mode {
        Mode::Float => {
            let config = generate_config::<f64>(&args)?;
            write_instance(&config, &mut out)?;
        }
        Mode::Exact => {
            if args.generator == Generator::Ngon {
                bail!("{}", hk::HkError::ExactUnsupported);
            }
            let config = generate_config::<BigRational>(&args)?;
            write_instance(&config, &mut out)?;
        }
    }
    if let Some(eta_text) = &args.eta {
        let eta: BigRational = BigRational::parse_coord(eta_text)
            .map_err(|e| anyhow!("bad --eta {eta_text:?}: {e}"))?;
        let etas = sample_etas(args.n, &eta, args.seed);
        let noisy = NoisyParams::new(eta, etas)?;
        let sidecar_path = match &args.out {
            Some(p) => sidecar_path(p),
            None => bail!("--eta requires --out so the sidecar has a location"),
        };
        let file = File::create(&sidecar_path)?;
        serde_json::to_writer_pretty(file, &noisy.to_sidecar())?;
        eprintln!("wrote noisy sidecar {}", sidecar_path.display());
    }
    Ok(())
}

fn sidecar_path(instance: &Path) -> PathBuf {
    let mut os = instance.as_os_str().to_owned();
    os.push(".noisy.json");
    PathBuf::from(os)
}

fn generate_config<T: Scalar>(args: &GenerateArgs) -> Result<Configuration<T>> {
    let span = T::parse_coord(&args.span).map_err(|e| anyhow!("bad --span: {e}"))?;
    Ok(match args.generator {
        Generator::UnitLine => instances::unit_line(args.n),
        Generator::Ngon => {
            let c = instances::ngon(args.n)?;
            // only reachable in float mode
            Configuration {
                positions: c
                    .positions
                    .iter()
                    .map(|p| hk::Point::new(p.coords.iter().map(|&x| T::from_f64_exact(x)).collect()))
                    .collect(),
                dim: 2,
                time: 0,
            }
        }
        Generator::RandomInterval => instances::random_interval(args.n, &span, args.seed),
        Generator::RandomBox => instances::random_box(args.n, args.d, &span, args.seed),
    })
}

fn cmd_run(args: RunArgs) -> Result<()> {
    match args.sim.mode {
        Mode::Exact => run_typed::<BigRational>(&args),
        Mode::Float => run_typed::<f64>(&args),
    }
}

fn run_typed<T: Scalar>(args: &RunArgs) -> Result<()> {
    let file = File::open(&args.instance)
        .with_context(|| format!("reading {}", args.instance.display()))?;
    let config: Configuration<T> = read_instance(BufReader::new(file))?;
    let params = args.sim.params::<T>(config.n(), config.dim)?;

    let traj = if let Some(eta_text) = &args.eta {
        let noisy = load_noisy::<T>(args, eta_text, config.n())?;
        hk::noisy::simulate_noisy(&config, &params, &noisy)?
    } else {
        simulate(&config, &params)
    };

    // attach progress-certificate verdicts for 1D homogeneous runs
    let mut traj = traj;
    if config.dim == 1 && args.eta.is_none() {
        attach_certificates(&mut traj, &params);
    }

    let mut out = open_out(&args.out)?;
    match args.format {
        OutputFormat::Jsonl => jsonl::write_trajectory(&traj, &mut out)?,
        OutputFormat::Csv => write_trajectory_csv(&traj, &mut out)?,
    }
    Ok(())
}

fn load_noisy<T: Scalar>(args: &RunArgs, eta_text: &str, n: usize) -> Result<NoisyParams<T>> {
    let eta = T::parse_coord(eta_text).map_err(|e| anyhow!("bad --eta {eta_text:?}: {e}"))?;
    let sidecar_file = args
        .etas_file
        .clone()
        .or_else(|| {
            let p = sidecar_path(&args.instance);
            p.exists().then_some(p)
        });
    if let Some(path) = sidecar_file {
        let file = File::open(&path).with_context(|| format!("reading {}", path.display()))?;
        let sidecar: NoisySidecar = serde_json::from_reader(file)?;
        return Ok(NoisyParams::from_sidecar(&sidecar)?);
    }
    // no sidecar: draw rational etas from the seed and embed them exactly
    let eta_rat = BigRational::parse_coord(eta_text)
        .map_err(|e| anyhow!("bad --eta {eta_text:?}: {e}"))?;
    let etas = sample_etas(n, &eta_rat, args.seed)
        .into_iter()
        .map(|e| {
            T::parse_coord(&e.render())
                .map_err(|err| anyhow!("eta draw not representable: {err}"))
        })
        .collect::<Result<Vec<T>>>();
    match etas {
        Ok(etas) => Ok(NoisyParams::new(eta, etas)?),
        Err(e) => Err(e),
    }
}

fn attach_certificates<T: Scalar>(traj: &mut Trajectory<T>, params: &SimParams<T>) {
    let Some(t_conv) = traj.converged_at else {
        return;
    };
    let t0 = traj.initial().time;
    let mut verdicts = Vec::new();
    let mut t = t0;
    while t < t_conv {
        if let Ok(v) = leftmove_certificate(traj, t, params) {
            verdicts.push(v);
        }
        t += 2;
    }
    for v in verdicts {
        // attach to the first step of the certificate window
        let idx = v.t - t0;
        if idx < traj.steps.len() {
            traj.steps[idx]
                .monitor_outcomes
                .insert("leftmove".to_string(), v.to_json());
        }
    }
}

fn write_trajectory_csv<T: Scalar, W: Write>(traj: &Trajectory<T>, mut w: W) -> Result<()> {
    writeln!(w, "# hk-trajectory-csv v1")?;
    writeln!(w, "t,positions,max_sq_displacement,potential,merge_events")?;
    for (k, step) in traj.steps.iter().enumerate() {
        let config = &traj.configs[k + 1];
        let positions = config
            .positions
            .iter()
            .map(|p| {
                p.coords
                    .iter()
                    .map(|c| c.render())
                    .collect::<Vec<_>>()
                    .join(";")
            })
            .collect::<Vec<_>>()
            .join("|");
        writeln!(
            w,
            "{},{},{},{},{}",
            step.time,
            positions,
            step.max_sq_displacement.render(),
            step.potential.as_ref().map(|p| p.render()).unwrap_or_default(),
            step.merge_events.len(),
        )?;
    }
    writeln!(
        w,
        "# summary converged_at={:?} budget_exhausted={}",
        traj.converged_at, traj.budget_exhausted
    )?;
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let c = |default: usize| args.count.unwrap_or(default);
    let reports = match args.suite.as_str() {
        "one_dim" => vec![verify::one_dim_suite(args.seed, c(200), args.corrupt_step)],
        "noisy" => vec![verify::noisy_suite(args.seed, c(100))],
        "potential" | "movefar" => {
            vec![verify::potential_suite(args.seed, c(100), c(100) / 2)]
        }
        "ngon" => vec![verify::ngon_suite()],
        "gooddir" => vec![verify::gooddir_suite(args.seed, c(40))],
        "all" => match args.count {
            None => verify::all_suites(args.seed),
            Some(c) => vec![
                verify::one_dim_suite(args.seed, c, false),
                verify::noisy_suite(args.seed, c),
                verify::potential_suite(args.seed, c, c / 2),
                verify::ngon_suite(),
                verify::gooddir_suite(args.seed, c),
            ],
        },
        other => bail!("unknown suite {other:?}"),
    };
    let mut ok = true;
    for report in &reports {
        print!("{}", report.render());
        ok &= report.passed();
    }
    Ok(if ok { 0 } else { 2 })
}

struct BenchRow {
    generator: &'static str,
    n: usize,
    d: usize,
    seed: u64,
}

fn cmd_bench(args: BenchArgs) -> Result<()> {
    let mut rows = Vec::new();
    for &n in &args.n_list {
        for &d in &args.d_list {
            for &seed in &args.seeds {
                rows.push(BenchRow {
                    generator: args.generator.name(),
                    n,
                    d,
                    seed,
                });
            }
        }
    }
    let records: Vec<String> = rows
        .par_iter()
        .map(|row| bench_row(row, &args))
        .collect::<Result<Vec<String>>>()?;
    let mut out = open_out(&args.out)?;
    writeln!(out, "# hk-bench v1")?;
    writeln!(
        out,
        "generator,n,d,seed,mode,converged_at,budget_exhausted,steps,wall_ms,max_bits"
    )?;
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

fn bench_row(row: &BenchRow, args: &BenchArgs) -> Result<String> {
    match args.sim.mode {
        Mode::Exact => bench_row_typed::<BigRational>(row, args),
        Mode::Float => bench_row_typed::<f64>(row, args),
    }
}

fn bench_row_typed<T: Scalar>(row: &BenchRow, args: &BenchArgs) -> Result<String> {
    let span = T::parse_coord(&args.span).map_err(|e| anyhow!("bad --span: {e}"))?;
    let config: Configuration<T> = match args.generator {
        Generator::UnitLine => instances::unit_line(row.n),
        Generator::Ngon => {
            if T::EXACT {
                bail!("{}", hk::HkError::ExactUnsupported);
            }
            let c = instances::ngon(row.n)?;
            Configuration {
                positions: c
                    .positions
                    .iter()
                    .map(|p| hk::Point::new(p.coords.iter().map(|&x| T::from_f64_exact(x)).collect()))
                    .collect(),
                dim: 2,
                time: 0,
            }
        }
        Generator::RandomInterval => instances::random_interval(row.n, &span, row.seed),
        Generator::RandomBox => instances::random_box(row.n, row.d, &span, row.seed),
    };
    let params = args.sim.params::<T>(config.n(), config.dim)?;
    let start = Instant::now();
    let traj = simulate(&config, &params);
    let wall_ms = start.elapsed().as_millis();
    let max_bits = traj
        .steps
        .iter()
        .filter_map(|s| s.max_bits)
        .max()
        .or_else(|| config.max_bits());
    Ok(format!(
        "{},{},{},{},{},{},{},{},{},{}",
        row.generator,
        row.n,
        config.dim,
        row.seed,
        if T::EXACT { "exact" } else { "float" },
        traj.converged_at.map(|t| t.to_string()).unwrap_or_default(),
        traj.budget_exhausted,
        traj.steps.len(),
        wall_ms,
        max_bits.map(|b| b.to_string()).unwrap_or_default(),
    ))
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let mut out = open_out(&args.out)?;
    writeln!(out, "# hk-ngon-oracle v1")?;
    writeln!(out, "t,side,valid")?;
    let mut state = instances::NGonOracleState::new(args.n)?;
    writeln!(out, "{},{},{}", state.t, state.side, state.valid)?;
    let mut steps = 0usize;
    loop {
        if let Some(limit) = args.steps {
            if steps >= limit {
                break;
            }
        } else if !state.valid {
            break;
        }
        if !state.valid {
            break;
        }
        state = state.step()?;
        steps += 1;
        writeln!(out, "{},{},{}", state.t, state.side, state.valid)?;
    }
    Ok(())
}
