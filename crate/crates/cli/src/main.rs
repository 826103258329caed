use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbench_cli::check::stdform_check;
use qbench_cli::config::{Config, MomentSource, ScenarioKind};
use qbench_cli::pipeline::{self, bench_options, run_pipeline, EXIT_INCONCLUSIVE};
use qbench_cli::records::write_records;
use qbench_cli::sampler::sample_phases;
use qbench_cli::{CliError, Result};
use qbench_core::bench::{benchmark_symmetric, MeasurementScenario, Verdict};
use qbench_core::fock::fidelity;
use qbench_core::io::{bipartite_from_json, density_from_json, gram_from_json};
use qbench_core::{DensityMatrix, QuadratureMoments};

#[derive(Parser)]
#[command(name = "qbench", version, about = "Quantum-memory benchmark from Gram-matrix analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline: ensembles, Gram matrices and the benchmark sweep.
    Sweep(SweepArgs),
    /// Optimised Gram matrices and purity bounds as CSV.
    Gram(GramArgs),
    /// One benchmark for a Gram matrix and a scenario.
    Bench(BenchArgs),
    /// Synthetic homodyne records as CSV.
    Sample(SampleArgs),
    /// Check the standard-form identities on a bipartite matrix.
    StdformCheck(StdformArgs),
    /// Fidelity of two density matrices.
    Fidelity { a: PathBuf, b: PathBuf },
}

#[derive(Args)]
struct Overrides {
    /// JSON config; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "m-list", value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

impl Overrides {
    fn load(&self) -> Result<Config> {
        let mut cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(m) = &self.m_list {
            cfg.ensemble.m_list = m.clone();
        }
        if let Some(n) = self.cutoff {
            cfg.solver.cutoff = n;
        }
        if self.workers.is_some() {
            cfg.solver.workers = self.workers;
        }
        if let Some(t) = self.tol {
            cfg.solver.tol = t;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    kinds: Option<Vec<ScenarioKind>>,
    #[arg(long, value_parser = parse_source)]
    source: Option<MomentSource>,
    /// Moments CSV for `--source records`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// Sampling seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GramArgs {
    #[command(flatten)]
    common: Overrides,
    /// Also write `gram_M<M>.json` files here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Gram matrix JSON.
    #[arg(long)]
    gram: PathBuf,
    /// Output state JSON (tomography).
    #[arg(long, conflicts_with = "moments")]
    state: Option<PathBuf>,
    /// `x,p,x2,p2`
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    moments: Option<Vec<f64>>,
    /// One-sigma errors `x,p,x2,p2`.
    #[arg(long, value_delimiter = ',', requires = "sigma")]
    errors: Option<Vec<f64>>,
    #[arg(long, requires = "errors")]
    sigma: Option<u8>,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// State JSON; otherwise the config's seed sent through its channel.
    #[arg(long)]
    state: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Degrees.
    #[arg(long, value_delimiter = ',', default_value = "0,90")]
    phases: Vec<f64>,
    /// Records per phase.
    #[arg(short, long, default_value_t = 500)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct StdformArgs {
    /// Bipartite block-matrix JSON.
    matrix: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
}

fn parse_kind(s: &str) -> std::result::Result<ScenarioKind, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| {
        format!("unknown scenario `{s}` (tomography, quadratures, 1sigma, 2sigma, 3sigma)")
    })
}

fn parse_source(s: &str) -> std::result::Result<MomentSource, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown source `{s}` (exact, fixed, sampled, records)"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn read_state(path: &Path) -> Result<DensityMatrix> {
    Ok(density_from_json(&read(path)?)?)
}

fn moments_of(flag: &str, v: &[f64]) -> Result<QuadratureMoments> {
    match v {
        &[x, p, x2, p2] => Ok(QuadratureMoments { x, p, x2, p2 }),
        _ => Err(CliError::Invalid(format!("--{flag} takes four values x,p,x2,p2, got {}", v.len()))),
    }
}

fn sweep(args: SweepArgs) -> Result<i32> {
    let mut cfg = args.common.load()?;
    if let Some(d) = args.out {
        cfg.outputs.dir = d;
    }
    if let Some(k) = args.kinds {
        cfg.scenario.kinds = k;
    }
    if let Some(s) = args.source {
        cfg.scenario.source = s;
    }
    if let Some(r) = args.records {
        // relative to the working directory, unlike paths inside the config
        let cwd = std::env::current_dir().map_err(|e| CliError::io(".", e))?;
        cfg.scenario.records = Some(cwd.join(r));
    }
    if let Some(s) = args.seed {
        cfg.scenario.sampling.seed = s;
    }
    let report = run_pipeline(&cfg)?;
    let mut out = std::io::stdout().lock();
    let _ = write!(out, "{}", pipeline::bounds_csv(&cfg, &report));
    for p in &report.written {
        log::info!("wrote {}", p.display());
    }
    if !report.certified() {
        eprintln!("no point certified: all bounds are inconclusive");
    }
    Ok(report.exit_code())
}

fn gram(args: GramArgs) -> Result<i32> {
    let cfg = args.common.load()?;
    let stage = pipeline::gram_stage(&cfg)?;
    let summaries: Vec<_> = stage.iter().map(|(s, _)| s.clone()).collect();
    print!("{}", pipeline::purity_csv(&summaries));
    if let Some(dir) = args.out {
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        for (s, g) in &stage {
            let path = dir.join(format!("gram_M{}.json", s.m));
            let text = qbench_core::io::gram_to_json(&g.gram) + "\n";
            std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        }
    }
    Ok(0)
}

fn bench(args: BenchArgs) -> Result<i32> {
    let cfg = match &args.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let g = gram_from_json(&read(&args.gram)?)?;
    let scenario = match (&args.state, &args.moments) {
        (Some(p), None) => MeasurementScenario::Tomography(read_state(p)?),
        (None, Some(m)) => match (&args.errors, args.sigma) {
            (Some(e), Some(sigma)) => MeasurementScenario::QuadraturesWithErrors {
                moments: moments_of("moments", m)?,
                errors: moments_of("errors", e)?,
                sigma,
            },
            _ => MeasurementScenario::Quadratures(moments_of("moments", m)?),
        },
        _ => return Err(CliError::Invalid("give exactly one of --state and --moments".into())),
    };
    let cutoff = args.cutoff.unwrap_or(cfg.solver.cutoff);
    let r = benchmark_symmetric(&g, &scenario, g.m(), cutoff, &bench_options(&cfg))?;
    println!("{}", serde_json::to_string(&r).map_err(|e| CliError::Invalid(e.to_string()))?);
    Ok(if r.verdict == Verdict::QuantumDomain { 0 } else { EXIT_INCONCLUSIVE })
}

fn sample(args: SampleArgs) -> Result<i32> {
    let rho = match (&args.state, &args.config) {
        (Some(p), _) => read_state(p)?,
        (None, Some(c)) => {
            let cfg = Config::load(c)?;
            cfg.channel_sim.apply(&cfg.seed_state.build(&cfg.base_dir)?)?
        }
        (None, None) => {
            let cfg = Config::default();
            cfg.seed_state.build(Path::new("."))?
        }
    };
    let recs = sample_phases(&rho, &args.phases, args.n, args.seed)?;
    match &args.output {
        Some(p) => {
            let f = std::fs::File::create(p).map_err(|e| CliError::io(p, e))?;
            write_records(std::io::BufWriter::new(f), &recs)?;
        }
        None => write_records(std::io::stdout().lock(), &recs)?,
    }
    Ok(0)
}

fn stdform(args: StdformArgs) -> Result<i32> {
    let tau = bipartite_from_json(&read(&args.matrix)?)?;
    let r = stdform_check(&tau, args.tol)?;
    println!("{}", serde_json::to_string_pretty(&r).map_err(|e| CliError::Invalid(e.to_string()))?);
    if r.passed {
        Ok(0)
    } else {
        Err(CliError::Invalid(format!("standard-form identities fail at tolerance {}", args.tol)))
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Gram(a) => gram(a),
        Command::Bench(a) => bench(a),
        Command::Sample(a) => sample(a),
        Command::StdformCheck(a) => stdform(a),
        Command::Fidelity { a, b } => {
            let f = fidelity(&read_state(&a)?, &read_state(&b)?)?;
            println!("{f}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
