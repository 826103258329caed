//! Seed state → channel → rotation ensembles → Gram optimisation → benchmark
//! sweep, with serialised, timing-free outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qbench_core::bench::{
    benchmark_general, benchmark_symmetric, input_negativity, BenchOptions, BenchmarkResult, MeasurementScenario,
    Verdict,
};
use qbench_core::fock::{quadrature_moments, rotation_ensemble};
use qbench_core::gram::{optimize_gram, GramOptResult, GramOptions};
use qbench_core::{DensityMatrix, QuadratureMoments};
use qbench_sdp::{SdpConfig, SolveStatus};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, MomentSource, ScenarioKind, DEFAULT_ERRORS};
use crate::error::{CliError, Result};
use crate::records::{bin_and_estimate, moments_from_bins, read_records, BinnedMoments};
use crate::sampler::sample_phases;

/// Exit code for a sweep that ran but certified nothing.
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    #[serde(rename = "M")]
    pub m: usize,
    pub scenario: ScenarioKind,
    #[serde(rename = "N")]
    pub cutoff: usize,
    pub bound: f64,
    pub verdict: Verdict,
    pub status: SolveStatus,
    pub residuals: Residuals,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GramSummary {
    #[serde(rename = "M")]
    pub m: usize,
    pub purity: f64,
    pub purity_upper_bound: f64,
    pub input_negativity: f64,
    pub symmetric: bool,
    pub status: SolveStatus,
}

/// Moments fed to the quadrature scenarios, with their one-sigma errors.
#[derive(Clone, Debug, Serialize)]
pub struct MomentEstimate {
    pub source: MomentSource,
    pub moments: QuadratureMoments,
    pub errors: QuadratureMoments,
    /// Present when the moments were estimated from records.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub bins: Vec<BinnedMoments>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineReport {
    /// Absent without phase covariance, where each state has its own.
    pub moments: Option<MomentEstimate>,
    pub gram: Vec<GramSummary>,
    pub results: Vec<SweepRecord>,
    #[serde(skip)]
    pub grams: Vec<(usize, GramOptResult)>,
    #[serde(skip)]
    pub written: Vec<PathBuf>,
}

impl PipelineReport {
    pub fn certified(&self) -> bool {
        self.results.iter().any(|r| r.verdict == Verdict::QuantumDomain)
    }

    pub fn exit_code(&self) -> i32 {
        if self.certified() {
            0
        } else {
            EXIT_INCONCLUSIVE
        }
    }

    pub fn bound(&self, m: usize, kind: ScenarioKind) -> Option<f64> {
        self.results.iter().find(|r| r.m == m && r.scenario == kind).map(|r| r.bound)
    }
}

fn solver_config(cfg: &Config) -> SdpConfig {
    SdpConfig {
        tol: cfg.solver.tol,
        max_iter: cfg.solver.max_iter,
        ..SdpConfig::default()
    }
}

pub fn gram_options(cfg: &Config) -> GramOptions {
    GramOptions {
        symmetric: cfg.solver.symmetric_gram,
        refine_steps: cfg.solver.refine_steps,
        solver: solver_config(cfg),
    }
}

pub fn bench_options(cfg: &Config) -> BenchOptions {
    BenchOptions {
        solver: solver_config(cfg),
        verdict_margin: cfg.solver.verdict_margin,
        photon_guard: cfg.solver.photon_guard,
    }
}

/// Moments of the output of the seed state, per `scenario.source`.
pub fn estimate_moments(cfg: &Config, output: &DensityMatrix) -> Result<MomentEstimate> {
    let sc = &cfg.scenario;
    let given_errors = sc.errors;
    let from_bins = |bins: Vec<BinnedMoments>| {
        let (moments, se) = moments_from_bins(&bins[0], &bins[1]);
        MomentEstimate {
            source: sc.source,
            moments,
            errors: given_errors.unwrap_or(se),
            bins,
        }
    };
    let s = &sc.sampling;
    Ok(match sc.source {
        MomentSource::Exact => MomentEstimate {
            source: sc.source,
            moments: quadrature_moments(&output.normalized())?,
            errors: given_errors.unwrap_or(DEFAULT_ERRORS),
            bins: Vec::new(),
        },
        MomentSource::Fixed => MomentEstimate {
            source: sc.source,
            moments: sc.moments.expect("validated"),
            errors: given_errors.unwrap_or(DEFAULT_ERRORS),
            bins: Vec::new(),
        },
        MomentSource::Sampled => {
            let recs = sample_phases(output, &[0.0, 90.0], s.samples_per_angle, s.seed)?;
            from_bins(bin_and_estimate(&recs, &[0.0, 90.0], s.bin_size, s.angle_tolerance)?)
        }
        MomentSource::Records => {
            let path = cfg.resolve(sc.records.as_deref().expect("validated"));
            let file = std::fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
            let recs = read_records(std::io::BufReader::new(file))?;
            from_bins(bin_and_estimate(&recs, &[0.0, 90.0], s.bin_size, s.angle_tolerance)?)
        }
    })
}

/// The benchmark scenario of one kind.
pub fn scenario_for(kind: ScenarioKind, output: &DensityMatrix, est: &MomentEstimate) -> MeasurementScenario {
    match kind {
        ScenarioKind::Tomography => MeasurementScenario::Tomography(output.clone()),
        ScenarioKind::Quadratures => MeasurementScenario::Quadratures(est.moments),
        k => MeasurementScenario::QuadraturesWithErrors {
            moments: est.moments,
            errors: est.errors,
            sigma: k.sigma().expect("sigma kinds"),
        },
    }
}

fn record_of(kind: ScenarioKind, r: &BenchmarkResult) -> SweepRecord {
    SweepRecord {
        m: r.m,
        scenario: kind,
        cutoff: r.cutoff,
        bound: r.negativity_lower_bound,
        verdict: r.verdict,
        status: r.status,
        residuals: Residuals {
            primal: r.primal_residual,
            dual: r.dual_residual,
            gap: r.gap,
        },
        iterations: r.iterations,
    }
}

/// Runs the sweep and writes the configured outputs. The returned report's
/// [`PipelineReport::exit_code`] is 0 when some point was certified.
pub fn run_pipeline(cfg: &Config) -> Result<PipelineReport> {
    let report = compute(cfg)?;
    write_outputs(cfg, report)
}

fn pool(cfg: &Config) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.solver.workers {
        builder = builder.num_threads(w);
    }
    builder
        .build()
        .map_err(|e| CliError::Invalid(format!("worker pool: {e}")))
}

/// Optimised Gram matrices for every `M`, in `M_list` order.
pub fn gram_stage(cfg: &Config) -> Result<Vec<(GramSummary, GramOptResult)>> {
    cfg.validate()?;
    let seed = cfg.seed_state.build(&cfg.base_dir)?;
    pool(cfg)?.install(|| grams_for(cfg, &seed))
}

fn grams_for(cfg: &Config, seed: &DensityMatrix) -> Result<Vec<(GramSummary, GramOptResult)>> {
    let gopts = gram_options(cfg);
    cfg.ensemble
        .m_list
        .par_iter()
        .map(|&m| {
            let g = optimize_gram(&rotation_ensemble(seed, m), &gopts)?;
            let neg = input_negativity(&g.rho_in)?;
            log::info!("M={m}: purity {:.6} (upper {:.6})", g.purity, g.purity_upper_bound);
            let summary = GramSummary {
                m,
                purity: g.purity,
                purity_upper_bound: g.purity_upper_bound,
                input_negativity: neg,
                symmetric: g.symmetric,
                status: g.status,
            };
            Ok((summary, g))
        })
        .collect()
}

/// The sweep without writing anything.
pub fn compute(cfg: &Config) -> Result<PipelineReport> {
    cfg.validate()?;
    pool(cfg)?.install(|| compute_in_pool(cfg))
}

fn compute_in_pool(cfg: &Config) -> Result<PipelineReport> {
    let seed = cfg.seed_state.build(&cfg.base_dir)?;
    let channel = &cfg.channel_sim;
    let bopts = bench_options(cfg);
    let cutoff = cfg.solver.cutoff;
    let kinds = &cfg.scenario.kinds;
    let grams = grams_for(cfg, &seed)?;

    let (moments, results) = if cfg.ensemble.phase_covariant {
        let output = channel.apply(&seed)?;
        let est = estimate_moments(cfg, &output)?;
        let jobs: Vec<(usize, &GramOptResult, ScenarioKind)> = grams
            .iter()
            .flat_map(|(sm, g)| kinds.iter().map(move |&k| (sm.m, g, k)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(m, g, kind)| {
                let sc = scenario_for(kind, &output, &est);
                let r = benchmark_symmetric(&g.gram, &sc, m, cutoff, &bopts)?;
                log::info!("M={m} {}: bound {:.6}", sc.tag(), r.negativity_lower_bound);
                Ok(record_of(kind, &r))
            })
            .collect::<Result<Vec<_>>>()?;
        (Some(est), results)
    } else {
        let jobs: Vec<(usize, &GramOptResult, ScenarioKind)> = grams
            .iter()
            .flat_map(|(sm, g)| kinds.iter().map(move |&k| (sm.m, g, k)))
            .collect();
        let results = jobs
            .par_iter()
            .map(|&(m, g, kind)| {
                let scenarios = rotation_ensemble(&seed, m)
                    .iter()
                    .map(|s| {
                        let out = channel.apply(s)?;
                        let est = estimate_moments(cfg, &out)?;
                        Ok(scenario_for(kind, &out, &est))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let r = benchmark_general(&g.gram, &scenarios, cutoff, &bopts)?;
                Ok(record_of(kind, &r))
            })
            .collect::<Result<Vec<_>>>()?;
        (None, results)
    };

    let (gram, grams) = grams.into_iter().map(|(sm, g)| (sm.clone(), (sm.m, g))).unzip();
    Ok(PipelineReport {
        moments,
        gram,
        results,
        grams,
        written: Vec::new(),
    })
}

fn kind_name(k: ScenarioKind) -> String {
    serde_json::to_value(k)
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default()
}

/// `M` followed by one bound column per scenario kind.
pub fn bounds_csv(cfg: &Config, report: &PipelineReport) -> String {
    let mut s = String::from("M");
    for &k in &cfg.scenario.kinds {
        s.push(',');
        s.push_str(&kind_name(k));
    }
    s.push('\n');
    for &m in &cfg.ensemble.m_list {
        s.push_str(&m.to_string());
        for &k in &cfg.scenario.kinds {
            s.push(',');
            if let Some(b) = report.bound(m, k) {
                s.push_str(&b.to_string());
            }
        }
        s.push('\n');
    }
    s
}

pub fn purity_csv(gram: &[GramSummary]) -> String {
    let mut s = String::from("M,purity,purity_upper_bound,input_negativity\n");
    for g in gram {
        let _ = writeln!(s, "{},{},{},{}", g.m, g.purity, g.purity_upper_bound, g.input_negativity);
    }
    s
}

fn plot_script(cfg: &Config, csv_name: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set key autotitle columnhead");
    let _ = writeln!(s, "set xlabel 'M'");
    let _ = writeln!(s, "set ylabel 'negativity lower bound'");
    let _ = writeln!(s, "set yrange [0:*]");
    let cols: Vec<String> = (0..cfg.scenario.kinds.len())
        .map(|i| format!("'{csv_name}' using 1:{} with linespoints", i + 2))
        .collect();
    let _ = writeln!(s, "plot {}", cols.join(", \\\n     "));
    s
}

/// The result-determining part of the config; output locations are left
/// out so that the same sweep written elsewhere is byte-identical.
#[derive(Serialize)]
struct ConfigEcho<'a> {
    seed_state: &'a crate::config::SeedState,
    channel_sim: &'a qbench_core::channels::Channel,
    ensemble: &'a crate::config::EnsembleConfig,
    scenario: &'a crate::config::ScenarioConfig,
    solver: &'a crate::config::SolverConfig,
}

#[derive(Serialize)]
struct ResultsDoc<'a> {
    config: ConfigEcho<'a>,
    #[serde(flatten)]
    report: &'a PipelineReport,
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    written.push(path);
    Ok(())
}

pub fn write_outputs(cfg: &Config, mut report: PipelineReport) -> Result<PipelineReport> {
    let o = &cfg.outputs;
    let dir = &o.dir;
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    if let Some(name) = &o.json {
        let doc = ResultsDoc {
            config: ConfigEcho {
                seed_state: &cfg.seed_state,
                channel_sim: &cfg.channel_sim,
                ensemble: &cfg.ensemble,
                scenario: &cfg.scenario,
                solver: &cfg.solver,
            },
            report: &report,
        };
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Invalid(e.to_string()))?;
        text.push('\n');
        write_file(dir, name, &text, &mut written)?;
    }
    if let Some(name) = &o.csv {
        write_file(dir, name, &bounds_csv(cfg, &report), &mut written)?;
    }
    if let Some(name) = &o.purity {
        write_file(dir, name, &purity_csv(&report.gram), &mut written)?;
    }
    if o.gram {
        for (m, g) in &report.grams {
            let mut text = qbench_core::io::gram_to_json(&g.gram);
            text.push('\n');
            write_file(dir, &format!("gram_M{m}.json"), &text, &mut written)?;
        }
    }
    if let (Some(name), Some(csv)) = (&o.plot, &o.csv) {
        write_file(dir, name, &plot_script(cfg, csv), &mut written)?;
    }
    report.written = written;
    Ok(report)
}
