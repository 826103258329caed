//! Pipeline configuration: a single JSON document in which every field has a
//! default. Parse errors and semantic errors both carry a JSON pointer to the
//! offending field.
//!
//! ```json
//! {
//!   "seed_state": {"type": "coherent", "alpha": [1.0, 0.0], "dim": 20},
//!   "channel_sim": {"type": "identity"},
//!   "ensemble": {"M_list": [2, 3, 4], "phase_covariant": true},
//!   "scenario": {"kinds": ["tomography", "quadratures"], "source": "exact"},
//!   "solver": {"cutoff": 15},
//!   "outputs": {"dir": "out"}
//! }
//! ```

use std::path::{Path, PathBuf};

use qbench_core::channels::Channel;
use qbench_core::fock::{coherent_state, gaussian_state, noisy_coherent};
use qbench_core::linalg::c64;
use qbench_core::{DensityMatrix, QuadratureMoments};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::records::{DEFAULT_ANGLE_TOLERANCE, DEFAULT_BIN_SIZE};

/// Moment errors used when none are given and the moments are not estimated
/// from data.
pub const DEFAULT_ERRORS: QuadratureMoments = QuadratureMoments {
    x: 0.03,
    p: 0.03,
    x2: 0.04,
    p2: 0.09,
};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed_state: SeedState,
    pub channel_sim: Channel,
    pub ensemble: EnsembleConfig,
    pub scenario: ScenarioConfig,
    pub solver: SolverConfig,
    pub outputs: OutputConfig,
    /// Directory that relative input paths resolve against; set by
    /// [`Config::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SeedState {
    Coherent {
        /// `[re, im]`
        alpha: [f64; 2],
        #[serde(default = "default_dim")]
        dim: usize,
    },
    NoisyCoherent {
        alpha: [f64; 2],
        excess: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    Gaussian {
        mean_x: f64,
        mean_p: f64,
        var_x: f64,
        var_p: f64,
        #[serde(default = "default_dim")]
        dim: usize,
    },
    /// A density-matrix JSON file.
    File { path: PathBuf },
}

fn default_dim() -> usize {
    30
}

impl Default for SeedState {
    fn default() -> Self {
        SeedState::Coherent {
            alpha: [1.0, 0.0],
            dim: default_dim(),
        }
    }
}

impl SeedState {
    pub fn build(&self, base: &Path) -> Result<DensityMatrix> {
        let wrap = |e| CliError::config("/seed_state", format!("{e}"));
        match self {
            SeedState::Coherent { alpha, dim } => coherent_state(c64(alpha[0], alpha[1]), *dim).map_err(wrap),
            SeedState::NoisyCoherent { alpha, excess, dim } => {
                noisy_coherent(c64(alpha[0], alpha[1]), *excess, *dim).map_err(wrap)
            }
            SeedState::Gaussian {
                mean_x,
                mean_p,
                var_x,
                var_p,
                dim,
            } => gaussian_state(*mean_x, *mean_p, *var_x, *var_p, *dim).map_err(wrap),
            SeedState::File { path } => {
                let path = base.join(path);
                let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                qbench_core::io::density_from_json(&text)
                    .map_err(|e| CliError::config("/seed_state/path", format!("{}: {e}", path.display())))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    /// Ensemble sizes; the states are the seed rotated by `2πk/M`.
    #[serde(rename = "M_list")]
    pub m_list: Vec<usize>,
    /// Assert that the channel commutes with phase rotations, which allows
    /// the symmetric benchmark. Otherwise every test state is sent through
    /// the channel and benchmarked without symmetry.
    pub phase_covariant: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        EnsembleConfig {
            m_list: (2..=8).collect(),
            phase_covariant: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScenarioKind {
    #[serde(rename = "tomography")]
    Tomography,
    #[serde(rename = "quadratures")]
    Quadratures,
    #[serde(rename = "1sigma")]
    Sigma1,
    #[serde(rename = "2sigma")]
    Sigma2,
    #[serde(rename = "3sigma")]
    Sigma3,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::Tomography,
        ScenarioKind::Quadratures,
        ScenarioKind::Sigma1,
        ScenarioKind::Sigma2,
        ScenarioKind::Sigma3,
    ];

    pub fn sigma(self) -> Option<u8> {
        match self {
            ScenarioKind::Sigma1 => Some(1),
            ScenarioKind::Sigma2 => Some(2),
            ScenarioKind::Sigma3 => Some(3),
            _ => None,
        }
    }
}

/// Where the quadrature moments come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentSource {
    /// Expectations in the simulated output state.
    #[default]
    Exact,
    /// `scenario.moments` as given.
    Fixed,
    /// Synthetic homodyne data from the simulated output state.
    Sampled,
    /// A `phase_deg,value` CSV file.
    Records,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kinds: Vec<ScenarioKind>,
    pub source: MomentSource,
    pub moments: Option<QuadratureMoments>,
    /// One-sigma errors. Defaults to the estimated standard errors for
    /// `sampled` and `records`, and to [`DEFAULT_ERRORS`] otherwise.
    pub errors: Option<QuadratureMoments>,
    pub sampling: SamplingConfig,
    pub records: Option<PathBuf>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            kinds: ScenarioKind::ALL.to_vec(),
            source: MomentSource::Exact,
            moments: None,
            errors: None,
            sampling: SamplingConfig::default(),
            records: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Synthetic records drawn at each of 0° and 90°.
    pub samples_per_angle: usize,
    pub seed: u64,
    pub bin_size: usize,
    /// Degrees.
    pub angle_tolerance: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            samples_per_angle: DEFAULT_BIN_SIZE,
            seed: 0,
            bin_size: DEFAULT_BIN_SIZE,
            angle_tolerance: DEFAULT_ANGLE_TOLERANCE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Output photon-number cutoff `N`.
    pub cutoff: usize,
    pub verdict_margin: f64,
    pub photon_guard: bool,
    pub refine_steps: usize,
    /// Standard-form Gram optimisation for the rotation ensemble.
    pub symmetric_gram: bool,
    /// Worker threads; all available cores when absent. Not echoed into
    /// results, which do not depend on it.
    #[serde(skip_serializing)]
    pub workers: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: 1e-8,
            max_iter: 200,
            cutoff: qbench_core::bench::DEFAULT_CUTOFF,
            verdict_margin: 1e-6,
            photon_guard: true,
            refine_steps: 0,
            symmetric_gram: true,
            workers: None,
        }
    }
}

/// Output file names, relative to `dir`. A `null` name skips that file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub json: Option<String>,
    pub csv: Option<String>,
    pub purity: Option<String>,
    /// Writes `gram_M<M>.json` per ensemble size.
    pub gram: bool,
    pub plot: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            json: Some("results.json".into()),
            csv: Some("bounds.csv".into()),
            purity: Some("purity.csv".into()),
            gram: true,
            plot: Some("plot.gp".into()),
        }
    }
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

impl Config {
    /// Parses and validates; relative input paths stay relative to the
    /// current directory.
    pub fn from_json(text: &str) -> Result<Config> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let pointer = pointer_of(e.path());
            CliError::config(pointer, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative input paths resolve against its
    /// directory.
    pub fn load(path: &Path) -> Result<Config> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Config::from_json(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |p: &str, m: String| Err(CliError::config(p, m));
        match &self.seed_state {
            SeedState::Coherent { alpha, dim } | SeedState::NoisyCoherent { alpha, dim, .. } => {
                if !alpha.iter().all(|a| a.is_finite()) {
                    return bad("/seed_state/alpha", "must be finite".into());
                }
                if *dim < 2 {
                    return bad("/seed_state/dim", format!("{dim} is below 2"));
                }
            }
            SeedState::Gaussian { dim, .. } if *dim < 2 => return bad("/seed_state/dim", format!("{dim} is below 2")),
            _ => {}
        }
        if let Err(e) = self.channel_sim.validate() {
            return bad("/channel_sim", e.to_string());
        }
        if self.ensemble.m_list.is_empty() {
            return bad("/ensemble/M_list", "must not be empty".into());
        }
        for (i, &m) in self.ensemble.m_list.iter().enumerate() {
            if m < 2 {
                return bad(&format!("/ensemble/M_list/{i}"), format!("M = {m} is below 2"));
            }
        }
        let sc = &self.scenario;
        if sc.kinds.is_empty() {
            return bad("/scenario/kinds", "must not be empty".into());
        }
        if sc.source == MomentSource::Fixed && sc.moments.is_none() {
            return bad("/scenario/moments", "required when source is \"fixed\"".into());
        }
        if sc.source == MomentSource::Records && sc.records.is_none() {
            return bad("/scenario/records", "required when source is \"records\"".into());
        }
        if !self.ensemble.phase_covariant && sc.source != MomentSource::Exact {
            return bad(
                "/scenario/source",
                "per-state moments without phase covariance are only available from \"exact\"".into(),
            );
        }
        if sc.source == MomentSource::Fixed && sc.kinds.contains(&ScenarioKind::Tomography) {
            log::debug!("tomography uses the simulated output state, not the fixed moments");
        }
        if let Some(m) = &sc.moments {
            if ![m.x, m.p, m.x2, m.p2].iter().all(|v| v.is_finite()) {
                return bad("/scenario/moments", "must be finite".into());
            }
        }
        if let Some(e) = &sc.errors {
            if ![e.x, e.p, e.x2, e.p2].iter().all(|v| v.is_finite() && *v >= 0.0) {
                return bad("/scenario/errors", "must be finite and nonnegative".into());
            }
        }
        let s = &sc.sampling;
        if s.bin_size < 2 {
            return bad("/scenario/sampling/bin_size", format!("{} is below 2", s.bin_size));
        }
        if sc.source == MomentSource::Sampled && s.samples_per_angle < s.bin_size {
            return bad(
                "/scenario/sampling/samples_per_angle",
                format!("{} is below the bin size {}", s.samples_per_angle, s.bin_size),
            );
        }
        if !(s.angle_tolerance.is_finite() && s.angle_tolerance >= 0.0) {
            return bad("/scenario/sampling/angle_tolerance", "must be finite and nonnegative".into());
        }
        let so = &self.solver;
        if !(so.tol > 0.0 && so.tol < 1.0) {
            return bad("/solver/tol", format!("{} is outside (0, 1)", so.tol));
        }
        if so.max_iter == 0 {
            return bad("/solver/max_iter", "must be positive".into());
        }
        if so.cutoff == 0 {
            return bad("/solver/cutoff", "must be positive".into());
        }
        if !(so.verdict_margin.is_finite() && so.verdict_margin >= 0.0) {
            return bad("/solver/verdict_margin", "must be finite and nonnegative".into());
        }
        if so.workers == Some(0) {
            return bad("/solver/workers", "must be positive".into());
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_takes_defaults() {
        let c = Config::from_json("{}").unwrap();
        assert_eq!(c, Config::default());
        assert_eq!(c.channel_sim, Channel::Identity);
        assert_eq!(c.ensemble.m_list, vec![2, 3, 4, 5, 6, 7, 8]);
        assert_eq!(c.scenario.kinds.len(), 5);
        assert_eq!(c.solver.cutoff, 15);
        assert_eq!(c.scenario.sampling.angle_tolerance, 1.8);
    }

    #[test]
    fn errors_point_at_the_field() {
        let cases = [
            (r#"{"ensemble": {"M_list": [2, "x"]}}"#, "/ensemble/M_list/1"),
            (r#"{"ensemble": {"M_list": [3, 1]}}"#, "/ensemble/M_list/1"),
            (r#"{"solver": {"tol": -1}}"#, "/solver/tol"),
            (r#"{"solver": {"cutof": 3}}"#, "/solver/cutof"),
            (r#"{"scenario": {"source": "fixed"}}"#, "/scenario/moments"),
            (r#"{"scenario": {"kinds": ["4sigma"]}}"#, "/scenario/kinds/0"),
            (r#"{"channel_sim": {"type": "pure_loss", "loss": 2.0}}"#, "/channel_sim"),
            (r#"{"seed_state": {"type": "coherent", "alpha": [1, 0], "dim": 1}}"#, "/seed_state/dim"),
        ];
        for (doc, pointer) in cases {
            match Config::from_json(doc) {
                Err(CliError::Config { pointer: p, .. }) => assert_eq!(p, pointer, "{doc}"),
                other => panic!("{doc}: {other:?}"),
            }
        }
    }

    #[test]
    fn moments_parse_exactly() {
        let c = Config::from_json(
            r#"{"scenario": {"source": "fixed",
                "moments": {"x": 0.01, "p": -0.95, "x2": 0.57, "p2": 1.41},
                "errors": {"x": 0.03, "p": 0.03, "x2": 0.04, "p2": 0.09}}}"#,
        )
        .unwrap();
        let m = c.scenario.moments.unwrap();
        assert_eq!((m.x, m.p, m.x2, m.p2), (0.01, -0.95, 0.57, 1.41));
        assert_eq!(c.scenario.errors.unwrap(), DEFAULT_ERRORS);
    }
}
