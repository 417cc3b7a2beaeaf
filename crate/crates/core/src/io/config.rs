use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::averaging::{NormMethod, DEFAULT_EPSILON};
use crate::dynamics::IntegratorConfig;
use crate::error::{Error, Result};
use crate::manifold::GraphConfig;
use crate::truncation::{Forcing, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    ConeCheck,
    NSearch,
    BuildManifold,
    Track,
    ProbeSmoothness,
    CalibrateRadii,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::Simulate,
        Experiment::ConeCheck,
        Experiment::NSearch,
        Experiment::BuildManifold,
        Experiment::Track,
        Experiment::ProbeSmoothness,
        Experiment::CalibrateRadii,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::ConeCheck => "cone-check",
            Experiment::NSearch => "n-search",
            Experiment::BuildManifold => "build-manifold",
            Experiment::Track => "track",
            Experiment::ProbeSmoothness => "probe-smoothness",
            Experiment::CalibrateRadii => "calibrate-radii",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::invalid("experiment", format!("unknown experiment `{s}`")))
    }
}

/// Initial data of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Random field with spectrum decaying like `a^{-decay}` and the given H-norm.
    Smooth {
        decay: f64,
        h_norm: f64,
    },
    /// `amplitude · e_n` for the single mode `n = (k, l, m)`.
    Mode {
        k: i32,
        l: i32,
        m: i32,
        amplitude: f64,
    },
    Checkpoint {
        path: PathBuf,
    },
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::Smooth {
            decay: 1.0,
            h_norm: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateConfig {
    pub initial: InitialCondition,
    /// Steps between recorded rows.
    pub stride: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            initial: InitialCondition::default(),
            stride: 1,
        }
    }
}

/// Draws from the absorbing set: smooth data relaxed under the flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub count: usize,
    pub h_norm: f64,
    pub relax: f64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            count: 20,
            h_norm: 5.0,
            relax: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConeCheckConfig {
    pub pairs: usize,
    /// H-norm of the first state of each pair.
    pub h_norm: f64,
    /// H-norm of the offset to the second state.
    pub perturbation: f64,
    /// Samples for the admissibility record of the model split.
    pub samples: SampleConfig,
    pub epsilon: f64,
    pub qims_bound: f64,
    pub kappa: f64,
    pub tol_scale: f64,
    pub band: f64,
}

impl Default for ConeCheckConfig {
    fn default() -> Self {
        Self {
            pairs: 4,
            h_norm: 4.0,
            perturbation: 0.5,
            samples: SampleConfig {
                count: 5,
                ..SampleConfig::default()
            },
            epsilon: DEFAULT_EPSILON,
            qims_bound: 1e6,
            kappa: 0.25,
            tol_scale: 1.0,
            band: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NSearchConfig {
    /// Intermediate half-width; the model's `k` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    pub n_min: u32,
    pub n_max: u32,
    pub samples: SampleConfig,
    pub epsilon: f64,
    pub method: NormMethod,
    pub stop_at_first: bool,
}

impl Default for NSearchConfig {
    fn default() -> Self {
        Self {
            k: None,
            n_min: 2,
            n_max: 60,
            samples: SampleConfig::default(),
            epsilon: DEFAULT_EPSILON,
            method: NormMethod::Iterative,
            stop_at_first: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildManifoldConfig {
    pub points: usize,
    pub h_norm: f64,
    /// Forward time over which each graph point is re-checked; zero skips it.
    pub invariance_horizon: f64,
    pub invariance_every: f64,
    pub graph: GraphConfig,
}

impl Default for BuildManifoldConfig {
    fn default() -> Self {
        Self {
            points: 4,
            h_norm: 2.0,
            invariance_horizon: 0.0,
            invariance_every: 0.5,
            graph: GraphConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackConfig {
    pub starts: usize,
    pub h_norm: f64,
    pub horizon: f64,
    pub graph: GraphConfig,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            starts: 2,
            h_norm: 2.0,
            horizon: 1.0,
            graph: GraphConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSmoothnessConfig {
    pub h_norm: f64,
    pub directions: usize,
    pub hs: Vec<f64>,
    pub graph: GraphConfig,
}

impl Default for ProbeSmoothnessConfig {
    fn default() -> Self {
        Self {
            h_norm: 1.0,
            directions: 2,
            hs: vec![0.1, 0.05, 0.025, 0.0125],
            graph: GraphConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CalibrateRadiiConfig {
    pub starts: usize,
    pub h_norm: f64,
    /// Fraction of the horizon discarded before taking sups.
    pub transient: f64,
    /// Factor applied to the observed sups.
    pub margin: f64,
}

impl Default for CalibrateRadiiConfig {
    fn default() -> Self {
        Self {
            starts: 4,
            h_norm: 5.0,
            transient: 0.5,
            margin: 2.0,
        }
    }
}

/// Everything one experiment run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<Experiment>,
    pub seed: u64,
    pub grid_radius: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub model: ModelParams,
    pub forcing: Forcing,
    pub integrator: IntegratorConfig,
    pub simulate: SimulateConfig,
    pub cone_check: ConeCheckConfig,
    pub n_search: NSearchConfig,
    pub build_manifold: BuildManifoldConfig,
    pub track: TrackConfig,
    pub probe_smoothness: ProbeSmoothnessConfig,
    pub calibrate_radii: CalibrateRadiiConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            seed: 0,
            grid_radius: 4,
            output: None,
            model: ModelParams::default(),
            forcing: Forcing::default(),
            integrator: IntegratorConfig::default(),
            simulate: SimulateConfig::default(),
            cone_check: ConeCheckConfig::default(),
            n_search: NSearchConfig::default(),
            build_manifold: BuildManifoldConfig::default(),
            track: TrackConfig::default(),
            probe_smoothness: ProbeSmoothnessConfig::default(),
            calibrate_radii: CalibrateRadiiConfig::default(),
        }
    }
}

fn positive(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, "must be positive and finite"))
    }
}

fn non_negative(key: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(key, "must be non-negative and finite"))
    }
}

fn count(key: &str, v: usize) -> Result<()> {
    if v > 0 {
        Ok(())
    } else {
        Err(Error::invalid(key, "must be at least 1"))
    }
}

fn epsilon(key: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= DEFAULT_EPSILON {
        Ok(())
    } else {
        Err(Error::invalid(
            key,
            format!("requires 0 < epsilon <= {DEFAULT_EPSILON}"),
        ))
    }
}

impl SampleConfig {
    fn validate(&self, at: &str) -> Result<()> {
        count(&format!("{at}.count"), self.count)?;
        non_negative(&format!("{at}.h_norm"), self.h_norm)?;
        non_negative(&format!("{at}.relax"), self.relax)
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Every invariant of the run, named by its key.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.integrator.validate()?;
        if self.grid_radius == 0 || self.grid_radius > 32 {
            return Err(Error::invalid(
                "grid_radius",
                "requires 1 <= grid_radius <= 32",
            ));
        }
        let s = &self.simulate;
        count("simulate.stride", s.stride)?;
        match &s.initial {
            InitialCondition::Smooth { decay, h_norm } => {
                non_negative("simulate.initial.decay", *decay)?;
                non_negative("simulate.initial.h_norm", *h_norm)?;
            }
            InitialCondition::Mode { amplitude, .. } => {
                if !amplitude.is_finite() {
                    return Err(Error::invalid(
                        "simulate.initial.amplitude",
                        "must be finite",
                    ));
                }
            }
            InitialCondition::Checkpoint { .. } => {}
        }
        let c = &self.cone_check;
        count("cone_check.pairs", c.pairs)?;
        non_negative("cone_check.h_norm", c.h_norm)?;
        non_negative("cone_check.perturbation", c.perturbation)?;
        c.samples.validate("cone_check.samples")?;
        epsilon("cone_check.epsilon", c.epsilon)?;
        positive("cone_check.qims_bound", c.qims_bound)?;
        positive("cone_check.kappa", c.kappa)?;
        positive("cone_check.tol_scale", c.tol_scale)?;
        non_negative("cone_check.band", c.band)?;
        let n = &self.n_search;
        if n.n_min == 0 || n.n_min > n.n_max {
            return Err(Error::invalid(
                "n_search.n_min",
                "requires 1 <= n_min <= n_max",
            ));
        }
        if n.k == Some(0) {
            return Err(Error::invalid("n_search.k", "must be at least 1"));
        }
        n.samples.validate("n_search.samples")?;
        epsilon("n_search.epsilon", n.epsilon)?;
        let b = &self.build_manifold;
        count("build_manifold.points", b.points)?;
        non_negative("build_manifold.h_norm", b.h_norm)?;
        non_negative("build_manifold.invariance_horizon", b.invariance_horizon)?;
        positive("build_manifold.invariance_every", b.invariance_every)?;
        b.graph.validate()?;
        let t = &self.track;
        count("track.starts", t.starts)?;
        non_negative("track.h_norm", t.h_norm)?;
        positive("track.horizon", t.horizon)?;
        t.graph.validate()?;
        let p = &self.probe_smoothness;
        count("probe_smoothness.directions", p.directions)?;
        non_negative("probe_smoothness.h_norm", p.h_norm)?;
        if p.hs.len() < 2 || p.hs.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
            return Err(Error::invalid(
                "probe_smoothness.hs",
                "needs at least two positive steps",
            ));
        }
        p.graph.validate()?;
        let r = &self.calibrate_radii;
        count("calibrate_radii.starts", r.starts)?;
        non_negative("calibrate_radii.h_norm", r.h_norm)?;
        if !(r.transient >= 0.0 && r.transient < 1.0) {
            return Err(Error::invalid(
                "calibrate_radii.transient",
                "requires 0 <= transient < 1",
            ));
        }
        positive("calibrate_radii.margin", r.margin)
    }
}

/// Reads and validates a TOML run configuration.
pub fn load_config(path: impl AsRef<Path>) -> Result<RunConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    RunConfig::from_toml(&text).map_err(|e| match e {
        Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
        other => other,
    })
}
