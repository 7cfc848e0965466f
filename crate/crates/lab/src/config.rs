//! Versioned JSON experiment configuration.
//!
//! ```json
//! { "schema_version": 1, "experiment": "floquet", "seed": 1,
//!   "params": { "l": 10, "preset": "maximally_chaotic", "t_max": 20, "chi": 2 } }
//! ```

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tnf_core::floquet::{FloquetParams, Method, MAX_DENSE_SITES};
use tnf_core::model::{Boundary, Lattice, Model, ModelKind};
use tnf_core::vmc::Mode;
use tnf_core::TnfError;

use crate::error::{LabError, Result};

pub const SCHEMA_VERSION: u32 = 1;
/// Largest lattice extent accepted by `vmc`.
pub const MAX_VMC_EXTENT: usize = 8;
/// Largest lattice extent accepted by `pareto`.
pub const MAX_PARETO_EXTENT: usize = 6;
/// Largest lattice extent with an exact-diagonalization reference.
pub const MAX_ED_EXTENT: usize = 4;
/// Largest register width for exhaustive circuit suites.
pub const MAX_CIRCUIT_BITS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Vmc,
    Floquet,
    Pareto,
    Circuit,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Vmc => "vmc",
            ExperimentKind::Floquet => "floquet",
            ExperimentKind::Pareto => "pareto",
            ExperimentKind::Circuit => "circuit",
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    experiment: ExperimentKind,
    seed: u64,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    output_dir: Option<PathBuf>,
    params: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    pub seed: u64,
    pub threads: usize,
    pub output_dir: Option<PathBuf>,
    pub params: Params,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Params {
    Vmc(VmcConfig),
    Floquet(FloquetConfig),
    Pareto(ParetoConfig),
    Circuit(CircuitConfig),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub kind: ModelKind,
    #[serde(default = "one")]
    pub j1: f64,
    #[serde(default)]
    pub j2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Random tensors refined by simple-update imaginary-time evolution.
    SimpleUpdate,
    Random,
    File,
}

fn default_taus() -> Vec<f64> {
    vec![0.1, 0.05, 0.02]
}

fn default_su_steps() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub kind: StateKind,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_su_steps")]
    pub steps: usize,
    /// PEPS file for `kind = "file"`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl Default for StateSpec {
    fn default() -> Self {
        Self { kind: StateKind::SimpleUpdate, taus: default_taus(), steps: default_su_steps(), path: None }
    }
}

fn default_modes() -> Vec<Mode> {
    vec![Mode::Fixed]
}

fn default_chains() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VmcConfig {
    pub lattice: LatticeSpec,
    pub model: ModelSpec,
    pub bond_dims: Vec<usize>,
    pub chis: Vec<usize>,
    #[serde(default = "default_modes")]
    pub modes: Vec<Mode>,
    pub sweeps: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
    #[serde(default)]
    pub warmup: Option<usize>,
    #[serde(default)]
    pub state: StateSpec,
    /// Exact-diagonalization reference; on by default when the lattice allows it.
    #[serde(default)]
    pub ed: Option<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloquetPreset {
    /// `J = g = π/4`, `h = 0.5`.
    MaximallyChaotic,
    /// `J = 0.7`, `g = 0.5`, `h = 0.5`.
    LessChaotic,
}

fn all_methods() -> Vec<Method> {
    vec![Method::Exact, Method::Conventional, Method::Transverse, Method::InverseTime, Method::MpoMpo]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FloquetConfig {
    pub l: usize,
    #[serde(default)]
    pub preset: Option<FloquetPreset>,
    #[serde(default)]
    pub j: Option<f64>,
    #[serde(default)]
    pub g: Option<f64>,
    #[serde(default)]
    pub h: Option<f64>,
    pub t_max: usize,
    pub chi: usize,
    #[serde(default = "all_methods")]
    pub methods: Vec<Method>,
    /// Half-open site range of subsystem A; the left half by default.
    #[serde(default)]
    pub region: Option<[usize; 2]>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientKind {
    /// Exact weights over the zero-magnetization sector.
    Enumerate,
    MonteCarlo,
}

fn default_gradient_sweeps() -> usize {
    200
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientSpec {
    pub sampling: GradientKind,
    #[serde(default = "default_gradient_sweeps")]
    pub sweeps: usize,
    #[serde(default = "default_chains")]
    pub chains: usize,
}

fn default_true() -> bool {
    true
}

fn default_cost_samples() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParetoConfig {
    pub lattice: LatticeSpec,
    pub model: ModelSpec,
    pub bond_dims: Vec<usize>,
    pub chis: Vec<usize>,
    pub iterations: usize,
    pub learning_rate: f64,
    #[serde(default)]
    pub decay: f64,
    #[serde(default = "default_true")]
    pub normalize: bool,
    pub gradient: GradientSpec,
    pub eval_sweeps: usize,
    #[serde(default = "default_chains")]
    pub eval_chains: usize,
    /// Configurations whose amplitude cost is averaged.
    #[serde(default = "default_cost_samples")]
    pub cost_samples: usize,
    #[serde(default)]
    pub state: StateSpec,
    /// Reference energy; exact diagonalization or the best point when absent.
    #[serde(default)]
    pub reference: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteKind {
    Adder,
    Multiplier,
    Square,
    Fnn,
}

fn default_fnn_samples() -> usize {
    100
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteSpec {
    pub kind: SuiteKind,
    /// Largest register width; every width up to it is tested exhaustively.
    #[serde(default)]
    pub bits: Option<usize>,
    /// Layer widths of a random network (`fnn`).
    #[serde(default)]
    pub widths: Option<Vec<usize>>,
    /// Polynomial activation, lowest order first (`fnn`).
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    #[serde(default = "default_fnn_samples")]
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub suites: Vec<SuiteSpec>,
}

fn parse_with_path<T: DeserializeOwned>(value: serde_json::Value, prefix: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| {
        let inner = e.path().to_string();
        let path = if inner == "." { prefix.to_string() } else { format!("{prefix}.{inner}") };
        LabError::config(path, e.into_inner().to_string())
    })
}

fn positive(path: &str, v: usize) -> Result<()> {
    if v == 0 {
        return Err(LabError::config(path, "must be positive"));
    }
    Ok(())
}

fn nonempty_positive(path: &str, vs: &[usize]) -> Result<()> {
    if vs.is_empty() {
        return Err(LabError::config(path, "must not be empty"));
    }
    for (i, &v) in vs.iter().enumerate() {
        positive(&format!("{path}[{i}]"), v)?;
    }
    Ok(())
}

fn resource(msg: String) -> LabError {
    LabError::Core(TnfError::Resource(msg))
}

impl LatticeSpec {
    pub fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.rows, self.cols, self.boundary).map_err(|e| LabError::config("params.lattice", e.to_string()))
    }

    pub fn ed_feasible(&self) -> bool {
        self.rows <= MAX_ED_EXTENT && self.cols <= MAX_ED_EXTENT
    }
}

impl ModelSpec {
    pub fn model(&self, lattice: Lattice) -> Model {
        match self.kind {
            ModelKind::Heisenberg => Model::heisenberg(lattice, self.j1),
            ModelKind::J1j2 => Model::j1j2(lattice, self.j1, self.j2),
        }
    }

    /// Nearest-neighbour part, used to prepare initial states.
    pub fn nearest_neighbour(&self, lattice: Lattice) -> Model {
        Model::heisenberg(lattice, self.j1)
    }

    fn validate(&self) -> Result<()> {
        if !self.j1.is_finite() || !self.j2.is_finite() {
            return Err(LabError::config("params.model", "couplings must be finite"));
        }
        if self.kind == ModelKind::Heisenberg && self.j2 != 0.0 {
            return Err(LabError::config("params.model.j2", "only valid for kind \"j1j2\""));
        }
        Ok(())
    }
}

impl StateSpec {
    fn validate(&self) -> Result<()> {
        match self.kind {
            StateKind::File if self.path.is_none() => Err(LabError::config("params.state.path", "required for kind \"file\"")),
            StateKind::SimpleUpdate if self.taus.iter().any(|t| !(*t > 0.0)) => {
                Err(LabError::config("params.state.taus", "time steps must be positive"))
            }
            _ => Ok(()),
        }
    }
}

impl VmcConfig {
    fn validate(&self) -> Result<()> {
        positive("params.sweeps", self.sweeps)?;
        positive("params.chains", self.chains)?;
        nonempty_positive("params.bond_dims", &self.bond_dims)?;
        nonempty_positive("params.chis", &self.chis)?;
        if self.modes.is_empty() {
            return Err(LabError::config("params.modes", "must not be empty"));
        }
        self.lattice.lattice()?;
        self.model.validate()?;
        self.state.validate()?;
        if self.lattice.rows > MAX_VMC_EXTENT || self.lattice.cols > MAX_VMC_EXTENT {
            return Err(resource(format!(
                "vmc lattices are limited to {MAX_VMC_EXTENT}x{MAX_VMC_EXTENT}, got {}x{}",
                self.lattice.rows, self.lattice.cols
            )));
        }
        if self.ed == Some(true) && !self.lattice.ed_feasible() {
            return Err(resource(format!("exact diagonalization is limited to {MAX_ED_EXTENT}x{MAX_ED_EXTENT} lattices")));
        }
        Ok(())
    }

    pub fn use_ed(&self) -> bool {
        self.ed.unwrap_or(self.lattice.ed_feasible())
    }
}

impl FloquetConfig {
    pub fn params(&self) -> Result<FloquetParams> {
        let (j, g, h) = match (self.preset, self.j, self.g, self.h) {
            (Some(FloquetPreset::MaximallyChaotic), None, None, None) => {
                let p = FloquetParams::maximally_chaotic(self.l, self.t_max);
                (p.j, p.g, p.h)
            }
            (Some(FloquetPreset::LessChaotic), None, None, None) => {
                let p = FloquetParams::less_chaotic(self.l, self.t_max);
                (p.j, p.g, p.h)
            }
            (None, Some(j), Some(g), Some(h)) => (j, g, h),
            (Some(_), ..) => return Err(LabError::config("params.preset", "a preset excludes explicit j, g, h")),
            (None, ..) => return Err(LabError::config("params", "either a preset or all of j, g, h are required")),
        };
        FloquetParams::new(self.l, j, g, h, self.t_max).map_err(|e| LabError::config("params", e.to_string()))
    }

    pub fn region(&self) -> std::ops::Range<usize> {
        self.region.map_or(0..self.l / 2, |[a, b]| a..b)
    }

    fn validate(&self) -> Result<()> {
        if self.l > MAX_DENSE_SITES {
            return Err(resource(format!("floquet chains are limited to {MAX_DENSE_SITES} sites, got {}", self.l)));
        }
        if self.l < 2 {
            return Err(LabError::config("params.l", "at least 2 sites required"));
        }
        positive("params.chi", self.chi)?;
        if self.methods.is_empty() {
            return Err(LabError::config("params.methods", "must not be empty"));
        }
        for (i, m) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(m) {
                return Err(LabError::config(format!("params.methods[{i}]"), format!("duplicate method {}", m.name())));
            }
        }
        let r = self.region();
        if r.start >= r.end || r.end > self.l {
            return Err(LabError::config("params.region", format!("{r:?} is not a nonempty part of {} sites", self.l)));
        }
        self.params().map(|_| ())
    }
}

impl ParetoConfig {
    fn validate(&self) -> Result<()> {
        nonempty_positive("params.bond_dims", &self.bond_dims)?;
        nonempty_positive("params.chis", &self.chis)?;
        positive("params.iterations", self.iterations)?;
        positive("params.eval_sweeps", self.eval_sweeps)?;
        positive("params.eval_chains", self.eval_chains)?;
        positive("params.cost_samples", self.cost_samples)?;
        positive("params.gradient.sweeps", self.gradient.sweeps)?;
        positive("params.gradient.chains", self.gradient.chains)?;
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(LabError::config("params.learning_rate", "must be finite and non-negative"));
        }
        if !(self.decay >= 0.0) || !self.decay.is_finite() {
            return Err(LabError::config("params.decay", "must be finite and non-negative"));
        }
        self.lattice.lattice()?;
        self.model.validate()?;
        self.state.validate()?;
        if self.lattice.rows > MAX_PARETO_EXTENT || self.lattice.cols > MAX_PARETO_EXTENT {
            return Err(resource(format!(
                "pareto lattices are limited to {MAX_PARETO_EXTENT}x{MAX_PARETO_EXTENT}, got {}x{}",
                self.lattice.rows, self.lattice.cols
            )));
        }
        if self.gradient.sampling == GradientKind::Enumerate && !self.lattice.ed_feasible() {
            return Err(resource(format!("enumerated gradients are limited to {MAX_ED_EXTENT}x{MAX_ED_EXTENT} lattices")));
        }
        Ok(())
    }
}

impl CircuitConfig {
    fn validate(&self) -> Result<()> {
        if self.suites.is_empty() {
            return Err(LabError::config("params.suites", "must not be empty"));
        }
        for (i, s) in self.suites.iter().enumerate() {
            let path = format!("params.suites[{i}]");
            match s.kind {
                SuiteKind::Fnn => {
                    let widths = s.widths.as_ref().ok_or_else(|| LabError::config(format!("{path}.widths"), "required"))?;
                    if widths.len() < 2 {
                        return Err(LabError::config(format!("{path}.widths"), "at least two layers required"));
                    }
                    nonempty_positive(&format!("{path}.widths"), widths)?;
                    let c = s.coefficients.as_ref().ok_or_else(|| LabError::config(format!("{path}.coefficients"), "required"))?;
                    if c.len() < 2 {
                        return Err(LabError::config(format!("{path}.coefficients"), "activation degree must be at least 1"));
                    }
                    positive(&format!("{path}.samples"), s.samples)?;
                }
                _ => {
                    let bits = s.bits.ok_or_else(|| LabError::config(format!("{path}.bits"), "required"))?;
                    positive(&format!("{path}.bits"), bits)?;
                    if bits > MAX_CIRCUIT_BITS {
                        return Err(resource(format!("exhaustive suites are limited to {MAX_CIRCUIT_BITS} bits, got {bits}")));
                    }
                }
            }
        }
        Ok(())
    }
}

impl ExperimentConfig {
    /// Parses and validates; nothing is computed until this succeeds.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let raw: RawConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| LabError::config(e.path().to_string(), e.into_inner().to_string()))?;
        if raw.schema_version != SCHEMA_VERSION {
            return Err(LabError::config(
                "schema_version",
                format!("unsupported version {}, expected {SCHEMA_VERSION}", raw.schema_version),
            ));
        }
        let threads = raw.threads.unwrap_or(1);
        positive("threads", threads)?;
        let params = match raw.experiment {
            ExperimentKind::Vmc => Params::Vmc(parse_with_path(raw.params, "params")?),
            ExperimentKind::Floquet => Params::Floquet(parse_with_path(raw.params, "params")?),
            ExperimentKind::Pareto => Params::Pareto(parse_with_path(raw.params, "params")?),
            ExperimentKind::Circuit => Params::Circuit(parse_with_path(raw.params, "params")?),
        };
        let cfg = Self {
            schema_version: raw.schema_version,
            experiment: raw.experiment,
            seed: raw.seed,
            threads,
            output_dir: raw.output_dir,
            params,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.params {
            Params::Vmc(p) => p.validate(),
            Params::Floquet(p) => p.validate(),
            Params::Pareto(p) => p.validate(),
            Params::Circuit(p) => p.validate(),
        }
    }
}
