//! Reproducible desk-scale experiments on top of `tnf-core`: VMC energy
//! grids, Floquet entanglement dynamics, cost/accuracy frontiers and circuit
//! exactness suites. Every run writes its data files and a `manifest.json`.

pub mod config;
pub mod error;
pub mod output;
pub mod runs;

use std::path::Path;

pub use config::{ExperimentConfig, ExperimentKind, Params};
pub use error::{LabError, Result};
pub use output::{RunManifest, RunOutput};

/// Command-line overrides applied on top of the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

/// Loads the config, checks it matches `kind`, and runs it into `out`.
pub fn run_from_file(kind: ExperimentKind, config: &Path, out: &Path, overrides: &Overrides) -> Result<RunManifest> {
    let mut cfg = ExperimentConfig::load(config)?;
    if cfg.experiment != kind {
        return Err(LabError::config(
            "experiment",
            format!("config describes a `{}` run, `{}` requested", cfg.experiment.name(), kind.name()),
        ));
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(t) = overrides.threads {
        if t == 0 {
            return Err(LabError::config("threads", "must be positive"));
        }
        cfg.threads = t;
    }
    run(&cfg, out)
}

pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunManifest> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| LabError::config("threads", e.to_string()))?;
    let mut output = RunOutput::new(out)?;
    pool.install(|| match &cfg.params {
        Params::Vmc(p) => runs::run_vmc(p, cfg.seed, &mut output),
        Params::Floquet(p) => runs::run_floquet(p, &mut output),
        Params::Pareto(p) => runs::run_pareto(p, cfg.seed, &mut output),
        Params::Circuit(p) => runs::run_circuit(p, cfg.seed, &mut output).map(|_| ()),
    })?;
    output.finish(cfg)
}
