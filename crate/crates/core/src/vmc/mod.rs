//! Variational Monte Carlo over PEPS amplitudes.

pub mod ed;
mod gradient;
mod sampler;

pub use gradient::{
    gradient_estimate, rayleigh_quotient, sgd_optimize, GradientEstimate, GradientSampling, LearningSchedule,
    SgdRecord, SgdResult,
};
pub use sampler::{
    estimate_energy, estimate_energy_with, metropolis_sweep, move_schedule, ChainState, EnergyEstimate,
    SamplingParams, SweepStats,
};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::model::Model;
use crate::peps::{amplitude_fixed, exact_amplitude, DynamicCache, FixedPlan, Peps, SpinConfiguration};
use crate::scale::AmplitudeValue;
use crate::tensor::C64;

/// Amplitude semantics used by a Markov chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fixed schedule: a single-valued function of the configuration.
    Fixed,
    /// Cached environments reused along the chain history.
    Dynamic,
}

/// Something that returns `⟨n|Ψ⟩`.
pub trait AmplitudeSource {
    /// Amplitude of `n`; does not change the reference configuration.
    fn amplitude(&mut self, n: &SpinConfiguration) -> Result<AmplitudeValue>;

    /// Called when the chain moves to `n`.
    fn commit(&mut self, _n: &SpinConfiguration, _amp: AmplitudeValue) {}
}

/// Memoized fixed-schedule amplitudes. Memoization is exact because the
/// amplitude is a deterministic function of the configuration.
pub struct FixedSource<'a> {
    peps: &'a Peps,
    plan: FixedPlan,
    memo: HashMap<Vec<u8>, AmplitudeValue>,
    memo_limit: usize,
    pub evaluations: u64,
}

impl<'a> FixedSource<'a> {
    pub fn new(peps: &'a Peps, chi: usize) -> Result<Self> {
        let plan = FixedPlan::new(peps.rows(), peps.cols(), chi)?;
        Ok(Self { peps, plan, memo: HashMap::new(), memo_limit: 1 << 20, evaluations: 0 })
    }

    pub fn with_memo_limit(mut self, limit: usize) -> Self {
        self.memo_limit = limit;
        self
    }
}

impl AmplitudeSource for FixedSource<'_> {
    fn amplitude(&mut self, n: &SpinConfiguration) -> Result<AmplitudeValue> {
        if let Some(a) = self.memo.get(&n.values) {
            return Ok(*a);
        }
        let a = amplitude_fixed(self.peps, n, &self.plan)?;
        self.evaluations += 1;
        if self.memo.len() < self.memo_limit {
            self.memo.insert(n.values.clone(), a);
        }
        Ok(a)
    }
}

pub struct DynamicSource<'a> {
    peps: &'a Peps,
    cache: DynamicCache,
}

impl<'a> DynamicSource<'a> {
    pub fn new(peps: &'a Peps, chi: usize) -> Result<Self> {
        Ok(Self { peps, cache: DynamicCache::new(peps, chi)? })
    }

    pub fn cache(&self) -> &DynamicCache {
        &self.cache
    }
}

impl AmplitudeSource for DynamicSource<'_> {
    fn amplitude(&mut self, n: &SpinConfiguration) -> Result<AmplitudeValue> {
        self.cache.evaluate(self.peps, n)
    }

    fn commit(&mut self, n: &SpinConfiguration, amp: AmplitudeValue) {
        self.cache.commit(n, amp);
    }
}

/// Untruncated amplitudes (small lattices only).
pub struct ExactSource<'a> {
    peps: &'a Peps,
    memo: HashMap<Vec<u8>, AmplitudeValue>,
}

impl<'a> ExactSource<'a> {
    pub fn new(peps: &'a Peps) -> Self {
        Self { peps, memo: HashMap::new() }
    }
}

impl AmplitudeSource for ExactSource<'_> {
    fn amplitude(&mut self, n: &SpinConfiguration) -> Result<AmplitudeValue> {
        if let Some(a) = self.memo.get(&n.values) {
            return Ok(*a);
        }
        let a = exact_amplitude(self.peps, n)?;
        self.memo.insert(n.values.clone(), a);
        Ok(a)
    }
}

/// Wraps a closure returning plain complex amplitudes.
pub struct FnSource<F>(pub F);

impl<F: FnMut(&SpinConfiguration) -> C64> AmplitudeSource for FnSource<F> {
    fn amplitude(&mut self, n: &SpinConfiguration) -> Result<AmplitudeValue> {
        Ok(AmplitudeValue::from_complex((self.0)(n)))
    }
}

/// Builds the amplitude source for `mode`.
pub fn make_source<'a>(peps: &'a Peps, mode: Mode, chi: usize) -> Result<Box<dyn AmplitudeSource + 'a>> {
    Ok(match mode {
        Mode::Fixed => Box::new(FixedSource::new(peps, chi)?),
        Mode::Dynamic => Box::new(DynamicSource::new(peps, chi)?),
    })
}

/// `S^z` of a site in state `v` (0 = up).
pub fn sz(v: u8) -> f64 {
    0.5 - v as f64
}

/// `E_loc(n) = Σ_{n'} ⟨n|H|n'⟩ Ψ(n')/Ψ(n)`, with `amp_n = Ψ(n)`.
pub fn local_energy(
    model: &Model,
    source: &mut dyn AmplitudeSource,
    n: &SpinConfiguration,
    amp_n: &AmplitudeValue,
) -> Result<C64> {
    if amp_n.is_zero {
        bail!(Precondition, "local energy of a configuration with zero amplitude");
    }
    let mut e = C64::new(0.0, 0.0);
    let mut flipped = n.clone();
    for &(i, j, c) in &model.couplings {
        let (a, b) = (n.values[i], n.values[j]);
        e += c * sz(a) * sz(b);
        if a != b {
            flipped.values.swap(i, j);
            let amp = source.amplitude(&flipped)?;
            flipped.values.swap(i, j);
            e += 0.5 * c * amp.ratio(amp_n).expect("nonzero denominator");
        }
    }
    Ok(e)
}

/// Every configuration of `n_sites` spins with `n_down` down spins, in
/// increasing binary order (site 0 most significant).
pub fn sector_configurations(n_sites: usize, n_down: usize) -> Vec<SpinConfiguration> {
    let basis = ed::SectorBasis::new(n_sites, n_down);
    (0..basis.len()).map(|k| SpinConfiguration::new(basis.config(k))).collect()
}
