//! Energy gradients with respect to PEPS entries and stochastic gradient
//! descent.
//!
//! Parameters are the real parts of all site-tensor entries, site by site in
//! row-major order. Log-derivatives are central finite differences of the
//! fixed-schedule amplitude.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sampler::{blocking_stderr, run_chains};
use super::{local_energy, sector_configurations, AmplitudeSource, FixedSource, SamplingParams};
use crate::error::{bail, Result};
use crate::model::Model;
use crate::peps::{amplitude_fixed_with_weight, FixedPlan, Peps, SpinConfiguration, PHYS};
use crate::scale::AmplitudeValue;
use crate::tensor::C64;

/// Relative finite-difference step and its absolute floor.
const FD_REL: f64 = 1e-5;
const FD_ABS: f64 = 1e-7;
/// Discarded-weight jump between the two probes that marks a degeneracy.
const DEGENERACY_JUMP: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GradientSampling {
    MonteCarlo(SamplingParams),
    /// Exact weights over the `S^z_tot = 0` sector (or the smallest `|S^z_tot|`
    /// for odd site counts).
    Enumerate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate {
    pub energy: f64,
    pub energy_stderr: f64,
    pub gradient: Vec<f64>,
    /// Per-component standard error (zero under enumeration).
    pub stderr: Vec<f64>,
    /// Parameters whose entry was zeroed because a probe crossed a
    /// singular-value degeneracy.
    pub skipped: usize,
    pub n_samples: usize,
    pub n_distinct: usize,
}

impl GradientEstimate {
    pub fn norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    pub fn stderr_norm(&self) -> f64 {
        self.stderr.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

/// Location of each parameter: (site, flat entry index).
fn parameter_map(peps: &Peps) -> Vec<(usize, usize)> {
    peps.sites().iter().enumerate().flat_map(|(s, t)| (0..t.len()).map(move |e| (s, e))).collect()
}

/// Sparse log-derivatives `O_k(n)` plus degeneracy flags.
struct Derivatives {
    values: Vec<(usize, C64)>,
    degenerate: Vec<usize>,
}

fn log_derivatives(
    peps: &Peps,
    plan: &FixedPlan,
    params: &[(usize, usize)],
    n: &SpinConfiguration,
    amp: &AmplitudeValue,
) -> Result<Derivatives> {
    let d = peps.phys_dim();
    let mut probe = peps.clone();
    let mut out = Derivatives { values: Vec::new(), degenerate: Vec::new() };
    for (k, &(s, e)) in params.iter().enumerate() {
        // Entries with a different physical index do not enter Ψ(n).
        debug_assert_eq!(peps.sites()[s].extents()[PHYS], d);
        if e % d != n.values[s] as usize {
            continue;
        }
        let orig = peps.sites()[s].data()[e];
        let h = (FD_REL * orig.re.abs()).max(FD_ABS);
        probe.sites_mut()[s].data_mut()[e] = C64::new(orig.re + h, orig.im);
        let (plus, w_plus) = amplitude_fixed_with_weight(&probe, n, plan)?;
        probe.sites_mut()[s].data_mut()[e] = C64::new(orig.re - h, orig.im);
        let (minus, w_minus) = amplitude_fixed_with_weight(&probe, n, plan)?;
        probe.sites_mut()[s].data_mut()[e] = orig;
        if (w_plus - w_minus).abs() > DEGENERACY_JUMP {
            out.degenerate.push(k);
            continue;
        }
        let rp = plus.ratio(amp).expect("nonzero amplitude");
        let rm = minus.ratio(amp).expect("nonzero amplitude");
        out.values.push((k, (rp - rm) / (2.0 * h)));
    }
    Ok(out)
}

/// Exact weights `|Ψ(n)|² / Σ|Ψ|²` and local energies over the balanced
/// magnetization sector, skipping zero amplitudes.
fn enumerate_sector(peps: &Peps, model: &Model, chi: usize) -> Result<Vec<(SpinConfiguration, f64, C64)>> {
    let n_sites = peps.n_sites();
    let mut src = FixedSource::new(peps, chi)?;
    let mut entries = Vec::new();
    for n in sector_configurations(n_sites, n_sites / 2) {
        let amp = src.amplitude(&n)?;
        if !amp.is_zero {
            entries.push((n, amp));
        }
    }
    if entries.is_empty() {
        bail!(Precondition, "state has no weight in the balanced sector");
    }
    let top = entries.iter().map(|(_, a)| a.ln_abs()).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = entries.iter().map(|(_, a)| (2.0 * (a.ln_abs() - top)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let mut out = Vec::with_capacity(entries.len());
    for ((n, amp), w) in entries.into_iter().zip(weights) {
        let e = local_energy(model, &mut src, &n, &amp)?;
        out.push((n, w / z, e));
    }
    Ok(out)
}

/// `⟨Ψ|H|Ψ⟩/⟨Ψ|Ψ⟩` by enumerating the balanced magnetization sector with
/// fixed-schedule amplitudes.
pub fn rayleigh_quotient(peps: &Peps, model: &Model, chi: usize) -> Result<f64> {
    check_sizes(peps, model)?;
    Ok(enumerate_sector(peps, model, chi)?.iter().map(|(_, w, e)| w * e.re).sum())
}

fn check_sizes(peps: &Peps, model: &Model) -> Result<()> {
    if peps.n_sites() != model.n_sites() {
        bail!(Argument, "model has {} sites, PEPS has {}", model.n_sites(), peps.n_sites());
    }
    Ok(())
}

/// `g_k = 2 Re(⟨E_loc O_k*⟩ − ⟨E_loc⟩⟨O_k*⟩)` with fixed-schedule amplitudes.
pub fn gradient_estimate(
    peps: &Peps,
    model: &Model,
    chi: usize,
    sampling: &GradientSampling,
) -> Result<GradientEstimate> {
    check_sizes(peps, model)?;
    let plan = FixedPlan::new(peps.rows(), peps.cols(), chi)?;
    plan.check(peps)?;
    let params = parameter_map(peps);
    let n_params = params.len();

    // Samples as (config, weight, local energy), grouped by chain for blocking.
    let chains: Vec<Vec<(SpinConfiguration, f64, C64)>> = match sampling {
        GradientSampling::Enumerate => vec![enumerate_sector(peps, model, chi)?],
        GradientSampling::MonteCarlo(sp) => {
            let runs = run_chains(model, || Ok(Box::new(FixedSource::new(peps, chi)?)), sp)?;
            let total = (sp.n_sweeps * sp.n_chains) as f64;
            runs.into_iter()
                .map(|r| r.configs.into_iter().map(|(n, e)| (n, 1.0 / total, e)).collect())
                .collect()
        }
    };

    let mut distinct: BTreeMap<SpinConfiguration, usize> = BTreeMap::new();
    for (n, _, _) in chains.iter().flatten() {
        let next = distinct.len();
        distinct.entry(n.clone()).or_insert(next);
    }
    let configs: Vec<SpinConfiguration> = {
        let mut v = vec![SpinConfiguration::new(Vec::new()); distinct.len()];
        for (n, &i) in &distinct {
            v[i] = n.clone();
        }
        v
    };
    let derivs: Vec<Derivatives> = configs
        .par_iter()
        .map(|n| {
            let amp = amplitude_fixed_with_weight(peps, n, &plan)?.0;
            log_derivatives(peps, &plan, &params, n, &amp)
        })
        .collect::<Result<_>>()?;

    let mut degenerate = vec![false; n_params];
    for d in &derivs {
        for &k in &d.degenerate {
            degenerate[k] = true;
        }
    }

    let energy: f64 = chains.iter().flatten().map(|(_, w, e)| w * e.re).sum();
    let mut o_mean = vec![C64::new(0.0, 0.0); n_params];
    let mut eo_mean = vec![C64::new(0.0, 0.0); n_params];
    for (n, w, e) in chains.iter().flatten() {
        for &(k, o) in &derivs[distinct[n]].values {
            o_mean[k] += *w * o;
            eo_mean[k] += *w * *e * o.conj();
        }
    }
    let e_mean_c: C64 = chains.iter().flatten().map(|(_, w, e)| *w * *e).sum();
    let gradient: Vec<f64> = (0..n_params)
        .map(|k| if degenerate[k] { 0.0 } else { 2.0 * (eo_mean[k] - e_mean_c * o_mean[k].conj()).re })
        .collect();

    let n_samples: usize = chains.iter().map(Vec::len).sum();
    let (energy_stderr, stderr) = match sampling {
        GradientSampling::Enumerate => (0.0, vec![0.0; n_params]),
        GradientSampling::MonteCarlo(sp) => {
            let series: Vec<Vec<f64>> = chains.iter().map(|c| c.iter().map(|(_, _, e)| e.re).collect()).collect();
            let e_err = blocking_stderr(&series, sp.block_len);
            // Per-sample contributions 2 Re((E − Ē)(O_k − Ō_k)*), whose mean is g_k.
            let mut per_param: Vec<Vec<Vec<f64>>> = vec![Vec::with_capacity(chains.len()); n_params];
            for chain in &chains {
                let mut cols = vec![vec![0.0; chain.len()]; n_params];
                for (i, (n, _, e)) in chain.iter().enumerate() {
                    let de = *e - e_mean_c;
                    for k in 0..n_params {
                        cols[k][i] = 2.0 * (de * (-o_mean[k]).conj()).re;
                    }
                    for &(k, o) in &derivs[distinct[n]].values {
                        cols[k][i] = 2.0 * (de * (o - o_mean[k]).conj()).re;
                    }
                }
                for (k, col) in cols.into_iter().enumerate() {
                    per_param[k].push(col);
                }
            }
            let errs = per_param
                .iter()
                .enumerate()
                .map(|(k, s)| if degenerate[k] { 0.0 } else { blocking_stderr(s, sp.block_len) })
                .collect();
            (e_err, errs)
        }
    };

    Ok(GradientEstimate {
        energy,
        energy_stderr,
        gradient,
        stderr,
        skipped: degenerate.iter().filter(|&&d| d).count(),
        n_samples,
        n_distinct: configs.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningSchedule {
    pub initial: f64,
    /// Learning rate at iteration `t` is `initial / (1 + decay·t)`.
    pub decay: f64,
    /// Step along the unit gradient direction instead of the raw gradient.
    pub normalize: bool,
}

impl LearningSchedule {
    pub fn constant(rate: f64) -> Self {
        Self { initial: rate, decay: 0.0, normalize: false }
    }

    pub fn rate(&self, t: usize) -> f64 {
        self.initial / (1.0 + self.decay * t as f64)
    }

    fn validate(&self) -> Result<()> {
        if !self.initial.is_finite() || self.initial < 0.0 || !self.decay.is_finite() || self.decay < 0.0 {
            bail!(Argument, "learning rate and decay must be finite and non-negative");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgdRecord {
    pub iteration: usize,
    pub energy: f64,
    pub stderr: f64,
    pub grad_norm: f64,
    pub learning_rate: f64,
    pub skipped: usize,
}

#[derive(Clone, Debug)]
pub struct SgdResult {
    /// State with the lowest estimated energy over all iterations.
    pub peps: Peps,
    pub best_energy: f64,
    pub best_iteration: usize,
    pub trace: Vec<SgdRecord>,
}

/// Seed used by the sampler at iteration `t`.
fn iteration_seed(seed: u64, t: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(t as u64)
}

pub fn sgd_optimize(
    peps: &Peps,
    model: &Model,
    chi: usize,
    schedule: &LearningSchedule,
    iterations: usize,
    sampling: &GradientSampling,
    seed: u64,
) -> Result<SgdResult> {
    schedule.validate()?;
    if iterations == 0 {
        bail!(Argument, "at least one iteration required");
    }
    let mut current = peps.clone();
    let mut best: Option<(f64, usize, Peps)> = None;
    let mut trace = Vec::with_capacity(iterations);
    let mut e0 = None;
    for t in 0..iterations {
        let s = match sampling {
            GradientSampling::MonteCarlo(p) => {
                GradientSampling::MonteCarlo(SamplingParams { seed: iteration_seed(seed, t), ..p.clone() })
            }
            GradientSampling::Enumerate => GradientSampling::Enumerate,
        };
        let g = gradient_estimate(&current, model, chi, &s)?;
        let e_init = *e0.get_or_insert(g.energy);
        if !g.energy.is_finite() || g.gradient.iter().any(|x| !x.is_finite()) {
            bail!(Numerical, "non-finite energy or gradient at iteration {t}");
        }
        if e_init != 0.0 && g.energy.abs() > 10.0 * e_init.abs() {
            bail!(Numerical, "energy diverged at iteration {t}: {} against initial {e_init}", g.energy);
        }
        let lr = schedule.rate(t);
        let norm = g.norm();
        trace.push(SgdRecord {
            iteration: t,
            energy: g.energy,
            stderr: g.energy_stderr,
            grad_norm: norm,
            learning_rate: lr,
            skipped: g.skipped,
        });
        if best.as_ref().map_or(true, |(e, _, _)| g.energy < *e) {
            best = Some((g.energy, t, current.clone()));
        }
        let scale = if schedule.normalize {
            if norm > 0.0 { lr / norm } else { 0.0 }
        } else {
            lr
        };
        if scale != 0.0 {
            for ((s, e), gk) in parameter_map(&current).into_iter().zip(&g.gradient) {
                current.sites_mut()[s].data_mut()[e].re -= scale * gk;
            }
        }
    }
    let (best_energy, best_iteration, peps) = best.expect("at least one iteration");
    Ok(SgdResult { peps, best_energy, best_iteration, trace })
}
