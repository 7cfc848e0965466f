//! Metropolis sampling with nearest-neighbour exchange moves.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{local_energy, make_source, AmplitudeSource, Mode};
use crate::error::{bail, Result};
use crate::model::{Boundary, Lattice, Model};
use crate::peps::{Peps, SpinConfiguration};
use crate::scale::AmplitudeValue;
use crate::tensor::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub n_sweeps: usize,
    /// Defaults to `max(100, n_sweeps / 10)`.
    pub n_warmup: Option<usize>,
    pub n_chains: usize,
    pub seed: u64,
    pub block_len: usize,
    /// Starting configuration; Néel order when absent.
    pub initial: Option<SpinConfiguration>,
}

impl SamplingParams {
    pub fn new(n_sweeps: usize, n_chains: usize, seed: u64) -> Self {
        Self { n_sweeps, n_warmup: None, n_chains, seed, block_len: 50, initial: None }
    }

    pub fn warmup(&self) -> usize {
        self.n_warmup.unwrap_or((self.n_sweeps / 10).max(100))
    }

    fn validate(&self) -> Result<()> {
        if self.n_sweeps == 0 || self.n_chains == 0 || self.block_len == 0 {
            bail!(Argument, "sweeps, chains and block length must be positive");
        }
        Ok(())
    }
}

/// Exchange moves of one sweep: for each row, its horizontal bonds, then the
/// vertical bonds down to the next row (wrap bonds included on periodic
/// lattices).
pub fn move_schedule(lattice: &Lattice) -> Vec<(usize, usize)> {
    let (rows, cols) = (lattice.rows, lattice.cols);
    let pbc = lattice.boundary == Boundary::Pbc;
    let mut moves = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                moves.push((lattice.index(r, c), lattice.index(r, c + 1)));
            } else if pbc {
                moves.push((lattice.index(r, c), lattice.index(r, 0)));
            }
        }
        for c in 0..cols {
            if r + 1 < rows {
                moves.push((lattice.index(r, c), lattice.index(r + 1, c)));
            } else if pbc {
                moves.push((lattice.index(r, c), lattice.index(0, c)));
            }
        }
    }
    moves
}

pub struct ChainState {
    pub config: SpinConfiguration,
    pub amp: AmplitudeValue,
    pub rng: ChaCha8Rng,
}

impl ChainState {
    /// Chain started at `config`, with a random stream derived from
    /// `(seed, chain_index)`.
    pub fn new(
        source: &mut dyn AmplitudeSource,
        config: SpinConfiguration,
        seed: u64,
        chain_index: u64,
    ) -> Result<Self> {
        let amp = source.amplitude(&config)?;
        if amp.is_zero {
            bail!(Precondition, "initial configuration has zero amplitude");
        }
        source.commit(&config, amp);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain_index);
        Ok(Self { config, amp, rng })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub proposed: u64,
    pub accepted: u64,
}

/// Proposes every antiparallel pair of `schedule` in order, accepting with
/// probability `min(1, |Ψ(n')/Ψ(n)|²)`.
pub fn metropolis_sweep(
    chain: &mut ChainState,
    source: &mut dyn AmplitudeSource,
    schedule: &[(usize, usize)],
) -> Result<SweepStats> {
    let mut stats = SweepStats::default();
    for &(i, j) in schedule {
        if chain.config.values[i] == chain.config.values[j] {
            continue;
        }
        stats.proposed += 1;
        let mut next = chain.config.clone();
        next.values.swap(i, j);
        let amp = source.amplitude(&next)?;
        let u: f64 = chain.rng.gen();
        if amp.is_zero {
            continue;
        }
        let ratio = amp.ratio(&chain.amp).expect("chain amplitude nonzero").norm_sqr();
        if u < ratio {
            source.commit(&next, amp);
            chain.config = next;
            chain.amp = amp;
            stats.accepted += 1;
        }
    }
    Ok(stats)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub sweep: usize,
    /// Mean local energy over chains at this sweep.
    pub energy: f64,
    /// Standard error across chains (zero for a single chain).
    pub stderr: f64,
    pub acceptance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub n_sites: usize,
    pub per_site_mean: f64,
    pub per_site_stderr: f64,
    /// Mean imaginary part of the local energy (zero for real states).
    pub mean_imag: f64,
    pub acceptance_rate: f64,
    pub frozen_chains: usize,
    pub warnings: Vec<String>,
    pub series: Vec<SweepRecord>,
}

pub(crate) struct ChainRun {
    pub samples: Vec<f64>,
    pub imag: f64,
    pub accepted: Vec<u64>,
    pub proposed: Vec<u64>,
    /// Configuration and complex local energy at each measurement sweep.
    pub configs: Vec<(SpinConfiguration, C64)>,
}

fn run_chain(
    model: &Model,
    source: &mut dyn AmplitudeSource,
    params: &SamplingParams,
    chain_index: usize,
) -> Result<ChainRun> {
    let lattice = &model.lattice;
    let initial = params.initial.clone().unwrap_or_else(|| SpinConfiguration::neel(lattice.rows, lattice.cols));
    if initial.len() != lattice.n_sites() {
        bail!(Argument, "initial configuration has {} sites, lattice has {}", initial.len(), lattice.n_sites());
    }
    let mut chain = ChainState::new(source, initial, params.seed, chain_index as u64)?;
    let schedule = move_schedule(lattice);
    for _ in 0..params.warmup() {
        metropolis_sweep(&mut chain, source, &schedule)?;
    }
    let mut run = ChainRun {
        samples: Vec::with_capacity(params.n_sweeps),
        imag: 0.0,
        accepted: Vec::with_capacity(params.n_sweeps),
        proposed: Vec::with_capacity(params.n_sweeps),
        configs: Vec::with_capacity(params.n_sweeps),
    };
    for _ in 0..params.n_sweeps {
        let s = metropolis_sweep(&mut chain, source, &schedule)?;
        let e = local_energy(model, source, &chain.config, &chain.amp)?;
        if !e.re.is_finite() || !e.im.is_finite() {
            bail!(Numerical, "non-finite local energy in chain {chain_index}");
        }
        run.samples.push(e.re);
        run.imag += e.im;
        run.accepted.push(s.accepted);
        run.proposed.push(s.proposed);
        run.configs.push((chain.config.clone(), e));
    }
    Ok(run)
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Standard error of the mean from non-overlapping blocks.
pub(crate) fn blocking_stderr(chains: &[Vec<f64>], block_len: usize) -> f64 {
    let mut blocks = Vec::new();
    for s in chains {
        for b in s.chunks_exact(block_len) {
            blocks.push(mean(b));
        }
    }
    let use_raw = blocks.len() < 2;
    let data: Vec<f64> = if use_raw { chains.iter().flatten().copied().collect() } else { blocks };
    if data.len() < 2 {
        return 0.0;
    }
    let m = mean(&data);
    let var = data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (data.len() - 1) as f64;
    (var / data.len() as f64).sqrt()
}

/// Energy estimate with chains driven by sources from `factory`.
pub fn estimate_energy_with<'a, F>(model: &Model, factory: F, params: &SamplingParams) -> Result<EnergyEstimate>
where
    F: Fn() -> Result<Box<dyn AmplitudeSource + 'a>> + Sync,
{
    let runs = run_chains(model, factory, params)?;
    Ok(summarize(model, params, runs))
}

pub(crate) fn run_chains<'a, F>(model: &Model, factory: F, params: &SamplingParams) -> Result<Vec<ChainRun>>
where
    F: Fn() -> Result<Box<dyn AmplitudeSource + 'a>> + Sync,
{
    params.validate()?;
    (0..params.n_chains)
        .into_par_iter()
        .map(|c| {
            let mut src = factory()?;
            run_chain(model, src.as_mut(), params, c)
        })
        .collect()
}

fn summarize(model: &Model, params: &SamplingParams, runs: Vec<ChainRun>) -> EnergyEstimate {
    let n_chains = runs.len();
    let chains: Vec<Vec<f64>> = runs.iter().map(|r| r.samples.clone()).collect();
    let all: Vec<f64> = chains.iter().flatten().copied().collect();
    let n_samples = all.len();
    let m = mean(&all);
    let stderr = blocking_stderr(&chains, params.block_len);
    let proposed: u64 = runs.iter().flat_map(|r| &r.proposed).sum();
    let accepted: u64 = runs.iter().flat_map(|r| &r.accepted).sum();
    let mut warnings = Vec::new();
    let mut frozen = 0;
    for (c, r) in runs.iter().enumerate() {
        let a: u64 = r.accepted.iter().sum();
        if a == 0 {
            frozen += 1;
            warnings.push(format!(
                "chain {c} is frozen: accepted none of {} proposals",
                r.proposed.iter().sum::<u64>()
            ));
        }
    }
    let series = (0..params.n_sweeps)
        .map(|s| {
            let xs: Vec<f64> = runs.iter().map(|r| r.samples[s]).collect();
            let e = mean(&xs);
            let se = if n_chains > 1 {
                let var = xs.iter().map(|x| (x - e) * (x - e)).sum::<f64>() / (n_chains - 1) as f64;
                (var / n_chains as f64).sqrt()
            } else {
                0.0
            };
            let p: u64 = runs.iter().map(|r| r.proposed[s]).sum();
            let a: u64 = runs.iter().map(|r| r.accepted[s]).sum();
            SweepRecord { sweep: s, energy: e, stderr: se, acceptance: if p > 0 { a as f64 / p as f64 } else { 0.0 } }
        })
        .collect();
    let n_sites = model.n_sites();
    EnergyEstimate {
        mean: m,
        stderr,
        n_samples,
        n_sites,
        per_site_mean: m / n_sites as f64,
        per_site_stderr: stderr / n_sites as f64,
        mean_imag: runs.iter().map(|r| r.imag).sum::<f64>() / n_samples as f64,
        acceptance_rate: if proposed > 0 { accepted as f64 / proposed as f64 } else { 0.0 },
        frozen_chains: frozen,
        warnings,
        series,
    }
}

/// Monte Carlo energy of `peps` under the chosen amplitude semantics.
pub fn estimate_energy(
    peps: &Peps,
    model: &Model,
    mode: Mode,
    chi: usize,
    params: &SamplingParams,
) -> Result<EnergyEstimate> {
    if model.n_sites() != peps.n_sites() {
        bail!(Argument, "model has {} sites, PEPS has {}", model.n_sites(), peps.n_sites());
    }
    estimate_energy_with(model, || make_source(peps, mode, chi), params)
}
