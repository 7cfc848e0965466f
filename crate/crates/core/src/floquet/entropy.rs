//! Reduced density matrices from enumerated amplitudes.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::evolve::{conventional_trajectory, inverse_time_with, mpo_mpo_trajectory, transverse_with};
use super::{build_floquet_mpo, exact_trajectory, FloquetParams, MAX_DENSE_SITES};
use crate::error::{bail, Result};
use crate::linalg::eigh;
use crate::peps::SpinConfiguration;
use crate::scale::AmplitudeValue;
use crate::tensor::C64;

/// Number of leading eigenvalues kept in a spectrum.
pub const SPECTRUM_LEN: usize = 40;

/// Every amplitude of an `l`-site chain (index order as for state vectors),
/// rescaled by a common factor so the largest has modulus one.
pub fn collect_amplitudes<F>(l: usize, f: F) -> Result<Vec<C64>>
where
    F: Fn(&[u8]) -> Result<AmplitudeValue> + Sync,
{
    if l > MAX_DENSE_SITES {
        bail!(Resource, "amplitude enumeration limited to {MAX_DENSE_SITES} sites, got {l}");
    }
    let amps: Vec<AmplitudeValue> =
        (0..1usize << l).into_par_iter().map(|i| f(&SpinConfiguration::from_index(i, l, 2).values)).collect::<Result<_>>()?;
    let top = amps.iter().map(AmplitudeValue::ln_abs).fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        bail!(Data, "every amplitude vanishes");
    }
    Ok(amps
        .iter()
        .map(|a| if a.is_zero { C64::new(0.0, 0.0) } else { a.mantissa * (a.log_scale - top).exp() })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducedDensityMatrix {
    pub dim: usize,
    /// Row-major, unit trace.
    pub data: Vec<C64>,
    pub region: Range<usize>,
}

/// `ρ_A[a, a'] = Σ_e ψ(a, e) ψ*(a', e)` for the contiguous `region`,
/// normalized to unit trace.
pub fn rdm_from_amplitudes(psi: &[C64], l: usize, region: Range<usize>) -> Result<ReducedDensityMatrix> {
    if l > MAX_DENSE_SITES {
        bail!(Resource, "reduced density matrices limited to {MAX_DENSE_SITES} sites, got {l}");
    }
    if psi.len() != 1 << l {
        bail!(Dimension, "{} amplitudes for {l} sites", psi.len());
    }
    if region.start >= region.end || region.end > l {
        bail!(Argument, "region {region:?} is not a nonempty part of {l} sites");
    }
    let na = region.len();
    let dim = 1usize << na;
    let denv = 1usize << (l - na);
    let tail = l - region.end;
    // Regroup amplitudes into an (a, e) matrix.
    let mut m = vec![C64::new(0.0, 0.0); dim * denv];
    for (s, &x) in psi.iter().enumerate() {
        let a = (s >> tail) & (dim - 1);
        let low = s & ((1 << tail) - 1);
        let head = s >> (tail + na);
        let e = (head << tail) | low;
        m[a * denv + e] = x;
    }
    let mut data = vec![C64::new(0.0, 0.0); dim * dim];
    data.par_chunks_mut(dim).enumerate().for_each(|(a, row)| {
        let ra = &m[a * denv..(a + 1) * denv];
        for (b, out) in row.iter_mut().enumerate() {
            let rb = &m[b * denv..(b + 1) * denv];
            *out = ra.iter().zip(rb).map(|(x, y)| x * y.conj()).sum();
        }
    });
    let trace: f64 = (0..dim).map(|i| data[i * dim + i].re).sum();
    if trace <= 0.0 || !trace.is_finite() {
        bail!(Data, "reduced density matrix has trace {trace}");
    }
    data.iter_mut().for_each(|x| *x /= trace);
    Ok(ReducedDensityMatrix { dim, data, region })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    /// `−Σ λ ln λ` over positive eigenvalues.
    pub entropy: f64,
    /// Leading eigenvalues, descending.
    pub spectrum: Vec<f64>,
    pub min_eigenvalue: f64,
    /// Negative eigenvalues left out of the entropy sum.
    pub clipped: usize,
}

pub fn entropy_and_spectrum(rho: &ReducedDensityMatrix) -> Result<SpectrumEntry> {
    let n = rho.dim;
    let trace: C64 = (0..n).map(|i| rho.data[i * n + i]).sum();
    if (trace - C64::new(1.0, 0.0)).norm() > 1e-6 {
        bail!(Data, "density matrix trace {trace} deviates from one");
    }
    let (mut values, _) = eigh(n, &rho.data)?;
    values.reverse();
    let clipped = values.iter().filter(|&&v| v < 0.0).count();
    let entropy = values.iter().filter(|&&v| v > 0.0).map(|&v| -v * v.ln()).sum();
    let min_eigenvalue = *values.last().expect("nonempty");
    values.truncate(SPECTRUM_LEN);
    Ok(SpectrumEntry { entropy, spectrum: values, min_eigenvalue, clipped })
}

/// Centered segments of every length `1..l`, with their entropies.
pub fn bulk_entropy_scaling(psi: &[C64], l: usize) -> Result<Vec<(usize, f64)>> {
    (1..l)
        .map(|lb| {
            let start = (l - lb) / 2;
            let rho = rdm_from_amplitudes(psi, l, start..start + lb)?;
            Ok((lb, entropy_and_spectrum(&rho)?.entropy))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    #[serde(alias = "mps")]
    Conventional,
    #[serde(alias = "tnf-transverse")]
    Transverse,
    #[serde(alias = "tnf-inverse")]
    InverseTime,
    #[serde(alias = "mpo")]
    MpoMpo,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Conventional => "conventional",
            Method::Transverse => "transverse",
            Method::InverseTime => "inverse-time",
            Method::MpoMpo => "mpo-mpo",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRecord {
    pub t: usize,
    pub entropy: f64,
    pub spectrum: Vec<f64>,
    pub min_eigenvalue: f64,
    pub clipped: usize,
}

/// Entropy and spectrum of `region` (the left half by default) for every
/// `t = 0..=t_max`, with amplitudes from `method` at bond dimension `chi`.
pub fn entanglement_dynamics(
    params: &FloquetParams,
    method: Method,
    chi: usize,
    region: Option<Range<usize>>,
) -> Result<Vec<DynamicsRecord>> {
    params.validate()?;
    let l = params.l;
    if l > MAX_DENSE_SITES {
        bail!(Resource, "entanglement dynamics limited to {MAX_DENSE_SITES} sites, got {l}");
    }
    if chi < 1 {
        bail!(Argument, "chi must be at least 1");
    }
    let region = region.unwrap_or(0..l / 2);
    let states: Vec<Vec<C64>> = match method {
        Method::Exact => exact_trajectory(params, params.t_max)?,
        Method::Conventional => conventional_trajectory(params, chi)?
            .iter()
            .map(|m| collect_amplitudes(l, |n| m.amplitude(&n.iter().map(|&b| b as usize).collect::<Vec<_>>())))
            .collect::<Result<_>>()?,
        Method::MpoMpo => {
            mpo_mpo_trajectory(params, chi)?.iter().map(|op| collect_amplitudes(l, |n| op.amplitude(n))).collect::<Result<_>>()?
        }
        Method::Transverse | Method::InverseTime => {
            let mpo = build_floquet_mpo(params)?;
            (0..=params.t_max)
                .map(|t| {
                    collect_amplitudes(l, |n| {
                        if method == Method::Transverse {
                            transverse_with(&mpo, n, chi, t)
                        } else {
                            inverse_time_with(&mpo, n, chi, t)
                        }
                    })
                })
                .collect::<Result<_>>()?
        }
    };
    states
        .iter()
        .enumerate()
        .map(|(t, psi)| {
            let e = entropy_and_spectrum(&rdm_from_amplitudes(psi, l, region.clone())?)?;
            Ok(DynamicsRecord { t, entropy: e.entropy, spectrum: e.spectrum, min_eigenvalue: e.min_eigenvalue, clipped: e.clipped })
        })
        .collect()
}
