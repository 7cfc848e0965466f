//! Truncated contractions of the (1+1)D Floquet network.

use super::{build_floquet_mpo, FloquetParams, Mpo};
use crate::error::{bail, Result};
use crate::grid::{contract_sequential, Grid};
use crate::mps::Mps;
use crate::scale::AmplitudeValue;
use crate::tensor::{contract, Tensor};

fn check_config(params: &FloquetParams, n: &[u8]) -> Result<()> {
    if n.len() != params.l {
        bail!(Argument, "configuration of length {} for a chain of {}", n.len(), params.l);
    }
    if n.iter().any(|&b| b > 1) {
        bail!(Argument, "configuration entries must be 0 or 1");
    }
    Ok(())
}

fn all_up(l: usize) -> Mps {
    Mps::product(&vec![Tensor::basis(2, 0); l]).expect("valid product state")
}

/// States `F^s |0…0⟩` for `s = 0..=t_max`, each obtained from the previous by
/// applying one period and compressing to `chi`.
pub fn conventional_trajectory(params: &FloquetParams, chi: usize) -> Result<Vec<Mps>> {
    if chi < 1 {
        bail!(Argument, "chi must be at least 1");
    }
    let mpo = build_floquet_mpo(params)?;
    let mut psi = all_up(params.l);
    let mut out = Vec::with_capacity(params.t_max + 1);
    out.push(psi.clone());
    for _ in 0..params.t_max {
        psi = psi.apply_mpo(&mpo.tensors)?;
        psi.compress(chi)?;
        out.push(psi.clone());
    }
    Ok(out)
}

pub fn evolve_conventional(params: &FloquetParams, chi: usize, t: usize) -> Result<Mps> {
    let p = FloquetParams { t_max: t, ..*params };
    Ok(conventional_trajectory(&p, chi)?.pop().expect("t + 1 states"))
}

/// The network `⟨n| F^t |0…0⟩` laid out with one row per chain site and one
/// column per period, time increasing to the right. The initial state is
/// folded into the first column and `⟨n|` into the last.
pub fn transverse_grid(mpo: &Mpo, n: &[u8], t: usize) -> Result<Grid> {
    if t == 0 {
        bail!(Argument, "the transverse network needs at least one period");
    }
    let l = mpo.len();
    let mut tensors = Vec::with_capacity(l * t);
    for (site, w) in mpo.tensors.iter().enumerate() {
        // (left, out, in, right) -> grid (up, left=in, down, right=out)
        let cell = w.permute(&[0, 2, 3, 1])?;
        for k in 0..t {
            let mut x = cell.clone();
            if k == 0 {
                x = x.slice(1, 0)?;
                let e = x.extents().to_vec();
                x = x.reshape(vec![e[0], 1, e[1], e[2]])?;
            }
            if k + 1 == t {
                x = x.slice(3, n[site] as usize)?;
                let e = x.extents().to_vec();
                x = x.reshape(vec![e[0], e[1], e[2], 1])?;
            }
            tensors.push(x);
        }
    }
    Grid::new(l, t, tensors)
}

/// Contracts the network site by site along the chain, compressing the
/// boundary (an MPS along the time axis) to `chi` after each site.
pub fn tnf_amplitude_transverse(params: &FloquetParams, n: &[u8], chi: usize, t: usize) -> Result<AmplitudeValue> {
    check_config(params, n)?;
    if t == 0 {
        return Ok(delta_amplitude(n));
    }
    let mpo = build_floquet_mpo(params)?;
    transverse_with(&mpo, n, chi, t)
}

pub(crate) fn transverse_with(mpo: &Mpo, n: &[u8], chi: usize, t: usize) -> Result<AmplitudeValue> {
    if t == 0 {
        return Ok(delta_amplitude(n));
    }
    Ok(contract_sequential(&transverse_grid(mpo, n, t)?, chi)?.0)
}

fn delta_amplitude(n: &[u8]) -> AmplitudeValue {
    if n.iter().all(|&b| b == 0) {
        AmplitudeValue::from_complex(crate::tensor::C64::new(1.0, 0.0))
    } else {
        AmplitudeValue::ZERO
    }
}

/// Starts from `⟨n|` and absorbs periods from the last one backwards,
/// compressing to `chi` after each, then closes with `|0…0⟩`.
pub fn tnf_amplitude_inverse_time(params: &FloquetParams, n: &[u8], chi: usize, t: usize) -> Result<AmplitudeValue> {
    check_config(params, n)?;
    let mpo = build_floquet_mpo(params)?;
    inverse_time_with(&mpo, n, chi, t)
}

pub(crate) fn inverse_time_with(mpo: &Mpo, n: &[u8], chi: usize, t: usize) -> Result<AmplitudeValue> {
    if chi < 1 {
        bail!(Argument, "chi must be at least 1");
    }
    // Acting on the bra contracts the output leg.
    let transposed: Vec<Tensor> = mpo.tensors.iter().map(|w| w.permute(&[0, 2, 1, 3])).collect::<Result<_>>()?;
    let mut bra = Mps::product(&n.iter().map(|&b| Tensor::basis(2, b as usize)).collect::<Vec<_>>())?;
    for _ in 0..t {
        bra = bra.apply_mpo(&transposed)?;
        bra.compress(chi)?;
    }
    bra.amplitude(&vec![0; mpo.len()])
}

/// A compressed operator stored as an MPS over combined `(out, in)` legs.
#[derive(Clone, Debug)]
pub struct OperatorMps {
    pub mps: Mps,
}

impl OperatorMps {
    pub fn identity(l: usize) -> Self {
        let id = Tensor::identity(2).reshape(vec![1, 4, 1]).expect("2x2 identity");
        Self { mps: Mps::new(vec![id; l]).expect("valid chain") }
    }

    /// `⟨n| M |0…0⟩`.
    pub fn amplitude(&self, n: &[u8]) -> Result<AmplitudeValue> {
        let idx: Vec<usize> = n.iter().map(|&b| 2 * b as usize).collect();
        self.mps.amplitude(&idx)
    }

    /// `self · mpo`, uncompressed.
    fn times(&self, mpo: &Mpo) -> Result<Self> {
        let mut tensors = Vec::with_capacity(mpo.len());
        for (m, w) in self.mps.tensors.iter().zip(&mpo.tensors) {
            let (la, ra) = (m.extents()[0], m.extents()[2]);
            let m4 = m.clone().reshape(vec![la, 2, 2, ra])?;
            // [la, o, ra] + [lb, i, rb] after summing the middle leg.
            let x = contract(&m4, w, &[(2, 1)])?;
            let e = x.extents().to_vec();
            let x = x.permute(&[0, 3, 1, 4, 2, 5])?;
            tensors.push(x.reshape(vec![e[0] * e[3], e[1] * e[4], e[2] * e[5]])?);
        }
        let mut mps = Mps::new(tensors)?;
        mps.log_scale = self.mps.log_scale;
        mps.is_zero = self.mps.is_zero;
        Ok(Self { mps })
    }
}

/// `F^t` built by multiplying in one period at a time on the input side,
/// compressing the operator to `chi` after each product. The truncations do
/// not depend on the configuration later used to read out amplitudes.
pub fn mpo_mpo_inverse(params: &FloquetParams, chi: usize, t: usize) -> Result<OperatorMps> {
    let p = FloquetParams { t_max: t, ..*params };
    Ok(mpo_mpo_trajectory(&p, chi)?.pop().expect("t + 1 operators"))
}

/// Compressed operators for `s = 0..=t_max`.
pub fn mpo_mpo_trajectory(params: &FloquetParams, chi: usize) -> Result<Vec<OperatorMps>> {
    if chi < 1 {
        bail!(Argument, "chi must be at least 1");
    }
    let mpo = build_floquet_mpo(params)?;
    let mut op = OperatorMps::identity(params.l);
    let mut out = vec![op.clone()];
    for _ in 0..params.t_max {
        op = op.times(&mpo)?;
        op.mps.compress(chi)?;
        out.push(op.clone());
    }
    Ok(out)
}
