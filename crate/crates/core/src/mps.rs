//! Open-boundary matrix product states with a global log scale.
//!
//! Site tensors are rank 3 with index order `(left, physical, right)`. The
//! same type serves as the boundary MPS of a 2D contraction (where the
//! "physical" legs are the open bonds of the last absorbed row) and as the
//! time-evolved state of a 1D chain.

use crate::error::{bail, Result};
use crate::scale::{renormalize, AmplitudeValue};
use crate::svd::{qr_split, svd_split};
use crate::tensor::{contract, Tensor, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Mps {
    pub tensors: Vec<Tensor>,
    pub log_scale: f64,
    /// Set once any site tensor became exactly zero.
    pub is_zero: bool,
}

impl Mps {
    pub fn new(tensors: Vec<Tensor>) -> Result<Self> {
        if tensors.is_empty() {
            bail!(Argument, "an MPS needs at least one site");
        }
        for (i, t) in tensors.iter().enumerate() {
            if t.rank() != 3 {
                bail!(Dimension, "site {i} has rank {}, expected 3", t.rank());
            }
        }
        for i in 0..tensors.len() - 1 {
            if tensors[i].extents()[2] != tensors[i + 1].extents()[0] {
                bail!(Dimension, "bond between sites {i} and {} does not match", i + 1);
            }
        }
        if tensors[0].extents()[0] != 1 || tensors[tensors.len() - 1].extents()[2] != 1 {
            bail!(Dimension, "open boundary bonds must have extent 1");
        }
        Ok(Self { tensors, log_scale: 0.0, is_zero: false })
    }

    /// Boundary with nothing absorbed: every site is a 1×1×1 tensor of ones.
    pub fn trivial(len: usize) -> Self {
        Self { tensors: vec![Tensor::ones(&[1, 1, 1]); len], log_scale: 0.0, is_zero: false }
    }

    /// Product state from one vector per site.
    pub fn product(vectors: &[Tensor]) -> Result<Self> {
        let tensors = vectors
            .iter()
            .map(|v| {
                if v.rank() != 1 {
                    bail!(Dimension, "product state factors must be vectors");
                }
                v.clone().reshape(vec![1, v.len(), 1])
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(tensors)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.extents()[1]).collect()
    }

    /// Internal bond extents, `len - 1` of them.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.extents()[2]).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    fn absorb_scale(&mut self, site: usize) {
        let t = std::mem::replace(&mut self.tensors[site], Tensor::scalar(C64::new(0.0, 0.0)));
        let r = renormalize(t);
        self.tensors[site] = r.tensor;
        self.log_scale += r.log_factor;
        self.is_zero |= r.is_zero;
    }

    /// Compresses every internal bond to at most `chi`.
    ///
    /// Left-to-right QR canonicalization followed by a right-to-left sweep of
    /// truncated SVDs. Returns the summed discarded weight of the sweep.
    pub fn compress(&mut self, chi: usize) -> Result<f64> {
        if chi < 1 {
            bail!(Argument, "bond dimension chi must be at least 1");
        }
        let n = self.len();
        if n == 1 || self.is_zero {
            if n == 1 {
                self.absorb_scale(0);
            }
            return Ok(0.0);
        }
        for i in 0..n - 1 {
            let (q, r) = qr_split(&self.tensors[i], &[0, 1])?;
            self.tensors[i] = q;
            self.tensors[i + 1] = contract(&r, &self.tensors[i + 1], &[(1, 0)])?;
            self.absorb_scale(i + 1);
            if self.is_zero {
                return Ok(0.0);
            }
        }
        let mut discarded = 0.0;
        for i in (1..n).rev() {
            let svd = svd_split(&self.tensors[i], &[0], chi)?;
            discarded += svd.discarded_weight;
            let us = svd.weighted_isometry();
            self.tensors[i] = svd.right;
            self.tensors[i - 1] = contract(&self.tensors[i - 1], &us, &[(2, 0)])?;
            self.absorb_scale(i - 1);
            if self.is_zero {
                return Ok(discarded);
            }
        }
        Ok(discarded)
    }

    /// Absorbs a row of rank-4 tensors `(up, left, down, right)` whose `up`
    /// legs attach to this MPS's physical legs. No compression.
    pub fn absorb_row(&self, row: &[Tensor]) -> Result<Mps> {
        if row.len() != self.len() {
            bail!(Dimension, "row of length {} against boundary of length {}", row.len(), self.len());
        }
        let mut tensors = Vec::with_capacity(row.len());
        for (b, t) in self.tensors.iter().zip(row) {
            if t.rank() != 4 {
                bail!(Dimension, "row tensors must have rank 4");
            }
            // [l, r] x [L, d, R] -> [l, r, L, d, R] -> [l, L, d, r, R]
            let x = contract(b, t, &[(1, 0)])?;
            let e = x.extents().to_vec();
            let x = x.permute(&[0, 2, 3, 1, 4])?;
            tensors.push(x.reshape(vec![e[0] * e[2], e[3], e[1] * e[4]])?);
        }
        let mut out = Mps { tensors, log_scale: self.log_scale, is_zero: self.is_zero };
        for i in 0..out.len() {
            out.absorb_scale(i);
        }
        Ok(out)
    }

    /// Applies an operator given as rank-4 tensors `(left, out, in, right)`
    /// to the physical legs. No compression.
    pub fn apply_mpo(&self, mpo: &[Tensor]) -> Result<Mps> {
        // (left, out, in, right) -> row form (up=in, left, down=out, right)
        let row = mpo.iter().map(|w| w.permute(&[2, 0, 1, 3])).collect::<Result<Vec<_>>>()?;
        self.absorb_row(&row)
    }

    /// Scalar value of an MPS whose physical legs all have extent 1.
    pub fn contract_to_scalar(&self) -> Result<AmplitudeValue> {
        if self.is_zero {
            return Ok(AmplitudeValue::ZERO);
        }
        if self.phys_dims().iter().any(|&d| d != 1) {
            bail!(Dimension, "open physical legs remain: {:?}", self.phys_dims());
        }
        let slices: Vec<Tensor> = self.tensors.iter().map(|t| t.slice(1, 0)).collect::<Result<_>>()?;
        chain_product(&slices, self.log_scale)
    }

    /// `⟨config|ψ⟩` with one physical index per site.
    pub fn amplitude(&self, config: &[usize]) -> Result<AmplitudeValue> {
        if config.len() != self.len() {
            bail!(Dimension, "configuration length {} for {} sites", config.len(), self.len());
        }
        if self.is_zero {
            return Ok(AmplitudeValue::ZERO);
        }
        let slices: Vec<Tensor> =
            self.tensors.iter().zip(config).map(|(t, &s)| t.slice(1, s)).collect::<Result<_>>()?;
        chain_product(&slices, self.log_scale)
    }

    /// Dense tensor over all physical legs (including the log scale).
    pub fn to_dense(&self) -> Result<Tensor> {
        let mut acc = self.tensors[0].slice(0, 0)?; // [p0, r]
        for t in &self.tensors[1..] {
            acc = contract(&acc, t, &[(acc.rank() - 1, 0)])?;
        }
        let acc = acc.slice(acc.rank() - 1, 0)?;
        Ok(acc.scale(C64::new(self.log_scale.exp(), 0.0)))
    }
}

/// Product of `1×a, a×b, …, z×1` matrices with renormalization along the way.
fn chain_product(mats: &[Tensor], mut log_scale: f64) -> Result<AmplitudeValue> {
    let mut acc = mats[0].clone();
    for m in &mats[1..] {
        let r = renormalize(contract(&acc, m, &[(1, 0)])?);
        if r.is_zero {
            return Ok(AmplitudeValue::ZERO);
        }
        log_scale += r.log_factor;
        acc = r.tensor;
    }
    let v = acc.scalar_value().ok_or_else(|| crate::TnfError::Dimension("non-scalar chain end".into()))?;
    Ok(AmplitudeValue::from_parts(v, log_scale))
}
