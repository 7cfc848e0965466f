//! Dense complex tensors and pairwise contraction.
//!
//! Storage is row-major with respect to `extents`: the last index varies
//! fastest. Every contraction is lowered to a permutation followed by a single
//! matrix product, so the kernel in [`matmul_into`] is where the time goes.

use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{bail, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

thread_local! {
    static MULTIPLY_ADDS: Cell<u64> = const { Cell::new(0) };
}

/// Per-thread count of complex multiply-adds issued by the contraction kernel.
///
/// Used as a deterministic stand-in for wall-clock cost.
pub mod flops {
    use super::MULTIPLY_ADDS;

    pub fn reset() {
        MULTIPLY_ADDS.with(|c| c.set(0));
    }

    pub fn get() -> u64 {
        MULTIPLY_ADDS.with(|c| c.get())
    }

    pub(crate) fn add(n: u64) {
        MULTIPLY_ADDS.with(|c| c.set(c.get().wrapping_add(n)));
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    extents: Vec<usize>,
    data: Vec<C64>,
}

impl Tensor {
    pub fn new(extents: Vec<usize>, data: Vec<C64>) -> Result<Self> {
        if extents.iter().any(|&e| e == 0) {
            bail!(Dimension, "tensor extents must be positive, got {extents:?}");
        }
        let len: usize = extents.iter().product();
        if len != data.len() {
            bail!(
                Dimension,
                "data length {} does not match extents {:?} (product {len})",
                data.len(),
                extents
            );
        }
        Ok(Self { extents, data })
    }

    pub fn from_real(extents: Vec<usize>, values: &[f64]) -> Result<Self> {
        Self::new(extents, values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    pub fn zeros(extents: &[usize]) -> Self {
        assert!(extents.iter().all(|&e| e > 0), "zero extent in {extents:?}");
        let len = extents.iter().product();
        Self { extents: extents.to_vec(), data: vec![ZERO; len] }
    }

    pub fn ones(extents: &[usize]) -> Self {
        let mut t = Self::zeros(extents);
        t.data.fill(ONE);
        t
    }

    pub fn scalar(value: C64) -> Self {
        Self { extents: Vec::new(), data: vec![value] }
    }

    /// Square identity matrix of side `n`.
    pub fn identity(n: usize) -> Self {
        let mut t = Self::zeros(&[n, n]);
        for i in 0..n {
            t.data[i * n + i] = ONE;
        }
        t
    }

    /// Basis vector `e_index` of length `n`.
    pub fn basis(n: usize, index: usize) -> Self {
        let mut t = Self::zeros(&[n]);
        t.data[index] = ONE;
        t
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn rank(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<C64> {
        self.data
    }

    /// The single entry of a tensor with one element (scalars included).
    pub fn scalar_value(&self) -> Option<C64> {
        (self.data.len() == 1).then(|| self.data[0])
    }

    pub fn strides(&self) -> Vec<usize> {
        row_major_strides(&self.extents)
    }

    fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.extents.len());
        let mut off = 0;
        for (i, (&ix, &e)) in index.iter().zip(&self.extents).enumerate() {
            assert!(ix < e, "index {ix} out of range for axis {i} with extent {e}");
            off = off * e + ix;
        }
        off
    }

    pub fn get(&self, index: &[usize]) -> C64 {
        self.data[self.offset(index)]
    }

    pub fn set(&mut self, index: &[usize], value: C64) {
        let off = self.offset(index);
        self.data[off] = value;
    }

    pub fn reshape(self, extents: Vec<usize>) -> Result<Self> {
        Self::new(extents, self.data)
    }

    /// Reorders axes: axis `k` of the result is axis `perm[k]` of `self`.
    pub fn permute(&self, perm: &[usize]) -> Result<Self> {
        let rank = self.rank();
        if perm.len() != rank {
            bail!(Argument, "permutation {perm:?} has wrong length for rank {rank}");
        }
        let mut seen = vec![false; rank];
        for &p in perm {
            if p >= rank || seen[p] {
                bail!(Argument, "{perm:?} is not a permutation of 0..{rank}");
            }
            seen[p] = true;
        }
        if perm.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let src_strides = self.strides();
        let extents: Vec<usize> = perm.iter().map(|&p| self.extents[p]).collect();
        let strides: Vec<usize> = perm.iter().map(|&p| src_strides[p]).collect();
        let data = gather(&self.data, &extents, &strides);
        Ok(Self { extents, data })
    }

    /// Fixes axis `axis` to `index`, removing that axis.
    pub fn slice(&self, axis: usize, index: usize) -> Result<Self> {
        if axis >= self.rank() {
            bail!(Argument, "axis {axis} out of range for rank {}", self.rank());
        }
        if index >= self.extents[axis] {
            bail!(
                Argument,
                "index {index} out of range for axis {axis} with extent {}",
                self.extents[axis]
            );
        }
        let outer: usize = self.extents[..axis].iter().product();
        let inner: usize = self.extents[axis + 1..].iter().product();
        let e = self.extents[axis];
        let mut data = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * e + index) * inner;
            data.extend_from_slice(&self.data[base..base + inner]);
        }
        let mut extents = self.extents.clone();
        extents.remove(axis);
        Ok(Self { extents, data })
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { extents: self.extents.clone(), data: self.data.iter().map(|&x| x * c).collect() }
    }

    pub fn scale_real_in_place(&mut self, c: f64) {
        for x in &mut self.data {
            *x *= c;
        }
    }

    pub fn conj(&self) -> Self {
        Self { extents: self.extents.clone(), data: self.data.iter().map(|x| x.conj()).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.extents != other.extents {
            bail!(Dimension, "cannot add {:?} and {:?}", self.extents, other.extents);
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Self { extents: self.extents.clone(), data })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        other.scale(C64::new(-1.0, 0.0)).add(self)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.data.iter().all(|x| x.im == 0.0)
    }

    /// Outer product: indices of `self` followed by indices of `other`.
    pub fn outer(&self, other: &Self) -> Self {
        let mut data = Vec::with_capacity(self.len() * other.len());
        for &a in &self.data {
            data.extend(other.data.iter().map(|&b| a * b));
        }
        flops::add((self.len() * other.len()) as u64);
        let mut extents = self.extents.clone();
        extents.extend_from_slice(&other.extents);
        Self { extents, data }
    }
}

pub(crate) fn row_major_strides(extents: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; extents.len()];
    for i in (0..extents.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * extents[i + 1];
    }
    strides
}

/// Reads `src` through an arbitrary strided view into a dense row-major buffer.
fn gather(src: &[C64], extents: &[usize], strides: &[usize]) -> Vec<C64> {
    let len: usize = extents.iter().product();
    let mut out = Vec::with_capacity(len);
    let rank = extents.len();
    if rank == 0 {
        out.push(src[0]);
        return out;
    }
    // Innermost axis handled as a tight loop.
    let inner_e = extents[rank - 1];
    let inner_s = strides[rank - 1];
    let mut counter = vec![0usize; rank - 1];
    let mut base = 0usize;
    loop {
        if inner_s == 1 {
            out.extend_from_slice(&src[base..base + inner_e]);
        } else {
            let mut off = base;
            for _ in 0..inner_e {
                out.push(src[off]);
                off += inner_s;
            }
        }
        // Odometer over the outer axes.
        let mut axis = rank - 1;
        loop {
            if axis == 0 {
                return out;
            }
            axis -= 1;
            counter[axis] += 1;
            base += strides[axis];
            if counter[axis] < extents[axis] {
                break;
            }
            base -= strides[axis] * extents[axis];
            counter[axis] = 0;
        }
    }
}

/// `c[m×n] = a[m×k] · b[k×n]`, all row-major.
pub(crate) fn matmul_into(a: &[C64], b: &[C64], c: &mut [C64], m: usize, k: usize, n: usize) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    c.fill(ZERO);
    for i in 0..m {
        let row = &mut c[i * n..(i + 1) * n];
        let a_row = &a[i * k..(i + 1) * k];
        for (p, &a_ip) in a_row.iter().enumerate() {
            if a_ip == ZERO {
                continue;
            }
            let b_row = &b[p * n..(p + 1) * n];
            for (cj, &bj) in row.iter_mut().zip(b_row) {
                *cj += a_ip * bj;
            }
        }
    }
    flops::add((m * k * n) as u64);
}

pub(crate) fn matmul(a: &[C64], b: &[C64], m: usize, k: usize, n: usize) -> Vec<C64> {
    let mut c = vec![ZERO; m * n];
    matmul_into(a, b, &mut c, m, k, n);
    c
}

/// Contracts `a` and `b` over the index pairs `(axis of a, axis of b)`.
///
/// The result carries the unpaired axes of `a` in their original order,
/// followed by the unpaired axes of `b`.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor> {
    let mut used_a = vec![false; a.rank()];
    let mut used_b = vec![false; b.rank()];
    for &(ia, ib) in pairs {
        if ia >= a.rank() || ib >= b.rank() {
            bail!(
                Argument,
                "pair ({ia}, {ib}) out of range for ranks {} and {}",
                a.rank(),
                b.rank()
            );
        }
        if used_a[ia] || used_b[ib] {
            bail!(Argument, "index paired twice in {pairs:?}");
        }
        used_a[ia] = true;
        used_b[ib] = true;
        if a.extents[ia] != b.extents[ib] {
            bail!(
                Dimension,
                "paired extents differ: axis {ia} of a has {}, axis {ib} of b has {}",
                a.extents[ia],
                b.extents[ib]
            );
        }
    }
    let free_a: Vec<usize> = (0..a.rank()).filter(|&i| !used_a[i]).collect();
    let free_b: Vec<usize> = (0..b.rank()).filter(|&i| !used_b[i]).collect();

    let perm_a: Vec<usize> = free_a.iter().copied().chain(pairs.iter().map(|p| p.0)).collect();
    let perm_b: Vec<usize> = pairs.iter().map(|p| p.1).chain(free_b.iter().copied()).collect();
    let at = a.permute(&perm_a)?;
    let bt = b.permute(&perm_b)?;

    let m: usize = free_a.iter().map(|&i| a.extents[i]).product();
    let n: usize = free_b.iter().map(|&i| b.extents[i]).product();
    let k: usize = pairs.iter().map(|p| a.extents[p.0]).product();

    let data = matmul(&at.data, &bt.data, m, k, n);
    let extents: Vec<usize> = free_a
        .iter()
        .map(|&i| a.extents[i])
        .chain(free_b.iter().map(|&i| b.extents[i]))
        .collect();
    Tensor::new(extents, data)
}
