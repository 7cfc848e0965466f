//! Truncated, gauge-fixed SVD and QR splits of tensors.
//!
//! Raw SVD output is only defined up to a phase per singular triplet. Every
//! split here fixes that phase so the largest-magnitude entry of each left
//! singular vector is real and positive (lowest flat index wins ties), which
//! makes repeated splits of the same input bit-identical.

use nalgebra::DMatrix;

use crate::error::{bail, Result};
use crate::tensor::{flops, Tensor, C64, ZERO};

#[derive(Clone, Debug)]
pub struct TruncatedSvd {
    /// Left factor with extents `[left extents..., k]`; its columns are orthonormal.
    pub isometry: Tensor,
    /// Kept singular values, descending.
    pub singulars: Vec<f64>,
    /// Right factor with extents `[k, right extents...]`.
    pub right: Tensor,
    /// Squared weight of the dropped singular values relative to the total.
    pub discarded_weight: f64,
}

impl TruncatedSvd {
    /// `isometry · diag(singulars) · right`, with the original index grouping.
    pub fn reconstruct(&self) -> Result<Tensor> {
        let mut us = self.isometry.clone();
        let k = self.singulars.len();
        for (i, x) in us.data_mut().iter_mut().enumerate() {
            *x *= self.singulars[i % k];
        }
        crate::tensor::contract(&us, &self.right, &[(us.rank() - 1, 0)])
    }

    /// Left factor with the singular values multiplied in.
    pub fn weighted_isometry(&self) -> Tensor {
        let mut us = self.isometry.clone();
        let k = self.singulars.len();
        for (i, x) in us.data_mut().iter_mut().enumerate() {
            *x *= self.singulars[i % k];
        }
        us
    }

    /// Right factor with the singular values multiplied in.
    pub fn weighted_right(&self) -> Tensor {
        let mut sv = self.right.clone();
        let k = self.singulars.len();
        let inner = sv.len() / k;
        for (i, x) in sv.data_mut().iter_mut().enumerate() {
            *x *= self.singulars[i / inner];
        }
        sv
    }
}

/// Dense SVD of a row-major `m×n` matrix: `(u m×r, s, vt r×n)`, `r = min(m, n)`.
///
/// Singular values come back in descending order (stable with respect to
/// the backend order on exact ties) and every triplet is gauge-fixed.
pub(crate) fn svd_matrix(m: usize, n: usize, data: &[C64]) -> Result<(Vec<C64>, Vec<f64>, Vec<C64>)> {
    let mat = faer::Mat::<C64>::from_fn(m, n, |i, j| data[i * n + j]);
    flops::add((m * n * m.min(n)) as u64 * 4);
    let svd = match mat.thin_svd() {
        Ok(svd) => svd,
        Err(e) => bail!(Numerical, "SVD of a {m}x{n} matrix did not converge: {e:?}"),
    };
    let (u, v) = (svd.U(), svd.V());
    let sv = svd.S().column_vector();
    let r = m.min(n);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));

    let mut u_out = vec![ZERO; m * r];
    let mut vt_out = vec![ZERO; r * n];
    let mut s_out = Vec::with_capacity(r);
    for (col, &src) in order.iter().enumerate() {
        s_out.push(sv[src].re.max(0.0));
        let mut best = 0;
        let mut best_mag = -1.0;
        for i in 0..m {
            let mag = u[(i, src)].norm();
            if mag > best_mag {
                best_mag = mag;
                best = i;
            }
        }
        let pivot = u[(best, src)];
        let phase = if pivot.norm() > 0.0 { pivot / pivot.norm() } else { C64::new(1.0, 0.0) };
        let inv = phase.conj();
        for i in 0..m {
            u_out[i * r + col] = u[(i, src)] * inv;
        }
        for j in 0..n {
            vt_out[col * n + j] = v[(j, src)].conj() * phase;
        }
    }
    Ok((u_out, s_out, vt_out))
}

/// Groups `left` axes (in the given order) against the remaining axes (in
/// their original order) and returns the permuted tensor with the group sizes.
fn group(t: &Tensor, left: &[usize]) -> Result<(Tensor, Vec<usize>, Vec<usize>)> {
    let rank = t.rank();
    if left.is_empty() || left.len() >= rank {
        bail!(Argument, "left index group {left:?} must be a proper nonempty subset of 0..{rank}");
    }
    let mut is_left = vec![false; rank];
    for &i in left {
        if i >= rank || is_left[i] {
            bail!(Argument, "invalid left index group {left:?} for rank {rank}");
        }
        is_left[i] = true;
    }
    let right: Vec<usize> = (0..rank).filter(|&i| !is_left[i]).collect();
    let perm: Vec<usize> = left.iter().chain(&right).copied().collect();
    let p = t.permute(&perm)?;
    let le = left.iter().map(|&i| t.extents()[i]).collect();
    let re = right.iter().map(|&i| t.extents()[i]).collect();
    Ok((p, le, re))
}

/// Splits `t` into isometry · singular values · right factor, keeping at most
/// `chi` singular values.
pub fn svd_split(t: &Tensor, left_indices: &[usize], chi: usize) -> Result<TruncatedSvd> {
    svd_split_with_cutoff(t, left_indices, chi, 0.0)
}

/// As [`svd_split`], additionally dropping singular values at or below
/// `rel_cutoff · s_max` (at least one value is always kept).
pub fn svd_split_with_cutoff(
    t: &Tensor,
    left_indices: &[usize],
    chi: usize,
    rel_cutoff: f64,
) -> Result<TruncatedSvd> {
    if chi < 1 {
        bail!(Argument, "bond dimension chi must be at least 1");
    }
    let (p, le, re) = group(t, left_indices)?;
    let m: usize = le.iter().product();
    let n: usize = re.iter().product();
    let (u, s, vt) = svd_matrix(m, n, p.data())?;
    let r = s.len();

    let smax = s.first().copied().unwrap_or(0.0);
    let mut keep = chi.min(r);
    if rel_cutoff > 0.0 {
        let above = s.iter().take_while(|&&x| x > rel_cutoff * smax).count();
        keep = keep.min(above.max(1));
    }
    let total: f64 = s.iter().map(|x| x * x).sum();
    let dropped: f64 = s[keep..].iter().map(|x| x * x).sum();
    let discarded_weight = if total > 0.0 { dropped / total } else { 0.0 };

    let mut iso = Vec::with_capacity(m * keep);
    for i in 0..m {
        iso.extend_from_slice(&u[i * r..i * r + keep]);
    }
    let right = vt[..keep * n].to_vec();

    let mut iso_ext = le;
    iso_ext.push(keep);
    let mut right_ext = vec![keep];
    right_ext.extend(re);
    Ok(TruncatedSvd {
        isometry: Tensor::new(iso_ext, iso)?,
        singulars: s[..keep].to_vec(),
        right: Tensor::new(right_ext, right)?,
        discarded_weight,
    })
}

/// Thin QR split: `t = q · r` with `q` column-isometric over the `left` group.
///
/// Returns `(q, r)` with extents `[left..., k]` and `[k, right...]`.
pub fn qr_split(t: &Tensor, left_indices: &[usize]) -> Result<(Tensor, Tensor)> {
    let (p, le, re) = group(t, left_indices)?;
    let m: usize = le.iter().product();
    let n: usize = re.iter().product();
    let k = m.min(n);
    let mat = DMatrix::from_row_slice(m, n, p.data());
    flops::add((m * n * k) as u64 * 2);
    let qr = mat.qr();
    let q = qr.q();
    let r = qr.r();
    let mut qd = Vec::with_capacity(m * k);
    for i in 0..m {
        for j in 0..k {
            qd.push(q[(i, j)]);
        }
    }
    let mut rd = Vec::with_capacity(k * n);
    for i in 0..k {
        for j in 0..n {
            rd.push(r[(i, j)]);
        }
    }
    let mut q_ext = le;
    q_ext.push(k);
    let mut r_ext = vec![k];
    r_ext.extend(re);
    Ok((Tensor::new(q_ext, qd)?, Tensor::new(r_ext, rd)?))
}
