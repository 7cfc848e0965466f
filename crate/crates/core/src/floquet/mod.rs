//! Kicked-Ising Floquet dynamics on an open chain.
//!
//! One period is `F = e^{igΣX} e^{ihΣZ} Π_{even} e^{iJ ZZ} Π_{odd} e^{iJ ZZ}`,
//! with bonds counted from 1 (so the "odd" layer starts at the first pair).
//! Basis state 0 is the `+1` eigenstate of `Z`; site 0 is the most
//! significant bit of a state index.

mod entropy;
mod evolve;

pub use entropy::{
    bulk_entropy_scaling, collect_amplitudes, entanglement_dynamics, entropy_and_spectrum, rdm_from_amplitudes,
    DynamicsRecord, Method, ReducedDensityMatrix, SpectrumEntry, SPECTRUM_LEN,
};
pub use evolve::{
    conventional_trajectory, evolve_conventional, mpo_mpo_inverse, tnf_amplitude_inverse_time,
    tnf_amplitude_transverse, transverse_grid, OperatorMps,
};

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::svd::svd_split_with_cutoff;
use crate::tensor::{contract, Tensor, C64};

/// Largest chain handled by dense state vectors.
pub const MAX_DENSE_SITES: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloquetParams {
    pub l: usize,
    pub j: f64,
    pub g: f64,
    pub h: f64,
    pub t_max: usize,
}

impl FloquetParams {
    pub fn new(l: usize, j: f64, g: f64, h: f64, t_max: usize) -> Result<Self> {
        let p = Self { l, j, g, h, t_max };
        p.validate()?;
        Ok(p)
    }

    /// `(J, g, h) = (π/4, π/4, 0.5)`.
    pub fn maximally_chaotic(l: usize, t_max: usize) -> Self {
        Self { l, j: std::f64::consts::FRAC_PI_4, g: std::f64::consts::FRAC_PI_4, h: 0.5, t_max }
    }

    /// `(J, g, h) = (0.7, 0.5, 0.5)`.
    pub fn less_chaotic(l: usize, t_max: usize) -> Self {
        Self { l, j: 0.7, g: 0.5, h: 0.5, t_max }
    }

    pub fn validate(&self) -> Result<()> {
        if self.l < 2 {
            bail!(Argument, "chain length must be at least 2, got {}", self.l);
        }
        if !(self.j.is_finite() && self.g.is_finite() && self.h.is_finite()) {
            bail!(Argument, "couplings must be finite");
        }
        Ok(())
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn delta(a: usize, b: usize) -> C64 {
    if a == b {
        c(1.0, 0.0)
    } else {
        c(0.0, 0.0)
    }
}

/// `e^{igX}` as a row-major 2×2 matrix.
pub fn kick_gate(g: f64) -> [C64; 4] {
    let (s, co) = g.sin_cos();
    [c(co, 0.0), c(0.0, s), c(0.0, s), c(co, 0.0)]
}

/// `e^{ihZ}` as a row-major 2×2 matrix.
pub fn field_gate(h: f64) -> [C64; 4] {
    [C64::from_polar(1.0, h), c(0.0, 0.0), c(0.0, 0.0), C64::from_polar(1.0, -h)]
}

/// `e^{iJ Z⊗Z}` as a tensor `(out1, in1, out2, in2)`.
pub fn ising_gate(j: f64) -> Tensor {
    let mut t = Tensor::zeros(&[2, 2, 2, 2]);
    for a in 0..2 {
        for b in 0..2 {
            let zz = if a == b { 1.0 } else { -1.0 };
            t.set(&[a, a, b, b], C64::from_polar(1.0, j * zz));
        }
    }
    t
}

/// Splits the two-site Ising gate into `(left, right)` halves with extents
/// `(out, in, k)` and `(k, out, in)`, singular values shared as square roots.
fn split_ising(j: f64) -> Result<(Tensor, Tensor)> {
    let svd = svd_split_with_cutoff(&ising_gate(j), &[0, 1], 4, 1e-14)?;
    let roots: Vec<f64> = svd.singulars.iter().map(|s| s.sqrt()).collect();
    let mut a = svd.isometry.clone();
    let k = roots.len();
    for (i, x) in a.data_mut().iter_mut().enumerate() {
        *x *= roots[i % k];
    }
    let mut b = svd.right.clone();
    let per = b.len() / k;
    for (i, x) in b.data_mut().iter_mut().enumerate() {
        *x *= roots[i / per];
    }
    Ok((a, b))
}

/// Matrix product operator with site tensors `(left, out, in, right)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mpo {
    pub tensors: Vec<Tensor>,
}

impl Mpo {
    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.len() - 1].iter().map(|t| t.extents()[3]).collect()
    }

    /// Dense `2^L × 2^L` matrix, row index = output state.
    pub fn to_dense(&self) -> Result<Vec<C64>> {
        let l = self.len();
        if l > 8 {
            bail!(Resource, "dense operator limited to 8 sites, got {l}");
        }
        let dim = 1usize << l;
        let mut out = vec![c(0.0, 0.0); dim * dim];
        for input in 0..dim {
            let mut basis = vec![c(0.0, 0.0); dim];
            basis[input] = c(1.0, 0.0);
            let y = self.apply_dense(&basis)?;
            for (o, val) in y.into_iter().enumerate() {
                out[o * dim + input] = val;
            }
        }
        Ok(out)
    }

    /// Applies the operator to a dense state vector.
    pub fn apply_dense(&self, psi: &[C64]) -> Result<Vec<C64>> {
        let l = self.len();
        if psi.len() != 1 << l {
            bail!(Dimension, "state of length {} for {l} sites", psi.len());
        }
        // Axes: (bond, s_0, ..., s_{L-1}).
        let mut extents = vec![1];
        extents.extend(std::iter::repeat(2).take(l));
        let mut t = Tensor::new(extents, psi.to_vec())?;
        for (j, w) in self.tensors.iter().enumerate() {
            // (s_0.., ŝ_j.., s_{L-1}) x (o, r): result axes ordered
            // (s_0 .. s_{j-1}, s_{j+1} .. s_{L-1}, o, r).
            let x = contract(&t, w, &[(0, 0), (1 + j, 2)])?;
            let mut perm = vec![l];
            perm.extend(0..j);
            perm.push(l - 1);
            perm.extend(j..l - 1);
            t = x.permute(&perm)?;
        }
        Ok(t.into_data())
    }
}

/// The exact one-period operator. Each bond carries one Ising gate, so the
/// bond dimension is at most 2.
pub fn build_floquet_mpo(params: &FloquetParams) -> Result<Mpo> {
    params.validate()?;
    let l = params.l;
    let (a, b) = split_ising(params.j)?;
    let k = a.extents()[2];
    let kick = kick_gate(params.g);
    let field = field_gate(params.h);
    let mut tensors = Vec::with_capacity(l);
    for site in 0..l {
        let has_left = site > 0;
        let has_right = site + 1 < l;
        let kl = if has_left { k } else { 1 };
        let kr = if has_right { k } else { 1 };
        // Bond (site, site+1) belongs to the first layer when site is even.
        let mut w = Tensor::zeros(&[kl, 2, 2, kr]);
        for x in 0..kl {
            for y in 0..kr {
                let left_part = |o: usize, i: usize| if has_left { b.get(&[x, o, i]) } else { delta(o, i) };
                let right_part = |o: usize, i: usize| if has_right { a.get(&[o, i, y]) } else { delta(o, i) };
                for o in 0..2 {
                    for i in 0..2 {
                        let mut acc = c(0.0, 0.0);
                        for p in 0..2 {
                            for q in 0..2 {
                                for r in 0..2 {
                                    let (second, first) = if site % 2 == 0 {
                                        (left_part(q, r), right_part(r, i))
                                    } else {
                                        (right_part(q, r), left_part(r, i))
                                    };
                                    acc += kick[o * 2 + p] * field[p * 2 + q] * second * first;
                                }
                            }
                        }
                        w.set(&[x, o, i, y], acc);
                    }
                }
            }
        }
        tensors.push(w);
    }
    Ok(Mpo { tensors })
}

/// `z` eigenvalue of bit `b` (0 → +1).
fn z_of(b: usize) -> f64 {
    if b == 0 {
        1.0
    } else {
        -1.0
    }
}

fn bit(state: usize, site: usize, l: usize) -> usize {
    (state >> (l - 1 - site)) & 1
}

/// Applies one period to a dense state in place, gate by gate.
pub fn apply_period(params: &FloquetParams, psi: &mut [C64]) {
    let l = params.l;
    for (s, amp) in psi.iter_mut().enumerate() {
        let mut phase = 0.0;
        for site in 0..l {
            let z = z_of(bit(s, site, l));
            phase += params.h * z;
            if site + 1 < l {
                phase += params.j * z * z_of(bit(s, site + 1, l));
            }
        }
        *amp *= C64::from_polar(1.0, phase);
    }
    let kick = kick_gate(params.g);
    for site in 0..l {
        let mask = 1 << (l - 1 - site);
        for s in 0..psi.len() {
            if s & mask == 0 {
                let (x0, x1) = (psi[s], psi[s | mask]);
                psi[s] = kick[0] * x0 + kick[1] * x1;
                psi[s | mask] = kick[2] * x0 + kick[3] * x1;
            }
        }
    }
}

/// `F^t |0…0⟩` as a dense vector.
pub fn exact_evolve(params: &FloquetParams, t: usize) -> Result<Vec<C64>> {
    Ok(exact_trajectory(params, t)?.pop().expect("t + 1 states"))
}

/// States `F^s |0…0⟩` for `s = 0..=t`.
pub fn exact_trajectory(params: &FloquetParams, t: usize) -> Result<Vec<Vec<C64>>> {
    params.validate()?;
    if params.l > MAX_DENSE_SITES {
        bail!(Resource, "dense evolution limited to {MAX_DENSE_SITES} sites, got {}", params.l);
    }
    let mut psi = vec![c(0.0, 0.0); 1 << params.l];
    psi[0] = c(1.0, 0.0);
    let mut out = Vec::with_capacity(t + 1);
    out.push(psi.clone());
    for _ in 0..t {
        apply_period(params, &mut psi);
        out.push(psi.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::matmul_square;

    fn kron(a: &[C64], na: usize, b: &[C64], nb: usize) -> Vec<C64> {
        let n = na * nb;
        let mut out = vec![c(0.0, 0.0); n * n];
        for i in 0..na {
            for j in 0..na {
                for k in 0..nb {
                    for m in 0..nb {
                        out[(i * nb + k) * n + j * nb + m] = a[i * na + j] * b[k * nb + m];
                    }
                }
            }
        }
        out
    }

    #[test]
    fn zero_couplings_give_identity() {
        for l in 2..=6 {
            let mpo = build_floquet_mpo(&FloquetParams::new(l, 0.0, 0.0, 0.0, 1).unwrap()).unwrap();
            let d = mpo.to_dense().unwrap();
            let dim = 1 << l;
            for r in 0..dim {
                for col in 0..dim {
                    let want = if r == col { 1.0 } else { 0.0 };
                    assert!((d[r * dim + col] - c(want, 0.0)).norm() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn no_ising_coupling_gives_product_operator() {
        let mpo = build_floquet_mpo(&FloquetParams::new(5, 0.0, 0.3, 0.2, 1).unwrap()).unwrap();
        assert_eq!(mpo.bond_dims(), vec![1; 4]);
        let mpo = build_floquet_mpo(&FloquetParams::maximally_chaotic(5, 1)).unwrap();
        assert_eq!(mpo.bond_dims(), vec![2; 4]);
    }

    #[test]
    fn two_sites_match_gate_product() {
        let p = FloquetParams::new(2, 0.7, 0.5, 0.5, 1).unwrap();
        let d = build_floquet_mpo(&p).unwrap().to_dense().unwrap();
        // Ising gate as a 4x4 diagonal matrix.
        let mut zz = vec![c(0.0, 0.0); 16];
        for s in 0..4 {
            let z = z_of(s >> 1) * z_of(s & 1);
            zz[s * 4 + s] = C64::from_polar(1.0, 0.7 * z);
        }
        let fz = field_gate(0.5);
        let kx = kick_gate(0.5);
        let f = kron(&fz, 2, &fz, 2);
        let k = kron(&kx, 2, &kx, 2);
        let want = matmul_square(4, &k, &matmul_square(4, &f, &zz));
        for (x, y) in d.iter().zip(&want) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn evolution_is_unitary() {
        let p = FloquetParams::maximally_chaotic(8, 90);
        let states = exact_trajectory(&p, 90).unwrap();
        assert_eq!(states[0][0], c(1.0, 0.0));
        for s in &states {
            let n: f64 = s.iter().map(|x| x.norm_sqr()).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn mpo_layers_match_gate_evolution() {
        let p = FloquetParams::maximally_chaotic(10, 5);
        let mpo = build_floquet_mpo(&p).unwrap();
        let mut psi = vec![c(0.0, 0.0); 1 << 10];
        psi[0] = c(1.0, 0.0);
        for _ in 0..5 {
            psi = mpo.apply_dense(&psi).unwrap();
        }
        let exact = exact_evolve(&p, 5).unwrap();
        let err: f64 = psi.iter().zip(&exact).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn guards_chain_length() {
        let p = FloquetParams::maximally_chaotic(15, 1);
        assert!(matches!(exact_evolve(&p, 1), Err(crate::TnfError::Resource(_))));
        assert!(FloquetParams::new(1, 0.0, 0.0, 0.0, 1).is_err());
    }
}
