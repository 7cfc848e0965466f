//! Exact ground states of spin-1/2 models in a fixed magnetization sector,
//! by Lanczos iteration with full reorthogonalization.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{bail, Result};
use crate::model::Model;

/// Largest lattice handled by the exact solver.
pub const MAX_ED_SITES: usize = 18;

/// Configurations of `n_sites` spins with exactly `n_down` entries equal to 1,
/// encoded as bit masks with site 0 in the most significant position.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    pub n_sites: usize,
    pub states: Vec<u64>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_down: usize) -> Self {
        let states = (0u64..1 << n_sites).filter(|s| s.count_ones() as usize == n_down).collect();
        Self { n_sites, states }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, state: u64) -> Option<usize> {
        self.states.binary_search(&state).ok()
    }

    pub fn bit(&self, state: u64, site: usize) -> u8 {
        ((state >> (self.n_sites - 1 - site)) & 1) as u8
    }

    pub fn config(&self, k: usize) -> Vec<u8> {
        (0..self.n_sites).map(|i| self.bit(self.states[k], i)).collect()
    }
}

/// `y = H x` in the sector basis.
fn apply(model: &Model, basis: &SectorBasis, x: &[f64], y: &mut [f64]) {
    let n = basis.n_sites;
    for (k, &s) in basis.states.iter().enumerate() {
        let mut diag = 0.0;
        for &(i, j, c) in &model.couplings {
            let bi = basis.bit(s, i);
            let bj = basis.bit(s, j);
            if bi == bj {
                diag += 0.25 * c;
            } else {
                diag -= 0.25 * c;
                let flipped = s ^ (1 << (n - 1 - i)) ^ (1 << (n - 1 - j));
                let k2 = basis.index_of(flipped).expect("exchange stays in sector");
                y[k2] += 0.5 * c * x[k];
            }
        }
        y[k] += diag * x[k];
    }
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub basis: SectorBasis,
    /// Normalized ground-state vector in the sector basis.
    pub vector: Vec<f64>,
}

/// Lowest eigenpair of `model` in the sector with `n_down` down spins.
pub fn ground_state(model: &Model, n_down: usize) -> Result<GroundState> {
    let n = model.n_sites();
    if n > MAX_ED_SITES {
        bail!(Resource, "exact diagonalization limited to {MAX_ED_SITES} sites, got {n}");
    }
    if n_down > n {
        bail!(Argument, "sector with {n_down} down spins on {n} sites");
    }
    let basis = SectorBasis::new(n, n_down);
    let dim = basis.len();
    let max_iter = dim.min(300);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    normalize(&mut v);
    let mut krylov: Vec<Vec<f64>> = vec![v];
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut prev_energy = f64::INFINITY;
    let mut result = None;
    for it in 0..max_iter {
        let mut w = vec![0.0; dim];
        apply(model, &basis, &krylov[it], &mut w);
        let a = dot(&w, &krylov[it]);
        alpha.push(a);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for q in &krylov {
                let p = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= p * qi);
            }
        }
        let b = dot(&w, &w).sqrt();
        let (e, y) = tridiagonal_lowest(&alpha, &beta);
        let converged = (prev_energy - e).abs() < 1e-13 * e.abs().max(1.0);
        prev_energy = e;
        if converged || b < 1e-12 || it + 1 == max_iter {
            result = Some((e, y));
            break;
        }
        beta.push(b);
        w.iter_mut().for_each(|x| *x /= b);
        krylov.push(w);
    }
    let (energy, y) = result.expect("at least one iteration");
    let mut vector = vec![0.0; dim];
    for (c, q) in y.iter().zip(&krylov) {
        vector.iter_mut().zip(q).for_each(|(v, qi)| *v += c * qi);
    }
    normalize(&mut vector);
    Ok(GroundState { energy, basis, vector })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    let y = (0..k).map(|r| eig.eigenvectors[(r, imin)]).collect();
    (eig.eigenvalues[imin], y)
}
