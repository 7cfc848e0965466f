//! Energies and sampling statistics against dense-vector oracles built here
//! from Pauli matrices.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tnf_core::model::{Boundary, Lattice, Model};
use tnf_core::peps::{exact_amplitude, Peps, SpinConfiguration};
use tnf_core::vmc::ed::ground_state;
use tnf_core::vmc::{
    estimate_energy_with, local_energy, metropolis_sweep, move_schedule, rayleigh_quotient, sector_configurations,
    AmplitudeSource, ChainState, ExactSource, FnSource, SamplingParams,
};
use tnf_core::{AmplitudeValue, C64};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Bonds from lattice geometry: nearest neighbours, then diagonals scaled
/// by `j2` when nonzero. Each unordered pair appears once.
fn bonds(rows: usize, cols: usize, pbc: bool, j1: f64, j2: f64) -> Vec<(usize, usize, f64)> {
    let idx = |r: usize, c: usize| r * cols + c;
    let mut out = Vec::new();
    for r in 0..rows {
        for col in 0..cols {
            let right = if col + 1 < cols { Some(col + 1) } else if pbc { Some(0) } else { None };
            let down = if r + 1 < rows { Some(r + 1) } else if pbc { Some(0) } else { None };
            if let Some(c2) = right {
                out.push((idx(r, col), idx(r, c2), j1));
            }
            if let Some(r2) = down {
                out.push((idx(r, col), idx(r2, col), j1));
                if j2 != 0.0 {
                    let left = if col > 0 { Some(col - 1) } else if pbc { Some(cols - 1) } else { None };
                    if let Some(c2) = right {
                        out.push((idx(r, col), idx(r2, c2), j2));
                    }
                    if let Some(c2) = left {
                        out.push((idx(r, col), idx(r2, c2), j2));
                    }
                }
            }
        }
    }
    out
}

fn sorted(b: &[(usize, usize, f64)]) -> Vec<(usize, usize, u64)> {
    let mut v: Vec<_> = b.iter().map(|&(i, j, x)| (i.min(j), i.max(j), x.to_bits())).collect();
    v.sort();
    v
}

/// `H ψ` with `H = Σ c (XX + YY + ZZ)/4` on a full `2^n` vector, site 0 the
/// most significant bit and bit value 1 meaning spin down.
fn apply_pauli_hamiltonian(n: usize, bonds: &[(usize, usize, f64)], psi: &[C64]) -> Vec<C64> {
    let mut out = vec![c(0.0, 0.0); psi.len()];
    let bit = |s: usize, i: usize| (s >> (n - 1 - i)) & 1;
    // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩.
    let y_phase = |b: usize| if b == 0 { c(0.0, 1.0) } else { c(0.0, -1.0) };
    for &(i, j, coupling) in bonds {
        let flip = (1 << (n - 1 - i)) | (1 << (n - 1 - j));
        for (s, &x) in psi.iter().enumerate() {
            let (bi, bj) = (bit(s, i), bit(s, j));
            let zz = if bi == bj { 1.0 } else { -1.0 };
            out[s] += x * (0.25 * coupling * zz);
            out[s ^ flip] += x * (0.25 * coupling);
            out[s ^ flip] += x * y_phase(bi) * y_phase(bj) * (0.25 * coupling);
        }
    }
    out
}

fn dense_energy(n: usize, bonds: &[(usize, usize, f64)], psi: &[C64]) -> f64 {
    let h = apply_pauli_hamiltonian(n, bonds, psi);
    let num: C64 = psi.iter().zip(&h).map(|(a, b)| a.conj() * b).sum();
    let den: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    assert!(num.im.abs() < 1e-9 * num.re.abs().max(1.0));
    num.re / den
}

fn config_index(n: &SpinConfiguration) -> usize {
    n.values.iter().fold(0, |acc, &b| acc * 2 + b as usize)
}

#[test]
fn model_bond_lists_match_geometry() {
    for (r, cols, pbc) in [(4, 4, false), (4, 4, true), (3, 5, true), (2, 3, false)] {
        let lat = Lattice::new(r, cols, if pbc { Boundary::Pbc } else { Boundary::Obc }).unwrap();
        assert_eq!(sorted(&Model::heisenberg(lat, 1.0).couplings), sorted(&bonds(r, cols, pbc, 1.0, 0.0)));
        assert_eq!(sorted(&Model::j1j2(lat, 1.0, 0.5).couplings), sorted(&bonds(r, cols, pbc, 1.0, 0.5)));
    }
}

#[test]
fn averaged_local_energy_equals_dense_rayleigh_quotient() {
    let cases = [
        (Model::heisenberg(Lattice::new(4, 4, Boundary::Obc).unwrap(), 1.0), bonds(4, 4, false, 1.0, 0.0)),
        (Model::j1j2(Lattice::new(4, 4, Boundary::Pbc).unwrap(), 1.0, 0.5), bonds(4, 4, true, 1.0, 0.5)),
    ];
    for (model, b) in cases {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let configs = sector_configurations(n, 8);
        let mut psi = vec![c(0.0, 0.0); 1 << n];
        let mut table = HashMap::new();
        for cfg in &configs {
            let a = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            psi[config_index(cfg)] = a;
            table.insert(cfg.values.clone(), a);
        }
        let mut src = FnSource(|m: &SpinConfiguration| table[&m.values]);
        let mut num = 0.0;
        let mut den = 0.0;
        for cfg in &configs {
            let a = table[&cfg.values];
            let e = local_energy(&model, &mut src, cfg, &AmplitudeValue::from_complex(a)).unwrap();
            num += a.norm_sqr() * e.re;
            den += a.norm_sqr();
        }
        let want = dense_energy(n, &b, &psi);
        assert!((num / den - want).abs() < 1e-10, "{} vs {want}", num / den);
    }
}

/// All amplitudes of a small PEPS, contracted without truncation.
fn peps_vector(peps: &Peps) -> Vec<C64> {
    let n = peps.n_sites();
    (0..1usize << n)
        .map(|k| exact_amplitude(peps, &SpinConfiguration::from_index(k, n, 2)).unwrap().to_complex())
        .collect()
}

/// Keeps only the balanced sector, which is what enumeration in the crate covers.
fn sector_only(n: usize, psi: &[C64]) -> Vec<C64> {
    psi.iter().enumerate().map(|(k, &x)| if k.count_ones() as usize == n / 2 { x } else { c(0.0, 0.0) }).collect()
}

#[test]
fn enumerated_peps_energy_equals_dense_rayleigh_quotient() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lat = Lattice::new(2, 3, Boundary::Obc).unwrap();
    let peps = Peps::random(2, 3, 2, 2, Boundary::Obc, &mut rng).unwrap();
    let model = Model::heisenberg(lat, 1.0);
    let want = dense_energy(6, &bonds(2, 3, false, 1.0, 0.0), &sector_only(6, &peps_vector(&peps)));
    let got = rayleigh_quotient(&peps, &model, 16).unwrap();
    assert!((got - want).abs() < 1e-10, "{got} vs {want}");
}

#[test]
fn sampled_energy_agrees_with_dense_rayleigh_quotient() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let lat = Lattice::new(2, 3, Boundary::Obc).unwrap();
    let peps = Peps::random(2, 3, 2, 2, Boundary::Obc, &mut rng).unwrap();
    let model = Model::heisenberg(lat, 1.0);
    let want = dense_energy(6, &bonds(2, 3, false, 1.0, 0.0), &sector_only(6, &peps_vector(&peps)));
    let est = estimate_energy_with(
        &model,
        || Ok(Box::new(ExactSource::new(&peps)) as Box<dyn AmplitudeSource>),
        &SamplingParams::new(20_000, 2, 5),
    )
    .unwrap();
    assert!((est.mean - want).abs() < 4.0 * est.stderr, "{} ± {} vs {want}", est.mean, est.stderr);
    assert!(est.stderr > 0.0 && est.stderr < 0.05);
}

/// Full-space dense diagonalization; for these bipartite lattices the
/// ground state is a singlet and lies in the balanced sector.
fn dense_ground_energy(n: usize, bonds: &[(usize, usize, f64)]) -> f64 {
    let dim = 1 << n;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for col in 0..dim {
        let mut e = vec![c(0.0, 0.0); dim];
        e[col] = c(1.0, 0.0);
        for (row, x) in apply_pauli_hamiltonian(n, bonds, &e).into_iter().enumerate() {
            assert!(x.im.abs() < 1e-14);
            h[(row, col)] = x.re;
        }
    }
    h.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn exact_diagonalization_matches_full_dense_spectrum() {
    for (r, cols) in [(2, 2), (2, 3), (2, 4)] {
        let n = r * cols;
        let model = Model::heisenberg(Lattice::new(r, cols, Boundary::Obc).unwrap(), 1.0);
        let got = ground_state(&model, n / 2).unwrap().energy;
        let want = dense_ground_energy(n, &bonds(r, cols, false, 1.0, 0.0));
        assert!((got - want).abs() < 1e-9, "{r}x{cols}: {got} vs {want}");
    }
    // Four-site ring: E = −2J.
    let ring = Model::heisenberg(Lattice::new(2, 2, Boundary::Obc).unwrap(), 1.0);
    assert!((ground_state(&ring, 2).unwrap().energy + 2.0).abs() < 1e-10);
}

/// Visit frequencies of a 2×2 chain over `sweeps`, in batches.
fn visit_batches(psi: &HashMap<Vec<u8>, C64>, sweeps: usize, batches: usize, seed: u64) -> Vec<Vec<f64>> {
    let lat = Lattice::new(2, 2, Boundary::Obc).unwrap();
    let schedule = move_schedule(&lat);
    let configs = sector_configurations(4, 2);
    let mut src = FnSource(|m: &SpinConfiguration| psi[&m.values]);
    let mut chain = ChainState::new(&mut src, SpinConfiguration::neel(2, 2), seed, 0).unwrap();
    for _ in 0..1000 {
        metropolis_sweep(&mut chain, &mut src, &schedule).unwrap();
    }
    let per = sweeps / batches;
    (0..batches)
        .map(|_| {
            let mut counts = vec![0.0; configs.len()];
            for _ in 0..per {
                metropolis_sweep(&mut chain, &mut src, &schedule).unwrap();
                let k = configs.iter().position(|x| *x == chain.config).unwrap();
                counts[k] += 1.0;
            }
            counts.iter().map(|x| x / per as f64).collect()
        })
        .collect()
}

#[test]
fn metropolis_visits_follow_squared_amplitudes() {
    let configs = sector_configurations(4, 2);
    let amps = [c(1.0, 0.0), c(-0.5, 0.2), c(0.8, -0.3), c(0.3, 0.0), c(-1.2, 0.1), c(0.6, 0.6)];
    let psi: HashMap<Vec<u8>, C64> = configs.iter().zip(amps).map(|(n, a)| (n.values.clone(), a)).collect();
    let z: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let batches = visit_batches(&psi, 100_000, 100, 21);
    let nb = batches.len() as f64;
    let mut chi2 = 0.0;
    for (k, a) in amps.iter().enumerate() {
        let xs: Vec<f64> = batches.iter().map(|b| b[k]).collect();
        let mean = xs.iter().sum::<f64>() / nb;
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (nb - 1.0);
        let se = (var / nb).sqrt();
        let p = a.norm_sqr() / z;
        assert!((mean - p).abs() < 3.0 * se, "config {k}: {mean} vs {p} (se {se})");
        chi2 += ((mean - p) / se).powi(2);
    }
    // Six correlated frequencies summing to one: at most 5 degrees of freedom;
    // 20.5 is the 0.999 quantile of chi-squared with 5.
    assert!(chi2 < 20.5, "chi2 = {chi2}");
}
