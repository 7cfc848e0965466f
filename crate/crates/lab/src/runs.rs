//! The four experiment kinds.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use tnf_core::circuit::{build_adder, build_multiplier, build_square, compile_fnn, eval_amp_circuit, eval_binary, BitVec, FnnSpec};
use tnf_core::floquet::entanglement_dynamics;
use tnf_core::peps::{amplitude_fixed, load_peps, simple_update, FixedPlan, Peps};
use tnf_core::tensor::flops;
use tnf_core::vmc::ed::ground_state;
use tnf_core::vmc::{
    estimate_energy, sector_configurations, sgd_optimize, GradientSampling, LearningSchedule, Mode, SamplingParams,
};

use crate::config::{
    CircuitConfig, FloquetConfig, GradientKind, LatticeSpec, ModelSpec, ParetoConfig, StateKind, StateSpec, SuiteKind,
    SuiteSpec, VmcConfig,
};
use crate::error::{LabError, Result};
use crate::output::{num, Csv, RunOutput};

/// Mixes a run seed with per-point tags (splitmix64 finalizer per step).
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    let mut z = seed;
    for &t in tags {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15).wrapping_add(t);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
    }
    z
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Fixed => "fixed",
        Mode::Dynamic => "dynamic",
    }
}

/// Initial PEPS of bond dimension `d`.
pub fn prepare_state(spec: &StateSpec, lattice: &LatticeSpec, model: &ModelSpec, d: usize, seed: u64) -> Result<Peps> {
    if spec.kind == StateKind::File {
        let path = spec.path.as_ref().expect("validated");
        let p = load_peps(path)?;
        if p.rows() != lattice.rows || p.cols() != lattice.cols || p.boundary() != lattice.boundary || p.bond_dim() != d {
            return Err(LabError::config(
                "params.state.path",
                format!("{} does not hold a {}x{} PEPS with D = {d}", path.display(), lattice.rows, lattice.cols),
            ));
        }
        return Ok(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[d as u64]));
    let mut p = Peps::random(lattice.rows, lattice.cols, 2, d, lattice.boundary, &mut rng)?;
    if spec.kind == StateKind::SimpleUpdate {
        let nn = model.nearest_neighbour(lattice.lattice()?);
        for &tau in &spec.taus {
            p = simple_update(&p, &nn, tau, spec.steps)?;
        }
    }
    Ok(p)
}

pub fn run_vmc(cfg: &VmcConfig, seed: u64, out: &mut RunOutput) -> Result<()> {
    let lattice = cfg.lattice.lattice()?;
    let model = cfg.model.model(lattice);
    let n = model.n_sites();
    let reference = if cfg.use_ed() {
        let gs = out.phase("exact_diagonalization", |_| Ok(ground_state(&model, n / 2)?))?;
        let mut csv = Csv::new(&["n_sites", "n_down", "energy", "energy_per_site"]);
        csv.row(&[n.to_string(), (n / 2).to_string(), num(gs.energy), num(gs.energy / n as f64)]);
        out.write_csv("reference.csv", &csv)?;
        Some(gs.energy)
    } else {
        None
    };
    let mut csv = Csv::new(&[
        "bond_dim",
        "chi",
        "mode",
        "mean",
        "stderr",
        "per_site_mean",
        "per_site_stderr",
        "mean_imag",
        "acceptance_rate",
        "frozen_chains",
        "n_samples",
        "reference",
        "below_bound",
    ]);
    for &d in &cfg.bond_dims {
        let peps = out.phase(&format!("prepare_d{d}"), |_| prepare_state(&cfg.state, &cfg.lattice, &cfg.model, d, seed))?;
        for &chi in &cfg.chis {
            for &mode in &cfg.modes {
                let params = SamplingParams {
                    n_warmup: cfg.warmup,
                    ..SamplingParams::new(cfg.sweeps, cfg.chains, derive_seed(seed, &[d as u64, chi as u64, mode as u64]))
                };
                let label = format!("sample_d{d}_chi{chi}_{}", mode_name(mode));
                let e = out.phase(&label, |_| Ok(estimate_energy(&peps, &model, mode, chi, &params)?))?;
                out.warnings.extend(e.warnings.iter().map(|w| format!("D={d} chi={chi} {}: {w}", mode_name(mode))));
                let (r, below) = match reference {
                    Some(r) => (num(r), (e.mean < r - 3.0 * e.stderr).to_string()),
                    None => (String::new(), String::new()),
                };
                csv.row(&[
                    d.to_string(),
                    chi.to_string(),
                    mode_name(mode).to_string(),
                    num(e.mean),
                    num(e.stderr),
                    num(e.per_site_mean),
                    num(e.per_site_stderr),
                    num(e.mean_imag),
                    num(e.acceptance_rate),
                    e.frozen_chains.to_string(),
                    e.n_samples.to_string(),
                    r,
                    below,
                ]);
            }
        }
    }
    out.write_csv("energies.csv", &csv)
}

pub fn run_floquet(cfg: &FloquetConfig, out: &mut RunOutput) -> Result<()> {
    let params = cfg.params()?;
    let region = cfg.region();
    let mut entropy: Vec<Vec<f64>> = Vec::new();
    let mut diagnostics = Csv::new(&["method", "t", "min_eigenvalue", "clipped"]);
    for &m in &cfg.methods {
        let records =
            out.phase(m.name(), |_| Ok(entanglement_dynamics(&params, m, cfg.chi, Some(region.clone()))?))?;
        let mut spectrum = Csv::new(&["t", "index", "eigenvalue"]);
        for r in &records {
            for (k, &v) in r.spectrum.iter().enumerate() {
                spectrum.row(&[r.t.to_string(), k.to_string(), num(v)]);
            }
            diagnostics.row(&[m.name().to_string(), r.t.to_string(), num(r.min_eigenvalue), r.clipped.to_string()]);
            if r.clipped > 0 {
                out.warnings.push(format!("{} t={}: {} negative eigenvalues clipped", m.name(), r.t, r.clipped));
            }
        }
        out.write_csv(&format!("spectrum_{}.csv", m.name()), &spectrum)?;
        entropy.push(records.iter().map(|r| r.entropy).collect());
    }
    let mut header = vec!["t"];
    header.extend(cfg.methods.iter().map(|m| m.name()));
    let mut csv = Csv::new(&header);
    for t in 0..=params.t_max {
        let mut row = vec![t.to_string()];
        row.extend(entropy.iter().map(|s| num(s[t])));
        csv.row(&row);
    }
    out.write_csv("entropy.csv", &csv)?;
    out.write_csv("diagnostics.csv", &diagnostics)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParetoPoint {
    pub bond_dim: usize,
    pub chi: usize,
    pub energy: f64,
    pub stderr: f64,
    pub relative_error: f64,
    pub flops_per_amplitude: f64,
}

/// Points not dominated in (cost, error): no other point is at least as
/// good in both and strictly better in one.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<bool> {
    points
        .iter()
        .map(|&(c, e)| !points.iter().any(|&(c2, e2)| c2 <= c && e2 <= e && (c2 < c || e2 < e)))
        .collect()
}

pub fn run_pareto(cfg: &ParetoConfig, seed: u64, out: &mut RunOutput) -> Result<()> {
    let lattice = cfg.lattice.lattice()?;
    let model = cfg.model.model(lattice);
    let n = model.n_sites();
    let ed = match cfg.reference {
        None if cfg.lattice.ed_feasible() => Some(out.phase("exact_diagonalization", |_| Ok(ground_state(&model, n / 2)?))?.energy),
        _ => None,
    };
    let schedule = LearningSchedule { initial: cfg.learning_rate, decay: cfg.decay, normalize: cfg.normalize };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0xC057]));
    let mut sector = sector_configurations(n, n / 2);
    sector.shuffle(&mut rng);
    sector.truncate(cfg.cost_samples);
    let mut points = Vec::new();
    let mut trace = Csv::new(&["bond_dim", "chi", "iteration", "energy", "stderr", "grad_norm", "learning_rate", "skipped"]);
    let mut timings = Vec::new();
    for &d in &cfg.bond_dims {
        let initial = out.phase(&format!("prepare_d{d}"), |_| prepare_state(&cfg.state, &cfg.lattice, &cfg.model, d, seed))?;
        for &chi in &cfg.chis {
            let point_seed = derive_seed(seed, &[d as u64, chi as u64]);
            let sampling = match cfg.gradient.sampling {
                GradientKind::Enumerate => GradientSampling::Enumerate,
                GradientKind::MonteCarlo => {
                    GradientSampling::MonteCarlo(SamplingParams::new(cfg.gradient.sweeps, cfg.gradient.chains, point_seed))
                }
            };
            let opt = out.phase(&format!("optimize_d{d}_chi{chi}"), |_| {
                Ok(sgd_optimize(&initial, &model, chi, &schedule, cfg.iterations, &sampling, point_seed)?)
            })?;
            for r in &opt.trace {
                trace.row(&[
                    d.to_string(),
                    chi.to_string(),
                    r.iteration.to_string(),
                    num(r.energy),
                    num(r.stderr),
                    num(r.grad_norm),
                    num(r.learning_rate),
                    r.skipped.to_string(),
                ]);
            }
            let params = SamplingParams::new(cfg.eval_sweeps, cfg.eval_chains, derive_seed(point_seed, &[1]));
            let e = out.phase(&format!("evaluate_d{d}_chi{chi}"), |_| {
                Ok(estimate_energy(&opt.peps, &model, Mode::Fixed, chi, &params)?)
            })?;
            let plan = FixedPlan::new(lattice.rows, lattice.cols, chi)?;
            flops::reset();
            let start = Instant::now();
            for c in &sector {
                amplitude_fixed(&opt.peps, c, &plan)?;
            }
            let seconds = start.elapsed().as_secs_f64() / sector.len() as f64;
            let cost = flops::get() as f64 / sector.len() as f64;
            timings.push(json!({ "bond_dim": d, "chi": chi, "amplitude_seconds": seconds }));
            points.push(ParetoPoint { bond_dim: d, chi, energy: e.mean, stderr: e.stderr, relative_error: 0.0, flops_per_amplitude: cost });
        }
    }
    let reference = cfg
        .reference
        .or(ed)
        .unwrap_or_else(|| points.iter().map(|p| p.energy).fold(f64::INFINITY, f64::min));
    for p in &mut points {
        p.relative_error = (p.energy - reference) / reference.abs();
    }
    let frontier = pareto_frontier(&points.iter().map(|p| (p.flops_per_amplitude, p.relative_error)).collect::<Vec<_>>());
    let header =
        ["bond_dim", "chi", "energy", "stderr", "reference", "relative_error", "flops_per_amplitude", "frontier"];
    let mut all = Csv::new(&header);
    let mut front = Csv::new(&header);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points[a].flops_per_amplitude.total_cmp(&points[b].flops_per_amplitude));
    for (k, p) in points.iter().enumerate() {
        all.row(&pareto_row(p, reference, frontier[k]));
    }
    for &k in order.iter().filter(|&&k| frontier[k]) {
        front.row(&pareto_row(&points[k], reference, true));
    }
    out.measurements.insert("amplitude_wall_clock".into(), serde_json::Value::Array(timings));
    out.write_csv("pareto.csv", &all)?;
    out.write_csv("frontier.csv", &front)?;
    out.write_csv("sgd_trace.csv", &trace)
}

fn pareto_row(p: &ParetoPoint, reference: f64, frontier: bool) -> Vec<String> {
    vec![
        p.bond_dim.to_string(),
        p.chi.to_string(),
        num(p.energy),
        num(p.stderr),
        num(reference),
        num(p.relative_error),
        num(p.flops_per_amplitude),
        frontier.to_string(),
    ]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteResult {
    pub kind: SuiteKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<usize>,
    pub cases: u64,
    pub errors: u64,
    pub passed: bool,
    /// Largest gate count among the circuits of the suite.
    pub max_gates: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_abs_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memo_contractions: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircuitReport {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

/// Tolerance for amplitude-circuit networks against the direct forward pass.
pub const FNN_TOLERANCE: f64 = 1e-12;

fn exhaustive(kind: SuiteKind, bits: usize) -> Result<SuiteResult> {
    let (mut cases, mut errors, mut max_gates) = (0u64, 0u64, 0usize);
    let widths: Vec<(usize, usize)> = match kind {
        SuiteKind::Multiplier => (1..=bits).flat_map(|m| (1..=bits).map(move |n| (m, n))).collect(),
        _ => (1..=bits).map(|n| (n, n)).collect(),
    };
    for (m, n) in widths {
        let graph = match kind {
            SuiteKind::Adder => build_adder(n)?,
            SuiteKind::Multiplier => build_multiplier(m, n)?,
            SuiteKind::Square => build_square(n)?,
            SuiteKind::Fnn => unreachable!("handled separately"),
        };
        max_gates = max_gates.max(graph.nodes.len());
        let ys: u64 = if kind == SuiteKind::Square { 1 } else { 1 << n };
        for x in 0..1u64 << m {
            for y in 0..ys {
                let (inputs, want) = match kind {
                    SuiteKind::Adder => (vec![BitVec::from_u64(x, n), BitVec::from_u64(y, n)], x + y),
                    SuiteKind::Multiplier => (vec![BitVec::from_u64(x, m), BitVec::from_u64(y, n)], x * y),
                    _ => (vec![BitVec::from_u64(x, n)], x * x),
                };
                let (outs, _) = eval_binary(&graph, &inputs)?;
                cases += 1;
                if outs[0].to_u64() != want {
                    errors += 1;
                }
            }
        }
    }
    Ok(SuiteResult {
        kind,
        bits: Some(bits),
        cases,
        errors,
        passed: errors == 0,
        max_gates,
        max_abs_error: None,
        graph_nodes: None,
        memo_contractions: None,
    })
}

fn fnn_suite(spec: &SuiteSpec, seed: u64) -> Result<SuiteResult> {
    let widths = spec.widths.as_ref().expect("validated");
    let coefficients = spec.coefficients.as_ref().expect("validated");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let net = FnnSpec::random(widths, coefficients, &mut rng);
    let circuit = compile_fnn(&net)?;
    let mut max_err: f64 = 0.0;
    let mut errors = 0;
    let mut contractions = 0;
    for _ in 0..spec.samples {
        let x: Vec<f64> = (0..widths[0]).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (got, stats) = eval_amp_circuit(&circuit, &x, true)?;
        let want = net.forward(&x)?;
        contractions = stats.contractions;
        let err = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if !(err < FNN_TOLERANCE) {
            errors += 1;
        }
        max_err = max_err.max(err);
    }
    Ok(SuiteResult {
        kind: SuiteKind::Fnn,
        bits: None,
        cases: spec.samples as u64,
        errors,
        passed: errors == 0,
        max_gates: circuit.nodes.len(),
        max_abs_error: Some(max_err),
        graph_nodes: Some(circuit.nodes.len()),
        memo_contractions: Some(contractions),
    })
}

pub fn run_circuit(cfg: &CircuitConfig, seed: u64, out: &mut RunOutput) -> Result<CircuitReport> {
    let mut suites = Vec::new();
    for (i, s) in cfg.suites.iter().enumerate() {
        let label = format!("suite{i}_{}", serde_json::to_value(s.kind).expect("enum").as_str().expect("name"));
        let r = out.phase(&label, |_| match s.kind {
            SuiteKind::Fnn => fnn_suite(s, derive_seed(seed, &[i as u64])),
            k => exhaustive(k, s.bits.expect("validated")),
        })?;
        suites.push(r);
    }
    let report = CircuitReport { passed: suites.iter().all(|s| s.passed), suites };
    out.write_json("results.json", &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frontier_keeps_non_dominated_points() {
        let f = pareto_frontier(&[(1.0, 0.5), (2.0, 0.1), (3.0, 0.2), (2.0, 0.1)]);
        assert_eq!(f, vec![true, true, false, true]);
        assert_eq!(pareto_frontier(&[(5.0, 1.0)]), vec![true]);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_eq!(derive_seed(9, &[4]), derive_seed(9, &[4]));
    }
}
