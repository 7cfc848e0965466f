//! Amplitude circuits: reals travel as `(1, x)` vectors through `(+)` and
//! `(×)` tensors. Shared intermediates are graph references; evaluation
//! with a memo contracts each of them once.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{float_decode, float_encode, gate_tensor, GateKind};
use crate::error::{bail, Result};
use crate::tensor::{contract, Tensor, C64};

/// A node refers only to nodes with smaller ids, so the graph is acyclic by
/// construction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmpNode {
    Input(usize),
    Const(f64),
    Plus(usize, usize),
    Times(usize, usize),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AmpCircuit {
    pub n_inputs: usize,
    pub nodes: Vec<AmpNode>,
    pub outputs: Vec<usize>,
}

impl AmpCircuit {
    pub fn new(n_inputs: usize) -> Self {
        Self { n_inputs, nodes: Vec::new(), outputs: Vec::new() }
    }

    fn push(&mut self, node: AmpNode) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    pub fn input(&mut self, i: usize) -> usize {
        self.push(AmpNode::Input(i))
    }

    pub fn constant(&mut self, x: f64) -> usize {
        self.push(AmpNode::Const(x))
    }

    pub fn plus(&mut self, a: usize, b: usize) -> usize {
        self.push(AmpNode::Plus(a, b))
    }

    pub fn times(&mut self, a: usize, b: usize) -> usize {
        self.push(AmpNode::Times(a, b))
    }

    pub fn validate(&self) -> Result<()> {
        for (k, node) in self.nodes.iter().enumerate() {
            match *node {
                AmpNode::Input(i) if i >= self.n_inputs => bail!(Structure, "node {k} reads missing input {i}"),
                AmpNode::Plus(a, b) | AmpNode::Times(a, b) if a >= k || b >= k => {
                    bail!(Structure, "node {k} refers forward to ({a}, {b})")
                }
                _ => {}
            }
        }
        if let Some(&o) = self.outputs.iter().find(|&&o| o >= self.nodes.len()) {
            bail!(Structure, "output refers to missing node {o}");
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AmpStats {
    /// `(+)`/`(×)` contractions performed.
    pub contractions: usize,
    /// Distinct arithmetic nodes reachable from the outputs.
    pub distinct_nodes: usize,
}

fn apply(kind: GateKind, x: &Tensor, y: &Tensor) -> Result<Tensor> {
    let g = gate_tensor(kind)?;
    contract(&contract(&g, x, &[(0, 0)])?, y, &[(0, 0)])
}

struct Evaluator<'a> {
    circuit: &'a AmpCircuit,
    inputs: Vec<Tensor>,
    memo: Option<Vec<Option<Tensor>>>,
    contractions: usize,
}

impl Evaluator<'_> {
    fn value(&mut self, k: usize) -> Result<Tensor> {
        if let Some(Some(v)) = self.memo.as_ref().map(|m| m[k].clone()) {
            return Ok(v);
        }
        let v = match self.circuit.nodes[k] {
            AmpNode::Input(i) => self.inputs[i].clone(),
            AmpNode::Const(x) => float_encode(x),
            AmpNode::Plus(a, b) | AmpNode::Times(a, b) => {
                let kind = if matches!(self.circuit.nodes[k], AmpNode::Plus(..)) { GateKind::Plus } else { GateKind::Times };
                let x = self.value(a)?;
                let y = self.value(b)?;
                self.contractions += 1;
                apply(kind, &x, &y)?
            }
        };
        if let Some(m) = self.memo.as_mut() {
            m[k] = Some(v.clone());
        }
        Ok(v)
    }
}

fn reachable_arithmetic(c: &AmpCircuit) -> usize {
    let mut seen = vec![false; c.nodes.len()];
    let mut stack: Vec<usize> = c.outputs.clone();
    while let Some(k) = stack.pop() {
        if std::mem::replace(&mut seen[k], true) {
            continue;
        }
        if let AmpNode::Plus(a, b) | AmpNode::Times(a, b) = c.nodes[k] {
            stack.push(a);
            stack.push(b);
        }
    }
    seen.iter().zip(&c.nodes).filter(|(&s, n)| s && matches!(n, AmpNode::Plus(..) | AmpNode::Times(..))).count()
}

/// Evaluates every output. With `memo`, each node is contracted at most once;
/// without it, shared nodes are recomputed along every path.
pub fn eval_amp_circuit(circuit: &AmpCircuit, inputs: &[f64], memo: bool) -> Result<(Vec<f64>, AmpStats)> {
    circuit.validate()?;
    if inputs.len() != circuit.n_inputs {
        bail!(Argument, "circuit has {} inputs, {} bound", circuit.n_inputs, inputs.len());
    }
    let mut ev = Evaluator {
        circuit,
        inputs: inputs.iter().map(|&x| float_encode(x)).collect(),
        memo: memo.then(|| vec![None; circuit.nodes.len()]),
        contractions: 0,
    };
    let values = circuit.outputs.iter().map(|&o| float_decode(&ev.value(o)?)).collect::<Result<_>>()?;
    Ok((values, AmpStats { contractions: ev.contractions, distinct_nodes: reachable_arithmetic(circuit) }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Activation {
    /// `Σ_m c_m u^m`, lowest order first.
    Polynomial { coefficients: Vec<f64> },
    Sigmoid,
    Tanh,
    Relu,
}

/// Feed-forward network with one activation per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FnnSpec {
    pub widths: Vec<usize>,
    /// Per layer, a row-major `widths[k+1] × widths[k]` matrix.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub activations: Vec<Activation>,
}

impl FnnSpec {
    pub fn validate(&self) -> Result<()> {
        let layers = self.widths.len().saturating_sub(1);
        if layers == 0 || self.widths.contains(&0) {
            bail!(Argument, "a network needs at least two nonzero layer widths");
        }
        if self.weights.len() != layers || self.biases.len() != layers || self.activations.len() != layers {
            bail!(Argument, "expected {layers} weight matrices, bias vectors and activations");
        }
        for k in 0..layers {
            if self.weights[k].len() != self.widths[k] * self.widths[k + 1] || self.biases[k].len() != self.widths[k + 1] {
                bail!(Argument, "layer {k} parameters do not match widths {} -> {}", self.widths[k], self.widths[k + 1]);
            }
            if let Activation::Polynomial { coefficients } = &self.activations[k] {
                if coefficients.len() < 2 {
                    bail!(Argument, "layer {k} activation must have degree at least 1");
                }
            }
        }
        Ok(())
    }

    /// Random network with weights and biases uniform in `[-1, 1]` and the
    /// given polynomial activation on every layer.
    pub fn random<R: Rng>(widths: &[usize], coefficients: &[f64], rng: &mut R) -> Self {
        let layers = widths.len() - 1;
        Self {
            widths: widths.to_vec(),
            weights: (0..layers).map(|k| (0..widths[k] * widths[k + 1]).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            biases: (0..layers).map(|k| (0..widths[k + 1]).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            activations: vec![Activation::Polynomial { coefficients: coefficients.to_vec() }; layers],
        }
    }

    /// Plain floating-point forward pass.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.validate()?;
        if x.len() != self.widths[0] {
            bail!(Argument, "network takes {} inputs, got {}", self.widths[0], x.len());
        }
        let mut y = x.to_vec();
        for k in 0..self.widths.len() - 1 {
            let coefficients = polynomial(&self.activations[k], k)?;
            let (n_in, n_out) = (self.widths[k], self.widths[k + 1]);
            y = (0..n_out)
                .map(|i| {
                    let w = &self.weights[k][i * n_in..(i + 1) * n_in];
                    let mut u = w[0] * y[0];
                    for j in 1..n_in {
                        u += w[j] * y[j];
                    }
                    u += self.biases[k][i];
                    let mut acc = coefficients[coefficients.len() - 1];
                    for &c in coefficients[..coefficients.len() - 1].iter().rev() {
                        acc = acc * u + c;
                    }
                    acc
                })
                .collect();
        }
        Ok(y)
    }
}

fn polynomial(a: &Activation, layer: usize) -> Result<&[f64]> {
    match a {
        Activation::Polynomial { coefficients } => Ok(coefficients),
        other => bail!(Unsupported, "layer {layer} activation {other:?} is not a polynomial"),
    }
}

/// Expands every neuron into `(+)`/`(×)` nodes: the affine map, then the
/// activation in Horner form. Each neuron's output is one node referenced
/// by all neurons of the next layer.
pub fn compile_fnn(spec: &FnnSpec) -> Result<AmpCircuit> {
    spec.validate()?;
    for (k, a) in spec.activations.iter().enumerate() {
        polynomial(a, k)?;
    }
    let mut c = AmpCircuit::new(spec.widths[0]);
    let mut y: Vec<usize> = (0..spec.widths[0]).map(|i| c.input(i)).collect();
    for k in 0..spec.widths.len() - 1 {
        let coefficients = polynomial(&spec.activations[k], k)?;
        let (n_in, n_out) = (spec.widths[k], spec.widths[k + 1]);
        y = (0..n_out)
            .map(|i| {
                let w = &spec.weights[k][i * n_in..(i + 1) * n_in];
                let w0 = c.constant(w[0]);
                let mut u = c.times(w0, y[0]);
                for j in 1..n_in {
                    let wj = c.constant(w[j]);
                    let t = c.times(wj, y[j]);
                    u = c.plus(u, t);
                }
                let b = c.constant(spec.biases[k][i]);
                u = c.plus(u, b);
                let mut acc = c.constant(coefficients[coefficients.len() - 1]);
                for &cm in coefficients[..coefficients.len() - 1].iter().rev() {
                    let t = c.times(acc, u);
                    let cn = c.constant(cm);
                    acc = c.plus(t, cn);
                }
                acc
            })
            .collect();
    }
    c.outputs = y;
    Ok(c)
}

/// A function sampled on a grid, stored as rows `(1, f(x_p))`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedFunction {
    pub grid: Vec<f64>,
    /// Extents `(grid point, 2)`.
    pub tensor: Tensor,
}

impl DiscretizedFunction {
    pub fn new(grid: &[f64], f: impl Fn(f64) -> f64) -> Self {
        let data: Vec<f64> = grid.iter().flat_map(|&x| [1.0, f(x)]).collect();
        Self { grid: grid.to_vec(), tensor: Tensor::from_real(vec![grid.len(), 2], &data).expect("consistent extents") }
    }
}

/// Sums and products of single-variable functions; each leaf names a
/// function and the variable it is evaluated on.
#[derive(Clone, Debug, PartialEq)]
pub enum FunctionExpr {
    Leaf { function: usize, var: usize },
    Plus(Box<FunctionExpr>, Box<FunctionExpr>),
    Times(Box<FunctionExpr>, Box<FunctionExpr>),
}

/// Tensor with one leg per variable (in increasing variable order) and a
/// final arithmetic leg.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionValue {
    pub vars: Vec<usize>,
    pub tensor: Tensor,
    /// Function tensors placed in the network; a leaf used twice is two copies.
    pub copies: usize,
}

impl FunctionValue {
    /// Decoded value at grid indices given per variable (same order as `vars`).
    pub fn value_at(&self, point: &[usize]) -> Result<f64> {
        if point.len() != self.vars.len() {
            bail!(Argument, "expected {} grid indices", self.vars.len());
        }
        let mut idx = point.to_vec();
        idx.push(0);
        let a = self.tensor.get(&idx);
        idx[point.len()] = 1;
        let b = self.tensor.get(&idx);
        float_decode(&Tensor::new(vec![2], vec![a, b])?)
    }
}

/// Contracts `expr`, joining repeated variables through copy tensors on the
/// variable legs.
pub fn combine_functions(expr: &FunctionExpr, functions: &[DiscretizedFunction]) -> Result<FunctionValue> {
    let mut grids: Vec<Option<&[f64]>> = Vec::new();
    check_grids(expr, functions, &mut grids)?;
    let sizes: Vec<usize> = grids.iter().map(|g| g.map_or(0, <[f64]>::len)).collect();
    evaluate_expr(expr, functions, &sizes)
}

fn check_grids<'a>(expr: &FunctionExpr, functions: &'a [DiscretizedFunction], grids: &mut Vec<Option<&'a [f64]>>) -> Result<()> {
    match expr {
        FunctionExpr::Leaf { function, var } => {
            let f = functions.get(*function).ok_or_else(|| crate::TnfError::Argument(format!("no function {function}")))?;
            if grids.len() <= *var {
                grids.resize(var + 1, None);
            }
            match grids[*var] {
                Some(g) if g != f.grid.as_slice() => bail!(Argument, "variable {var} is used with different grids"),
                _ => grids[*var] = Some(&f.grid),
            }
            Ok(())
        }
        FunctionExpr::Plus(a, b) | FunctionExpr::Times(a, b) => {
            check_grids(a, functions, grids)?;
            check_grids(b, functions, grids)
        }
    }
}

fn evaluate_expr(expr: &FunctionExpr, functions: &[DiscretizedFunction], sizes: &[usize]) -> Result<FunctionValue> {
    let (a, b, kind) = match expr {
        FunctionExpr::Leaf { function, var } => {
            return Ok(FunctionValue { vars: vec![*var], tensor: functions[*function].tensor.clone(), copies: 1 })
        }
        FunctionExpr::Plus(a, b) => (a, b, GateKind::Plus),
        FunctionExpr::Times(a, b) => (a, b, GateKind::Times),
    };
    let x = evaluate_expr(a, functions, sizes)?;
    let y = evaluate_expr(b, functions, sizes)?;
    let g = gate_tensor(kind)?;
    let mut vars: Vec<usize> = x.vars.iter().chain(&y.vars).copied().collect();
    vars.sort_unstable();
    vars.dedup();
    let mut extents: Vec<usize> = vars.iter().map(|&v| sizes[v]).collect();
    extents.push(2);
    let mut out = Tensor::zeros(&extents);
    let n_points: usize = extents[..vars.len()].iter().product();
    let pos = |vs: &[usize], point: &[usize]| -> Vec<usize> {
        vs.iter().map(|v| point[vars.iter().position(|u| u == v).expect("variable present")]).collect()
    };
    let mut point = vec![0usize; vars.len()];
    for flat in 0..n_points {
        let mut rem = flat;
        for d in (0..vars.len()).rev() {
            point[d] = rem % extents[d];
            rem /= extents[d];
        }
        let mut xi = pos(&x.vars, &point);
        let mut yi = pos(&y.vars, &point);
        xi.push(0);
        yi.push(0);
        let xv = [x.tensor.get(&xi), { xi[x.vars.len()] = 1; x.tensor.get(&xi) }];
        let yv = [y.tensor.get(&yi), { yi[y.vars.len()] = 1; y.tensor.get(&yi) }];
        let mut idx = point.clone();
        idx.push(0);
        for k in 0..2 {
            let mut s = C64::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    s += xv[i] * yv[j] * g.get(&[i, j, k]);
                }
            }
            idx[vars.len()] = k;
            out.set(&idx, s);
        }
    }
    Ok(FunctionValue { vars, tensor: out, copies: x.copies + y.copies })
}
