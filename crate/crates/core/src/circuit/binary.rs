//! Binary circuits: every wire carries a basis vector, so evaluation keeps a
//! product state and touches each gate once.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{gate_tensor, BitVec, GateKind};
use crate::error::{bail, Result};
use crate::tensor::{contract, Tensor, C64};

pub type WireId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WireKind {
    Bit,
    Amp,
    Variable(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub kind: GateKind,
    pub inputs: Vec<WireId>,
    pub outputs: Vec<WireId>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitGraph {
    pub wires: Vec<WireKind>,
    pub nodes: Vec<Node>,
    /// Input registers, each a little-endian list of wires.
    pub inputs: Vec<Vec<WireId>>,
    pub outputs: Vec<Vec<WireId>>,
}

impl CircuitGraph {
    /// Checks arities and that every wire has exactly one producer and one
    /// consumer (graph outputs count as consumers).
    pub fn validate(&self) -> Result<()> {
        let n = self.wires.len();
        let mut produced = vec![0usize; n];
        let mut consumed = vec![0usize; n];
        for w in self.inputs.iter().flatten() {
            check_wire(*w, n)?;
            produced[*w] += 1;
        }
        for w in self.outputs.iter().flatten() {
            check_wire(*w, n)?;
            consumed[*w] += 1;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.inputs.len() != node.kind.n_inputs() || node.outputs.len() != node.kind.n_outputs() {
                bail!(Structure, "node {i} ({:?}) has the wrong number of legs", node.kind);
            }
            for &w in &node.inputs {
                check_wire(w, n)?;
                consumed[w] += 1;
            }
            for &w in &node.outputs {
                check_wire(w, n)?;
                produced[w] += 1;
            }
        }
        for w in 0..n {
            if produced[w] != 1 || consumed[w] != 1 {
                bail!(Structure, "wire {w} has {} producers and {} consumers", produced[w], consumed[w]);
            }
        }
        Ok(())
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }
}

fn check_wire(w: WireId, n: usize) -> Result<()> {
    if w >= n {
        bail!(Structure, "wire {w} out of range ({n} wires)");
    }
    Ok(())
}

/// Incremental construction of a [`CircuitGraph`].
#[derive(Default)]
pub struct CircuitBuilder {
    graph: CircuitGraph,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn wire(&mut self, kind: WireKind) -> WireId {
        self.graph.wires.push(kind);
        self.graph.wires.len() - 1
    }

    pub fn input_register(&mut self, n: usize) -> Vec<WireId> {
        let wires: Vec<WireId> = (0..n).map(|_| self.wire(WireKind::Bit)).collect();
        self.graph.inputs.push(wires.clone());
        wires
    }

    pub fn gate(&mut self, kind: GateKind, inputs: &[WireId]) -> Vec<WireId> {
        let outputs: Vec<WireId> = (0..kind.n_outputs()).map(|_| self.wire(WireKind::Bit)).collect();
        self.graph.nodes.push(Node { kind, inputs: inputs.to_vec(), outputs: outputs.clone() });
        outputs
    }

    fn gate1(&mut self, kind: GateKind, inputs: &[WireId]) -> WireId {
        self.gate(kind, inputs)[0]
    }

    /// Two copies of `w`.
    pub fn copy(&mut self, w: WireId) -> (WireId, WireId) {
        let o = self.gate(GateKind::Delta, &[w]);
        (o[0], o[1])
    }

    /// `k ≥ 1` copies of `w` from a chain of copy tensors.
    pub fn fan_out(&mut self, w: WireId, k: usize) -> Vec<WireId> {
        let mut out = Vec::with_capacity(k);
        let mut rest = w;
        for _ in 1..k {
            let (a, b) = self.copy(rest);
            out.push(a);
            rest = b;
        }
        out.push(rest);
        out
    }

    pub fn zero(&mut self) -> WireId {
        self.gate1(GateKind::ConstBit(0), &[])
    }

    pub fn output_register(&mut self, wires: Vec<WireId>) {
        self.graph.outputs.push(wires);
    }

    pub fn finish(self) -> Result<CircuitGraph> {
        self.graph.validate()?;
        Ok(self.graph)
    }
}

/// Sum and carry of two bits.
pub fn half_adder(b: &mut CircuitBuilder, x: WireId, y: WireId) -> (WireId, WireId) {
    let (x1, x2) = b.copy(x);
    let (y1, y2) = b.copy(y);
    let sum = b.gate1(GateKind::Xor, &[x1, y1]);
    let carry = b.gate1(GateKind::And, &[x2, y2]);
    (sum, carry)
}

/// Sum and carry of three bits.
pub fn full_adder(b: &mut CircuitBuilder, x: WireId, y: WireId, c: WireId) -> (WireId, WireId) {
    let (s, c1) = half_adder(b, x, y);
    let (s2, c2) = half_adder(b, s, c);
    let carry = b.gate1(GateKind::Or, &[c1, c2]);
    (s2, carry)
}

/// Ripple-carry sum of equal-length registers; `n + 1` output bits.
pub fn add_bits(b: &mut CircuitBuilder, xs: &[WireId], ys: &[WireId]) -> Result<Vec<WireId>> {
    if xs.len() != ys.len() || xs.is_empty() {
        bail!(Argument, "adder operands need equal nonzero widths, got {} and {}", xs.len(), ys.len());
    }
    let mut out = Vec::with_capacity(xs.len() + 1);
    let (s, mut carry) = half_adder(b, xs[0], ys[0]);
    out.push(s);
    for i in 1..xs.len() {
        let (s, c) = full_adder(b, xs[i], ys[i], carry);
        out.push(s);
        carry = c;
    }
    out.push(carry);
    Ok(out)
}

pub fn build_half_adder() -> Result<CircuitGraph> {
    let mut b = CircuitBuilder::new();
    let x = b.input_register(1)[0];
    let y = b.input_register(1)[0];
    let (s, c) = half_adder(&mut b, x, y);
    b.output_register(vec![s, c]);
    b.finish()
}

pub fn build_full_adder() -> Result<CircuitGraph> {
    let mut b = CircuitBuilder::new();
    let x = b.input_register(1)[0];
    let y = b.input_register(1)[0];
    let c = b.input_register(1)[0];
    let (s, carry) = full_adder(&mut b, x, y, c);
    b.output_register(vec![s, carry]);
    b.finish()
}

pub fn build_adder(n_bits: usize) -> Result<CircuitGraph> {
    if n_bits == 0 {
        bail!(Argument, "adder width must be positive");
    }
    let mut b = CircuitBuilder::new();
    let x = b.input_register(n_bits);
    let y = b.input_register(n_bits);
    let z = add_bits(&mut b, &x, &y)?;
    b.output_register(z);
    b.finish()
}

/// Sums the rows of a partial-product array, row `j` shifted by `j` places.
fn sum_shifted_rows(b: &mut CircuitBuilder, rows: Vec<Vec<WireId>>) -> Result<Vec<WireId>> {
    let mut rows = rows.into_iter();
    let mut acc = rows.next().expect("at least one row");
    for (j, row) in rows.enumerate().map(|(k, r)| (k + 1, r)) {
        let mut high = acc.split_off(j);
        let mut row = row;
        while high.len() < row.len() {
            let z = b.zero();
            high.push(z);
        }
        while row.len() < high.len() {
            let z = b.zero();
            row.push(z);
        }
        let sum = add_bits(b, &high, &row)?;
        acc.extend(sum);
    }
    Ok(acc)
}

/// Long multiplication: an AND array of partial products summed by shifted
/// ripple adders.
pub fn build_multiplier(m_bits: usize, n_bits: usize) -> Result<CircuitGraph> {
    if m_bits == 0 || n_bits == 0 {
        bail!(Argument, "multiplier widths must be positive");
    }
    let mut b = CircuitBuilder::new();
    let x = b.input_register(m_bits);
    let y = b.input_register(n_bits);
    // xc[i][j]: copy of x_i used with y_j; yc[j][i] likewise.
    let xc: Vec<Vec<WireId>> = x.iter().map(|&w| b.fan_out(w, n_bits)).collect();
    let yc: Vec<Vec<WireId>> = y.iter().map(|&w| b.fan_out(w, m_bits)).collect();
    let rows = (0..n_bits)
        .map(|j| (0..m_bits).map(|i| b.gate1(GateKind::And, &[xc[i][j], yc[j][i]])).collect())
        .collect();
    let z = sum_shifted_rows(&mut b, rows)?;
    b.output_register(z);
    b.finish()
}

/// `x²` from a single input register; all reuse goes through copy tensors.
pub fn build_square(n_bits: usize) -> Result<CircuitGraph> {
    if n_bits == 0 {
        bail!(Argument, "square width must be positive");
    }
    let mut b = CircuitBuilder::new();
    let x = b.input_register(n_bits);
    // Bit x_i enters row j as the multiplicand and row i as the multiplier.
    let copies: Vec<Vec<WireId>> = x.iter().map(|&w| b.fan_out(w, 2 * n_bits)).collect();
    let rows = (0..n_bits)
        .map(|j| (0..n_bits).map(|i| b.gate1(GateKind::And, &[copies[i][j], copies[j][n_bits + i]])).collect())
        .collect();
    let z = sum_shifted_rows(&mut b, rows)?;
    b.output_register(z);
    b.finish()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BinaryStats {
    pub gates_applied: usize,
}

/// Basis index of a length-2 vector, or an invariant error.
fn basis_index(v: &Tensor) -> Result<usize> {
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    match v.data() {
        [a, b] if *a == one && *b == zero => Ok(0),
        [a, b] if *a == zero && *b == one => Ok(1),
        d => bail!(Internal, "wire left the computational basis: {d:?}"),
    }
}

/// Factors a rank-2 tensor with a single unit entry into its two basis vectors.
fn split_product(t: &Tensor) -> Result<(usize, usize)> {
    let nonzero: Vec<usize> = (0..t.len()).filter(|&k| t.data()[k] != C64::new(0.0, 0.0)).collect();
    match nonzero.as_slice() {
        [k] if t.data()[*k] == C64::new(1.0, 0.0) => Ok((k / 2, k % 2)),
        _ => bail!(Internal, "copy output is not a product of basis vectors"),
    }
}

/// Evaluates the circuit on basis inputs, contracting gates in topological
/// order. Every intermediate wire is checked to be a basis vector.
pub fn eval_binary(graph: &CircuitGraph, inputs: &[BitVec]) -> Result<(Vec<BitVec>, BinaryStats)> {
    if inputs.len() != graph.inputs.len() || inputs.iter().zip(&graph.inputs).any(|(v, r)| v.len() != r.len()) {
        bail!(Argument, "inputs do not match the circuit's input registers");
    }
    let order = topological_order(graph)?;
    let mut values: Vec<Option<Tensor>> = vec![None; graph.wires.len()];
    for (v, reg) in inputs.iter().zip(&graph.inputs) {
        for (&bit, &w) in v.bits.iter().zip(reg) {
            values[w] = Some(Tensor::basis(2, bit as usize));
        }
    }
    let mut stats = BinaryStats::default();
    for k in order {
        let node = &graph.nodes[k];
        let g = gate_tensor(node.kind)?;
        match node.kind {
            GateKind::ConstBit(_) | GateKind::ConstFloat(_) => {
                basis_index(&g)?;
                values[node.outputs[0]] = Some(g);
            }
            GateKind::Delta => {
                let x = take(&mut values, node.inputs[0])?;
                let (a, b) = split_product(&contract(&g, &x, &[(0, 0)])?)?;
                values[node.outputs[0]] = Some(Tensor::basis(2, a));
                values[node.outputs[1]] = Some(Tensor::basis(2, b));
            }
            _ => {
                let x = take(&mut values, node.inputs[0])?;
                let y = take(&mut values, node.inputs[1])?;
                let out = contract(&contract(&g, &x, &[(0, 0)])?, &y, &[(0, 0)])?;
                basis_index(&out)?;
                values[node.outputs[0]] = Some(out);
            }
        }
        stats.gates_applied += 1;
    }
    let outputs = graph
        .outputs
        .iter()
        .map(|reg| {
            let bits = reg
                .iter()
                .map(|&w| {
                    let v = values[w].as_ref().ok_or_else(|| crate::TnfError::Internal(format!("output wire {w} unset")))?;
                    Ok(basis_index(v)? as u8)
                })
                .collect::<Result<Vec<u8>>>()?;
            BitVec::new(bits)
        })
        .collect::<Result<_>>()?;
    Ok((outputs, stats))
}

fn take(values: &mut [Option<Tensor>], w: WireId) -> Result<Tensor> {
    values[w].take().ok_or_else(|| crate::TnfError::Internal(format!("wire {w} unset")))
}

/// Kahn's algorithm over nodes; wires from graph inputs are ready at start.
fn topological_order(graph: &CircuitGraph) -> Result<Vec<usize>> {
    let n_wires = graph.wires.len();
    let mut producer = vec![None; n_wires];
    for (k, node) in graph.nodes.iter().enumerate() {
        for &w in &node.outputs {
            check_wire(w, n_wires)?;
            producer[w] = Some(k);
        }
    }
    let mut indegree = vec![0usize; graph.nodes.len()];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); graph.nodes.len()];
    for (k, node) in graph.nodes.iter().enumerate() {
        for &w in &node.inputs {
            check_wire(w, n_wires)?;
            if let Some(p) = producer[w] {
                indegree[k] += 1;
                consumers[p].push(k);
            }
        }
    }
    let mut queue: VecDeque<usize> = (0..graph.nodes.len()).filter(|&k| indegree[k] == 0).collect();
    let mut order = Vec::with_capacity(graph.nodes.len());
    while let Some(k) = queue.pop_front() {
        order.push(k);
        for &c in &consumers[k] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push_back(c);
            }
        }
    }
    if order.len() != graph.nodes.len() {
        bail!(Structure, "circuit contains a cycle");
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(g: &CircuitGraph, args: &[(u64, usize)]) -> u64 {
        let inputs: Vec<BitVec> = args.iter().map(|&(v, n)| BitVec::from_u64(v, n)).collect();
        eval_binary(g, &inputs).unwrap().0[0].to_u64()
    }

    #[test]
    fn half_and_full_adder_truth_tables() {
        let h = build_half_adder().unwrap();
        for (x, y) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            let out = eval_binary(&h, &[BitVec::from_u64(x, 1), BitVec::from_u64(y, 1)]).unwrap().0;
            assert_eq!(out[0].bits, vec![((x + y) % 2) as u8, ((x + y) / 2) as u8]);
        }
        let f = build_full_adder().unwrap();
        for v in 0..8u64 {
            let (x, y, c) = (v & 1, (v >> 1) & 1, v >> 2);
            let ins = [BitVec::from_u64(x, 1), BitVec::from_u64(y, 1), BitVec::from_u64(c, 1)];
            let out = eval_binary(&f, &ins).unwrap().0;
            assert_eq!(out[0].to_u64(), x + y + c);
        }
    }

    #[test]
    fn small_arithmetic() {
        assert_eq!(run(&build_adder(4).unwrap(), &[(5, 4), (3, 4)]), 8);
        assert_eq!(run(&build_adder(4).unwrap(), &[(11, 4), (0, 4)]), 11);
        assert_eq!(run(&build_multiplier(4, 3).unwrap(), &[(13, 4), (5, 3)]), 65);
        assert_eq!(run(&build_multiplier(4, 3).unwrap(), &[(13, 4), (0, 3)]), 0);
        assert_eq!(run(&build_square(3).unwrap(), &[(3, 3)]), 9);
        assert_eq!(run(&build_square(3).unwrap(), &[(0, 3)]), 0);
        assert_eq!(run(&build_multiplier(1, 1).unwrap(), &[(1, 1), (1, 1)]), 1);
    }

    #[test]
    fn adder_structure() {
        let g = build_adder(5).unwrap();
        // One half adder and four full adders, each full adder being two half
        // adders plus an OR.
        assert_eq!(g.count(GateKind::Or), 4);
        assert_eq!(g.count(GateKind::Xor), 9);
        assert_eq!(g.outputs[0].len(), 6);
    }

    #[test]
    fn square_takes_one_input_register() {
        let g = build_square(4).unwrap();
        assert_eq!(g.inputs.len(), 1);
        assert_eq!(g.inputs[0].len(), 4);
    }

    #[test]
    fn cycle_is_structure_error() {
        let g = CircuitGraph {
            wires: vec![WireKind::Bit; 3],
            nodes: vec![
                Node { kind: GateKind::Delta, inputs: vec![0], outputs: vec![1, 2] },
            ],
            inputs: vec![],
            outputs: vec![vec![2]],
        };
        // Wire 0 is fed back from wire 1 through a second node.
        let mut g2 = g.clone();
        g2.wires.push(WireKind::Bit);
        g2.nodes.push(Node { kind: GateKind::And, inputs: vec![1, 3], outputs: vec![0] });
        g2.nodes.push(Node { kind: GateKind::ConstBit(1), inputs: vec![], outputs: vec![3] });
        assert!(matches!(eval_binary(&g2, &[]), Err(crate::TnfError::Structure(_))));
        assert!(g.validate().is_err());
    }

    #[test]
    fn non_basis_wire_is_internal_error() {
        let mut b = CircuitBuilder::new();
        let x = b.input_register(1)[0];
        let c = b.gate(GateKind::ConstFloat(0.5), &[])[0];
        let o = b.gate(GateKind::And, &[x, c])[0];
        b.output_register(vec![o]);
        let g = b.finish().unwrap();
        assert!(matches!(eval_binary(&g, &[BitVec::from_u64(1, 1)]), Err(crate::TnfError::Internal(_))));
    }

    #[test]
    fn identity_wire() {
        let mut b = CircuitBuilder::new();
        let x = b.input_register(3);
        b.output_register(x);
        let g = b.finish().unwrap();
        assert_eq!(run(&g, &[(6, 3)]), 6);
    }

    #[test]
    fn json_round_trip() {
        let g = build_adder(2).unwrap();
        let s = serde_json::to_string(&g).unwrap();
        let back: CircuitGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(back, g);
    }
}
