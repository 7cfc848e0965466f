//! Classical computation as tensor networks: binary logic circuits acting on
//! bit vectors, and amplitude circuits acting on `(1, x)` encoded reals.

mod amplitude;
mod binary;

pub use amplitude::{
    combine_functions, compile_fnn, eval_amp_circuit, Activation, AmpCircuit, AmpNode, AmpStats, DiscretizedFunction,
    FnnSpec, FunctionExpr, FunctionValue,
};
pub use binary::{
    add_bits, build_adder, build_full_adder, build_half_adder, build_multiplier, build_square, eval_binary,
    full_adder, half_adder, BinaryStats, CircuitBuilder, CircuitGraph, Node, WireId, WireKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::tensor::{Tensor, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    Xor,
    And,
    Or,
    /// Copy tensor: one input, two outputs.
    Delta,
    Plus,
    Times,
    ConstBit(u8),
    ConstFloat(f64),
}

impl GateKind {
    pub fn n_inputs(self) -> usize {
        match self {
            GateKind::Xor | GateKind::And | GateKind::Or | GateKind::Plus | GateKind::Times => 2,
            GateKind::Delta => 1,
            GateKind::ConstBit(_) | GateKind::ConstFloat(_) => 0,
        }
    }

    pub fn n_outputs(self) -> usize {
        match self {
            GateKind::Delta => 2,
            _ => 1,
        }
    }
}

fn table(ones: &[[usize; 3]]) -> Tensor {
    let mut t = Tensor::zeros(&[2, 2, 2]);
    for idx in ones {
        t.set(idx, C64::new(1.0, 0.0));
    }
    t
}

/// Gate as a tensor. Three-leg gates are indexed `(input, input, output)`;
/// the copy tensor as `(input, output, output)`; constants are vectors.
pub fn gate_tensor(kind: GateKind) -> Result<Tensor> {
    Ok(match kind {
        GateKind::Xor => table(&[[0, 0, 0], [1, 0, 1], [0, 1, 1], [1, 1, 0]]),
        GateKind::And => table(&[[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 1]]),
        GateKind::Or => table(&[[0, 0, 0], [1, 0, 1], [0, 1, 1], [1, 1, 1]]),
        GateKind::Delta => table(&[[0, 0, 0], [1, 1, 1]]),
        // (+)_{ijk} = δ_{i+j,k} and (×)_{ijk} = δ_{ijk} for i, j, k ∈ {0, 1}.
        GateKind::Plus => table(&[[0, 0, 0], [1, 0, 1], [0, 1, 1]]),
        GateKind::Times => table(&[[0, 0, 0], [1, 1, 1]]),
        GateKind::ConstBit(b) => {
            if b > 1 {
                bail!(Argument, "constant bit must be 0 or 1, got {b}");
            }
            Tensor::basis(2, b as usize)
        }
        GateKind::ConstFloat(x) => float_encode(x),
    })
}

/// Bits in little-endian order: `bits[i]` carries weight `2^i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitVec {
    pub bits: Vec<u8>,
}

impl BitVec {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            bail!(Argument, "bit vector entries must be 0 or 1");
        }
        Ok(Self { bits })
    }

    pub fn from_u64(value: u64, n: usize) -> Self {
        Self { bits: (0..n).map(|i| ((value >> i) & 1) as u8).collect() }
    }

    pub fn to_u64(&self) -> u64 {
        self.bits.iter().enumerate().map(|(i, &b)| u64::from(b) << i).sum()
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

/// `x ↦ (1, x)`.
pub fn float_encode(x: f64) -> Tensor {
    Tensor::from_real(vec![2], &[1.0, x]).expect("length-2 vector")
}

/// Inverse of [`float_encode`]; the leading component must be one.
pub fn float_decode(v: &Tensor) -> Result<f64> {
    if v.extents() != [2] {
        bail!(Representation, "encoded reals are length-2 vectors, got extents {:?}", v.extents());
    }
    let (a, b) = (v.data()[0], v.data()[1]);
    if (a - C64::new(1.0, 0.0)).norm() > 1e-12 || b.im != 0.0 {
        bail!(Representation, "vector ({a}, {b}) does not encode a real number");
    }
    Ok(b.re)
}
