//! Planar networks of rank-4 tensors and boundary-MPS contraction.
//!
//! Every tensor carries legs `(up, left, down, right)`. Legs on the outer
//! edge of the grid have extent 1, so a grid is always an open-boundary
//! network; periodic lattices are folded into this form before contraction.

use crate::error::{bail, Result};
use crate::mps::Mps;
use crate::scale::{renormalize, AmplitudeValue};
use crate::tensor::{contract, Tensor};

pub const UP: usize = 0;
pub const LEFT: usize = 1;
pub const DOWN: usize = 2;
pub const RIGHT: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    rows: usize,
    cols: usize,
    tensors: Vec<Tensor>,
}

impl Grid {
    pub fn new(rows: usize, cols: usize, tensors: Vec<Tensor>) -> Result<Self> {
        if rows == 0 || cols == 0 || tensors.len() != rows * cols {
            bail!(Dimension, "grid {rows}x{cols} needs {} tensors, got {}", rows * cols, tensors.len());
        }
        let g = Self { rows, cols, tensors };
        for r in 0..rows {
            for c in 0..cols {
                let t = g.at(r, c);
                if t.rank() != 4 {
                    bail!(Dimension, "tensor at ({r}, {c}) has rank {}, expected 4", t.rank());
                }
                let e = t.extents();
                if r == 0 && e[UP] != 1 || r == rows - 1 && e[DOWN] != 1 {
                    bail!(Dimension, "vertical edge leg at ({r}, {c}) must have extent 1");
                }
                if c == 0 && e[LEFT] != 1 || c == cols - 1 && e[RIGHT] != 1 {
                    bail!(Dimension, "horizontal edge leg at ({r}, {c}) must have extent 1");
                }
                if c + 1 < cols && e[RIGHT] != g.at(r, c + 1).extents()[LEFT] {
                    bail!(Dimension, "horizontal bond ({r}, {c})-({r}, {}) mismatched", c + 1);
                }
                if r + 1 < rows && e[DOWN] != g.at(r + 1, c).extents()[UP] {
                    bail!(Dimension, "vertical bond ({r}, {c})-({}, {c}) mismatched", r + 1);
                }
            }
        }
        Ok(g)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> &Tensor {
        &self.tensors[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[Tensor] {
        &self.tensors[r * self.cols..(r + 1) * self.cols]
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    /// Same network viewed upside down: rows reversed, `up` and `down` swapped.
    pub fn flipped(&self) -> Grid {
        let mut tensors = Vec::with_capacity(self.tensors.len());
        for r in (0..self.rows).rev() {
            for t in self.row(r) {
                tensors.push(t.permute(&[DOWN, LEFT, UP, RIGHT]).expect("rank 4"));
            }
        }
        Grid { rows: self.rows, cols: self.cols, tensors }
    }

    /// Same network with rows and columns exchanged.
    pub fn transposed(&self) -> Grid {
        let mut tensors = Vec::with_capacity(self.tensors.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                tensors.push(self.at(r, c).permute(&[LEFT, UP, RIGHT, DOWN]).expect("rank 4"));
            }
        }
        Grid { rows: self.cols, cols: self.rows, tensors }
    }

    /// Largest bond extent in the network.
    pub fn max_bond(&self) -> usize {
        self.tensors.iter().flat_map(|t| t.extents().iter().copied()).max().unwrap_or(1)
    }
}

/// Absorbs one row into a boundary MPS and compresses every bond to `chi`.
///
/// Returns the new boundary and the discarded weight of the compression.
pub fn boundary_absorb(bmps: &Mps, row: &[Tensor], chi: usize) -> Result<(Mps, f64)> {
    let mut next = bmps.absorb_row(row)?;
    let dw = next.compress(chi)?;
    Ok((next, dw))
}

/// Exactly contracts a strip of consecutive rows sandwiched between a top
/// boundary (physical legs facing down into the strip) and a bottom boundary
/// (physical legs facing up into the strip), sweeping column by column.
pub fn close_strip(top: &Mps, strip: &[&[Tensor]], bottom: &Mps) -> Result<AmplitudeValue> {
    if top.is_zero || bottom.is_zero {
        return Ok(AmplitudeValue::ZERO);
    }
    let cols = top.len();
    if bottom.len() != cols || strip.iter().any(|r| r.len() != cols) {
        bail!(Dimension, "strip and boundaries disagree on column count");
    }
    let k = strip.len();
    // Environment layout: [top bond, h_1 .. h_k, bottom bond].
    let mut env = Tensor::ones(&vec![1; k + 2]);
    let mut log_scale = top.log_scale + bottom.log_scale;
    for c in 0..cols {
        // [h.., b] x [p, u'] -> [h.., b, p, u'] -> [h.., b, u', p]
        let x = contract(&env, &top.tensors[c], &[(0, 0)])?;
        let n = x.rank();
        let mut perm: Vec<usize> = (0..n - 2).collect();
        perm.push(n - 1);
        perm.push(n - 2);
        let mut x = x.permute(&perm)?;
        // Invariant before row i: [h_i .. h_k, b, u', h'_1 .. h'_{i-1}, q]
        for row in strip {
            let n = x.rank();
            x = contract(&x, &row[c], &[(0, LEFT), (n - 1, UP)])?;
            // [..., down, right] -> [..., right, down]
            let n = x.rank();
            let mut perm: Vec<usize> = (0..n - 2).collect();
            perm.push(n - 1);
            perm.push(n - 2);
            x = x.permute(&perm)?;
        }
        // [b, u', h'_1 .. h'_k, q] x [b, q, b'] -> [u', h'.., b']
        let n = x.rank();
        let x = contract(&x, &bottom.tensors[c], &[(0, 0), (n - 1, 1)])?;
        let r = renormalize(x);
        if r.is_zero {
            return Ok(AmplitudeValue::ZERO);
        }
        log_scale += r.log_factor;
        env = r.tensor;
    }
    let v = env
        .scalar_value()
        .ok_or_else(|| crate::TnfError::Dimension("open legs left after closing strip".into()))?;
    Ok(AmplitudeValue::from_parts(v, log_scale))
}

/// Absorbs every row from the top with compression to `chi` after each row,
/// then closes the fully absorbed boundary. Returns the value and the total
/// discarded weight.
pub fn contract_sequential(grid: &Grid, chi: usize) -> Result<(AmplitudeValue, f64)> {
    let mut b = Mps::trivial(grid.cols());
    let mut dw = 0.0;
    for r in 0..grid.rows() {
        let (next, d) = boundary_absorb(&b, grid.row(r), chi)?;
        b = next;
        dw += d;
        if b.is_zero {
            return Ok((AmplitudeValue::ZERO, dw));
        }
    }
    Ok((b.contract_to_scalar()?, dw))
}
