//! Spin-1/2 lattice Hamiltonians `H = Σ c_ij S_i·S_j` on rectangular lattices.

use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Obc,
    Pbc,
}

/// Rectangular lattice; site `(r, c)` has row-major index `r * cols + c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    pub rows: usize,
    pub cols: usize,
    pub boundary: Boundary,
}

impl Lattice {
    pub fn new(rows: usize, cols: usize, boundary: Boundary) -> Result<Self> {
        if rows == 0 || cols == 0 {
            bail!(Argument, "lattice extents must be positive, got {rows}x{cols}");
        }
        // Wrap bonds on a width-2 lattice would duplicate the open bond.
        if boundary == Boundary::Pbc && (rows < 3 || cols < 3) {
            bail!(Argument, "periodic lattices need at least 3 sites per direction, got {rows}x{cols}");
        }
        Ok(Self { rows, cols, boundary })
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn index(&self, r: usize, c: usize) -> usize {
        r * self.cols + c
    }

    pub fn position(&self, i: usize) -> (usize, usize) {
        (i / self.cols, i % self.cols)
    }

    /// Nearest-neighbour bonds: horizontal bonds row by row, then vertical
    /// bonds, with wrap bonds last in each group for periodic lattices.
    pub fn nearest_neighbours(&self) -> Vec<(usize, usize)> {
        let mut bonds = Vec::new();
        let pbc = self.boundary == Boundary::Pbc;
        for r in 0..self.rows {
            for c in 0..self.cols - 1 {
                bonds.push((self.index(r, c), self.index(r, c + 1)));
            }
            if pbc {
                bonds.push((self.index(r, self.cols - 1), self.index(r, 0)));
            }
        }
        for r in 0..self.rows - 1 {
            for c in 0..self.cols {
                bonds.push((self.index(r, c), self.index(r + 1, c)));
            }
        }
        if pbc {
            for c in 0..self.cols {
                bonds.push((self.index(self.rows - 1, c), self.index(0, c)));
            }
        }
        bonds
    }

    /// Diagonal next-nearest-neighbour bonds.
    pub fn diagonals(&self) -> Vec<(usize, usize)> {
        let mut bonds = Vec::new();
        let pbc = self.boundary == Boundary::Pbc;
        let down_rows = if pbc { self.rows } else { self.rows - 1 };
        for r in 0..down_rows {
            let r2 = (r + 1) % self.rows;
            for c in 0..self.cols {
                if c + 1 < self.cols || pbc {
                    bonds.push((self.index(r, c), self.index(r2, (c + 1) % self.cols)));
                }
                if c >= 1 || pbc {
                    bonds.push((self.index(r, c), self.index(r2, (c + self.cols - 1) % self.cols)));
                }
            }
        }
        bonds
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Heisenberg,
    J1j2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub lattice: Lattice,
    /// Two-site terms `(i, j, c_ij)`.
    pub couplings: Vec<(usize, usize, f64)>,
}

impl Model {
    pub fn heisenberg(lattice: Lattice, j: f64) -> Self {
        let couplings = lattice.nearest_neighbours().into_iter().map(|(a, b)| (a, b, j)).collect();
        Self { kind: ModelKind::Heisenberg, lattice, couplings }
    }

    pub fn j1j2(lattice: Lattice, j1: f64, j2: f64) -> Self {
        let mut couplings: Vec<_> = lattice.nearest_neighbours().into_iter().map(|(a, b)| (a, b, j1)).collect();
        couplings.extend(lattice.diagonals().into_iter().map(|(a, b)| (a, b, j2)));
        Self { kind: ModelKind::J1j2, lattice, couplings }
    }

    /// Model with explicit couplings, validated against the lattice.
    pub fn custom(kind: ModelKind, lattice: Lattice, couplings: Vec<(usize, usize, f64)>) -> Result<Self> {
        let n = lattice.n_sites();
        for &(i, j, c) in &couplings {
            if i >= n || j >= n || i == j {
                bail!(Argument, "coupling ({i}, {j}) invalid for {n} sites");
            }
            if !c.is_finite() {
                bail!(Argument, "coupling ({i}, {j}) has non-finite coefficient");
            }
        }
        Ok(Self { kind, lattice, couplings })
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }
}
