//! Projected entangled pair states on rectangular lattices and their
//! amplitudes under fixed and history-dependent truncation.

mod dynamic;
mod exact;
mod fixed;
mod io;
mod simple_update;

pub use dynamic::{amplitude_dynamic, DynamicCache};
pub use exact::exact_amplitude;
pub use fixed::{amplitude_fixed, amplitude_fixed_with_weight, FixedPlan, PlanStep};
pub use io::{load_peps, read_peps, save_peps, write_peps};
pub use simple_update::simple_update;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail, Result};
use crate::grid::{Grid, DOWN, LEFT, RIGHT, UP};
use crate::model::Boundary;
use crate::tensor::{Tensor, C64};

pub const PHYS: usize = 4;

/// One physical index per lattice site, row-major.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinConfiguration {
    pub values: Vec<u8>,
}

impl SpinConfiguration {
    pub fn new(values: Vec<u8>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn row(&self, r: usize, cols: usize) -> &[u8] {
        &self.values[r * cols..(r + 1) * cols]
    }

    /// Checkerboard pattern `(r + c) mod 2`.
    pub fn neel(rows: usize, cols: usize) -> Self {
        Self { values: (0..rows * cols).map(|i| ((i / cols + i % cols) % 2) as u8).collect() }
    }

    /// Configuration number `index` in mixed radix `d`, site 0 most significant.
    pub fn from_index(index: usize, n_sites: usize, d: usize) -> Self {
        let mut values = vec![0u8; n_sites];
        let mut x = index;
        for v in values.iter_mut().rev() {
            *v = (x % d) as u8;
            x /= d;
        }
        Self { values }
    }

    pub fn to_index(&self, d: usize) -> usize {
        self.values.iter().fold(0, |acc, &v| acc * d + v as usize)
    }
}

/// Site tensors carry legs `(up, left, down, right, physical)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Peps {
    rows: usize,
    cols: usize,
    phys_dim: usize,
    boundary: Boundary,
    sites: Vec<Tensor>,
}

impl Peps {
    pub fn new(rows: usize, cols: usize, boundary: Boundary, sites: Vec<Tensor>) -> Result<Self> {
        if rows == 0 || cols == 0 || sites.len() != rows * cols {
            bail!(Dimension, "{rows}x{cols} PEPS needs {} site tensors, got {}", rows * cols, sites.len());
        }
        if sites.iter().any(|t| t.rank() != 5) {
            bail!(Dimension, "PEPS site tensors must have rank 5");
        }
        let phys_dim = sites[0].extents()[PHYS];
        let peps = Self { rows, cols, phys_dim, boundary, sites };
        let pbc = boundary == Boundary::Pbc;
        for r in 0..rows {
            for c in 0..cols {
                let e = peps.site(r, c).extents();
                if e[PHYS] != phys_dim {
                    bail!(Dimension, "site ({r}, {c}) has physical dimension {}", e[PHYS]);
                }
                if !pbc && (r == 0 && e[UP] != 1 || r == rows - 1 && e[DOWN] != 1) {
                    bail!(Dimension, "open vertical edge at ({r}, {c}) must have extent 1");
                }
                if !pbc && (c == 0 && e[LEFT] != 1 || c == cols - 1 && e[RIGHT] != 1) {
                    bail!(Dimension, "open horizontal edge at ({r}, {c}) must have extent 1");
                }
                if (c + 1 < cols || pbc) && e[RIGHT] != peps.site(r, (c + 1) % cols).extents()[LEFT] {
                    bail!(Dimension, "horizontal bond right of ({r}, {c}) mismatched");
                }
                if (r + 1 < rows || pbc) && e[DOWN] != peps.site((r + 1) % rows, c).extents()[UP] {
                    bail!(Dimension, "vertical bond below ({r}, {c}) mismatched");
                }
            }
        }
        Ok(peps)
    }

    /// Random real entries uniform in `[-1, 1)`.
    pub fn random<R: Rng>(
        rows: usize,
        cols: usize,
        phys_dim: usize,
        bond_dim: usize,
        boundary: Boundary,
        rng: &mut R,
    ) -> Result<Self> {
        Self::random_with(rows, cols, phys_dim, bond_dim, boundary, |_| C64::new(rng.gen_range(-1.0..1.0), 0.0))
    }

    /// Random complex entries with real and imaginary parts uniform in `[-1, 1)`.
    pub fn random_complex<R: Rng>(
        rows: usize,
        cols: usize,
        phys_dim: usize,
        bond_dim: usize,
        boundary: Boundary,
        rng: &mut R,
    ) -> Result<Self> {
        Self::random_with(rows, cols, phys_dim, bond_dim, boundary, |_| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn random_with(
        rows: usize,
        cols: usize,
        phys_dim: usize,
        bond_dim: usize,
        boundary: Boundary,
        mut entry: impl FnMut(usize) -> C64,
    ) -> Result<Self> {
        if phys_dim == 0 || bond_dim == 0 {
            bail!(Argument, "physical and bond dimensions must be positive");
        }
        let mut sites = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let e = site_extents(rows, cols, r, c, phys_dim, bond_dim, boundary);
                let len = e.iter().product();
                sites.push(Tensor::new(e.to_vec(), (0..len).map(&mut entry).collect())?);
            }
        }
        Self::new(rows, cols, boundary, sites)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn phys_dim(&self) -> usize {
        self.phys_dim
    }

    /// Largest virtual bond extent.
    pub fn bond_dim(&self) -> usize {
        self.sites.iter().flat_map(|t| t.extents()[..4].iter().copied()).max().unwrap_or(1)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn site(&self, r: usize, c: usize) -> &Tensor {
        &self.sites[r * self.cols + c]
    }

    pub fn sites(&self) -> &[Tensor] {
        &self.sites
    }

    /// Replaces one site tensor, keeping its extents.
    pub fn set_site(&mut self, index: usize, t: Tensor) -> Result<()> {
        if t.extents() != self.sites[index].extents() {
            bail!(Dimension, "replacement site {index} has extents {:?}, expected {:?}", t.extents(), self.sites[index].extents());
        }
        self.sites[index] = t;
        Ok(())
    }

    pub(crate) fn sites_mut(&mut self) -> &mut [Tensor] {
        &mut self.sites
    }

    /// Total number of complex entries over all site tensors.
    pub fn n_entries(&self) -> usize {
        self.sites.iter().map(Tensor::len).sum()
    }

    pub fn check_config(&self, n: &SpinConfiguration) -> Result<()> {
        if n.len() != self.n_sites() {
            bail!(Argument, "configuration has {} entries for {} sites", n.len(), self.n_sites());
        }
        if let Some(i) = n.values.iter().position(|&v| v as usize >= self.phys_dim) {
            bail!(Argument, "configuration entry {} at site {i} exceeds physical dimension {}", n.values[i], self.phys_dim);
        }
        Ok(())
    }

    /// Fingerprint of the tensor contents, used to detect caches built for a
    /// different state.
    pub(crate) fn fingerprint(&self) -> u64 {
        use std::hash::{Hash, Hasher};
        let mut h = std::collections::hash_map::DefaultHasher::new();
        (self.rows, self.cols, self.phys_dim, self.boundary).hash(&mut h);
        for t in &self.sites {
            t.extents().hash(&mut h);
            for x in t.data() {
                x.re.to_bits().hash(&mut h);
                x.im.to_bits().hash(&mut h);
            }
        }
        h.finish()
    }
}

fn site_extents(
    rows: usize,
    cols: usize,
    r: usize,
    c: usize,
    d: usize,
    bond: usize,
    boundary: Boundary,
) -> [usize; 5] {
    let pbc = boundary == Boundary::Pbc;
    let up = if r == 0 && !pbc { 1 } else { bond };
    let down = if r == rows - 1 && !pbc { 1 } else { bond };
    let left = if c == 0 && !pbc { 1 } else { bond };
    let right = if c == cols - 1 && !pbc { 1 } else { bond };
    [up, left, down, right, d]
}

/// D = 1 open-boundary PEPS whose only nonzero amplitude is `config`.
pub fn product_peps(rows: usize, cols: usize, phys_dim: usize, config: &SpinConfiguration) -> Result<Peps> {
    if config.len() != rows * cols {
        bail!(Argument, "configuration has {} entries for {} sites", config.len(), rows * cols);
    }
    let sites = config
        .values
        .iter()
        .map(|&v| {
            if v as usize >= phys_dim {
                bail!(Argument, "configuration entry {v} exceeds physical dimension {phys_dim}");
            }
            Tensor::basis(phys_dim, v as usize).reshape(vec![1, 1, 1, 1, phys_dim])
        })
        .collect::<Result<Vec<_>>>()?;
    Peps::new(rows, cols, Boundary::Obc, sites)
}

/// Projected site tensors `(up, left, down, right)`, before any folding of
/// periodic bonds.
pub fn project_sites(peps: &Peps, n: &SpinConfiguration) -> Result<Vec<Tensor>> {
    peps.check_config(n)?;
    peps.sites.iter().zip(&n.values).map(|(t, &v)| t.slice(PHYS, v as usize)).collect()
}

/// Projects every physical index onto `n` and returns an open-boundary grid.
///
/// Periodic lattices are folded: each wrap bond is carried alongside the
/// ordinary bonds of its row (or column), so the grid bonds become products
/// of the form `(bond, wrap)`.
pub fn project_config(peps: &Peps, n: &SpinConfiguration) -> Result<Grid> {
    let mut tensors = project_sites(peps, n)?;
    let (rows, cols) = (peps.rows, peps.cols);
    if peps.boundary == Boundary::Pbc {
        fold_rows(&mut tensors, rows, cols)?;
        // Fold the vertical wraps by folding the transposed layout.
        let mut t: Vec<Tensor> = Vec::with_capacity(tensors.len());
        for c in 0..cols {
            for r in 0..rows {
                t.push(tensors[r * cols + c].permute(&[LEFT, UP, RIGHT, DOWN])?);
            }
        }
        fold_rows(&mut t, cols, rows)?;
        for c in 0..cols {
            for r in 0..rows {
                tensors[r * cols + c] = t[c * rows + r].permute(&[LEFT, UP, RIGHT, DOWN])?;
            }
        }
    }
    Grid::new(rows, cols, tensors)
}

/// Folds the horizontal wrap bond of each row into the row's internal bonds.
fn fold_rows(tensors: &mut [Tensor], rows: usize, cols: usize) -> Result<()> {
    for r in 0..rows {
        let w = tensors[r * cols].extents()[LEFT];
        if w == 1 {
            continue;
        }
        for c in 0..cols {
            let t = &tensors[r * cols + c];
            let e = t.extents().to_vec();
            let folded = if c == 0 {
                // T[u, w, d, r] -> T'[u, 1, d, (r, w)]
                t.permute(&[UP, DOWN, RIGHT, LEFT])?.reshape(vec![e[UP], 1, e[DOWN], e[RIGHT] * w])?
            } else if c == cols - 1 {
                // T[u, l, d, w] -> T'[u, (l, w), d, 1]
                t.permute(&[UP, LEFT, RIGHT, DOWN])?.reshape(vec![e[UP], e[LEFT] * w, e[DOWN], 1])?
            } else {
                // T[u, l, d, r] δ(w, w') -> T'[u, (l, w), d, (r, w')]
                let x = t.outer(&Tensor::identity(w));
                x.permute(&[0, 1, 4, 2, 3, 5])?.reshape(vec![e[UP], e[LEFT] * w, e[DOWN], e[RIGHT] * w])?
            };
            tensors[r * cols + c] = folded;
        }
    }
    Ok(())
}
