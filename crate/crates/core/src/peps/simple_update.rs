//! Imaginary-time evolution with bond-weight (simple update) environments.

use super::{Peps, PHYS};
use crate::error::{bail, Result};
use crate::grid::{DOWN, LEFT, RIGHT, UP};
use crate::linalg::expm_hermitian;
use crate::model::{Boundary, Model};
use crate::scale::renormalize;
use crate::svd::svd_split;
use crate::tensor::{contract, Tensor, C64};

const WEIGHT_CUTOFF: f64 = 1e-12;

/// `S_i·S_j` on two spin-1/2 sites, basis index `2 s_i + s_j` with 0 = up.
pub fn heisenberg_bond() -> [C64; 16] {
    let mut h = [C64::new(0.0, 0.0); 16];
    for (k, z) in [0.25, -0.25, -0.25, 0.25].into_iter().enumerate() {
        h[k * 4 + k] = C64::new(z, 0.0);
    }
    h[4 + 2] = C64::new(0.5, 0.0);
    h[2 * 4 + 1] = C64::new(0.5, 0.0);
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Dir {
    Horizontal,
    Vertical,
}

struct Bond {
    dir: Dir,
    /// Site owning the bond on its right/down leg.
    site: usize,
    coefficient: f64,
}

fn locate_bonds(peps: &Peps, model: &Model) -> Result<Vec<Bond>> {
    let (rows, cols) = (peps.rows(), peps.cols());
    if model.n_sites() != rows * cols {
        bail!(Argument, "model has {} sites, PEPS has {}", model.n_sites(), rows * cols);
    }
    let pbc = peps.boundary() == Boundary::Pbc;
    let mut bonds: Vec<Bond> = Vec::new();
    for &(i, j, c) in &model.couplings {
        let (ri, ci) = (i / cols, i % cols);
        let (rj, cj) = (j / cols, j % cols);
        let right_of = |a: usize, b: usize| b == a + 1 || (pbc && a == cols - 1 && b == 0);
        let below = |a: usize, b: usize| b == a + 1 || (pbc && a == rows - 1 && b == 0);
        let (dir, site) = if ri == rj && right_of(ci, cj) {
            (Dir::Horizontal, i)
        } else if ri == rj && right_of(cj, ci) {
            (Dir::Horizontal, j)
        } else if ci == cj && below(ri, rj) {
            (Dir::Vertical, i)
        } else if ci == cj && below(rj, ri) {
            (Dir::Vertical, j)
        } else {
            bail!(Argument, "coupling ({i}, {j}) is not a lattice edge");
        };
        match bonds.iter_mut().find(|b| b.dir == dir && b.site == site) {
            Some(b) => b.coefficient += c,
            None => bonds.push(Bond { dir, site, coefficient: c }),
        }
    }
    bonds.sort_by_key(|b| (b.dir == Dir::Vertical, b.site));
    Ok(bonds)
}

struct Weights {
    rows: usize,
    cols: usize,
    /// Weight of the bond right of / below each site (empty when absent).
    right: Vec<Vec<f64>>,
    down: Vec<Vec<f64>>,
}

impl Weights {
    fn new(peps: &Peps) -> Self {
        let ones = |n: usize| vec![1.0; n];
        let right = peps.sites().iter().map(|t| ones(t.extents()[RIGHT])).collect();
        let down = peps.sites().iter().map(|t| ones(t.extents()[DOWN])).collect();
        Self { rows: peps.rows(), cols: peps.cols(), right, down }
    }

    /// Weight vector on `leg` of `site`.
    fn leg(&self, site: usize, leg: usize) -> &[f64] {
        let (r, c) = (site / self.cols, site % self.cols);
        match leg {
            RIGHT => &self.right[site],
            DOWN => &self.down[site],
            LEFT => &self.right[r * self.cols + (c + self.cols - 1) % self.cols],
            UP => &self.down[((r + self.rows - 1) % self.rows) * self.cols + c],
            _ => unreachable!(),
        }
    }
}

/// Multiplies leg `leg` of `t` elementwise by `w` (or its pseudo-inverse).
fn weigh_leg(t: &Tensor, leg: usize, w: &[f64], inverse: bool, power: f64) -> Tensor {
    let mut out = t.clone();
    let strides = t.strides();
    let e = t.extents()[leg];
    let s = strides[leg];
    for (off, x) in out.data_mut().iter_mut().enumerate() {
        let k = (off / s) % e;
        let wk = if w.len() == e { w[k] } else { 1.0 };
        let f = if inverse {
            if wk > WEIGHT_CUTOFF {
                1.0 / wk.powf(power)
            } else {
                0.0
            }
        } else {
            wk.powf(power)
        };
        *x *= f;
    }
    out
}

/// Zero-pads axis `axis` of `t` to extent `n`.
fn pad_axis(t: &Tensor, axis: usize, n: usize) -> Result<Tensor> {
    let e = t.extents()[axis];
    if e == n {
        return Ok(t.clone());
    }
    let mut ext = t.extents().to_vec();
    ext[axis] = n;
    let outer: usize = t.extents()[..axis].iter().product();
    let inner: usize = t.extents()[axis + 1..].iter().product();
    let mut data = vec![C64::new(0.0, 0.0); outer * n * inner];
    for o in 0..outer {
        let src = &t.data()[o * e * inner..(o + 1) * e * inner];
        data[o * n * inner..o * n * inner + e * inner].copy_from_slice(src);
    }
    Tensor::new(ext, data)
}

fn inverse_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (k, &i) in p.iter().enumerate() {
        inv[i] = k;
    }
    inv
}

fn update_bond(peps: &mut Peps, weights: &mut Weights, bond: &Bond, gate: &Tensor) -> Result<()> {
    let (rows, cols) = (peps.rows(), peps.cols());
    let a = bond.site;
    let (r, c) = (a / cols, a % cols);
    let (b, la, lb) = match bond.dir {
        Dir::Horizontal => (r * cols + (c + 1) % cols, RIGHT, LEFT),
        Dir::Vertical => (((r + 1) % rows) * cols + c, DOWN, UP),
    };
    let others = |skip: usize| -> Vec<usize> { (0..4).filter(|&l| l != skip).collect() };
    let (oa, ob) = (others(la), others(lb));

    let mut ta = peps.sites()[a].clone();
    for &l in &oa {
        ta = weigh_leg(&ta, l, weights.leg(a, l), false, 1.0);
    }
    let lam = weights.leg(a, la).to_vec();
    ta = weigh_leg(&ta, la, &lam, false, 1.0);
    let mut tb = peps.sites()[b].clone();
    for &l in &ob {
        tb = weigh_leg(&tb, l, weights.leg(b, l), false, 1.0);
    }
    let perm_a = [oa[0], oa[1], oa[2], PHYS, la];
    let perm_b = [lb, ob[0], ob[1], ob[2], PHYS];
    let ta = ta.permute(&perm_a)?;
    let tb = tb.permute(&perm_b)?;
    // [a1, a2, a3, sa, b1, b2, b3, sb]
    let theta = contract(&ta, &tb, &[(4, 0)])?;
    // gate [sa', sb', sa, sb] -> [a.., b.., sa', sb'] -> [a.., sa', b.., sb']
    let theta = contract(&theta, gate, &[(3, 2), (7, 3)])?.permute(&[0, 1, 2, 6, 3, 4, 5, 7])?;
    let bond_extent = lam.len();
    let svd = svd_split(&theta, &[0, 1, 2, 3], bond_extent)?;
    let smax = svd.singulars.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        bail!(Numerical, "simple update annihilated the state on bond at site {a}");
    }
    let mut new_lam: Vec<f64> = svd.singulars.iter().map(|s| s / smax).collect();
    new_lam.resize(bond_extent, 0.0);
    let u = pad_axis(&svd.isometry, 4, bond_extent)?;
    let v = pad_axis(&svd.right, 0, bond_extent)?;

    // Back to (up, left, down, right, phys) and strip the environment weights.
    let mut na = u.permute(&inverse_perm(&perm_a))?;
    for &l in &oa {
        na = weigh_leg(&na, l, weights.leg(a, l), true, 1.0);
    }
    let mut nb = v.permute(&inverse_perm(&perm_b))?;
    for &l in &ob {
        nb = weigh_leg(&nb, l, weights.leg(b, l), true, 1.0);
    }
    let sites = peps.sites_mut();
    sites[a] = renormalize(na).tensor;
    sites[b] = renormalize(nb).tensor;
    match bond.dir {
        Dir::Horizontal => weights.right[a] = new_lam,
        Dir::Vertical => weights.down[a] = new_lam,
    }
    Ok(())
}

/// Applies `exp(-tau H_bond)` bond by bond for `steps` sweeps: horizontal
/// bonds in row-major order, then vertical bonds. Bond extents are kept.
pub fn simple_update(peps: &Peps, model: &Model, tau: f64, steps: usize) -> Result<Peps> {
    if !(tau > 0.0) {
        bail!(Argument, "imaginary time step must be positive, got {tau}");
    }
    if peps.phys_dim() != 2 {
        bail!(Argument, "simple update supports spin-1/2 sites only");
    }
    let bonds = locate_bonds(peps, model)?;
    let sdots = heisenberg_bond();
    let gates: Vec<Tensor> = bonds
        .iter()
        .map(|b| {
            let h: Vec<C64> = sdots.iter().map(|x| x * b.coefficient).collect();
            Tensor::new(vec![2, 2, 2, 2], expm_hermitian(4, &h, C64::new(-tau, 0.0))?)
        })
        .collect::<Result<_>>()?;
    let mut out = peps.clone();
    let mut weights = Weights::new(peps);
    for _ in 0..steps {
        for (bond, gate) in bonds.iter().zip(&gates) {
            update_bond(&mut out, &mut weights, bond, gate)?;
        }
    }
    for i in 0..out.n_sites() {
        let mut t = out.sites()[i].clone();
        for l in [RIGHT, DOWN] {
            t = weigh_leg(&t, l, weights.leg(i, l), false, 0.5);
        }
        for l in [UP, LEFT] {
            t = weigh_leg(&t, l, weights.leg(i, l), false, 0.5);
        }
        out.sites_mut()[i] = renormalize(t).tensor;
    }
    Ok(out)
}
