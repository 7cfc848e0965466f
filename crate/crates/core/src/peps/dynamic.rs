//! History-dependent amplitudes with cached boundary environments, as used in
//! conventional PEPS Monte Carlo. At finite chi the value for a configuration
//! depends on which rows changed since the previous configuration.

use super::{project_config, Peps, SpinConfiguration};
use crate::error::{bail, Result};
use crate::grid::{boundary_absorb, close_strip, Grid};
use crate::mps::Mps;
use crate::scale::AmplitudeValue;

#[derive(Clone, Debug)]
struct Entry {
    /// Row configurations summarized by the boundary.
    key: Vec<u8>,
    boundary: Mps,
}

#[derive(Clone, Debug)]
pub struct DynamicCache {
    rows: usize,
    cols: usize,
    chi: usize,
    fingerprint: u64,
    /// `top[r]` holds rows `0..=r` absorbed from above.
    top: Vec<Option<Entry>>,
    /// `bottom[r]` holds rows `r..rows` absorbed from below.
    bottom: Vec<Option<Entry>>,
    last: Option<(SpinConfiguration, AmplitudeValue)>,
    rebuilt_rows: u64,
}

impl DynamicCache {
    pub fn new(peps: &Peps, chi: usize) -> Result<Self> {
        if chi < 1 {
            bail!(Argument, "bond dimension chi must be at least 1");
        }
        Ok(Self {
            rows: peps.rows(),
            cols: peps.cols(),
            chi,
            fingerprint: peps.fingerprint(),
            top: vec![None; peps.rows()],
            bottom: vec![None; peps.rows()],
            last: None,
            rebuilt_rows: 0,
        })
    }

    pub fn chi(&self) -> usize {
        self.chi
    }

    pub fn last(&self) -> Option<&(SpinConfiguration, AmplitudeValue)> {
        self.last.as_ref()
    }

    /// Number of row absorptions performed so far (cache misses).
    pub fn rebuilt_rows(&self) -> u64 {
        self.rebuilt_rows
    }

    /// Forgets the previous configuration; cached environments are kept.
    pub fn forget_history(&mut self) {
        self.last = None;
    }

    fn check(&self, peps: &Peps) -> Result<()> {
        if peps.rows() != self.rows || peps.cols() != self.cols || peps.fingerprint() != self.fingerprint {
            bail!(State, "dynamic cache was built for a different PEPS");
        }
        Ok(())
    }

    /// Top boundary over rows `0..=r`.
    fn top_boundary(&mut self, grid: &Grid, n: &SpinConfiguration, r: usize) -> Result<Mps> {
        let cols = self.cols;
        let valid = |k: usize, e: &Option<Entry>| e.as_ref().is_some_and(|e| e.key == n.values[..(k + 1) * cols]);
        let start = (0..=r).rev().find(|&k| valid(k, &self.top[k]));
        let mut b = match start {
            Some(k) if k == r => return Ok(self.top[r].as_ref().expect("valid").boundary.clone()),
            Some(k) => self.top[k].as_ref().expect("valid").boundary.clone(),
            None => Mps::trivial(cols),
        };
        for k in start.map_or(0, |k| k + 1)..=r {
            b = boundary_absorb(&b, grid.row(k), self.chi)?.0;
            self.rebuilt_rows += 1;
            self.top[k] = Some(Entry { key: n.values[..(k + 1) * cols].to_vec(), boundary: b.clone() });
        }
        Ok(b)
    }

    /// Bottom boundary over rows `r..rows`, built on the flipped grid.
    fn bottom_boundary(&mut self, flipped: &Grid, n: &SpinConfiguration, r: usize) -> Result<Mps> {
        let (rows, cols) = (self.rows, self.cols);
        let valid = |k: usize, e: &Option<Entry>| e.as_ref().is_some_and(|e| e.key == n.values[k * cols..]);
        let start = (r..rows).find(|&k| valid(k, &self.bottom[k]));
        let mut b = match start {
            Some(k) if k == r => return Ok(self.bottom[r].as_ref().expect("valid").boundary.clone()),
            Some(k) => self.bottom[k].as_ref().expect("valid").boundary.clone(),
            None => Mps::trivial(cols),
        };
        for k in (r..start.unwrap_or(rows)).rev() {
            b = boundary_absorb(&b, flipped.row(rows - 1 - k), self.chi)?.0;
            self.rebuilt_rows += 1;
            self.bottom[k] = Some(Entry { key: n.values[k * cols..].to_vec(), boundary: b.clone() });
        }
        Ok(b)
    }

    /// Amplitude of `n` given the cache history, without recording `n` as
    /// the new reference configuration.
    pub fn evaluate(&mut self, peps: &Peps, n: &SpinConfiguration) -> Result<AmplitudeValue> {
        self.check(peps)?;
        peps.check_config(n)?;
        let (rows, cols) = (self.rows, self.cols);
        let (a, b) = match &self.last {
            None => (rows / 2, rows / 2),
            Some((prev, amp)) => {
                let changed: Vec<usize> = (0..rows).filter(|&r| prev.row(r, cols) != n.row(r, cols)).collect();
                match (changed.first(), changed.last()) {
                    (Some(&a), Some(&b)) => (a, b),
                    _ => return Ok(*amp),
                }
            }
        };
        let grid = project_config(peps, n)?;
        let top = if a == 0 { Mps::trivial(cols) } else { self.top_boundary(&grid, n, a - 1)? };
        let bottom = if b + 1 == rows {
            Mps::trivial(cols)
        } else {
            self.bottom_boundary(&grid.flipped(), n, b + 1)?
        };
        let strip: Vec<&[crate::tensor::Tensor]> = (a..=b).map(|r| grid.row(r)).collect();
        close_strip(&top, &strip, &bottom)
    }

    /// Records `n` (with its amplitude) as the reference configuration.
    pub fn commit(&mut self, n: &SpinConfiguration, amp: AmplitudeValue) {
        self.last = Some((n.clone(), amp));
    }
}

/// Evaluates `n` against the cache history and commits it.
pub fn amplitude_dynamic(
    cache: &mut DynamicCache,
    peps: &Peps,
    n: &SpinConfiguration,
    chi: usize,
) -> Result<AmplitudeValue> {
    if chi != cache.chi {
        bail!(State, "cache built for chi = {} used with chi = {chi}", cache.chi);
    }
    let amp = cache.evaluate(peps, n)?;
    cache.commit(n, amp);
    Ok(amp)
}
