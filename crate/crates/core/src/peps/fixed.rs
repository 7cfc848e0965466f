//! Fixed contraction schedule: the amplitude is a single-valued function of
//! the configuration for every truncation bond dimension.

use serde::{Deserialize, Serialize};

use super::{project_config, Peps, SpinConfiguration};
use crate::error::{bail, Result};
use crate::grid::{boundary_absorb, close_strip, Grid};
use crate::mps::Mps;
use crate::scale::AmplitudeValue;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op", content = "row")]
pub enum PlanStep {
    /// Absorb a row into the top boundary, then compress.
    AbsorbTop(usize),
    /// Absorb a row into the bottom boundary, then compress.
    AbsorbBottom(usize),
    /// Exactly contract the middle row between both boundaries.
    Close(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedPlan {
    pub rows: usize,
    pub cols: usize,
    pub chi: usize,
    pub steps: Vec<PlanStep>,
}

impl FixedPlan {
    /// Top boundary absorbs rows `[0, mid)` downward, bottom boundary absorbs
    /// `(mid, rows-1]` upward, with `mid = rows / 2`.
    pub fn new(rows: usize, cols: usize, chi: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            bail!(Argument, "plan extents must be positive");
        }
        if chi < 1 {
            bail!(Argument, "bond dimension chi must be at least 1");
        }
        let mid = rows / 2;
        let mut steps: Vec<PlanStep> = (0..mid).map(PlanStep::AbsorbTop).collect();
        steps.extend((mid + 1..rows).rev().map(PlanStep::AbsorbBottom));
        steps.push(PlanStep::Close(mid));
        Ok(Self { rows, cols, chi, steps })
    }

    pub fn mid(&self) -> usize {
        self.rows / 2
    }

    pub fn check(&self, peps: &Peps) -> Result<()> {
        if self.rows != peps.rows() || self.cols != peps.cols() {
            bail!(
                State,
                "plan for {}x{} applied to a {}x{} PEPS",
                self.rows,
                self.cols,
                peps.rows(),
                peps.cols()
            );
        }
        Ok(())
    }

    /// Runs the schedule on an already projected grid.
    pub(crate) fn run(&self, grid: &Grid) -> Result<(AmplitudeValue, f64)> {
        let cols = grid.cols();
        let rows = grid.rows();
        let mut top = Mps::trivial(cols);
        let mut bottom = Mps::trivial(cols);
        let mut dw = 0.0;
        let mut flipped: Option<Grid> = None;
        for step in &self.steps {
            match *step {
                PlanStep::AbsorbTop(r) => {
                    let (b, d) = boundary_absorb(&top, grid.row(r), self.chi)?;
                    top = b;
                    dw += d;
                }
                PlanStep::AbsorbBottom(r) => {
                    let f = flipped.get_or_insert_with(|| grid.flipped());
                    let (b, d) = boundary_absorb(&bottom, f.row(rows - 1 - r), self.chi)?;
                    bottom = b;
                    dw += d;
                }
                PlanStep::Close(r) => {
                    return Ok((close_strip(&top, &[grid.row(r)], &bottom)?, dw));
                }
            }
        }
        bail!(Structure, "plan has no closing step")
    }
}

pub fn amplitude_fixed(peps: &Peps, n: &SpinConfiguration, plan: &FixedPlan) -> Result<AmplitudeValue> {
    Ok(amplitude_fixed_with_weight(peps, n, plan)?.0)
}

/// Amplitude together with the summed discarded weight of every compression.
pub fn amplitude_fixed_with_weight(
    peps: &Peps,
    n: &SpinConfiguration,
    plan: &FixedPlan,
) -> Result<(AmplitudeValue, f64)> {
    plan.check(peps)?;
    plan.run(&project_config(peps, n)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;
    use crate::peps::tests::random_peps;
    use crate::peps::{exact_amplitude, product_peps, project_sites};
    use crate::svd::svd_split;
    use crate::tensor::{contract, Tensor, C64};
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_config(n: usize, rng: &mut impl Rng) -> SpinConfiguration {
        SpinConfiguration::new((0..n).map(|_| rng.gen_range(0..2)).collect())
    }

    #[test]
    fn plan_layout() {
        let p = FixedPlan::new(4, 4, 2).unwrap();
        use PlanStep::*;
        assert_eq!(p.steps, vec![AbsorbTop(0), AbsorbTop(1), AbsorbBottom(3), Close(2)]);
        let p = FixedPlan::new(5, 3, 2).unwrap();
        assert_eq!(p.steps, vec![AbsorbTop(0), AbsorbTop(1), AbsorbBottom(4), AbsorbBottom(3), Close(2)]);
        assert!(FixedPlan::new(4, 4, 0).is_err());
    }

    #[test]
    fn product_state_amplitude_is_one() {
        let n = SpinConfiguration::new(vec![0, 1, 1, 0]);
        let p = product_peps(2, 2, 2, &n).unwrap();
        let plan = FixedPlan::new(2, 2, 1).unwrap();
        let a = amplitude_fixed(&p, &n, &plan).unwrap();
        assert!((a.to_complex() - C64::new(1.0, 0.0)).norm() < 1e-14);
        let z = amplitude_fixed(&p, &SpinConfiguration::new(vec![0; 4]), &plan).unwrap();
        assert!(z.is_zero);
    }

    #[test]
    fn large_chi_equals_exact() {
        let p = random_peps(4, 4, 2, 3, Boundary::Obc, 11);
        let plan = FixedPlan::new(4, 4, 27).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let n = random_config(16, &mut rng);
            let a = amplitude_fixed(&p, &n, &plan).unwrap();
            let b = exact_amplitude(&p, &n).unwrap();
            assert!(a.relative_difference(&b) < 1e-10);
        }
    }

    /// Straight-line rewrite of the same schedule for a 4x4 lattice: two
    /// rows from the top, one from the bottom, closure at row 2.
    fn straight_line_4x4(p: &Peps, n: &SpinConfiguration, chi: usize) -> C64 {
        let t = project_sites(p, n).unwrap();
        let at = |r: usize, c: usize| &t[r * 4 + c];
        let compress = |sites: Vec<Tensor>| -> Vec<Tensor> {
            let mut s = sites;
            for i in 0..3 {
                let (q, r) = crate::svd::qr_split(&s[i], &[0, 1]).unwrap();
                s[i] = q;
                s[i + 1] = contract(&r, &s[i + 1], &[(1, 0)]).unwrap();
            }
            for i in (1..4).rev() {
                let svd = svd_split(&s[i], &[0], chi).unwrap();
                let us = svd.weighted_isometry();
                s[i] = svd.right;
                s[i - 1] = contract(&s[i - 1], &us, &[(2, 0)]).unwrap();
            }
            s
        };
        // Row 0 as an MPS (left, down, right).
        let row0: Vec<Tensor> = (0..4).map(|c| at(0, c).slice(0, 0).unwrap()).collect();
        let top = compress(row0);
        // Absorb row 1: [l, p, r] x [p, L, D, R].
        let top: Vec<Tensor> = (0..4)
            .map(|c| {
                let x = contract(&top[c], at(1, c), &[(1, 0)]).unwrap(); // [l, r, L, D, R]
                let e = x.extents().to_vec();
                x.permute(&[0, 2, 3, 1, 4]).unwrap().reshape(vec![e[0] * e[2], e[3], e[1] * e[4]]).unwrap()
            })
            .collect();
        let top = compress(top);
        // Bottom boundary from row 3: (left, up, right).
        let bottom: Vec<Tensor> =
            (0..4).map(|c| at(3, c).slice(2, 0).unwrap().permute(&[1, 0, 2]).unwrap()).collect();
        let bottom = compress(bottom);
        // Close row 2 column by column with a dense environment [t, h, b].
        let mut env = Tensor::ones(&[1, 1, 1]);
        for c in 0..4 {
            let x = contract(&env, &top[c], &[(0, 0)]).unwrap(); // [h, b, p, t']
            let x = contract(&x, at(2, c), &[(0, 1), (2, 0)]).unwrap(); // [b, t', D, R]
            let x = contract(&x, &bottom[c], &[(0, 0), (2, 1)]).unwrap(); // [t', R, b']
            env = x;
        }
        env.data()[0]
    }

    #[test]
    fn small_chi_matches_straight_line_schedule() {
        let p = random_peps(4, 4, 2, 3, Boundary::Obc, 21);
        let plan = FixedPlan::new(4, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let n = random_config(16, &mut rng);
            let a = amplitude_fixed(&p, &n, &plan).unwrap();
            let b = AmplitudeValue::from_complex(straight_line_4x4(&p, &n, 2));
            assert!(a.relative_difference(&b) < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn shuffled_reevaluation_is_bit_identical() {
        let p = random_peps(4, 4, 2, 3, Boundary::Obc, 31);
        let plan = FixedPlan::new(4, 4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let configs: Vec<_> = (0..50).map(|_| random_config(16, &mut rng)).collect();
        let first: Vec<_> = configs.iter().map(|n| amplitude_fixed(&p, n, &plan).unwrap()).collect();
        let mut order: Vec<usize> = (0..configs.len()).collect();
        order.shuffle(&mut rng);
        for &i in &order {
            assert_eq!(amplitude_fixed(&p, &configs[i], &plan).unwrap(), first[i]);
        }
    }

    #[test]
    fn positive_scaling_of_one_site_scales_amplitude() {
        let p = random_peps(4, 4, 2, 2, Boundary::Obc, 41);
        let plan = FixedPlan::new(4, 4, 2).unwrap();
        let mut q = p.clone();
        let c = 3.7;
        let s = q.site(1, 2).scale(C64::new(c, 0.0));
        q.set_site(6, s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let n = random_config(16, &mut rng);
            let a = amplitude_fixed(&p, &n, &plan).unwrap();
            let b = amplitude_fixed(&q, &n, &plan).unwrap();
            let r = b.ratio(&a).unwrap();
            assert!((r - C64::new(c, 0.0)).norm() < 1e-10 * c, "{r}");
        }
    }

    #[test]
    fn plan_serialization_ignores_configuration() {
        let plan = FixedPlan::new(4, 4, 3).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(json, serde_json::to_string(&FixedPlan::new(4, 4, 3).unwrap()).unwrap());
        let back: FixedPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn mismatched_plan_is_state_error() {
        let p = random_peps(3, 3, 2, 2, Boundary::Obc, 1);
        let plan = FixedPlan::new(4, 4, 2).unwrap();
        let n = SpinConfiguration::new(vec![0; 9]);
        assert!(matches!(amplitude_fixed(&p, &n, &plan), Err(crate::TnfError::State(_))));
    }
}
