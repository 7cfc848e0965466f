//! Exact amplitudes by untruncated row absorption. Exponential cost; used as
//! an oracle on small lattices.

use super::{project_config, Peps, SpinConfiguration};
use crate::error::{bail, Result};
use crate::mps::Mps;
use crate::scale::AmplitudeValue;

const MAX_SITES: usize = 36;
const MAX_BOND: usize = 4;
/// Largest boundary site tensor (complex entries) the oracle will build.
const MAX_ENTRIES: usize = 1 << 24;

pub fn exact_amplitude(peps: &Peps, n: &SpinConfiguration) -> Result<AmplitudeValue> {
    if peps.n_sites() > MAX_SITES || peps.bond_dim() > MAX_BOND {
        bail!(
            Resource,
            "exact contraction limited to {MAX_SITES} sites and D <= {MAX_BOND}, got {} sites with D = {}",
            peps.n_sites(),
            peps.bond_dim()
        );
    }
    let grid = project_config(peps, n)?;
    let mut b = Mps::trivial(grid.cols());
    for r in 0..grid.rows() {
        let row = grid.row(r);
        let largest = b
            .tensors
            .iter()
            .zip(row)
            .map(|(s, t)| {
                let (se, te) = (s.extents(), t.extents());
                se[0] * te[1] * te[2] * se[2] * te[3]
            })
            .max()
            .unwrap_or(1);
        if largest > MAX_ENTRIES {
            bail!(Resource, "exact boundary would need {largest} entries per site");
        }
        b = b.absorb_row(row)?;
        if b.is_zero {
            return Ok(AmplitudeValue::ZERO);
        }
    }
    b.contract_to_scalar()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;
    use crate::peps::tests::{brute_force_amplitude, random_peps};
    use crate::tensor::{contract, Tensor};

    #[test]
    fn matches_index_sum_3x3() {
        let p = random_peps(3, 3, 2, 2, Boundary::Obc, 8);
        for i in [0usize, 77, 300, 511] {
            let n = SpinConfiguration::from_index(i, 9, 2);
            let a = exact_amplitude(&p, &n).unwrap().to_complex();
            let b = brute_force_amplitude(&p, &n);
            assert!((a - b).norm() <= 1e-10 * b.norm());
        }
    }

    #[test]
    fn chain_is_matrix_product() {
        let p = random_peps(1, 5, 2, 3, Boundary::Obc, 9);
        let n = SpinConfiguration::new(vec![1, 0, 0, 1, 1]);
        let mut acc = Tensor::identity(1);
        for c in 0..5 {
            // (1, l, 1, r, p) -> matrix l x r
            let m = p.site(0, c).slice(4, n.values[c] as usize).unwrap().slice(2, 0).unwrap().slice(0, 0).unwrap();
            acc = contract(&acc, &m, &[(1, 0)]).unwrap();
        }
        let a = exact_amplitude(&p, &n).unwrap().to_complex();
        assert!((a - acc.data()[0]).norm() <= 1e-12 * a.norm());
    }

    #[test]
    fn guards_large_inputs() {
        let p = random_peps(7, 6, 2, 2, Boundary::Obc, 1);
        let n = SpinConfiguration::new(vec![0; 42]);
        assert!(matches!(exact_amplitude(&p, &n), Err(crate::TnfError::Resource(_))));
        let p = random_peps(2, 2, 2, 5, Boundary::Obc, 1);
        let n = SpinConfiguration::new(vec![0; 4]);
        assert!(matches!(exact_amplitude(&p, &n), Err(crate::TnfError::Resource(_))));
    }
}
