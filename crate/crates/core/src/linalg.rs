//! Small dense helpers on row-major complex matrices.

use nalgebra::DMatrix;

use crate::error::{bail, Result};
use crate::tensor::C64;

fn to_matrix(n: usize, a: &[C64]) -> DMatrix<C64> {
    DMatrix::from_row_slice(n, n, a)
}

fn to_row_major(m: &DMatrix<C64>) -> Vec<C64> {
    let (r, c) = m.shape();
    let mut out = Vec::with_capacity(r * c);
    for i in 0..r {
        for j in 0..c {
            out.push(m[(i, j)]);
        }
    }
    out
}

/// Eigenvalues (ascending) and eigenvectors (as columns of a row-major
/// matrix) of the Hermitian part of `a`.
pub fn eigh(n: usize, a: &[C64]) -> Result<(Vec<f64>, Vec<C64>)> {
    let h = faer::Mat::<C64>::from_fn(n, n, |i, j| (a[i * n + j] + a[j * n + i].conj()) * 0.5);
    let eig = match h.self_adjoint_eigen(faer::Side::Lower) {
        Ok(eig) => eig,
        Err(e) => bail!(Numerical, "Hermitian eigensolver did not converge on a {n}x{n} matrix: {e:?}"),
    };
    let (s, u) = (eig.S().column_vector(), eig.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[i].re.total_cmp(&s[j].re));
    let values = order.iter().map(|&i| s[i].re).collect();
    let mut vectors = vec![C64::new(0.0, 0.0); n * n];
    for (k, &i) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + k] = u[(row, i)];
        }
    }
    Ok((values, vectors))
}

/// `exp(z · H)` for Hermitian `H`.
pub fn expm_hermitian(n: usize, h: &[C64], z: C64) -> Result<Vec<C64>> {
    let (vals, vecs) = eigh(n, h)?;
    let v = to_matrix(n, &vecs);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&x| (z * x).exp())));
    Ok(to_row_major(&(&v * d * v.adjoint())))
}

pub fn matmul_square(n: usize, a: &[C64], b: &[C64]) -> Vec<C64> {
    to_row_major(&(to_matrix(n, a) * to_matrix(n, b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_of_pauli_x() {
        let x = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let g = 0.3;
        let u = expm_hermitian(2, &x, C64::new(0.0, g)).unwrap();
        assert!((u[0] - C64::new(g.cos(), 0.0)).norm() < 1e-14);
        assert!((u[1] - C64::new(0.0, g.sin())).norm() < 1e-14);
    }

    #[test]
    fn eigh_sorted_and_orthonormal() {
        let a = [C64::new(2.0, 0.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), C64::new(2.0, 0.0)];
        let (vals, vecs) = eigh(2, &a).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-14 && (vals[1] - 3.0).abs() < 1e-14);
        let dot: C64 = (0..2).map(|r| vecs[r * 2].conj() * vecs[r * 2 + 1]).sum();
        assert!(dot.norm() < 1e-14);
    }
}
