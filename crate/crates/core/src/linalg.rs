//! Small dense complex matrix helpers for 2x2 and 3x3 spin problems.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub(crate) const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// True when every off-diagonal entry is exactly zero.
pub fn is_diagonal(m: &CMatrix) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, z)| k % m.nrows() == k / m.nrows() || *z == ZERO)
}

/// Induced infinity norm (max absolute row sum). Bounds the spectral norm.
pub fn norm_inf(m: &CMatrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius norm of the off-diagonal part.
pub fn offdiag_norm(m: &CMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

pub fn diag_norm(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    max_abs_entry(&(m - m.adjoint()))
}

/// `‖U†U − I‖∞`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    norm_inf(&(u.adjoint() * u - identity(u.nrows())))
}

/// Spectral decomposition of a Hermitian matrix: real eigenvalues and the
/// unitary whose columns are the eigenvectors.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(h.clone());
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `exp(−i·H·dt)` for Hermitian `H`.
///
/// Diagonal generators are exponentiated entrywise; everything else goes
/// through the eigendecomposition `V·exp(−iΛdt)·V†`.
pub fn hermitian_exp(h: &CMatrix, dt: f64) -> CMatrix {
    let n = h.nrows();
    if is_diagonal(h) {
        let mut out = CMatrix::zeros(n, n);
        for k in 0..n {
            out[(k, k)] = Complex64::from_polar(1.0, -h[(k, k)].re * dt);
        }
        return out;
    }
    let (values, vectors) = hermitian_eigen(h);
    let phases = CVector::from_iterator(
        n,
        values.iter().map(|&l| Complex64::from_polar(1.0, -l * dt)),
    );
    let scaled = CMatrix::from_fn(n, n, |i, j| vectors[(i, j)] * phases[j]);
    scaled * vectors.adjoint()
}

/// Real diagonal matrix from its entries.
pub fn real_diagonal(entries: &[f64]) -> CMatrix {
    let n = entries.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i == j {
            Complex64::new(entries[i], 0.0)
        } else {
            ZERO
        }
    })
}

/// Wrap an angle into (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(seed: u64) -> CMatrix {
        // cheap deterministic fill; no rng dependency needed here
        let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = || {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = CMatrix::from_fn(3, 3, |_, _| Complex64::new(next(), next()));
        (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
    }

    fn taylor_exp(h: &CMatrix, dt: f64) -> CMatrix {
        let a = h * Complex64::new(0.0, -dt);
        let mut term = identity(h.nrows());
        let mut sum = term.clone();
        for k in 1..60 {
            term = &term * &a / Complex64::new(k as f64, 0.0);
            sum += &term;
        }
        sum
    }

    #[test]
    fn exp_matches_taylor_series() {
        for seed in 0..8 {
            let h = random_hermitian(seed);
            let u = hermitian_exp(&h, 0.7);
            let reference = taylor_exp(&h, 0.7);
            assert!(max_abs_entry(&(&u - &reference)) < 1e-12);
            assert!(unitarity_residual(&u) < 1e-13);
        }
    }

    #[test]
    fn eigen_reconstructs_to_1e12() {
        for seed in 0..8 {
            let h = random_hermitian(seed);
            let (vals, v) = hermitian_eigen(&h);
            let rebuilt = &v * real_diagonal(&vals) * v.adjoint();
            assert!(max_abs_entry(&(rebuilt - &h)) < 1e-12);
        }
    }

    #[test]
    fn diagonal_fast_path() {
        let h = real_diagonal(&[1.0, -2.0, 0.5]);
        let u = hermitian_exp(&h, 0.3);
        assert!((u[(1, 1)] - Complex64::from_polar(1.0, 0.6)).norm() < 1e-15);
        assert!(is_diagonal(&u));
    }

    #[test]
    fn wrap_angle_range() {
        use std::f64::consts::PI;
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(0.25) - 0.25).abs() < 1e-15);
    }
}
