//! Small dense linear-algebra helpers shared by the state and dynamics code.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

/// Entries below this fraction of the largest modulus are flushed to zero
/// before decomposition. Gaussian tails reach 1e-300 and make the implicit QR
/// sweeps underflow into NaN; 1e-60 is already enough in practice.
const FLUSH_RELATIVE: f64 = 1e-40;

/// Eigenvalues of a Hermitian matrix in ascending order. The input is
/// symmetrized, scaled to unit max-modulus and stripped of entries far below
/// working precision, which perturbs eigenvalues by at most n·1e-40 of the
/// scale.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let mut h = hermitian_part(m);
    let scale = h.iter().fold(0.0f64, |a, z| a.max(z.norm()));
    if scale == 0.0 || !scale.is_finite() {
        return vec![if scale == 0.0 { 0.0 } else { f64::NAN }; h.nrows()];
    }
    h.apply(|z| {
        let w = *z / scale;
        *z = if w.norm() < FLUSH_RELATIVE { Complex64::new(0.0, 0.0) } else { w };
    });
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().map(|e| e * scale).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// (M + M†)/2.
pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Overwrite the strict upper triangle with the conjugate of the lower one
/// and zero the imaginary part of the diagonal, making `m` exactly Hermitian.
pub fn hermitize_in_place(m: &mut CMatrix) {
    let n = m.nrows();
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in (i + 1)..n {
            m[(i, j)] = m[(j, i)].conj();
        }
    }
}

pub fn is_exactly_hermitian(m: &CMatrix) -> bool {
    let n = m.nrows();
    if n != m.ncols() {
        return false;
    }
    (0..n).all(|i| (0..n).all(|j| m[(i, j)] == m[(j, i)].conj()))
}

pub fn max_hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .singular_values()
        .iter()
        .copied()
        .fold(0.0, f64::max)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
