//! Generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, Matrix2, Matrix4, Schur};
use num_complex::Complex64;
use qlg::linalg::hermitize_in_place;
use qlg::states::{DensityKernel, Grid1D, TwoQubitState};
use rand::Rng;

pub fn cx(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    // Box-Muller; the tests only need a rotation-invariant distribution
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    cx(normal(rng), normal(rng))
}

/// A A† / Tr with A an n×rank complex Gaussian matrix, scaled to unit operator trace.
pub fn random_psd_kernel<R: Rng>(rng: &mut R, grid: Grid1D, rank: usize) -> DensityKernel {
    let n = grid.n_points();
    let a = DMatrix::from_fn(n, rank, |_, _| complex_normal(rng));
    let mut m = &a * a.adjoint();
    hermitize_in_place(&mut m);
    let tr: f64 = (0..n).map(|i| m[(i, i)].re).sum::<f64>() * grid.spacing();
    m.scale_mut(1.0 / tr);
    DensityKernel::from_matrix(grid, m).unwrap()
}

pub fn random_two_qubit<R: Rng>(rng: &mut R, rank: usize) -> TwoQubitState {
    let a = nalgebra::OMatrix::<Complex64, nalgebra::U4, nalgebra::Dyn>::from_fn(rank, |_, _| complex_normal(rng));
    let m = &a * a.adjoint();
    let tr = m.trace().re;
    let mut m: Matrix4<Complex64> = m.map(|z| z / tr);
    m = (m + m.adjoint()) * cx(0.5, 0.0);
    TwoQubitState::from_matrix(m).unwrap()
}

/// Haar-like single-qubit unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary2<R: Rng>(rng: &mut R) -> Matrix2<Complex64> {
    let a = Matrix2::from_fn(|_, _| complex_normal(rng));
    a.qr().q()
}

/// Concurrence from the (non-Hermitian) spectrum of ρ(σy⊗σy)ρ*(σy⊗σy),
/// obtained from a complex Schur form.
pub fn concurrence_oracle(state: &TwoQubitState) -> f64 {
    let rho = *state.values();
    let mut yy = Matrix4::zeros();
    yy[(0, 3)] = cx(-1.0, 0.0);
    yy[(3, 0)] = cx(-1.0, 0.0);
    yy[(1, 2)] = cx(1.0, 0.0);
    yy[(2, 1)] = cx(1.0, 0.0);
    let r = rho * yy * rho.conjugate() * yy;
    let (_, t) = Schur::new(r).unpack();
    let mut lam: Vec<f64> = (0..4).map(|i| t[(i, i)].re.max(0.0).sqrt()).collect();
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

/// Least-squares slope and intercept.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
