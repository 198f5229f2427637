//! Grids, Gaussian wavepackets, position-space density kernels and the
//! canonical two-qubit states.
//!
//! Discretization conventions used throughout the crate:
//!
//! * The grid is periodic with nodes `x_i = x_min + i * dx`, `dx = L / N`.
//! * A continuum kernel `ρ(x, x')` is stored by its samples `ρ(x_i, x_j)`, so
//!   `Tr ρ = Σ ρ(x_i, x_i) dx` and `∫ dx' ρ(x, x') g(x') ≈ Σ_j ρ(x, x_j) g(x_j) dx`.
//! * A delta function `δ(x - x')` is represented as `δ_ij / dx`. The diagonal
//!   piece `n(x) δ(x - x')` therefore has samples `n(x_i) / dx` on the main
//!   diagonal only; since the same `dx` multiplies back in every quadrature, the
//!   stored diagonal of the split is simply the diagonal of `ρ`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::error::{QlgError, Result};
use crate::linalg::{self, CMatrix};

const NORM_TOL: f64 = 1e-10;
const AMPLITUDE_TOL: f64 = 1e-12;

/// Uniform periodic 1D grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(QlgError::pre(format!(
                "grid bounds must be finite with x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(QlgError::pre(format!(
                "grid needs a power-of-two point count >= 16, got {n_points}"
            )));
        }
        Ok(Grid1D {
            x_min,
            x_max,
            n_points,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn spacing(&self) -> f64 {
        self.length() / self.n_points as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Minimum-image separation |x_i - x_j| on the periodic grid, computed from
    /// the index offset so that it is exactly symmetric in `i` and `j`.
    pub fn periodic_distance(&self, i: usize, j: usize) -> f64 {
        let n = self.n_points;
        let m = (i + n - j) % n;
        m.min(n - m) as f64 * self.spacing()
    }

    /// Signed minimum-image offset x_i - x_j in (-L/2, L/2].
    pub fn periodic_offset(&self, i: usize, j: usize) -> f64 {
        let n = self.n_points as isize;
        let mut m = (i as isize - j as isize).rem_euclid(n);
        if m > n / 2 {
            m -= n;
        }
        m as f64 * self.spacing()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / self.length();
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                m * dk
            })
            .collect()
    }

    pub(crate) fn ensure_same(&self, other: &Grid1D) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(QlgError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacketSpec {
    pub center: f64,
    pub width: f64,
}

impl GaussianPacketSpec {
    pub fn new(center: f64, width: f64) -> Self {
        GaussianPacketSpec { center, width }
    }

    /// Resolvability of the packet on `grid`.
    pub fn check_on(&self, grid: &Grid1D) -> Result<()> {
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(QlgError::pre(format!(
                "packet width must be positive, got {}",
                self.width
            )));
        }
        if self.width < 4.0 * grid.spacing() {
            return Err(QlgError::pre(format!(
                "packet width {} is below 4 grid spacings ({})",
                self.width,
                4.0 * grid.spacing()
            )));
        }
        if 6.0 * self.width > grid.length() {
            return Err(QlgError::pre(format!(
                "6 packet widths ({}) do not fit in the domain length {}",
                6.0 * self.width,
                grid.length()
            )));
        }
        if !(self.center >= grid.x_min() && self.center <= grid.x_max()) {
            return Err(QlgError::pre(format!(
                "packet center {} lies outside [{}, {}]",
                self.center,
                grid.x_min(),
                grid.x_max()
            )));
        }
        Ok(())
    }

    /// Continuum amplitude (2πℓ²)^(-1/4) exp(-(x-x₀)²/(4ℓ²)).
    pub fn amplitude(&self, x: f64) -> f64 {
        let l2 = self.width * self.width;
        (2.0 * PI * l2).powf(-0.25) * (-(x - self.center).powi(2) / (4.0 * l2)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoBranchSpec {
    pub c_left: Complex64,
    pub c_right: Complex64,
    pub packet_left: GaussianPacketSpec,
    pub packet_right: GaussianPacketSpec,
}

impl TwoBranchSpec {
    /// Equal-weight real superposition of packets at `±separation/2` around `mid`.
    pub fn balanced(mid: f64, separation: f64, width: f64) -> Self {
        let c = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        TwoBranchSpec {
            c_left: c,
            c_right: c,
            packet_left: GaussianPacketSpec::new(mid - 0.5 * separation, width),
            packet_right: GaussianPacketSpec::new(mid + 0.5 * separation, width),
        }
    }

    pub fn check(&self) -> Result<()> {
        let total = self.c_left.norm_sqr() + self.c_right.norm_sqr();
        if (total - 1.0).abs() > AMPLITUDE_TOL {
            return Err(QlgError::pre(format!(
                "branch amplitudes must satisfy |c_L|^2 + |c_R|^2 = 1, got {total}"
            )));
        }
        Ok(())
    }
}

/// Sampled wavefunction on a periodic grid, normalized so that Σ|ψ|²dx = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionGrid {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
}

impl WavefunctionGrid {
    /// Wraps samples, renormalizing them on the grid.
    pub fn from_samples(grid: Grid1D, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.n_points() {
            return Err(QlgError::GridMismatch(format!(
                "{} samples for a {}-point grid",
                amplitudes.len(),
                grid.n_points()
            )));
        }
        if amplitudes.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(QlgError::pre("wavefunction samples must be finite"));
        }
        let mut psi = WavefunctionGrid { grid, amplitudes };
        let norm = psi.norm_sqr();
        if !(norm > 0.0) {
            return Err(QlgError::pre("wavefunction has zero norm"));
        }
        let s = 1.0 / norm.sqrt();
        psi.amplitudes.iter_mut().for_each(|z| *z *= s);
        Ok(psi)
    }

    pub(crate) fn from_normalized(grid: Grid1D, amplitudes: Vec<Complex64>) -> Self {
        WavefunctionGrid { grid, amplitudes }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Σ|ψ(x_i)|² dx.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn probability_density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Σ conj(ψ) φ dx.
    pub fn inner(&self, other: &WavefunctionGrid) -> Result<Complex64> {
        self.grid.ensure_same(&other.grid)?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.spacing())
    }

    /// Multiplies by the plane wave e^{i k₀ x}. `k0` should be commensurate with
    /// the periodic box (an integer multiple of 2π/L) to avoid a seam.
    pub fn boosted(&self, k0: f64) -> WavefunctionGrid {
        let amps = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| z * Complex64::from_polar(1.0, k0 * self.grid.x(i)))
            .collect();
        WavefunctionGrid::from_normalized(self.grid, amps)
    }
}

/// Gaussian packet sampled on `grid` and renormalized on the grid.
pub fn gaussian_packet(spec: &GaussianPacketSpec, grid: &Grid1D) -> Result<WavefunctionGrid> {
    spec.check_on(grid)?;
    let amps = (0..grid.n_points())
        .map(|i| Complex64::new(spec.amplitude(grid.x(i)), 0.0))
        .collect();
    WavefunctionGrid::from_samples(*grid, amps)
}

/// c_L φ_L + c_R φ_R, renormalized on the grid.
pub fn superposition_wavefunction(spec: &TwoBranchSpec, grid: &Grid1D) -> Result<WavefunctionGrid> {
    spec.check()?;
    let left = gaussian_packet(&spec.packet_left, grid)?;
    let right = gaussian_packet(&spec.packet_right, grid)?;
    let amps = left
        .amplitudes
        .iter()
        .zip(&right.amplitudes)
        .map(|(l, r)| spec.c_left * l + spec.c_right * r)
        .collect();
    WavefunctionGrid::from_samples(*grid, amps)
}

/// Sampled kernel ρ(x_i, x_j). Kernels built by the constructors in this module
/// are physical states (Hermitian, unit trace, positive); kernels produced by
/// [`split_diag_offdiag`] are pieces of a state and carry no such guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityKernel {
    grid: Grid1D,
    values: CMatrix,
}

impl DensityKernel {
    pub fn from_matrix(grid: Grid1D, values: CMatrix) -> Result<Self> {
        let n = grid.n_points();
        if values.nrows() != n || values.ncols() != n {
            return Err(QlgError::GridMismatch(format!(
                "{}x{} kernel for a {n}-point grid",
                values.nrows(),
                values.ncols()
            )));
        }
        Ok(DensityKernel { grid, values })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    pub fn into_values(self) -> CMatrix {
        self.values
    }

    /// Σ ρ(x_i, x_i) dx.
    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.values) * self.grid.spacing()
    }

    /// Position density n(x_i) = ρ(x_i, x_i).
    pub fn density(&self) -> Vec<f64> {
        self.values.diagonal().iter().map(|z| z.re).collect()
    }

    /// Tr(ρ²) with the dx² bookkeeping of the continuum trace.
    pub fn purity(&self) -> f64 {
        let dx = self.grid.spacing();
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx * dx
    }

    pub fn is_exactly_hermitian(&self) -> bool {
        linalg::is_exactly_hermitian(&self.values)
    }

    /// Eigenvalues of the kernel as an operator (matrix times dx), ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let dx = self.grid.spacing();
        linalg::hermitian_eigenvalues(&self.values)
            .into_iter()
            .map(|e| e * dx)
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Checks Hermiticity (exact), unit trace and, when `check_positivity`, the
    /// minimum eigenvalue. Positivity costs a dense eigensolve.
    pub fn check_state(&self, check_positivity: bool) -> Result<()> {
        if !self.is_exactly_hermitian() {
            return Err(QlgError::Invariant("kernel is not Hermitian".into()));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(QlgError::Invariant(format!("kernel trace is {tr}")));
        }
        if check_positivity {
            let min = self.min_eigenvalue();
            if min < -1e-8 {
                return Err(QlgError::Invariant(format!(
                    "kernel has negative eigenvalue {min:e}"
                )));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, s: f64) -> DensityKernel {
        DensityKernel {
            grid: self.grid,
            values: &self.values * Complex64::new(s, 0.0),
        }
    }

    pub fn add(&self, other: &DensityKernel) -> Result<DensityKernel> {
        self.grid.ensure_same(&other.grid)?;
        Ok(DensityKernel {
            grid: self.grid,
            values: &self.values + &other.values,
        })
    }

    pub fn sub(&self, other: &DensityKernel) -> Result<DensityKernel> {
        self.grid.ensure_same(&other.grid)?;
        Ok(DensityKernel {
            grid: self.grid,
            values: &self.values - &other.values,
        })
    }
}

/// ρ(x_i, x_j) = ψ(x_i) conj(ψ(x_j)).
pub fn pure_density_kernel(psi: &WavefunctionGrid) -> DensityKernel {
    let n = psi.grid.n_points();
    let a = &psi.amplitudes;
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for i in 0..n {
        m[(i, i)] = Complex64::new(a[i].norm_sqr(), 0.0);
        for j in 0..i {
            let v = a[i] * a[j].conj();
            m[(i, j)] = v;
            m[(j, i)] = v.conj();
        }
    }
    DensityKernel {
        grid: psi.grid,
        values: m,
    }
}

/// Σ_k w_k |ψ_k⟩⟨ψ_k|.
pub fn mixture_density_kernel(
    weights: &[f64],
    states: &[WavefunctionGrid],
) -> Result<DensityKernel> {
    if weights.is_empty() || weights.len() != states.len() {
        return Err(QlgError::InvalidWeights(format!(
            "{} weights for {} states",
            weights.len(),
            states.len()
        )));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(QlgError::InvalidWeights(format!(
            "weights must be nonnegative, got {weights:?}"
        )));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > AMPLITUDE_TOL {
        return Err(QlgError::InvalidWeights(format!(
            "weights must sum to 1, got {total}"
        )));
    }
    let grid = *states[0].grid();
    for s in &states[1..] {
        grid.ensure_same(s.grid())?;
    }
    let n = grid.n_points();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (w, psi) in weights.iter().zip(states) {
        if *w == 0.0 {
            continue;
        }
        let a = psi.amplitudes();
        for i in 0..n {
            m[(i, i)].re += w * a[i].norm_sqr();
            for j in 0..i {
                m[(i, j)] += a[i] * a[j].conj() * *w;
            }
        }
    }
    linalg::hermitize_in_place(&mut m);
    Ok(DensityKernel { grid, values: m })
}

/// Diagonal part n(x)δ(x-x') and position-basis coherences ρ_off of a kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSplit {
    pub diagonal: DensityKernel,
    pub off_diagonal: DensityKernel,
}

impl KernelSplit {
    pub fn reconstruct(&self) -> Result<DensityKernel> {
        self.diagonal.add(&self.off_diagonal)
    }
}

/// Splits ρ into its main diagonal and the remainder. Exactly one of the two
/// parts is nonzero at every entry, so their sum reproduces ρ bit for bit.
pub fn split_diag_offdiag(rho: &DensityKernel) -> KernelSplit {
    let n = rho.grid.n_points();
    let zero = Complex64::new(0.0, 0.0);
    let mut diag = DMatrix::from_element(n, n, zero);
    let mut off = rho.values.clone();
    for i in 0..n {
        diag[(i, i)] = rho.values[(i, i)];
        off[(i, i)] = zero;
    }
    KernelSplit {
        diagonal: DensityKernel {
            grid: rho.grid,
            values: diag,
        },
        off_diagonal: DensityKernel {
            grid: rho.grid,
            values: off,
        },
    }
}

/// Two-qubit density matrix in the ordered basis {|00⟩, |01⟩, |10⟩, |11⟩}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoQubitState {
    values: Matrix4<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellSign {
    Plus,
    Minus,
}

impl TwoQubitState {
    /// Validates Hermiticity (to 1e-12), unit trace and positivity.
    pub fn from_matrix(values: Matrix4<Complex64>) -> Result<Self> {
        for i in 0..4 {
            for j in 0..4 {
                if (values[(i, j)] - values[(j, i)].conj()).norm() > AMPLITUDE_TOL {
                    return Err(QlgError::Invariant("two-qubit matrix is not Hermitian".into()));
                }
            }
        }
        let tr = values.trace();
        if (tr.re - 1.0).abs() > AMPLITUDE_TOL || tr.im.abs() > AMPLITUDE_TOL {
            return Err(QlgError::Invariant(format!("two-qubit trace is {tr}")));
        }
        let state = TwoQubitState { values };
        let min = state.eigenvalues()[0];
        if min < -1e-10 {
            return Err(QlgError::Invariant(format!(
                "two-qubit matrix has negative eigenvalue {min:e}"
            )));
        }
        Ok(state)
    }

    /// |ψ⟩⟨ψ| for a normalized 4-vector.
    pub fn pure(amplitudes: [Complex64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(amplitudes);
        let norm = v.norm_squared();
        if (norm - 1.0).abs() > AMPLITUDE_TOL {
            return Err(QlgError::pre(format!("state vector norm² is {norm}")));
        }
        Self::from_matrix(v * v.adjoint())
    }

    /// ρ_A ⊗ ρ_B from two single-qubit density matrices.
    pub fn product(
        a: &nalgebra::Matrix2<Complex64>,
        b: &nalgebra::Matrix2<Complex64>,
    ) -> Result<Self> {
        Self::from_matrix(a.kronecker(b).fixed_view::<4, 4>(0, 0).into_owned())
    }

    pub fn values(&self) -> &Matrix4<Complex64> {
        &self.values
    }

    pub fn purity(&self) -> f64 {
        (self.values * self.values).trace().re
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut h = (self.values + self.values.adjoint()) * Complex64::new(0.5, 0.0);
        for i in 0..4 {
            h[(i, i)].im = 0.0;
        }
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// |Φ±⟩⟨Φ±| with |Φ±⟩ = (|00⟩ ± |11⟩)/√2.
pub fn bell_state(sign: BellSign) -> TwoQubitState {
    let s = match sign {
        BellSign::Plus => 0.5,
        BellSign::Minus => -0.5,
    };
    let mut m = Matrix4::zeros();
    m[(0, 0)] = c(0.5);
    m[(3, 3)] = c(0.5);
    m[(0, 3)] = c(s);
    m[(3, 0)] = c(s);
    TwoQubitState { values: m }
}

/// (|00⟩⟨00| + |11⟩⟨11|)/2.
pub fn classical_mix_00_11() -> TwoQubitState {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = c(0.5);
    m[(3, 3)] = c(0.5);
    TwoQubitState { values: m }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(QlgError::pre(format!("family parameter must lie in [0, 1], got {p}")))
    }
}

/// p|Φ+⟩⟨Φ+| + (1-p)(|00⟩⟨00| + |11⟩⟨11|)/2.
pub fn dephased_family(p: f64) -> Result<TwoQubitState> {
    check_probability(p)?;
    let mut m = Matrix4::zeros();
    m[(0, 0)] = c(0.5);
    m[(3, 3)] = c(0.5);
    m[(0, 3)] = c(0.5 * p);
    m[(3, 0)] = c(0.5 * p);
    Ok(TwoQubitState { values: m })
}

/// p|Φ+⟩⟨Φ+| + (1-p) I/4.
pub fn werner_family(p: f64) -> Result<TwoQubitState> {
    check_probability(p)?;
    let q = 0.25 * (1.0 - p);
    let mut m = Matrix4::zeros();
    m[(0, 0)] = c(0.5 * p + q);
    m[(1, 1)] = c(q);
    m[(2, 2)] = c(q);
    m[(3, 3)] = c(0.5 * p + q);
    m[(0, 3)] = c(0.5 * p);
    m[(3, 0)] = c(0.5 * p);
    Ok(TwoQubitState { values: m })
}
