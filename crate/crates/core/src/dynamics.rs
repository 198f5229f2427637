//! Time evolution: spectral free propagation, fixed-step Lindblad
//! integration, the analytic two-level decoherence law and the quasi-static
//! screened potential.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::constants::HBAR;
use crate::current::{ScalarField, Trajectory};
use crate::error::{QlgError, Result};
use crate::linalg::{self, CMatrix};
use crate::states::{pure_density_kernel, Grid1D, WavefunctionGrid};

const STABILITY_LIMIT: f64 = 0.1;
const TRACE_DRIFT_LIMIT: f64 = 1e-9;
const MIN_EIGENVALUE_LIMIT: f64 = -1e-8;

struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn fft_pair(n: usize) -> FftPair {
    let mut planner = FftPlanner::new();
    FftPair {
        forward: planner.plan_fft_forward(n),
        inverse: planner.plan_fft_inverse(n),
    }
}

fn check_mass(mass: f64) -> Result<()> {
    if mass > 0.0 && mass.is_finite() {
        Ok(())
    } else {
        Err(QlgError::pre(format!("mass must be positive, got {mass}")))
    }
}

/// Multiplies each Fourier mode by exp(-iħk²t/2m). Mass is in kg with SI ħ.
pub fn free_evolve(psi: &WavefunctionGrid, mass: f64, duration: f64) -> Result<WavefunctionGrid> {
    check_mass(mass)?;
    if !duration.is_finite() {
        return Err(QlgError::pre("duration must be finite"));
    }
    let grid = *psi.grid();
    if duration == 0.0 {
        return Ok(psi.clone());
    }
    let n = grid.n_points();
    let plan = fft_pair(n);
    let mut buf = psi.amplitudes().to_vec();
    plan.forward.process(&mut buf);
    let scale = 1.0 / n as f64;
    for (z, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        let phase = -HBAR * k * k * duration / (2.0 * mass);
        *z *= Complex64::from_polar(scale, phase);
    }
    plan.inverse.process(&mut buf);
    WavefunctionGrid::from_samples(grid, buf)
}

/// Pure-state snapshots of free evolution at t = k·dt, k = 0..n_snapshots.
/// Each snapshot is propagated directly from ψ₀.
pub fn free_trajectory(
    psi0: &WavefunctionGrid,
    mass: f64,
    dt: f64,
    n_snapshots: usize,
) -> Result<Trajectory> {
    let times: Vec<f64> = (0..n_snapshots).map(|k| k as f64 * dt).collect();
    let states = times
        .iter()
        .map(|&t| free_evolve(psi0, mass, t).map(|p| pure_density_kernel(&p)))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(times, states)
}

/// Second central moment of |ψ|² about its mean, without periodic unwrapping.
pub fn position_moments(psi: &WavefunctionGrid) -> (f64, f64) {
    let g = psi.grid();
    let dx = g.spacing();
    let p = psi.probability_density();
    let mean: f64 = p.iter().enumerate().map(|(i, w)| w * g.x(i)).sum::<f64>() * dx;
    let var: f64 = p
        .iter()
        .enumerate()
        .map(|(i, w)| w * (g.x(i) - mean).powi(2))
        .sum::<f64>()
        * dx;
    (mean, var.sqrt())
}

/// Jump operator with its nonnegative rate.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub operator: CMatrix,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: CMatrix,
    jumps: Vec<JumpOperator>,
    hbar: f64,
}

impl LindbladModel {
    /// `hbar` fixes the unit system of the Hamiltonian and rates.
    pub fn new(hamiltonian: CMatrix, jumps: Vec<JumpOperator>, hbar: f64) -> Result<Self> {
        let n = hamiltonian.nrows();
        if n == 0 || hamiltonian.ncols() != n {
            return Err(QlgError::pre("Hamiltonian must be a nonempty square matrix"));
        }
        let defect = linalg::max_hermitian_defect(&hamiltonian);
        if defect > 1e-12 {
            return Err(QlgError::pre(format!("Hamiltonian not Hermitian (defect {defect:e})")));
        }
        for (idx, j) in jumps.iter().enumerate() {
            if j.operator.nrows() != n || j.operator.ncols() != n {
                return Err(QlgError::pre(format!("jump operator {idx} has the wrong shape")));
            }
            if !(j.rate >= 0.0) || !j.rate.is_finite() {
                return Err(QlgError::pre(format!("jump rate {idx} is {}", j.rate)));
            }
        }
        if !(hbar > 0.0) {
            return Err(QlgError::pre("hbar must be positive"));
        }
        Ok(LindbladModel {
            hamiltonian,
            jumps,
            hbar,
        })
    }

    pub fn dimension(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// dρ/dt = -(i/ħ)[H, ρ] + Σ γ (L ρ L† - ½{L†L, ρ}).
    pub fn generator(&self, rho: &CMatrix) -> CMatrix {
        let i_over_hbar = Complex64::new(0.0, 1.0 / self.hbar);
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * (-i_over_hbar);
        for j in &self.jumps {
            if j.rate == 0.0 {
                continue;
            }
            let l = &j.operator;
            let ld = l.adjoint();
            let ldl = &ld * l;
            let term = l * rho * &ld - (&ldl * rho + rho * &ldl) * Complex64::new(0.5, 0.0);
            out += term * Complex64::new(j.rate, 0.0);
        }
        out
    }

    /// The two scales entering the step budget: max γ‖L‖² and ‖H‖/ħ.
    pub fn stiffness(&self) -> (f64, f64) {
        let dissipative = self
            .jumps
            .iter()
            .map(|j| j.rate * linalg::spectral_norm(&j.operator).powi(2))
            .fold(0.0, f64::max);
        let coherent = linalg::spectral_norm(&self.hamiltonian) / self.hbar;
        (dissipative, coherent)
    }
}

/// Outcome of a Lindblad run with its monitored invariants.
#[derive(Debug, Clone)]
pub struct LindbladRun {
    pub state: CMatrix,
    pub steps: usize,
    pub step: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
}

/// Fixed-step RK4 with Hermitization after every step.
///
/// The step is `duration / ceil(duration / dt)`, never larger than `dt`.
/// The budget dt·(max γ‖L‖² + ‖H‖/ħ) ≤ 0.1 is enforced up front; ‖L‖² enters
/// because the dissipator scales with γ‖L‖², not γ alone.
pub fn lindblad_evolve(
    rho0: &CMatrix,
    model: &LindbladModel,
    duration: f64,
    dt: f64,
) -> Result<LindbladRun> {
    let n = model.dimension();
    if rho0.nrows() != n || rho0.ncols() != n {
        return Err(QlgError::pre("initial state does not match the model dimension"));
    }
    if !(duration >= 0.0) || !duration.is_finite() {
        return Err(QlgError::pre(format!("duration must be nonnegative, got {duration}")));
    }
    if !(dt > 0.0) {
        return Err(QlgError::pre(format!("time step must be positive, got {dt}")));
    }
    let (diss, coh) = model.stiffness();
    let total = diss + coh;
    if dt * total > STABILITY_LIMIT {
        let scale = if diss >= coh {
            "dissipator (max rate * |L|^2)"
        } else {
            "Hamiltonian (|H| / hbar)"
        };
        return Err(QlgError::Stability {
            scale: scale.into(),
            value: total,
            product: dt * total,
            limit: STABILITY_LIMIT,
        });
    }
    let mut rho = rho0.clone();
    linalg::hermitize_in_place(&mut rho);
    let tr0 = linalg::trace(&rho);
    let steps = if duration == 0.0 {
        0
    } else {
        ((duration / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    };
    let h = if steps == 0 { 0.0 } else { duration / steps as f64 };
    let half = Complex64::new(0.5 * h, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    let mut drift: f64 = 0.0;
    for _ in 0..steps {
        let k1 = model.generator(&rho);
        let k2 = model.generator(&(&rho + &k1 * half));
        let k3 = model.generator(&(&rho + &k2 * half));
        let k4 = model.generator(&(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        linalg::hermitize_in_place(&mut rho);
        drift = drift.max((linalg::trace(&rho) - tr0).norm());
        if drift > TRACE_DRIFT_LIMIT {
            return Err(QlgError::Invariant(format!("trace drifted by {drift:e}")));
        }
    }
    let min_eigenvalue = linalg::hermitian_eigenvalues(&rho)[0];
    if min_eigenvalue < MIN_EIGENVALUE_LIMIT {
        return Err(QlgError::Invariant(format!(
            "state lost positivity: eigenvalue {min_eigenvalue:e}"
        )));
    }
    Ok(LindbladRun {
        state: rho,
        steps,
        step: h,
        max_trace_drift: drift,
        min_eigenvalue,
    })
}

/// Two-branch decoherence with L = λ m Ô, Ô = |L⟩⟨L| - |R⟩⟨R|.
/// The mass is in whatever unit the caller's γ is normalized to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelDecoherenceSpec {
    pub gamma: f64,
    pub lambda_coupling: f64,
    pub mass: f64,
}

impl TwoLevelDecoherenceSpec {
    pub fn check(&self) -> Result<()> {
        for (name, v) in [
            ("gamma", self.gamma),
            ("lambda", self.lambda_coupling),
            ("mass", self.mass),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(QlgError::pre(format!("{name} must be nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// Γ = 2γλ²m².
    pub fn rate(&self) -> f64 {
        2.0 * self.gamma * self.lambda_coupling.powi(2) * self.mass.powi(2)
    }

    /// The equivalent Lindblad model (H = 0, ħ = 1).
    pub fn lindblad_model(&self) -> Result<LindbladModel> {
        self.check()?;
        let lm = Complex64::new(self.lambda_coupling * self.mass, 0.0);
        let o = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![lm, -lm]));
        LindbladModel::new(
            DMatrix::zeros(2, 2),
            vec![JumpOperator {
                operator: o,
                rate: self.gamma,
            }],
            1.0,
        )
    }
}

/// exp(-2γλ²m²t), real and in (0, 1] for t ≥ 0.
pub fn decay_multiplier(spec: &TwoLevelDecoherenceSpec, t: f64) -> Result<f64> {
    spec.check()?;
    if !(t >= 0.0) {
        return Err(QlgError::pre(format!("time must be nonnegative, got {t}")));
    }
    Ok((-spec.rate() * t).exp())
}

/// ρ_LR(t) = ρ_LR(0)·exp(-2γλ²m²t).
pub fn two_level_coherence_decay(
    rho_lr_0: Complex64,
    spec: &TwoLevelDecoherenceSpec,
    t: f64,
) -> Result<Complex64> {
    Ok(rho_lr_0 * decay_multiplier(spec, t)?)
}

/// Solves (-∂² + 1/λ²) A = g·n spectrally and returns Re A.
pub fn latent_potential(source: &ScalarField, g: f64, screening_length: f64) -> Result<ScalarField> {
    if !(screening_length > 0.0) || !screening_length.is_finite() {
        return Err(QlgError::pre(format!(
            "screening length must be positive, got {screening_length}"
        )));
    }
    let grid: Grid1D = *source.grid();
    let n = grid.n_points();
    let plan = fft_pair(n);
    let mut buf = source.values().to_vec();
    plan.forward.process(&mut buf);
    let m2 = 1.0 / (screening_length * screening_length);
    for (z, k) in buf.iter_mut().zip(grid.wavenumbers()) {
        *z *= g / ((k * k + m2) * n as f64);
    }
    plan.inverse.process(&mut buf);
    let real: Vec<f64> = buf.iter().map(|z| z.re).collect();
    ScalarField::from_real(grid, &real)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::*;

    fn grid() -> Grid1D {
        Grid1D::new(-2.0, 2.0, 512).unwrap()
    }

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn free_evolution_zero_time_is_identity() {
        let psi = gaussian_packet(&GaussianPacketSpec::new(0.1, 0.05), &grid()).unwrap();
        let out = free_evolve(&psi, HBAR, 0.0).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn gaussian_spreads_like_the_analytic_width() {
        let g = grid();
        let l = 0.05;
        let psi = gaussian_packet(&GaussianPacketSpec::new(0.0, l), &g).unwrap();
        // ħ/m = 1
        for t in [0.002, 0.005, 0.01] {
            let out = free_evolve(&psi, HBAR, t).unwrap();
            assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
            let (_, w) = position_moments(&out);
            let expected = l * (1.0 + (t / (2.0 * l * l)).powi(2)).sqrt();
            assert!((w / expected - 1.0).abs() < 5e-3, "{t}: {w} vs {expected}");
        }
    }

    #[test]
    fn boosted_packet_moves_at_group_velocity() {
        let g = grid();
        let k0 = 2.0 * std::f64::consts::PI / g.length() * 16.0;
        let psi = gaussian_packet(&GaussianPacketSpec::new(-0.5, 0.1), &g)
            .unwrap()
            .boosted(k0);
        let t = 0.02;
        let out = free_evolve(&psi, HBAR, t).unwrap();
        let (mean, _) = position_moments(&out);
        assert!((mean - (-0.5 + k0 * t)).abs() < g.spacing(), "{mean}");
    }

    #[test]
    fn free_evolution_preserves_fourier_moduli() {
        let g = Grid1D::new(-2.0, 2.0, 256).unwrap();
        let psi =
            superposition_wavefunction(&TwoBranchSpec::balanced(0.0, 1.0, 0.1), &g).unwrap();
        let out = free_evolve(&psi, HBAR, 0.37).unwrap();
        assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        let mut a = psi.amplitudes().to_vec();
        let mut b = out.amplitudes().to_vec();
        let plan = fft_pair(256);
        plan.forward.process(&mut a);
        plan.forward.process(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }

    fn qubit_state() -> CMatrix {
        DMatrix::from_row_slice(2, 2, &[c(0.5), c(0.5), c(0.5), c(0.5)])
    }

    #[test]
    fn trivial_model_leaves_state_unchanged() {
        let model = LindbladModel::new(DMatrix::zeros(2, 2), vec![], 1.0).unwrap();
        let run = lindblad_evolve(&qubit_state(), &model, 3.0, 0.1).unwrap();
        assert!((run.state - qubit_state()).iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn dephasing_matches_analytic_decay() {
        let rate = 0.7;
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let model = LindbladModel::new(
            DMatrix::zeros(2, 2),
            vec![JumpOperator { operator: z, rate }],
            1.0,
        )
        .unwrap();
        let t = 2.0;
        let run = lindblad_evolve(&qubit_state(), &model, t, 0.01).unwrap();
        let expected = 0.5 * (-2.0 * rate * t).exp();
        assert!((run.state[(0, 1)].re / expected - 1.0).abs() < 1e-7);
        assert!(run.max_trace_drift <= 1e-9);
    }

    #[test]
    fn stability_budget_names_the_scale() {
        let z = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let model = LindbladModel::new(
            DMatrix::zeros(2, 2),
            vec![JumpOperator { operator: z, rate: 10.0 }],
            1.0,
        )
        .unwrap();
        match lindblad_evolve(&qubit_state(), &model, 1.0, 0.1) {
            Err(QlgError::Stability { scale, .. }) => assert!(scale.contains("dissipator")),
            other => panic!("{other:?}"),
        }
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(50.0), c(50.0), c(0.0)]);
        let model = LindbladModel::new(h, vec![], 1.0).unwrap();
        match lindblad_evolve(&qubit_state(), &model, 1.0, 0.1) {
            Err(QlgError::Stability { scale, .. }) => assert!(scale.contains("Hamiltonian")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_hermitian_hamiltonian_is_rejected() {
        let h = DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(LindbladModel::new(h, vec![], 1.0).is_err());
    }

    #[test]
    fn two_level_law() {
        let spec = TwoLevelDecoherenceSpec {
            gamma: 1.0,
            lambda_coupling: 1.0,
            mass: 1.0,
        };
        let rho = Complex64::new(0.3, -0.2);
        assert_eq!(two_level_coherence_decay(rho, &spec, 0.0).unwrap(), rho);
        let d = decay_multiplier(&spec, 0.5).unwrap();
        assert!((d - 0.367_879_441_171_442_3).abs() < 1e-15);
        let heavy = TwoLevelDecoherenceSpec { mass: 2.0, ..spec };
        assert_eq!(heavy.rate() / spec.rate(), 4.0);
        let ratio = decay_multiplier(&heavy, 0.3).unwrap().ln() / decay_multiplier(&spec, 0.3).unwrap().ln();
        assert!((ratio - 4.0).abs() < 1e-12);
        // multiplicative in time up to rounding of exp
        let (a, b) = (0.13, 0.41);
        let lhs = decay_multiplier(&spec, a + b).unwrap();
        let rhs = decay_multiplier(&spec, a).unwrap() * decay_multiplier(&spec, b).unwrap();
        assert!((lhs - rhs).abs() <= 4.0 * f64::EPSILON * lhs);
    }

    #[test]
    fn lindblad_reproduces_two_level_law() {
        let spec = TwoLevelDecoherenceSpec {
            gamma: 0.8,
            lambda_coupling: 0.5,
            mass: 1.5,
        };
        let model = spec.lindblad_model().unwrap();
        let t = 1.7;
        let run = lindblad_evolve(&qubit_state(), &model, t, 0.005).unwrap();
        let expected = two_level_coherence_decay(c(0.5), &spec, t).unwrap();
        assert!((run.state[(1, 0)] - expected).norm() / expected.norm() < 1e-6);
    }

    #[test]
    fn split_runs_compose() {
        let spec = TwoLevelDecoherenceSpec {
            gamma: 1.0,
            lambda_coupling: 1.0,
            mass: 1.0,
        };
        let model = spec.lindblad_model().unwrap();
        let whole = lindblad_evolve(&qubit_state(), &model, 1.0, 0.01).unwrap();
        let half = lindblad_evolve(&qubit_state(), &model, 0.5, 0.01).unwrap();
        let second = lindblad_evolve(&half.state, &model, 0.5, 0.01).unwrap();
        assert!((whole.state - second.state).iter().all(|z| z.norm() < 1e-8));
    }

    /// Dense convolution with the periodic screened Green's function
    /// G(x) = (λ/2) cosh((L/2 - |x|)/λ) / sinh(L/(2λ)).
    fn dense_potential(source: &[f64], g: &Grid1D, coupling: f64, lambda: f64) -> Vec<f64> {
        let len = g.length();
        let n = g.n_points();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let d = g.periodic_distance(i, j);
                        0.5 * lambda * ((0.5 * len - d) / lambda).cosh() / (0.5 * len / lambda).sinh()
                            * source[j]
                    })
                    .sum::<f64>()
                    * g.spacing()
                    * coupling
            })
            .collect()
    }

    #[test]
    fn potential_matches_screened_green_function() {
        let g = grid();
        let src: Vec<f64> = (0..512)
            .map(|i| (-(g.x(i) - 0.3f64).powi(2) / (2.0 * 0.1f64.powi(2))).exp())
            .collect();
        let field = ScalarField::from_real(g, &src).unwrap();
        let lambda = 40.0;
        let a = latent_potential(&field, 0.7, lambda).unwrap().real();
        let oracle = dense_potential(&src, &g, 0.7, lambda);
        let err: f64 = a.iter().zip(&oracle).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = oracle.iter().map(|y| y * y).sum::<f64>().sqrt();
        assert!(err / norm < 1e-2, "{}", err / norm);
        let zero = ScalarField::from_real(g, &vec![0.0; 512]).unwrap();
        assert!(latent_potential(&zero, 1.0, 1.0).unwrap().real().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn potential_is_linear() {
        let g = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let a: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let b: Vec<f64> = (0..64).map(|i| (i as f64 * 0.7).cos()).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 2.0 * x - 3.0 * y).collect();
        let fa = latent_potential(&ScalarField::from_real(g, &a).unwrap(), 0.5, 1.0).unwrap();
        let fb = latent_potential(&ScalarField::from_real(g, &b).unwrap(), 0.5, 1.0).unwrap();
        let fab = latent_potential(&ScalarField::from_real(g, &ab).unwrap(), 0.5, 1.0).unwrap();
        let f2 = latent_potential(&ScalarField::from_real(g, &a).unwrap(), 1.0, 1.0).unwrap();
        for i in 0..64 {
            let e = 2.0 * fa.real()[i] - 3.0 * fb.real()[i];
            assert!((fab.real()[i] - e).abs() < 1e-12);
            assert!((f2.real()[i] - 2.0 * fa.real()[i]).abs() < 1e-12);
        }
    }
}
