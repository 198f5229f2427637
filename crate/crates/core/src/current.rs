//! Coherence density and coherence current in the single-particle
//! nonrelativistic limit.
//!
//! Both quantities are filtered sums over the position-basis coherences ρ_off:
//!
//! ```text
//! n_coh(x)  = ∫ dx' w(x - x') ρ_off(x, x')
//! J_coh(x)  = (ħ / 2mi) ∫ dx' w(x - x') (∂_x - ∂_x') ρ_off(x, x')
//! ```
//!
//! The weight is the complement of the channel multiplier, w = 1 - G, i.e. the
//! fraction of a coherence at separation Δ that the channel removes. It
//! vanishes at Δ = 0 and tends to 1 for Δ ≫ ℓ_c. With this weight and the
//! gradient ordering above, the pair obeys ∂_t n_coh + ∂_x J_coh = 0 exactly
//! under free evolution for any even w.
//!
//! Values are complex. Re is the physical source; Im is a diagnostic.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::coarse::FilterSpec;
use crate::constants::HBAR;
use crate::error::{QlgError, Result};
use crate::states::{split_diag_offdiag, DensityKernel, Grid1D};

fn check_values(grid: &Grid1D, values: &[Complex64]) -> Result<()> {
    if values.len() != grid.n_points() {
        return Err(QlgError::GridMismatch(format!(
            "{} values for a {}-point grid",
            values.len(),
            grid.n_points()
        )));
    }
    if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(QlgError::Invariant("field has non-finite values".into()));
    }
    Ok(())
}

macro_rules! field_type {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: Grid1D,
            values: Vec<Complex64>,
        }

        impl $name {
            pub fn new(grid: Grid1D, values: Vec<Complex64>) -> Result<Self> {
                check_values(&grid, &values)?;
                Ok($name { grid, values })
            }

            pub fn from_real(grid: Grid1D, values: &[f64]) -> Result<Self> {
                Self::new(grid, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            }

            pub fn grid(&self) -> &Grid1D {
                &self.grid
            }

            pub fn values(&self) -> &[Complex64] {
                &self.values
            }

            pub fn real(&self) -> Vec<f64> {
                self.values.iter().map(|z| z.re).collect()
            }

            pub fn imag(&self) -> Vec<f64> {
                self.values.iter().map(|z| z.im).collect()
            }

            /// max |Re|.
            pub fn max_abs_real(&self) -> f64 {
                self.values.iter().map(|z| z.re.abs()).fold(0.0, f64::max)
            }

            /// max |value|.
            pub fn max_abs(&self) -> f64 {
                self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
            }
        }
    };
}

field_type!(ScalarField);
field_type!(VectorField);

fn coherence_weights(grid: &Grid1D, filter: &FilterSpec) -> Result<Vec<f64>> {
    filter.check_on(grid)?;
    Ok(filter
        .multiplier_table(grid)
        .into_iter()
        .map(|g| 1.0 - g)
        .collect())
}

fn offset_index(n: usize, i: usize, j: usize) -> usize {
    let m = if i >= j { i - j } else { j - i };
    m.min(n - m)
}

/// n_coh(x_i) = Σ_j w(x_i - x_j) ρ_off(x_i, x_j) dx.
pub fn coherence_density(rho: &DensityKernel, filter: &FilterSpec) -> Result<ScalarField> {
    let grid = *rho.grid();
    let w = coherence_weights(&grid, filter)?;
    let off = split_diag_offdiag(rho).off_diagonal.into_values();
    let n = grid.n_points();
    let dx = grid.spacing();
    let values = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                s += off[(i, j)] * w[offset_index(n, i, j)];
            }
            s * dx
        })
        .collect();
    ScalarField::new(grid, values)
}

/// J_coh(x_i) with periodic central differences in both kernel arguments.
pub fn coherence_current_density(
    rho: &DensityKernel,
    filter: &FilterSpec,
    mass: f64,
) -> Result<VectorField> {
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(QlgError::pre(format!("mass must be positive, got {mass}")));
    }
    let grid = *rho.grid();
    let w = coherence_weights(&grid, filter)?;
    let off = split_diag_offdiag(rho).off_diagonal.into_values();
    Ok(VectorField::new(grid, current_from_off(&off, &w, &grid, mass))?)
}

fn current_from_off(off: &DMatrix<Complex64>, w: &[f64], grid: &Grid1D, mass: f64) -> Vec<Complex64> {
    let n = grid.n_points();
    // (ħ/2mi) · (1/2dx) · dx
    let pref = Complex64::new(0.0, -HBAR / (4.0 * mass));
    (0..n)
        .into_par_iter()
        .map(|i| {
            let ip = (i + 1) % n;
            let im = (i + n - 1) % n;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..n {
                let jp = (j + 1) % n;
                let jm = (j + n - 1) % n;
                let d = (off[(ip, j)] - off[(im, j)]) - (off[(i, jp)] - off[(i, jm)]);
                s += d * w[offset_index(n, i, j)];
            }
            s * pref
        })
        .collect()
}

/// Periodic central difference of a sampled field.
pub fn central_derivative(values: &[Complex64], spacing: f64) -> Vec<Complex64> {
    let n = values.len();
    (0..n)
        .map(|i| (values[(i + 1) % n] - values[(i + n - 1) % n]) / (2.0 * spacing))
        .collect()
}

/// Snapshots of a density kernel at uniformly spaced times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityKernel>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DensityKernel>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(QlgError::pre(format!(
                "{} times for {} snapshots",
                times.len(),
                states.len()
            )));
        }
        if states.len() < 3 {
            return Err(QlgError::pre(format!(
                "continuity needs at least 3 snapshots, got {}",
                states.len()
            )));
        }
        let grid = *states[0].grid();
        for s in &states[1..] {
            grid.ensure_same(s.grid())?;
        }
        let dt = times[1] - times[0];
        let tol = 1e-9 * dt.abs().max(times.iter().fold(0.0_f64, |a, t| a.max(t.abs())) * 1e-6);
        for w in times.windows(2) {
            let step = w[1] - w[0];
            if (step - dt).abs() > tol || step < 0.0 {
                return Err(QlgError::pre(format!(
                    "snapshot times must be uniformly spaced and nondecreasing; step {step} vs {dt}"
                )));
            }
        }
        Ok(Trajectory { times, states })
    }

    pub fn time_step(&self) -> f64 {
        self.times[1] - self.times[0]
    }
}

/// ‖∂_t n_coh + ∂_x J_coh‖₂ / ‖∂_t n_coh‖₂ over all interior snapshots, with
/// central differences in t and x. Returns 0 when ∂_t n_coh vanishes
/// identically (for example identical snapshots).
pub fn continuity_residual(traj: &Trajectory, filter: &FilterSpec, mass: f64) -> Result<f64> {
    let grid = *traj.states[0].grid();
    let dx = grid.spacing();
    let densities: Vec<ScalarField> = traj
        .states
        .iter()
        .map(|s| coherence_density(s, filter))
        .collect::<Result<_>>()?;
    let dt = traj.time_step();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut dn_all = Vec::new();
    for k in 1..traj.states.len() - 1 {
        let dn: Vec<Complex64> = densities[k + 1]
            .values()
            .iter()
            .zip(densities[k - 1].values())
            .map(|(a, b)| a - b)
            .collect();
        dn_all.push(dn);
    }
    if dn_all.iter().all(|d| d.iter().all(|z| *z == Complex64::new(0.0, 0.0))) {
        log::info!("coherence density is time independent; residual defined as 0");
        return Ok(0.0);
    }
    if dt == 0.0 {
        return Err(QlgError::pre("zero time step with changing snapshots"));
    }
    for (k, dn) in (1..traj.states.len() - 1).zip(dn_all) {
        let j = coherence_current_density(&traj.states[k], filter, mass)?;
        let div = central_derivative(j.values(), dx);
        for (a, b) in dn.iter().zip(div) {
            let dndt = a / (2.0 * dt);
            num += (dndt + b).norm_sqr();
            den += dndt.norm_sqr();
        }
    }
    Ok((num / den).sqrt())
}

/// max|Re n_coh[ρ_mix]| / max|Re n_coh[ρ_sup]|, the operational measure of the
/// residual coherence a mixture leaks into the coherence sector.
pub fn classical_suppression(
    rho_mix: &DensityKernel,
    rho_sup: &DensityKernel,
    filter: &FilterSpec,
) -> Result<f64> {
    rho_mix.grid().ensure_same(rho_sup.grid())?;
    let mix = coherence_density(rho_mix, filter)?.max_abs_real();
    let sup = coherence_density(rho_sup, filter)?.max_abs_real();
    if sup == 0.0 {
        return Err(QlgError::Singular(
            "superposition has identically zero coherence density".into(),
        ));
    }
    Ok(mix / sup)
}
