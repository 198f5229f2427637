//! Command implementations. Each produces one or more artifacts (a table plus
//! summary scalars); figure generators reuse the commands with fixed configs.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value as Json};

use super::config::{parse_config, Command, Format, RunConfig};
use super::table::{render_table, Cell, Table};
use crate::coarse::{FilterKind, FilterSpec};
use crate::constants;
use crate::constraints::{
    compare_with_printed_bound, exclusion_grid, gravity_ratio, AtomInterferometer, EntanglementTest, Nanosphere,
    PlatformParams,
};
use crate::current::{classical_suppression, coherence_current_density, coherence_density};
use crate::dynamics::{free_evolve, lindblad_evolve, position_moments, TwoLevelDecoherenceSpec};
use crate::error::{QlgError, Result};
use crate::kernels::{
    decoherence_form_factor, entanglement_kernel_closed_form, entanglement_kernel_momentum, gamma0_quadrature,
    yukawa_kernel, QuadratureSpec,
};
use crate::signals::{
    decoherence_rate, qlg_phase, signal_vs_concurrence_curve, InterferometerSpec, StateFamily, TrajectorySpec,
    UnitConvention, GEOMETRY_NORMALIZATION, GEOMETRY_REGULATOR,
};
use crate::states::{
    gaussian_packet, mixture_density_kernel, pure_density_kernel, superposition_wavefunction, GaussianPacketSpec,
    Grid1D, TwoBranchSpec,
};

/// One output table with the configuration that produced it.
#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: String,
    pub config: RunConfig,
    pub table: Table,
    pub summary: Map<String, Json>,
}

pub const FIGURES: [&str; 5] = ["fig2", "fig3a", "fig3b", "fig4", "fig5"];

/// Runs the configured command.
pub fn execute(config: &RunConfig) -> Result<Vec<Artifact>> {
    if config.command == Command::Figures {
        let which = config.text("figure");
        let names: Vec<&str> = if which == "all" { FIGURES.to_vec() } else { vec![which] };
        return names.into_iter().map(figure).collect();
    }
    let (table, summary) = match config.command {
        Command::Coherence => coherence(config)?,
        Command::Evolve => evolve(config)?,
        Command::Kernels => kernels(config)?,
        Command::Phase => phase(config)?,
        Command::Decohere => decohere(config)?,
        Command::Entangle => entangle(config)?,
        Command::Constrain => constrain(config)?,
        Command::Figures => unreachable!("handled above"),
    };
    Ok(vec![Artifact {
        name: config.command.name().to_string(),
        config: config.clone(),
        table,
        summary,
    }])
}

/// The fixed configuration behind a figure.
pub fn figure_config(name: &str) -> Result<RunConfig> {
    let (cmd, sets): (&str, &[&str]) = match name {
        "fig2" => ("phase", &[]),
        "fig3a" => ("decohere", &["sweep=delta-x"]),
        "fig3b" => ("decohere", &["sweep=mass"]),
        "fig4" => ("entangle", &["family=all"]),
        "fig5" => ("constrain", &[]),
        _ => return Err(QlgError::Config(format!("unknown figure '{name}'"))),
    };
    let sets: Vec<String> = sets.iter().map(|s| s.to_string()).collect();
    parse_config(cmd, "", name, &sets)
}

fn figure(name: &str) -> Result<Artifact> {
    let mut a = execute(&figure_config(name)?)?.remove(0);
    a.name = name.to_string();
    Ok(a)
}

/// Everything needed to reproduce an artifact's numbers.
pub fn manifest(artifact: &Artifact) -> Json {
    let config: Map<String, Json> = artifact
        .config
        .params
        .iter()
        .map(|(k, v)| (k.clone(), Json::String(v.to_string())))
        .collect();
    let provenance: Map<String, Json> = artifact
        .config
        .provenance
        .iter()
        .map(|(k, v)| (k.clone(), Json::String(v.clone())))
        .collect();
    let consts: Map<String, Json> = constants::table().into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let quad = QuadratureSpec::default();
    json!({
        "artifact": artifact.name,
        "command": artifact.config.command.name(),
        "config": config,
        "provenance": provenance,
        "constants": consts,
        "conventions": {
            "geometry_normalization": GEOMETRY_NORMALIZATION,
            "geometry_regulator_over_cutoff": GEOMETRY_REGULATOR,
            "geometry_reference": "d_max = 1 m, T_tot = 2 s, l_c = 1 m gives I_geom = 1",
            "coherence_weight": "1 - periodized position-space filter",
            "quadrature_default": {
                "k_max_over_cutoff": quad.k_max_over_cutoff,
                "n_nodes": quad.n_nodes,
                "regulator_epsilon": quad.regulator_epsilon,
            },
            "kernels_units": "hbar = c = 1 in the kernels command",
            "gravity_ratio": "G in SI with a dimensionless coupling; the units do not cancel",
            "entanglement_bound": "g_max = sqrt(S / (m1 m2 K(R))) from inverting the two-body energy shift",
            "two_level_units": "hbar = 1; rates in the unit of gamma",
        },
        "summary": artifact.summary,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

/// Rebuilds the resolved configuration recorded in a manifest.
pub fn config_from_manifest(manifest: &Json) -> Result<RunConfig> {
    let bad = || QlgError::Config("manifest lacks a command or config".into());
    let command = manifest["command"].as_str().ok_or_else(bad)?;
    let cfg = manifest["config"].as_object().ok_or_else(bad)?;
    let mut text = String::new();
    for (k, v) in cfg {
        text.push_str(&format!("{k} = {}\n", v.as_str().ok_or_else(bad)?));
    }
    parse_config(command, &text, "manifest", &[])
}

/// Encodes every artifact. A single artifact goes to `out` (or standard output);
/// several require `out` to be a directory and are named `<artifact>.<ext>`.
pub fn write_artifacts(artifacts: &[Artifact], format: Format, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    let io = |p: &Path, source| QlgError::Io {
        path: p.display().to_string(),
        source,
    };
    if artifacts.len() == 1 {
        let a = &artifacts[0];
        super::table::emit_table(&a.table, &manifest(a), format, out)?;
        return Ok(out.map(Path::to_path_buf).into_iter().collect());
    }
    let dir = out.ok_or_else(|| QlgError::Config("several artifacts need --out DIR".into()))?;
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let path = dir.join(format!("{}.{}", a.name, format.extension()));
        let bytes = render_table(&a.table, &manifest(a), format)?;
        std::fs::write(&path, bytes).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn log_space(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i + 1 == n {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Least-squares slope of y against x.
fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn filter_of(c: &RunConfig) -> Result<FilterSpec> {
    let kind = FilterKind::parse(c.text("filter")).expect("schema restricts filter kinds");
    FilterSpec::new(c.num("cutoff_length"), kind)
}

fn convention_of(c: &RunConfig) -> UnitConvention {
    UnitConvention::parse(c.text("convention")).expect("schema restricts conventions")
}

type Output = (Table, Map<String, Json>);

fn coherence(c: &RunConfig) -> Result<Output> {
    let grid = Grid1D::new(c.num("x_min"), c.num("x_max"), c.count("n_points"))?;
    let filter = filter_of(c)?;
    filter.check_on(&grid)?;
    let (center, sep, width, k0) = (c.num("center"), c.num("separation"), c.num("width"), c.num("boost"));
    let psi = superposition_wavefunction(&TwoBranchSpec::balanced(center, sep, width), &grid)?.boosted(k0);
    let left = gaussian_packet(&GaussianPacketSpec::new(center - 0.5 * sep, width), &grid)?.boosted(k0);
    let right = gaussian_packet(&GaussianPacketSpec::new(center + 0.5 * sep, width), &grid)?.boosted(k0);
    let sup = pure_density_kernel(&psi);
    let mix = mixture_density_kernel(&[0.5, 0.5], &[left, right])?;
    let n_sup = coherence_density(&sup, &filter)?;
    let j_sup = coherence_current_density(&sup, &filter, c.num("mass"))?;
    let n_mix = coherence_density(&mix, &filter)?;
    let density = sup.density();
    let (ns, jr, ji, nm) = (n_sup.real(), j_sup.real(), j_sup.imag(), n_mix.real());
    let mut t = Table::new(&["x", "density", "n_coh_superposition", "j_coh_re", "j_coh_im", "n_coh_mixture"]);
    for i in 0..grid.n_points() {
        t.push(vec![grid.x(i).into(), density[i].into(), ns[i].into(), jr[i].into(), ji[i].into(), nm[i].into()]);
    }
    let max_n = density.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut s = Map::new();
    s.insert("suppression_ratio".into(), json!(classical_suppression(&mix, &sup, &filter)?));
    s.insert("coherence_peak_fraction".into(), json!(n_sup.max_abs_real() / max_n));
    Ok((t, s))
}

fn evolve(c: &RunConfig) -> Result<Output> {
    let n = c.count("n_snapshots");
    let duration = c.num("duration");
    let times: Vec<f64> = (0..n).map(|k| duration * k as f64 / (n - 1) as f64).collect();
    let mut s = Map::new();
    if c.text("model") == "free-packet" {
        let grid = Grid1D::new(c.num("x_min"), c.num("x_max"), c.count("n_points"))?;
        let (x0, w, k0, m) = (c.num("center"), c.num("width"), c.num("momentum"), c.num("mass"));
        let psi0 = gaussian_packet(&GaussianPacketSpec::new(x0, w), &grid)?.boosted(k0);
        let hm = constants::HBAR / m;
        let mut t = Table::new(&["t", "mean", "width", "mean_analytic", "width_analytic", "norm"]);
        for &tk in &times {
            let psi = free_evolve(&psi0, m, tk)?;
            let (mean, sd) = position_moments(&psi);
            let spread = w * (1.0 + (hm * tk / (2.0 * w * w)).powi(2)).sqrt();
            t.push(vec![
                tk.into(),
                mean.into(),
                sd.into(),
                (x0 + hm * k0 * tk).into(),
                spread.into(),
                psi.norm_sqr().into(),
            ]);
        }
        return Ok((t, s));
    }
    let spec = TwoLevelDecoherenceSpec {
        gamma: c.num("gamma"),
        lambda_coupling: c.num("lambda"),
        mass: c.num("branch_mass"),
    };
    let model = spec.lindblad_model()?;
    let half = Complex64::new(0.5, 0.0);
    let mut rho = DMatrix::from_element(2, 2, half);
    let mut t = Table::new(&["t", "lindblad_re", "lindblad_im", "analytic", "relative_error"]);
    let mut worst: f64 = 0.0;
    let mut prev = 0.0;
    for &tk in &times {
        if tk > prev {
            rho = lindblad_evolve(&rho, &model, tk - prev, c.num("dt"))?.state;
            prev = tk;
        }
        let exact = crate::dynamics::two_level_coherence_decay(half, &spec, tk)?;
        let err = (rho[(0, 1)] - exact).norm() / exact.norm();
        worst = worst.max(err);
        t.push(vec![tk.into(), rho[(0, 1)].re.into(), rho[(0, 1)].im.into(), exact.re.into(), err.into()]);
    }
    s.insert("rate".into(), json!(spec.rate()));
    s.insert("max_relative_error".into(), json!(worst));
    Ok((t, s))
}

fn kernels(c: &RunConfig) -> Result<Output> {
    let filter = filter_of(c)?;
    let lc = filter.cutoff_length;
    let quad = QuadratureSpec {
        k_max_over_cutoff: c.num("k_max_ratio"),
        n_nodes: c.count("n_nodes"),
        regulator_epsilon: c.num("regulator"),
    };
    quad.check()?;
    let with_momentum = c.flag("momentum_kernel");
    let mut cols = vec!["r_over_cutoff", "r", "form_factor", "yukawa", "lorentzian_closed_form"];
    if with_momentum {
        cols.push("momentum_kernel");
    }
    let mut t = Table::new(&cols);
    let n = c.count("n_points");
    for i in 0..n {
        let x = c.num("x_max") * (i + 1) as f64 / n as f64;
        let r = x * lc;
        let mut row: Vec<Cell> = vec![
            x.into(),
            r.into(),
            decoherence_form_factor(r, lc)?.into(),
            yukawa_kernel(r, lc)?.into(),
            entanglement_kernel_closed_form(r, 1.0 / lc, 1.0).into(),
        ];
        if with_momentum {
            row.push(entanglement_kernel_momentum(r, &filter, &quad, 1.0)?.value.into());
        }
        t.push(row);
    }
    let g0 = gamma0_quadrature(&filter, &quad, 1.0, 1.0)?;
    let mut s = Map::new();
    s.insert("gamma0".into(), json!(g0.value));
    s.insert("gamma0_closed_form".into(), json!(g0.closed_form));
    s.insert("gamma0_relative_error".into(), json!(g0.relative_error));
    Ok((t, s))
}

fn phase(c: &RunConfig) -> Result<Output> {
    let n = c.count("n_visibility");
    let mut t = Table::new(&["coupling", "visibility", "phase", "slope", "phase_compton"]);
    let mut warnings = Vec::new();
    for &g in c.list("couplings") {
        for j in 0..n {
            let v = j as f64 / (n - 1) as f64;
            let spec = InterferometerSpec {
                mass: c.num("mass"),
                interrogation_time: c.num("time"),
                visibility: v,
                geometry_factor: c.num("geometry_factor"),
                coupling: g,
                convention: convention_of(c),
            };
            let r = qlg_phase(&spec)?;
            let alt = qlg_phase(&InterferometerSpec {
                convention: UnitConvention::Compton,
                ..spec
            })?;
            if j == 0 {
                warnings.extend(r.warnings.iter().cloned());
            }
            t.push(vec![g.into(), v.into(), r.phase.into(), r.slope.into(), alt.phase.into()]);
        }
    }
    let mut s = Map::new();
    s.insert("warnings".into(), json!(warnings));
    Ok((t, s))
}

fn decohere(c: &RunConfig) -> Result<Output> {
    let (g, gamma0, lc) = (c.num("coupling"), c.num("gamma0"), c.num("cutoff_length"));
    let n = c.count("n_points");
    let mut s = Map::new();
    if c.text("sweep") == "delta-x" {
        let m = c.num("mass");
        let mut t = Table::new(&["delta_x", "form_factor", "rate"]);
        for dx in log_space(c.num("dx_min"), c.num("dx_max"), n) {
            t.push(vec![
                dx.into(),
                decoherence_form_factor(dx, lc)?.into(),
                decoherence_rate(g, m, dx, gamma0, lc)?.into(),
            ]);
        }
        return Ok((t, s));
    }
    let dx = c.num("delta_x");
    let f = decoherence_form_factor(dx, lc)?;
    let masses = log_space(c.num("mass_min"), c.num("mass_max"), n);
    let m_ref = masses[n - 1];
    let top = decoherence_rate(g, m_ref, dx, gamma0, lc)?;
    if !(top > 0.0) || !top.is_finite() {
        return Err(QlgError::pre(format!("reference rate must be positive and finite, got {top}")));
    }
    // run the two-level model in masses scaled by m_ref over one e-fold of the fastest rate
    let duration = 1.0 / top;
    let steps = c.count("lindblad_steps");
    let half = Complex64::new(0.5, 0.0);
    let rho0 = DMatrix::from_element(2, 2, half);
    let mut rates = Vec::with_capacity(n);
    let mut simulated = Vec::with_capacity(n);
    for &m in &masses {
        rates.push(decoherence_rate(g, m, dx, gamma0, lc)?);
        let spec = TwoLevelDecoherenceSpec {
            gamma: 0.5 * gamma0 * g * g * f * m_ref * m_ref,
            lambda_coupling: 1.0,
            mass: m / m_ref,
        };
        let run = lindblad_evolve(&rho0, &spec.lindblad_model()?, duration, duration / steps as f64)?;
        simulated.push(-(run.state[(0, 1)].re / 0.5).ln() / duration);
    }
    let lx: Vec<f64> = masses.iter().map(|m| m.ln()).collect();
    let ly: Vec<f64> = simulated.iter().map(|r| r.ln()).collect();
    let slope = fit_slope(&lx, &ly);
    let mut t = Table::new(&["mass", "rate", "rate_lindblad", "fitted_slope"]);
    for i in 0..n {
        t.push(vec![masses[i].into(), rates[i].into(), simulated[i].into(), slope.into()]);
    }
    s.insert("fitted_slope".into(), json!(slope));
    Ok((t, s))
}

fn entangle(c: &RunConfig) -> Result<Output> {
    let families: Vec<StateFamily> = match c.text("family") {
        "dephased" => vec![StateFamily::Dephased],
        "werner" => vec![StateFamily::Werner],
        "classical" => vec![StateFamily::Classical],
        _ => vec![StateFamily::Dephased, StateFamily::Werner, StateFamily::Classical],
    };
    let scale = c.num("coupling").powi(2)
        * c.num("m1")
        * c.num("m2")
        * yukawa_kernel(c.num("separation"), c.num("cutoff_length"))?;
    let mut t = Table::new(&["family", "parameter", "concurrence", "signal", "energy"]);
    for fam in families {
        for p in signal_vs_concurrence_curve(fam, c.count("n_points"))? {
            t.push(vec![
                fam.name().into(),
                p.parameter.into(),
                p.concurrence.into(),
                p.signal.into(),
                (scale * p.signal).into(),
            ]);
        }
    }
    Ok((t, Map::new()))
}

fn constrain(c: &RunConfig) -> Result<Output> {
    let d_max = c.num("atom_separation");
    let atom = AtomInterferometer {
        mass: c.num("atom_mass"),
        interrogation_time: c.num("atom_time"),
        kappa_max: c.num("kappa_max"),
        geometry_factor: c.num("geometry_factor"),
        convention: convention_of(c),
        trajectory: (d_max > 0.0).then(|| TrajectorySpec::triangular(d_max, 2.0 * c.num("atom_time"))),
    };
    let platforms = vec![
        PlatformParams::AtomInterferometer(atom.clone()),
        PlatformParams::Nanosphere(Nanosphere {
            mass: c.num("sphere_mass"),
            delta_x: c.num("delta_x"),
            gamma_max: c.num("gamma_max"),
            gamma0: c.num("gamma0"),
        }),
        PlatformParams::EntanglementTest(EntanglementTest {
            m1: c.num("m1"),
            m2: c.num("m2"),
            separation: c.num("separation"),
            energy_sensitivity: c.num("energy_sensitivity"),
        }),
    ];
    let lcs = log_space(c.num("lc_min"), c.num("lc_max"), c.count("n_points"));
    let report = exclusion_grid(&platforms, &lcs)?;
    let mut t = Table::new(&["platform", "cutoff_length", "g_max"]);
    for curve in &report.curves {
        for (lc, g) in curve.cutoff_lengths.iter().zip(&curve.g_max) {
            t.push(vec![curve.platform.as_str().into(), (*lc).into(), (*g).into()]);
        }
    }
    let printed = compare_with_printed_bound(&AtomInterferometer {
        trajectory: None,
        ..atom
    })?;
    let mut s = Map::new();
    s.insert("sane".into(), json!(report.sane));
    s.insert("sanity".into(), json!(report.sanity));
    s.insert("printed_bound_report".into(), json!(printed.report));
    s.insert("printed_bound_factor".into(), json!(printed.factor));
    s.insert(
        "gravity_ratio_at_contact".into(),
        json!(gravity_ratio(c.num("bound_coupling"), 0.0, 1.0)?),
    );
    Ok((t, s))
}
