mod common;

use common::*;
use nalgebra::Matrix4;
use num_complex::Complex64;
use proptest::prelude::*;
use qlg::coarse::{apply_channel, split_current_momentum, FilterKind, FilterSpec};
use qlg::constraints::*;
use qlg::kernels::{decoherence_form_factor, yukawa_kernel};
use qlg::signals::*;
use qlg::states::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind(gaussian: bool) -> FilterKind {
    if gaussian {
        FilterKind::GaussianPosition
    } else {
        FilterKind::LorentzianMomentum
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn channel_is_cptp_on_random_kernels(seed in any::<u64>(), rank in 1usize..6, lc in 0.1f64..1.5, gaussian in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid1D::new(-1.0, 1.0, 32).unwrap();
        let rho = random_psd_kernel(&mut rng, grid, rank);
        let filter = FilterSpec::new(lc, kind(gaussian)).unwrap();
        let out = apply_channel(&rho, &filter).unwrap();
        prop_assert!(out.is_exactly_hermitian());
        for i in 0..32 {
            prop_assert_eq!(out.values()[(i, i)], rho.values()[(i, i)]);
        }
        prop_assert!(out.min_eigenvalue() >= -1e-10);
        prop_assert!(out.purity() <= rho.purity() * (1.0 + 1e-12));
    }

    #[test]
    fn random_kernels_are_states(seed in any::<u64>(), rank in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let rho = random_psd_kernel(&mut rng, grid, rank);
        prop_assert!(rho.check_state(true).is_ok());
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.purity() <= 1.0 + 1e-12);
        let split = split_diag_offdiag(&rho);
        let back = split.reconstruct().unwrap();
        prop_assert_eq!(back.values(), rho.values());
    }

    #[test]
    fn mixtures_of_packets_are_states(c1 in -1.0f64..1.0, c2 in -1.0f64..1.0, w in 0.01f64..0.99, ell in 0.07f64..0.2) {
        let grid = Grid1D::new(-2.0, 2.0, 256).unwrap();
        let a = gaussian_packet(&GaussianPacketSpec::new(c1, ell), &grid).unwrap();
        let b = gaussian_packet(&GaussianPacketSpec::new(c2, ell), &grid).unwrap();
        prop_assert!((a.norm_sqr() - 1.0).abs() < 1e-12);
        let pure = pure_density_kernel(&a);
        prop_assert!((pure.purity() - 1.0).abs() < 1e-10);
        let mix = mixture_density_kernel(&[w, 1.0 - w], &[a, b]).unwrap();
        prop_assert!(mix.is_exactly_hermitian());
        prop_assert!((mix.trace().re - 1.0).abs() < 1e-12);
        prop_assert!(mix.min_eigenvalue() > -1e-10);
        prop_assert!(mix.purity() <= 1.0 + 1e-10);
    }

    #[test]
    fn momentum_split_reconstructs_bit_exactly(seed in any::<u64>(), lc in 0.05f64..1.0, gaussian in any::<bool>()) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = Grid1D::new(-2.0, 2.0, 64).unwrap();
        let s: Vec<Complex64> = (0..64).map(|_| cx(rng.gen_range(-1e3..1e3), rng.gen_range(-1e-3..1e-3))).collect();
        let filter = FilterSpec::new(lc, kind(gaussian)).unwrap();
        let split = split_current_momentum(&s, &grid, &filter).unwrap();
        for i in 0..64 {
            prop_assert_eq!(split.0[i] + split.1[i], s[i]);
        }
    }

    #[test]
    fn concurrence_matches_oracle_and_bounds(seed in any::<u64>(), rank in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_two_qubit(&mut rng, rank);
        let c = concurrence(&s);
        prop_assert!((0.0..=1.0).contains(&c));
        prop_assert!((c - concurrence_oracle(&s)).abs() < 1e-7, "{} vs {}", c, concurrence_oracle(&s));
        let sig = sigma_xx_expectation(&s);
        prop_assert!(sig.abs() <= 1.0 + 1e-12);
    }

    #[test]
    fn concurrence_is_local_unitary_invariant(seed in any::<u64>(), rank in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_two_qubit(&mut rng, rank);
        let u = random_unitary2(&mut rng).kronecker(&random_unitary2(&mut rng));
        let u: Matrix4<Complex64> = u.fixed_view::<4, 4>(0, 0).into_owned();
        let m = u * s.values() * u.adjoint();
        let m = (m + m.adjoint()) * cx(0.5, 0.0);
        let t = TwoQubitState::from_matrix(m).unwrap();
        prop_assert!((concurrence(&s) - concurrence(&t)).abs() < 1e-7);
    }

    #[test]
    fn phase_is_linear_in_visibility(g in 1e-8f64..1e-5, m in 1e-27f64..1e-24, t in 0.1f64..10.0, v in 0.0f64..1.0) {
        let spec = InterferometerSpec { mass: m, interrogation_time: t, visibility: v, geometry_factor: 1.0, coupling: g, convention: UnitConvention::ReferenceSi };
        let r = qlg_phase(&spec).unwrap();
        prop_assert_eq!(r.phase, visibility_slope(&spec).unwrap() * v);
        let zero = qlg_phase(&InterferometerSpec { visibility: 0.0, ..spec }).unwrap();
        prop_assert_eq!(zero.phase, 0.0);
    }

    #[test]
    fn bounds_are_monotone_and_invert_their_signal(k1 in 1e-6f64..1.0, k2 in 1e-6f64..1.0, m in 1e-26f64..1e-23,
                                                   dx in 1e-8f64..1e-4, lc in 1e-8f64..1e-4, r_over in 0.1f64..20.0) {
        let (lo, hi) = if k1 < k2 { (k1, k2) } else { (k2, k1) };
        prop_assume!(hi > lo * (1.0 + 1e-9));
        let atom = |kappa: f64| AtomInterferometer { mass: m, interrogation_time: 1.0, kappa_max: kappa, geometry_factor: 0.7, convention: UnitConvention::ReferenceSi, trajectory: None };
        let (g_lo, g_hi) = (bound_g_from_slope(&atom(lo)).unwrap().value(), bound_g_from_slope(&atom(hi)).unwrap().value());
        prop_assert!(g_lo < g_hi);
        let back = g_hi * g_hi * UnitConvention::ReferenceSi.omega(m) * 0.7;
        prop_assert!((back / hi - 1.0).abs() < 1e-12);

        let sphere = |gm: f64| Nanosphere { mass: m, delta_x: dx, gamma_max: gm, gamma0: 1e40 };
        let (s_lo, s_hi) = (bound_g_from_decoherence(&sphere(lo), lc).unwrap().value(), bound_g_from_decoherence(&sphere(hi), lc).unwrap().value());
        prop_assert!(s_lo < s_hi);
        let rate = decoherence_rate(s_hi, m, dx, 1e40, lc).unwrap();
        prop_assert!((rate / hi - 1.0).abs() < 1e-12);
        prop_assert!(decoherence_form_factor(dx, lc).unwrap() > 0.0);

        let ent = |s: f64| EntanglementTest { m1: m, m2: 2.0 * m, separation: r_over * lc, energy_sensitivity: s };
        let (e_lo, e_hi) = (bound_g_from_entanglement(&ent(lo), lc).unwrap().value(), bound_g_from_entanglement(&ent(hi), lc).unwrap().value());
        prop_assert!(e_lo < e_hi);
        let energy = e_hi * e_hi * m * 2.0 * m * yukawa_kernel(r_over * lc, lc).unwrap();
        prop_assert!((energy / hi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exclusion_curves_ignore_grid_order(seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lcs: Vec<f64> = (0..12).map(|i| 1e-8 * 3f64.powi(i)).collect();
        let mut shuffled = lcs.clone();
        shuffled.shuffle(&mut rng);
        let platforms = [
            PlatformParams::Nanosphere(Nanosphere { mass: 1e-17, delta_x: 1e-7, gamma_max: 1e-2, gamma0: 1e40 }),
            PlatformParams::EntanglementTest(EntanglementTest { m1: 1e-14, m2: 1e-14, separation: 1e-5, energy_sensitivity: 1e-30 }),
        ];
        let a = exclusion_grid(&platforms, &lcs).unwrap();
        let b = exclusion_grid(&platforms, &shuffled).unwrap();
        for (ca, cb) in a.curves.iter().zip(&b.curves) {
            for (i, lc) in shuffled.iter().enumerate() {
                let j = lcs.iter().position(|x| x == lc).unwrap();
                prop_assert_eq!(cb.g_max[i].to_bits(), ca.g_max[j].to_bits());
            }
        }
        prop_assert_eq!(a.sane, b.sane);
    }

    #[test]
    fn unit_round_trip(v in 1e-40f64..1e40) {
        for q in [Quantity::Mass, Quantity::Length, Quantity::Time, Quantity::Rate] {
            let back = unit_convert(unit_convert(v, q, UnitSystem::Si, UnitSystem::NaturalGev), q, UnitSystem::NaturalGev, UnitSystem::Si);
            prop_assert!((back / v - 1.0).abs() < 1e-12);
        }
    }
}
