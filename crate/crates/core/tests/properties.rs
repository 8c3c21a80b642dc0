//! Property-based checks of the algebraic and dynamical invariants.

use corrdyn::combinatorics::{enumerate_subsets, CellSubset};
use corrdyn::decomposition::{connected_correlator, correlated_part, cumulant_part};
use corrdyn::density::{
    extract_correlators, from_correlators, pauli_matrix, purity, purity_from_correlators, CMatrix,
};
use corrdyn::dynamics::{default_dt, evolve_with, expm_action, resolvent, Method};
use corrdyn::hamiltonian::SpinHamiltonian;
use corrdyn::hierarchy::build_generator;
use corrdyn::oracle::EigenSystem;
use corrdyn::pauli::{correlator_dim, from_ladder, index_of, multiply, string_of, to_ladder, Axis, CorrelatorIndex, PauliString};
use corrdyn::states;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A random nonidentity-or-identity string on `n` sites from a code.
fn string_strategy(n: usize) -> impl Strategy<Value = PauliString> {
    (0..correlator_dim(n)).prop_map(|c| string_of(CorrelatorIndex(c)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multiply_matches_dense_and_is_associative(
        a in string_strategy(3), b in string_strategy(3), c in string_strategy(3)
    ) {
        let (p_ab, ab) = multiply(&a, &b).unwrap();
        let dense = pauli_matrix(&a, 3).unwrap() * pauli_matrix(&b, 3).unwrap();
        let expected = pauli_matrix(&ab, 3).unwrap() * p_ab.to_complex();
        prop_assert!(max_abs(&(dense - expected)) < 1e-14);

        let (p1, s1) = multiply(&ab, &c).unwrap();
        let (p_bc, bc) = multiply(&b, &c).unwrap();
        let (p2, s2) = multiply(&a, &bc).unwrap();
        prop_assert_eq!(s1, s2);
        prop_assert_eq!((p_ab * p1).power_of_i(), (p_bc * p2).power_of_i());
    }

    #[test]
    fn index_round_trip(code in 0usize..correlator_dim(4)) {
        let s = string_of(CorrelatorIndex(code));
        prop_assert_eq!(index_of(&s).unwrap(), CorrelatorIndex(code));
        let reparsed: PauliString = s.to_string().parse().unwrap();
        prop_assert_eq!(reparsed, s);
    }

    #[test]
    fn correlator_round_trip_and_purity(n in 1usize..=4, seed in any::<u64>()) {
        let rho = states::random_mixed(n, &mut rng(seed)).unwrap();
        let v = extract_correlators(&rho).unwrap();
        prop_assert_eq!(v.values()[0], 1.0);
        let back = from_correlators(&v).unwrap();
        prop_assert!(max_abs(&(back.matrix() - rho.matrix())) < 1e-13);
        prop_assert!((purity(&rho) - purity_from_correlators(&v)).abs() < 1e-13);
    }

    #[test]
    fn ladder_round_trip_and_trace_identity(n in 1usize..=3, seed in any::<u64>(), site in 0usize..3) {
        let rho = states::random_mixed(n, &mut rng(seed)).unwrap();
        let v = extract_correlators(&rho).unwrap();
        let table = to_ladder(&v);
        let back = from_ladder(&table);
        for (a, b) in back.iter().zip(v.values()) {
            prop_assert!((a - C64::new(*b, 0.0)).norm() < 1e-14);
        }
        // ⟨σ⁺_k⟩ = tr ρ (σˣ + iσʸ)/√2
        let k = site % n;
        let sx = pauli_matrix(&PauliString::single(k, Axis::X), n).unwrap();
        let sy = pauli_matrix(&PauliString::single(k, Axis::Y), n).unwrap();
        let plus = (sx + sy * C64::new(0.0, 1.0)) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let direct = (rho.matrix() * plus).trace();
        prop_assert!((table.get(1 << (2 * k)) - direct).norm() < 1e-14);
    }

    #[test]
    fn connected_correlator_is_trace_of_correlated_part(seed in any::<u64>(), code in 0usize..64) {
        let rho = states::random_mixed(3, &mut rng(seed)).unwrap();
        let s = string_of(CorrelatorIndex(code));
        prop_assume!(s.weight() >= 2);
        let v = extract_correlators(&rho).unwrap();
        let part = correlated_part(&rho, s.support()).unwrap();
        let local = s.restrict(s.support());
        // re-index onto the subset's own sites
        let ops: Vec<(usize, Axis)> = local
            .ops()
            .map(|(site, ax)| (s.support().rank_of(site).unwrap(), ax))
            .collect();
        let p = pauli_matrix(&PauliString::from_ops(ops).unwrap(), s.weight()).unwrap();
        let tr = (p * &part.matrix).trace();
        prop_assert!((tr.re - connected_correlator(&v, &s).unwrap()).abs() < 1e-13);
        prop_assert!(tr.im.abs() < 1e-13);
    }

    #[test]
    fn correlated_and_cumulant_parts_agree_below_four(seed in any::<u64>()) {
        let rho = states::random_mixed(3, &mut rng(seed)).unwrap();
        for a in enumerate_subsets(CellSubset::full(3)).into_iter().filter(|a| a.len() >= 2) {
            let c = correlated_part(&rho, a).unwrap();
            let cc = cumulant_part(&rho, a).unwrap();
            prop_assert!(max_abs(&(c.matrix - cc.matrix)) < 1e-14);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generator_is_antisymmetric(n in 1usize..=5, seed in any::<u64>()) {
        let h = SpinHamiltonian::random(n, &mut rng(seed), 1.0, 1.0).unwrap();
        let g = build_generator(&h);
        prop_assert!(g.antisymmetry_error() < 1e-12);
        for k in 0..g.dim() {
            prop_assert_eq!(g.matrix().get(0, k), 0.0);
            prop_assert_eq!(g.matrix().get(k, 0), 0.0);
        }
    }

    #[test]
    fn evolution_conserves_norm_and_matches_purity(n in 2usize..=3, seed in any::<u64>()) {
        let mut r = rng(seed);
        let h = SpinHamiltonian::random(n, &mut r, 1.0, 0.5).unwrap();
        let g = build_generator(&h);
        let rho = states::random_mixed(n, &mut r).unwrap();
        let x0 = extract_correlators(&rho).unwrap();
        let p0 = purity(&rho);
        for method in [Method::Rk4, Method::ExpAction] {
            let traj = evolve_with(&g, &x0, 3.0, default_dt(&g), 20, method).unwrap();
            for s in &traj.states {
                prop_assert_eq!(s.values()[0], 1.0);
                prop_assert!((purity_from_correlators(s) - p0).abs() < 1e-8);
            }
        }
        let x = expm_action(&g, x0.values(), 3.0);
        let drift: f64 = x.iter().map(|v| v * v).sum::<f64>() - x0.values().iter().map(|v| v * v).sum::<f64>();
        prop_assert!(drift.abs() < 1e-10);
    }

    #[test]
    fn resolvent_conjugation_and_residual(seed in any::<u64>(), re in 0.1f64..2.0, im in -2.0f64..2.0) {
        let h = SpinHamiltonian::random(2, &mut rng(seed), 1.0, 1.0).unwrap();
        let g = build_generator(&h);
        let z = C64::new(re, im);
        let a = resolvent(&g, z).unwrap();
        let b = resolvent(&g, z.conj()).unwrap();
        prop_assert!(max_abs(&(b - a.map(|x| x.conj()))) < 1e-12);
        prop_assert!(corrdyn::dynamics::resolvent_residual(&g.to_dense(), z, &a) < 1e-10);
    }

    #[test]
    fn frequencies_are_level_differences(n in 2usize..=3, seed in any::<u64>()) {
        let h = SpinHamiltonian::random(n, &mut rng(seed), 1.0, 0.5).unwrap();
        let g = build_generator(&h);
        let rep = corrdyn::dynamics::spectrum(&g, &Default::default()).unwrap();
        let gaps = EigenSystem::of(&h).unwrap().positive_gaps(1e-9);
        let bound = (1usize << n) * ((1usize << n) - 1) / 2;
        prop_assert!(rep.frequencies.len() <= bound);
        for w in &rep.frequencies {
            prop_assert!(gaps.iter().any(|g| (g - w).abs() < 1e-9));
        }
        prop_assert!(rep.kernel_dim >= (1 << n) - 1);
    }
}
