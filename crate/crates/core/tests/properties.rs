use std::sync::Arc;

use entgrowth::bipartition_markov::{swap_action, transition_matrix};
use entgrowth::entanglement::{hcee, subset_entropy, Bipartition};
use entgrowth::evolution::{propagate, spectral_decompose};
use entgrowth::operators::{apply_gate, build_two_qubit_gate, build_xxz, sample_fields_seeded};
use entgrowth::scalar::reduced_phase;
use entgrowth::{SectorBasis, SectorState};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis(l: usize) -> Arc<SectorBasis> {
    Arc::new(SectorBasis::half_filling(l).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lookup_inverts_enumeration(l in (1usize..=7).prop_map(|k| 2 * k), pick in any::<prop::sample::Index>()) {
        let b = SectorBasis::half_filling(l).unwrap();
        let k = pick.index(b.dim());
        prop_assert_eq!(b.index_of(b.word(k)).unwrap(), k);
        prop_assert_eq!(b.word(k).count_ones() as usize, l / 2);
    }

    #[test]
    fn complement_entropy_is_equal(seed in any::<u64>(), mask in 1u32..63) {
        let s = SectorState::<f64>::haar_random(basis(6), &mut ChaCha8Rng::seed_from_u64(seed));
        let a: Vec<usize> = (1..=6).filter(|i| mask >> (i - 1) & 1 == 1).collect();
        let c: Vec<usize> = (1..=6).filter(|i| mask >> (i - 1) & 1 == 0).collect();
        let d = subset_entropy(&s, &a).unwrap() - subset_entropy(&s, &c).unwrap();
        prop_assert!(d.abs() < 1e-10);
    }

    #[test]
    fn entropy_is_bounded(seed in any::<u64>(), l in (1usize..=4).prop_map(|k| 2 * k)) {
        let s = SectorState::<f64>::haar_random(basis(l), &mut ChaCha8Rng::seed_from_u64(seed));
        let e = hcee(&s).unwrap();
        prop_assert!(e >= 0.0 && e <= (l / 2) as f64 + 1e-12);
    }

    #[test]
    fn gates_preserve_norm(seed in any::<u64>(), alpha in 0.0f64..6.3, beta in 0.0f64..6.3, bond in 1usize..8) {
        let s = SectorState::<f64>::haar_random(basis(8), &mut ChaCha8Rng::seed_from_u64(seed));
        let out = apply_gate(&s, bond, &build_two_qubit_gate(alpha, beta)).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn propagation_is_a_group(seed in any::<u64>(), t1 in 0.0f64..20.0, t2 in 0.0f64..20.0) {
        let b = basis(6);
        let f = sample_fields_seeded(6, 2.0, seed).unwrap();
        let d = spectral_decompose(&build_xxz::<f64>(&b, 0.5, &f).unwrap()).unwrap();
        let psi = SectorState::<f64>::from_word(b, 0b010_101).unwrap();
        let two = propagate(&d, &propagate(&d, &psi, t1).unwrap(), t2).unwrap();
        let one = propagate(&d, &psi, t1 + t2).unwrap();
        prop_assert!(one.max_abs_diff(&two) < 1e-11);
        prop_assert!((one.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_phase_stays_in_range(x in -10.0f64..10.0, t in 0.0f64..1e13) {
        let p = reduced_phase(x, t);
        prop_assert!(p > -std::f64::consts::PI - 1e-12 && p <= std::f64::consts::PI + 1e-12);
    }

    #[test]
    fn swap_action_is_an_involution(l in (2usize..=5).prop_map(|k| 2 * k), pick in any::<prop::sample::Index>(), bond_pick in any::<prop::sample::Index>()) {
        let p = transition_matrix(l).unwrap();
        let b: Bipartition = p.states()[pick.index(p.n())];
        let bond = 1 + bond_pick.index(l - 1);
        let once = swap_action(b, bond).unwrap();
        prop_assert_eq!(swap_action(once, bond).unwrap(), b);
    }
}
