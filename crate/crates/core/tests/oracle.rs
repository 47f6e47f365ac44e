mod common;

use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use qmoney_core::fock::*;
use qmoney_core::matching::{classify, wrong_parity_mass};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn uniform(n: usize) -> Vec<Complex64> {
    local_reference_state(n).unwrap().amplitudes().to_vec()
}

#[test]
fn hong_ou_mandel_keys_vanish_for_honest_input() {
    let a = uniform(5);
    for (key, p) in fock_expansion(&a, &a) {
        if key_event(key).is_none() {
            assert!(p < 1e-15);
        }
    }
}

#[test]
fn oracle_total_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for n in 2..7 {
        let s = random_pure(n, &mut rng);
        let r = random_pure(n, &mut rng);
        let total: f64 = fock_expansion(s.amplitudes(), r.amplitudes()).values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pure_matches_oracle(n in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_pure(n, &mut rng);
        let r = random_pure(n, &mut rng);
        let dist = interfere_pure(&s, &r).unwrap();
        prop_assert!(max_deviation(&dist, &fock_expansion(s.amplitudes(), r.amplitudes())) < 1e-9);
        prop_assert!((dist.total() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_matches_oracle(n in 2usize..7, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (components, a) = random_mixture(n, &mut rng);
        let r = uniform(n);
        let dist = interfere_mixed(&a, &local_reference_state(n).unwrap()).unwrap();
        prop_assert!(max_deviation(&dist, &mixture_expansion(&components, &r)) < 1e-9);
    }

    #[test]
    fn same_mode_mass_is_one_over_n(n in 2usize..12, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, a) = random_mixture(n, &mut rng);
        let dist = interfere_mixed(&a, &local_reference_state(n).unwrap()).unwrap();
        prop_assert!((dist.same_mode_mass() - 1.0 / n as f64).abs() < 1e-9);
    }

    #[test]
    fn mixed_is_linear(n in 2usize..7, w in 0.0f64..1.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, a) = random_mixture(n, &mut rng);
        let (_, b) = random_mixture(n, &mut rng);
        let r = local_reference_state(n).unwrap();
        let lhs = interfere_mixed(&a.blend(w, &b).unwrap(), &r).unwrap();
        let rhs = interfere_mixed(&a, &r).unwrap().blend(w, &interfere_mixed(&b, &r).unwrap()).unwrap();
        for (p, q) in lhs.as_slice().iter().zip(rhs.as_slice()) {
            prop_assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn wrong_parity_mass_is_half_infidelity(n in 2usize..9, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (_, a) = random_mixture(n, &mut rng);
        let x = BitString::random(n, &mut rng).unwrap();
        let dist = interfere_mixed(&a, &local_reference_state(n).unwrap()).unwrap();
        let wrong = wrong_parity_mass(&dist, &x).unwrap();
        prop_assert!((wrong - 0.5 * (1.0 - direct_fidelity(&a, &x))).abs() < 1e-9);
        prop_assert!((incorrect_parity_probability(&a, &x).unwrap() - wrong).abs() < 1e-9);
    }

    #[test]
    fn honest_input_never_wrong(n in 2usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = BitString::random(n, &mut rng).unwrap();
        let dist = interfere_pure(&encode_note_state(&x), &local_reference_state(n).unwrap()).unwrap();
        for (e, p) in dist.iter() {
            if classify(&e).is_wrong_for(&x) == Some(true) {
                prop_assert!(p < 1e-15);
            }
        }
    }

    #[test]
    fn bitstring_text_roundtrip(bits in proptest::collection::vec(any::<bool>(), 2..64)) {
        let x = BitString::from_slice(&bits).unwrap();
        let back: BitString = x.to_string().parse().unwrap();
        prop_assert_eq!(back, x);
    }
}
