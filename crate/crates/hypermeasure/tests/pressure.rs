use hypermeasure::pressure::*;
use hypermeasure::systems::*;
use proptest::prelude::*;

fn golden() -> System {
    System::sft(vec![vec![1, 1], vec![1, 0]]).unwrap()
}

/// `Σ_{|w| = n} e^{Σ v[w_i]}` by listing words.
fn cylinder_sum(sys: &System, values: &[f64], n: usize) -> f64 {
    admissible_words(sys, None, n).iter().map(|w| w.iter().map(|&s| values[s as usize]).sum::<f64>().exp()).sum()
}

#[test]
fn span_and_sep_are_cylinder_sums() {
    for sys in [System::full_shift(2).unwrap(), golden(), System::full_shift(3).unwrap()] {
        let p = sys.alphabet().unwrap() as usize;
        let values: Vec<f64> = (0..p).map(|i| 0.3 * i as f64 - 0.2).collect();
        let phi = Potential::locally_constant(1, values.clone());
        for n in 1..=10 {
            let want = cylinder_sum(&sys, &values, n);
            for variant in [Variant::Span, Variant::Sep] {
                for r in [0.55, 0.9] {
                    let got = partition_sum(&sys, &phi, n, r, variant, &Domain::Whole).unwrap();
                    assert!((got.value / want - 1.0).abs() < 1e-12, "{:?} n={n}", sys.family);
                }
            }
        }
    }
}

#[test]
fn estimates_match_exact_pressure_on_sfts() {
    let ns: Vec<usize> = (1..=14).collect();
    let cases = [
        (golden(), Potential::locally_constant(2, vec![0.1, -0.3, 0.4, 0.0])),
        (System::full_shift(2).unwrap(), Potential::bernoulli(&[0.3, 0.7])),
        (System::sft(vec![vec![1, 1, 0], vec![0, 1, 1], vec![1, 1, 1]]).unwrap(), Potential::locally_constant(1, vec![0.2, -0.5, 0.1])),
    ];
    for (sys, phi) in cases {
        let exact = sft_exact_pressure(&sys, &phi).unwrap().pressure;
        let est = pressure_estimate(&sys, &phi, &[0.7], &ns, &Domain::Whole).unwrap();
        assert!((est.value - exact).abs() < 1e-3, "{} vs {exact}", est.value);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn adding_a_constant_shifts_the_pressure(c in -2.0..2.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let sys = golden();
        let phi = Potential::locally_constant(1, vec![a, b]);
        let ns: Vec<usize> = (2..=9).collect();
        let base = pressure_estimate(&sys, &phi, &[0.7], &ns, &Domain::Whole).unwrap();
        let moved = pressure_estimate(&sys, &phi.shifted(c), &[0.7], &ns, &Domain::Whole).unwrap();
        prop_assert!((moved.value - base.value - c).abs() < 1e-9);
    }

    #[test]
    fn greedy_sets_are_maximal(seed in any::<u64>(), n in 1usize..4) {
        use rand::{Rng, SeedableRng};
        let sys = System::cat_map();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let sample: Vec<Point> = (0..300).map(|_| Point::torus(rng.gen(), rng.gen())).collect();
        let r = 0.1;
        let set = separated_set(&sys, &sample, n, r).unwrap();
        for (i, a) in set.iter().enumerate() {
            for b in &set[i + 1..] {
                prop_assert!(sys.dyn_metric(a, b, n).unwrap() >= r);
            }
        }
        for q in &sample {
            prop_assert!(set.iter().any(|a| sys.dyn_metric(a, q, n).unwrap() < r));
        }
        // a larger sample never yields a smaller separated sum at φ = 0
        let more = separated_set(&sys, &[sample.clone(), sample.iter().map(|p| sys.apply(p, 1).unwrap()).collect()].concat(), n, r).unwrap();
        prop_assert!(more.len() >= set.len());
    }
}

#[test]
fn full_shift_sums_are_multiplicative() {
    let ns: Vec<usize> = (1..=12).collect();
    for (sys, phi) in [
        (System::full_shift(2).unwrap(), Potential::zero()),
        (System::full_shift(2).unwrap(), Potential::bernoulli(&[0.3, 0.7])),
        (System::full_shift(3).unwrap(), Potential::locally_constant(1, vec![0.5, -0.1, 0.2])),
    ] {
        let records = partition_sums(&sys, &phi, &ns, 0.7, Variant::Sep, &Domain::Whole).unwrap();
        let rep = multiplicativity_check(&records);
        assert!(rep.pairs > 0 && rep.log_c.abs() < 1e-12, "{rep:?}");
    }
}

#[test]
fn cat_distortion_within_closed_form() {
    let sys = System::cat_map();
    let rep = bowen_distortion_constant(&sys, &Potential::trig(0.5, 1, 2), 10_000, 10, 7).unwrap();
    assert_eq!(rep.pairs, 10_000);
    assert!(rep.empirical <= rep.q_u, "{rep:?}");
}
