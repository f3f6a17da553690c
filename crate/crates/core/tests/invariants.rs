use mbs_core::exact::{enumerated_value, ExactConfig, ExactSolver, Realizations};
use mbs_core::generators::{random_graphic, random_laminar, random_left_to_right, RandomParams};
use mbs_core::io::{instance_to_json, parse_instance};
use mbs_core::preprocess::{classify_bins, separate_capacities, shrink_big, ClassifyMode};
use mbs_core::ptas::{build_ptas_policy, monte_carlo, PtasConfig};
use mbs_core::rational::{ratio, to_f64};
use mbs_core::{optimal_value, Instance, Rational};
use num::Zero;
use proptest::prelude::*;

fn small_laminar(seed: u64, n: usize) -> Instance {
    random_laminar(RandomParams::new(n, 3, 3, 2), seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn json_round_trip(seed in 0u64..10_000, n in 1usize..9) {
        let inst = small_laminar(seed, n);
        let back = parse_instance(&instance_to_json(&inst)).unwrap();
        prop_assert_eq!(back, inst);
    }

    #[test]
    fn replayed_policy_is_feasible_and_averages_to_opt(seed in 0u64..10_000, n in 1usize..7) {
        let inst = if seed % 2 == 0 { small_laminar(seed, n) } else { random_graphic(n, 4, 2, seed) };
        let mut solver = ExactSolver::new(&inst, ExactConfig::default());
        let opt = solver.optimal_value().unwrap();
        let mut total = Rational::zero();
        for r in Realizations::new(&inst, 1 << 16).unwrap() {
            let trace = solver.replay(&r).unwrap();
            prop_assert!(inst.is_independent(&trace.selected).unwrap());
            total += trace.gain * &r.weight;
        }
        prop_assert_eq!(&total, &opt);
        prop_assert_eq!(enumerated_value(&inst, ExactConfig::default()).unwrap(), opt);
    }

    #[test]
    fn opt_is_monotone_in_capacity(seed in 0u64..10_000, n in 1usize..7) {
        let inst = small_laminar(seed, n);
        let mut looser = inst.clone();
        if let mbs_core::Ground::Laminar(f) = &mut looser.ground {
            for b in &mut f.bins {
                b.capacity += 1;
            }
        }
        prop_assert!(optimal_value(&looser).unwrap() >= optimal_value(&inst).unwrap());
        prop_assert!(optimal_value(&looser).unwrap() <= looser.total_mean());
    }

    #[test]
    fn separation_keeps_structure(seed in 0u64..10_000, n in 1usize..12, a in 1i64..10) {
        let inst = random_left_to_right(RandomParams::new(n, 4, 6, 2), seed);
        let alpha = ratio(a, 10);
        let sep = separate_capacities(&inst, &alpha).unwrap();
        prop_assert!(sep.satisfies_separation());
        let family = sep.family();
        // Maximal bins are never dropped.
        let orig = inst.family().unwrap();
        for (i, b) in orig.bins.iter().enumerate() {
            let maximal = !orig.bins.iter().enumerate().any(|(j, c)| j != i && b.is_subset_of(c) && c.len() > b.len());
            if maximal {
                prop_assert!(family.bins.iter().any(|k| k.members == b.members));
            }
        }
        let class = classify_bins(&sep, 4, ClassifyMode::Uniform).unwrap();
        let shrunk = shrink_big(&class, &ratio(1, 4));
        for (&c, b) in shrunk.iter().zip(&class.family.bins) {
            prop_assert!(c <= b.capacity);
        }
    }

    #[test]
    fn monte_carlo_is_deterministic(seed in 0u64..200) {
        let inst = random_left_to_right(RandomParams::new(5, 2, 3, 2), seed);
        let policy = build_ptas_policy(&inst, &ratio(1, 2), &PtasConfig { k: 8, mode: ClassifyMode::Uniform, max_states: 100_000 }).unwrap();
        let a = monte_carlo(&policy, 3000, seed);
        let b = monte_carlo(&policy, 3000, seed);
        prop_assert_eq!(a.mean_gain.to_bits(), b.mean_gain.to_bits());
        prop_assert_eq!(a.discard_rates, b.discard_rates);
        let ceiling: f64 = inst.distributions.iter().map(|d| to_f64(&d.max_value())).sum();
        prop_assert!(a.mean_gain >= 0.0 && a.mean_gain <= ceiling + 1e-9);
    }
}
