//! Generative property tests for the structural invariants.

use albo::acquisition::{ei_montecarlo, ConstraintSurrogate, ObjectiveModel, SurrogateBundle};
use albo::auglag::{AlState, AlVariant};
use albo::gp::{lhs_sample, GpModel};
use albo::harness::{parse_trajectory_csv, trajectory_to_csv};
use albo::problems::{
    counterexample_penalized, make_version, slack_linearize, BoxDomain, Evaluation, ToyVersion,
};
use albo::strategies::{random_search, Trajectory};

use proptest::prelude::*;
use std::sync::Arc;

fn small_f64() -> impl Strategy<Value = f64> {
    -1e3..1e3f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn al_dominance_and_reorder_invariance(
        f in small_f64(),
        c in prop::collection::vec(-10.0..10.0f64, 1..5),
        lam_raw in prop::collection::vec(0.0..5.0f64, 1..5),
        rho in 1e-3..1e2f64,
        swap in any::<bool>(),
    ) {
        let m = c.len().min(lam_raw.len());
        let c = &c[..m];
        let lam = lam_raw[..m].to_vec();
        let wm = AlState::new(lam.clone(), rho, AlVariant::WithMax).unwrap();
        let nm = AlState::new(lam.clone(), rho, AlVariant::NoMax).unwrap();
        let (a, b) = (wm.value(f, c), nm.value(f, c));
        prop_assert!(a <= b);
        if c.iter().all(|&ci| ci >= 0.0) {
            prop_assert_eq!(a, b);
        } else {
            prop_assert!(a < b);
        }
        // Reordering constraints together with multipliers changes nothing.
        if swap && m >= 2 {
            let mut c2 = c.to_vec();
            let mut l2 = lam;
            c2.swap(0, m - 1);
            l2.swap(0, m - 1);
            let wm2 = AlState::new(l2, rho, AlVariant::WithMax).unwrap();
            prop_assert!((wm2.value(f, &c2) - a).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn multiplier_updates_stay_nonnegative_and_rho_non_increasing(
        lam in prop::collection::vec(0.0..5.0f64, 1..4),
        c in prop::collection::vec(-10.0..10.0f64, 1..4),
        rho in 1e-6..10.0f64,
        steps in 1..60usize,
    ) {
        let m = lam.len().min(c.len());
        let mut s = AlState::new(lam[..m].to_vec(), rho, AlVariant::NoMax).unwrap();
        let mut prev_rho = s.rho();
        for k in 0..steps {
            s = s.update_multipliers(&c[..m]).update_rho(k % 3 == 0);
            prop_assert!(s.lambda().iter().all(|&l| l >= 0.0));
            prop_assert!(s.rho() > 0.0 && s.rho() <= prev_rho);
            prev_rho = s.rho();
        }
    }

    #[test]
    fn lhs_occupies_every_stratum_once(
        n in 1..60usize,
        d in 1..4usize,
        seed in any::<u64>(),
    ) {
        let m = lhs_sample(n, d, seed).unwrap();
        for j in 0..d {
            let mut counts = vec![0usize; n];
            for i in 0..n {
                let v = m[(i, j)];
                prop_assert!((0.0..1.0).contains(&v));
                counts[(v * n as f64) as usize] += 1;
            }
            prop_assert!(counts.iter().all(|&k| k == 1));
        }
        // Same seed, same design.
        prop_assert_eq!(m, lhs_sample(n, d, seed).unwrap());
    }

    #[test]
    fn feasibility_flag_matches_the_constraint_signs(
        x in prop::collection::vec(small_f64(), 1..4),
        c in prop::collection::vec(small_f64(), 1..5),
        f in small_f64(),
    ) {
        let e = Evaluation::new(x, f, c.clone());
        prop_assert_eq!(e.feasible, c.iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn penalized_counterexample_is_nonnegative_with_boundary_zero_penalty(
        x in -1.0..1.0f64,
        rho in 1e-6..1e6f64,
    ) {
        let v = counterexample_penalized(x, rho).unwrap();
        prop_assert!(v >= 0.0);
        let boundary = counterexample_penalized(1.0, rho).unwrap();
        prop_assert_eq!(boundary, 0.25);
    }

    #[test]
    fn unit_mapping_lands_inside_the_box(
        u in prop::collection::vec(0.0..1.0f64, 1..5),
        spread in prop::collection::vec(0.1..10.0f64, 1..5),
        offset in prop::collection::vec(-5.0..5.0f64, 1..5),
    ) {
        let d = u.len().min(spread.len()).min(offset.len());
        let lower: Vec<f64> = offset[..d].to_vec();
        let upper: Vec<f64> = (0..d).map(|j| offset[j] + spread[j]).collect();
        let b = BoxDomain::new(lower, upper).unwrap();
        prop_assert!(b.contains(&b.from_unit(&u[..d])));
    }

    #[test]
    fn ei_is_nonnegative_for_arbitrary_prior_surrogates(
        mean in -5.0..5.0f64,
        variance in 0.0..4.0f64,
        lam in 0.0..3.0f64,
        rho in 1e-3..10.0f64,
        best_al in -5.0..5.0f64,
        seed in any::<u64>(),
        no_max in any::<bool>(),
    ) {
        let bundle = SurrogateBundle {
            constraints: ConstraintSurrogate::Independent(vec![GpModel::prior(1, mean, variance)]),
            objective: ObjectiveModel::Known(Arc::new(|x: &[f64]| x[0])),
        };
        let variant = if no_max { AlVariant::NoMax } else { AlVariant::WithMax };
        let s = AlState::new(vec![lam], rho, variant).unwrap();
        let ei = ei_montecarlo(&bundle, &[0.2], &s, best_al, 64, seed).unwrap();
        prop_assert!(ei >= 0.0);
        prop_assert_eq!(ei, ei_montecarlo(&bundle, &[0.2], &s, best_al, 64, seed).unwrap());
    }

    #[test]
    fn slack_linearization_structure_holds_pointwise(
        x1 in 0.0..1.0f64,
        x2 in 0.0..1.0f64,
        r in 0.0..1.0f64,
    ) {
        let v2 = make_version(ToyVersion::V2);
        let lifted = slack_linearize(&v2, (0.0, 1.0)).unwrap();
        let z = [x1, x2, r];
        prop_assert_eq!(lifted.objective(&z), r);
        let expected = v2.objective(&[x1, x2]) - r;
        prop_assert!((lifted.constraint(2, &z) - expected).abs() <= 1e-15);
        prop_assert_eq!(lifted.constraint(0, &z), v2.constraint(0, &[x1, x2]));
    }

    #[test]
    fn trajectory_csv_round_trip(
        budget in 1..25usize,
        seed in any::<u64>(),
        restart in 0..500usize,
    ) {
        let p = make_version(ToyVersion::V2);
        let t: Trajectory = random_search(&p, budget, seed);
        let text = trajectory_to_csv(restart, &t);
        let (r, back) = parse_trajectory_csv(&text).unwrap();
        prop_assert_eq!(r, restart);
        prop_assert_eq!(back, t);
    }
}
