//! Long-running study reproductions, ignored by default. Run with
//! `cargo test --test reproduction -- --ignored --nocapture` to print the
//! strategy comparison tables these binaries exist to produce.

use albo::auglag::AlVariant;
use albo::harness::aggregate;
use albo::problems::{make_version, ToyVersion};
use albo::strategies::{bo_auglag, random_search, StrategyConfig, SurrogateKind, Trajectory};

fn bo_runs(
    p: &albo::ConstrainedProblem,
    variant: AlVariant,
    restarts: usize,
    seed0: u64,
) -> Vec<Trajectory> {
    (0..restarts)
        .map(|i| {
            let cfg = StrategyConfig {
                n_init: 10,
                n_iter: 100,
                budget: 110,
                variant,
                surrogate: SurrogateKind::Independent,
                seed: seed0 + i as u64,
                ..StrategyConfig::default()
            };
            bo_auglag(p, &cfg).unwrap()
        })
        .collect()
}

/// Three-strategy comparison on the slack-linearized variant. The
/// reference study reported random search ahead of both BO variants here;
/// with this crate's surrogates the gap need not reproduce, so the table
/// is informational and only sanity bounds are asserted.
#[test]
#[ignore = "several minutes of BO runs; informational table"]
fn version_3_three_strategy_comparison() {
    let p = make_version(ToyVersion::V3);
    let restarts = 20;
    let random: Vec<Trajectory> = (0..restarts)
        .map(|i| random_search(&p, 110, 42 + i as u64))
        .collect();
    let random = aggregate(&random).unwrap();
    let no_max = aggregate(&bo_runs(&p, AlVariant::NoMax, restarts, 42)).unwrap();
    let with_max = aggregate(&bo_runs(&p, AlVariant::WithMax, restarts, 42)).unwrap();

    println!("v3, budget 110, {restarts} restarts:");
    println!("  random  : {:.4} +/- {:.4}", random.final_mean, random.final_stderr);
    println!("  nomax   : {:.4} +/- {:.4}", no_max.final_mean, no_max.final_stderr);
    println!("  withmax : {:.4} +/- {:.4}", with_max.final_mean, with_max.final_stderr);

    for (label, agg) in [("random", &random), ("nomax", &no_max), ("withmax", &with_max)] {
        assert!(
            agg.final_mean >= 0.0 && agg.final_mean <= 0.25,
            "{label} mean {} outside sanity band",
            agg.final_mean
        );
    }
}

/// Linear-objective comparison mirroring the first benchmark row: both BO
/// variants should come close to the corner optimum -1 on v1.
#[test]
#[ignore = "several minutes of BO runs; informational table"]
fn version_1_three_strategy_comparison() {
    let p = make_version(ToyVersion::V1);
    let restarts = 20;
    let random: Vec<Trajectory> = (0..restarts)
        .map(|i| random_search(&p, 100, 42 + i as u64))
        .collect();
    let random = aggregate(&random).unwrap();
    let no_max = aggregate(&bo_runs(&p, AlVariant::NoMax, restarts, 42)).unwrap();
    let with_max = aggregate(&bo_runs(&p, AlVariant::WithMax, restarts, 42)).unwrap();

    println!("v1, {restarts} restarts:");
    println!("  random  (budget 100): {:.4} +/- {:.4}", random.final_mean, random.final_stderr);
    println!("  nomax   (budget 110): {:.4} +/- {:.4}", no_max.final_mean, no_max.final_stderr);
    println!("  withmax (budget 110): {:.4} +/- {:.4}", with_max.final_mean, with_max.final_stderr);

    // The linear objective keeps the maximum-free variant viable: both
    // variants should land well below the feasible median.
    assert!(no_max.final_mean <= -0.8, "nomax mean {}", no_max.final_mean);
    assert!(with_max.final_mean <= -0.8, "withmax mean {}", with_max.final_mean);
}
