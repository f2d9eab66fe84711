//! Monte Carlo criteria on the local-to-unity design.

use nalgebra::DMatrix;
use qcvar::dgp::simulate_replication;
use qcvar::likelihood::{DeterministicCase, LambdaSpace, VarLikelihood};
use qcvar::limitdist::{build_table, compute_entry, simulate_sample, LimitDistConfig};
use qcvar::rng::replication_rng;
use qcvar::spectral::half_life_to_radius;
use qcvar::stats::{chi2_quantile, ks_two_sample, quantile_se_sorted, quantile_sorted, rejection_rate, sorted};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::design::{local_design, C, LAMBDA};
use crate::Outcome;

const RHO: f64 = 0.9;

fn likelihood(master: u64, index: u64) -> VarLikelihood {
    let y = simulate_replication(&local_design(), master, index).expect("simulation").y;
    VarLikelihood::new(&y, 1, DeterministicCase::Trend).expect("likelihood")
}

fn lambda0() -> DMatrix<f64> {
    DMatrix::from_element(1, 1, LAMBDA)
}

pub fn chi_square_size() -> Outcome {
    let reps = 2000;
    let crit = chi2_quantile(1.0, 0.95).expect("chi2");
    let stats: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| likelihood(6, i).lr_coefficient(1.0, 0, 0, &lambda0()).expect("LR(a)").value)
        .collect();
    let rate = rejection_rate(&stats, crit);
    Outcome::new(
        (0.035..=0.065).contains(&rate),
        format!("{reps} reps, n = 500, C = {C}; rejection rate at {crit:.3} = {rate:.4} (target [0.035, 0.065])"),
    )
}

pub fn lambda_quantile() -> Outcome {
    let reps = 2000;
    let space = LambdaSpace::scalar(1, RHO).expect("space");
    let stats: Vec<f64> = (0..reps as u64)
        .into_par_iter()
        .map(|i| likelihood(7, i).lr_lambda(&lambda0(), &space).expect("LR(Lambda)").value)
        .collect();
    let xs = sorted(&stats);
    let empirical = quantile_sorted(&xs, 0.95);
    let cfg = LimitDistConfig::scalar(C, DeterministicCase::Trend, 7).expect("config");
    let entry = compute_entry(&cfg).expect("table entry");
    let li = cfg.levels.iter().position(|&l| l == 0.95).expect("0.95 level");
    let table = entry.quantiles[li];
    let gap = (empirical - table).abs();
    Outcome::new(
        gap <= 0.5,
        format!(
            "{reps} reps; empirical 0.95 quantile {empirical:.3} (MC se {:.3}) vs table {table:.3} (steps {}, reps {}, se {:.3}); gap {gap:.3} (tol 0.5)",
            quantile_se_sorted(&xs, 0.95),
            cfg.steps,
            cfg.reps,
            entry.se[li]
        ),
    )
}

/// Squared t-statistic of the no-constant unit-root regression on a random walk.
fn df_t_squared(len: usize, index: u64) -> f64 {
    let mut rng = replication_rng(8_008, index);
    let (mut y, mut sxy, mut sxx, mut syy) = (0.0_f64, 0.0, 0.0, 0.0);
    for _ in 0..len {
        let e: f64 = rng.sample(StandardNormal);
        sxy += y * e;
        sxx += y * y;
        syy += e * e;
        y += e;
    }
    let rho = sxy / sxx;
    let s2 = (syy - rho * sxy) / (len - 1) as f64;
    rho * rho * sxx / s2
}

pub fn dickey_fuller_anchor() -> Outcome {
    let reps = 10_000;
    let cfg = LimitDistConfig::scalar(0.0, DeterministicCase::None, 8).expect("config").with_reps(reps);
    let (sim, _) = simulate_sample(&cfg).expect("simulation");
    let oracle: Vec<f64> = (0..reps as u64).into_par_iter().map(|i| df_t_squared(10_000, i)).collect();
    let (a, b) = (sorted(&sim), sorted(&oracle));
    let (qa, qb) = (quantile_sorted(&a, 0.95), quantile_sorted(&b, 0.95));
    let se = quantile_se_sorted(&a, 0.95).hypot(quantile_se_sorted(&b, 0.95));
    let ks = ks_two_sample(&sim, &oracle, 0.01);
    let pass = (qa - qb).abs() <= 2.0 * se && !ks.reject;
    Outcome::new(
        pass,
        format!(
            "0.95 quantiles {qa:.3} vs oracle {qb:.3}, gap {:.3} (tol 2 x {se:.3}); KS D = {:.4} vs 1% critical {:.4}",
            (qa - qb).abs(),
            ks.statistic,
            ks.critical
        ),
    )
}

pub fn conditional_coverage() -> Outcome {
    let reps = 1000;
    let covered: Vec<bool> = (0..reps as u64)
        .into_par_iter()
        .map(|i| likelihood(9, i).ci_coefficient_given_lambda(0.05, 0, 0, &lambda0()).expect("interval").contains(1.0))
        .collect();
    let rate = covered.iter().filter(|&&c| c).count() as f64 / reps as f64;
    Outcome::new((0.93..=0.97).contains(&rate), format!("{reps} reps; coverage of the 95% interval {rate:.3} (target [0.93, 0.97])"))
}

pub fn bonferroni_coverage() -> Outcome {
    let reps = 500;
    let grid: Vec<DMatrix<f64>> = (-50..=0).map(|c| DMatrix::from_element(1, 1, c as f64)).collect();
    let cfg = LimitDistConfig::scalar(0.0, DeterministicCase::Trend, 10).expect("config").with_reps(10_000);
    let table = build_table(&grid, &cfg, None).expect("table");
    let space = LambdaSpace::scalar(1, RHO).expect("space");
    let results: Vec<(bool, bool)> = (0..reps as u64)
        .into_par_iter()
        .map(|i| {
            let b = likelihood(10, i).bonferroni_ci(0.025, 0.025, 0, 0, &space, &table).expect("Bonferroni set");
            (b.contains(1.0), b.fallback)
        })
        .collect();
    let rate = results.iter().filter(|r| r.0).count() as f64 / reps as f64;
    let fallbacks = results.iter().filter(|r| r.1).count();
    let h8 = half_life_to_radius(8.0).expect("h = 8");
    let h10 = half_life_to_radius(10.0).expect("h = 10");
    let round3 = |x: f64| (x * 1000.0).round() / 1000.0;
    let anchors = round3(h8) == 0.917 && round3(h10) == 0.933;
    Outcome::new(
        rate >= 0.93 && anchors,
        format!(
            "{reps} reps; coverage of C_B(0.025, 0.025) {rate:.3} (target >= 0.93), {fallbacks} empty-set fallbacks; h=8 -> {h8:.4}, h=10 -> {h10:.4}"
        ),
    )
}
