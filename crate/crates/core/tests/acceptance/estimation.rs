use nalgebra::DMatrix;
use qcvar::dgp::{build_var, simulate, DgpSpec, StationarySeed};
use qcvar::likelihood::{DeterministicCase, FixedEntry, ProfileOptions, VarLikelihood};
use qcvar::rng::replication_rng;
use qcvar::spectral::split;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::Outcome;

fn dataset(seed: u64) -> (DMatrix<f64>, usize) {
    let mut rng = replication_rng(seed, 3);
    let k = rng.random_range(1..=2);
    let a = DMatrix::from_fn(2, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
    let coeffs = build_var(&a, &DMatrix::from_element(1, 1, 0.99), &StationarySeed::Random { seed, radius: 0.7 }, k).expect("design");
    let spec = DgpSpec::new(coeffs, DMatrix::identity(3, 3), 500).expect("spec");
    (simulate(&spec, seed).expect("path").y, k)
}

pub fn equivalences() -> Outcome {
    let mut rrr_gap = 0.0_f64;
    let mut ols_gap = 0.0_f64;
    let mut nesting_violation = 0.0_f64;
    for seed in 0..20u64 {
        let (y, k) = dataset(seed);
        let lik = VarLikelihood::new(&y, k, DeterministicCase::Trend).expect("likelihood");
        for lambda0 in [1.0, 0.99, 0.95] {
            let lam = DMatrix::from_element(1, 1, lambda0);
            let rrr = lik.rrr(lambda0, 1).expect("rrr");
            let prof = lik.profile_a(&lam, &ProfileOptions::default()).expect("profile");
            rrr_gap = rrr_gap.max((rrr.loglik - prof.fit.loglik).abs());
            let a_hat = prof.a_hat[(0, 0)];
            for a0 in [a_hat - 0.1, a_hat + 0.05, 0.0] {
                let opts = ProfileOptions { fixed_entry: Some(FixedEntry { i: 0, j: 0, value: a0 }), ..Default::default() };
                let pinned = lik.profile_a(&lam, &opts).expect("pinned profile");
                nesting_violation = nesting_violation
                    .max(prof.fit.loglik - lik.ols_loglik())
                    .max(pinned.fit.loglik - prof.fit.loglik);
            }
        }
        let ols = lik.ols().expect("ols");
        let s = split(&ols.coeffs, 1).expect("split of OLS");
        let fit = lik.restricted(&s.a, &s.lambda_lu).expect("restricted");
        let coef = (fit.coeffs.stacked() - ols.coeffs.stacked()).amax();
        ols_gap = ols_gap.max(coef).max((fit.loglik - ols.loglik).abs());
    }
    let pass = rrr_gap <= 1e-6 && ols_gap <= 1e-8 && nesting_violation <= 1e-8;
    Outcome::new(
        pass,
        format!(
            "20 datasets; rrr vs profile {rrr_gap:.1e} (tol 1e-6); non-binding vs OLS {ols_gap:.1e} (tol 1e-8); worst nesting excess {nesting_violation:.1e} (tol 1e-8)"
        ),
    )
}
