//! Property tests of the representation, design and likelihood invariants on
//! randomly constructed VARs.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;
use qcvar::dgp::{build_var, simulate, DgpSpec, StationarySeed};
use qcvar::likelihood::{DeterministicCase, FixedEntry, ProfileOptions, VarLikelihood};
use qcvar::linalg::{max_abs, mat_pow};
use qcvar::representation::{irf, qcs_basis, state_decompose};
use qcvar::schur::RealSchur;
use qcvar::spectral::{companion, defining_residual, normalize_lu_basis, reconstruct, roots, split, RegionSpec};
use qcvar::{LambdaParam, SpectralSplit, VarCoefficients};

#[derive(Debug, Clone)]
struct Design {
    a: DMatrix<f64>,
    lambda: DMatrix<f64>,
    k: usize,
    seed: u64,
    radius: f64,
}

fn design() -> impl Strategy<Value = Design> {
    (2usize..=4, 1usize..=2)
        .prop_flat_map(|(p, k)| (Just(p), Just(k), 1usize..=p))
        .prop_flat_map(|(p, k, q)| {
            (
                prop::collection::vec(-2.0..2.0f64, (p - q) * q),
                prop::collection::vec(0.9..1.0f64, q),
                prop::collection::vec(0.0..std::f64::consts::PI, q * (q - 1) / 2),
                Just(p),
                Just(k),
                Just(q),
                any::<u64>(),
                0.2..0.8f64,
            )
        })
        .prop_map(|(a, eig, angles, p, k, q, seed, radius)| Design {
            a: DMatrix::from_vec(p - q, q, a),
            lambda: LambdaParam::symmetric(&eig, &angles).matrix(),
            k,
            seed,
            radius,
        })
}

fn realize(d: &Design) -> Option<(VarCoefficients, SpectralSplit)> {
    let coeffs = build_var(&d.a, &d.lambda, &StationarySeed::Random { seed: d.seed, radius: d.radius }, d.k).ok()?;
    let s = split(&coeffs, d.lambda.nrows()).ok()?;
    Some((coeffs, s))
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

fn nearest_pairing_error(a: &[Complex64], b: &[Complex64]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut worst = 0.0_f64;
    for z in a {
        let (j, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (z - w).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("equal lengths");
        used[j] = true;
        worst = worst.max(d);
    }
    worst
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn split_invariants(d in design()) {
        let Some((coeffs, s)) = realize(&d) else { return Ok(()) };
        let f = companion(&coeffs);
        prop_assert!((&f - reconstruct(&s)).norm() <= 1e-8 * f.norm());
        let scale = 1.0 + max_abs(&s.r_lu) * max_abs(&mat_pow(&s.lambda_lu, s.k));
        prop_assert!(max_abs(&defining_residual(&coeffs, &s.r_lu, &s.lambda_lu)) <= 1e-8 * scale);
        let kp = s.kp();
        prop_assert!(max_abs(&(s.big_l.transpose() * &s.big_r - DMatrix::identity(kp, kp))) <= 1e-8);
        let block = RealSchur::new(&s.lambda()).unwrap().eigenvalues();
        let rs = roots(&coeffs).unwrap();
        prop_assert!(nearest_pairing_error(&rs.roots, &block) <= 1e-8);
    }

    #[test]
    fn construction_round_trip(d in design()) {
        let Some((_, s)) = realize(&d) else { return Ok(()) };
        prop_assert!(max_abs(&(&s.a - &d.a)) <= 1e-8 * (1.0 + max_abs(&d.a)));
        let want = RealSchur::new(&d.lambda).unwrap().eigenvalues();
        let got = RealSchur::new(&s.lambda_lu).unwrap().eigenvalues();
        prop_assert!(nearest_pairing_error(&want, &got) <= 1e-8);
    }

    #[test]
    fn normalization_ignores_rebasing(d in design(), entries in prop::collection::vec(-1.0..1.0f64, 16)) {
        let Some((_, s)) = realize(&d) else { return Ok(()) };
        let q = s.q;
        let m = DMatrix::from_fn(q, q, |i, j| entries[i * 4 + j] * 0.5) + DMatrix::identity(q, q);
        let Some(m_inv) = m.clone().try_inverse() else { return Ok(()) };
        let basis = s.big_r_lu() * &m;
        let dynamics = &m_inv * &s.lambda_lu * &m;
        let (rebased, lambda, _) = normalize_lu_basis(&basis, &dynamics, s.p).unwrap();
        prop_assert!(max_abs(&(rebased - s.big_r_lu())) <= 1e-8 * (1.0 + max_abs(&s.big_r_lu())));
        prop_assert!(max_abs(&(lambda - &s.lambda_lu)) <= 1e-8);
    }

    #[test]
    fn impulse_responses_match_companion_powers(d in design()) {
        let Some((coeffs, s)) = realize(&d) else { return Ok(()) };
        let f = companion(&coeffs);
        let mut power = DMatrix::identity(s.kp(), s.kp());
        for h in 0..=100 {
            let r = irf(&s, h);
            let oracle = power.view((0, 0), (s.p, s.p)).clone_owned();
            let scale = 1.0 + max_abs(&r.lu_part).max(max_abs(&r.st_part));
            prop_assert!(max_abs(&(&r.value - &oracle)) <= 1e-8 * scale, "h = {}", h);
            power = &f * power;
        }
    }

    #[test]
    fn qcs_basis_annihilates_near_unit_directions(d in design()) {
        let Some((_, s)) = realize(&d) else { return Ok(()) };
        if s.r() == 0 { return Ok(()) }
        let b = qcs_basis(&s).beta;
        prop_assert!(max_abs(&(b.transpose() * &s.r_lu)) <= 1e-10);
    }

    #[test]
    fn state_identity_holds_along_paths(d in design(), seed in any::<u64>()) {
        let Some((coeffs, s)) = realize(&d) else { return Ok(()) };
        let p = coeffs.p();
        let spec = DgpSpec::new(coeffs, DMatrix::identity(p, p), 200).unwrap();
        let path = simulate(&spec, seed).unwrap();
        let dec = state_decompose(&s, &path.x, &path.eps).unwrap();
        prop_assert!(dec.max_residual() <= 1e-10 * (1.0 + max_abs(&path.x)));
    }

    #[test]
    fn simulation_is_seed_reproducible(d in design(), seed in any::<u64>()) {
        let Some((coeffs, _)) = realize(&d) else { return Ok(()) };
        let p = coeffs.p();
        let spec = DgpSpec::new(coeffs, DMatrix::identity(p, p), 50).unwrap();
        prop_assert_eq!(simulate(&spec, seed).unwrap(), simulate(&spec, seed).unwrap());
    }

    #[test]
    fn symmetric_and_normal_families(eig in prop::collection::vec(0.9..1.0f64, 4), angles in prop::collection::vec(-3.0..3.0f64, 6), a in 0.9..0.99f64, b in 0.0..0.05f64) {
        let sym = LambdaParam::symmetric(&eig, &angles).matrix();
        prop_assert!(max_abs(&(&sym - sym.transpose())) <= 1e-15);
        let nrm = LambdaParam::normal(&eig[..2], &[(a, b)], &angles).matrix();
        prop_assert!(max_abs(&(&nrm * nrm.transpose() - nrm.transpose() * &nrm)) <= 1e-10);
        prop_assert!(LambdaParam::normal(&eig[..2], &[(a, b)], &angles).materialize(&RegionSpec::new(0.9).unwrap()).is_ok());
    }
}

fn simulated(d: &Design, seed: u64, n: usize) -> Option<(DMatrix<f64>, VarCoefficients)> {
    let (coeffs, _) = realize(d)?;
    let p = coeffs.p();
    let spec = DgpSpec::new(coeffs.clone(), DMatrix::identity(p, p), n)
        .ok()?
        .with_deterministics(DVector::from_element(p, 0.5), DVector::from_element(p, 0.01))
        .ok()?;
    Some((simulate(&spec, seed).ok()?.y, coeffs))
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn likelihood_nesting(d in design(), seed in any::<u64>(), shift in -0.5..0.5f64) {
        let Some((y, _)) = simulated(&d, seed, 150) else { return Ok(()) };
        let q = d.lambda.nrows();
        let lik = VarLikelihood::new(&y, d.k, DeterministicCase::Trend).unwrap();
        let ols = lik.ols().unwrap();
        let restricted = lik.restricted(&d.a, &d.lambda).unwrap();
        let tol = 1e-8 * (1.0 + max_abs(lik.ols_coefficients()));
        prop_assert!(restricted.constraint_residual.unwrap() <= tol);
        prop_assert!(ols.loglik >= restricted.loglik - 1e-8);
        let free = lik.profile_a(&d.lambda, &ProfileOptions::default()).unwrap();
        prop_assert!(free.fit.loglik >= restricted.loglik - 1e-6);
        prop_assert!(ols.loglik >= free.fit.loglik - 1e-8);
        if q < lik.p() {
            let pinned = ProfileOptions {
                fixed_entry: Some(FixedEntry { i: 0, j: 0, value: free.a_hat[(0, 0)] + shift }),
                init: Some(free.a_hat.clone()),
                ..ProfileOptions::default()
            };
            let fixed = lik.profile_a(&d.lambda, &pinned).unwrap();
            prop_assert!(free.fit.loglik >= fixed.fit.loglik - 1e-8);
            let lr = lik.lr_coefficient_given(free.a_hat[(0, 0)] + shift, 0, 0, &d.lambda, &free).unwrap();
            prop_assert!(lr.raw >= -1e-8);
        }
    }

    #[test]
    fn deterministic_nesting(d in design(), seed in any::<u64>()) {
        let Some((y, _)) = simulated(&d, seed, 120) else { return Ok(()) };
        let ll = |det| VarLikelihood::new(&y, d.k, det).unwrap().ols_loglik();
        let (t, c, n) = (ll(DeterministicCase::Trend), ll(DeterministicCase::Const), ll(DeterministicCase::None));
        prop_assert!(t >= c - 1e-8 && c >= n - 1e-8);
    }

    #[test]
    fn noise_free_data_recover_truth(d in design()) {
        let Some((coeffs, _)) = realize(&d) else { return Ok(()) };
        let p = coeffs.p();
        let kp = p * d.k;
        // deterministic path from a nonzero start, long enough to excite every mode
        let f = companion(&coeffs);
        let mut state = DVector::from_fn(kp, |i, _| 1.0 + 0.37 * i as f64 + if i % 2 == 0 { 0.5 } else { -0.8 });
        let n = 40 + 2 * kp;
        let mut y = DMatrix::zeros(n, p);
        for t in 0..n {
            y.row_mut(t).copy_from(&state.rows(0, p).transpose());
            state = &f * state;
        }
        if max_abs(&y) > 1e6 { return Ok(()) }
        let lik = VarLikelihood::new(&y, d.k, DeterministicCase::None).unwrap();
        if !lik.is_full_rank() { return Ok(()) }
        let fit = lik.restricted(&d.a, &d.lambda).unwrap();
        let err = max_abs(&(fit.coeffs.stacked() - coeffs.stacked()));
        prop_assert!(err <= 1e-6 * (1.0 + max_abs(&coeffs.stacked())), "err {}", err);
    }
}
