//! Criteria on the spectral representation, computed on random instances.

use nalgebra::DMatrix;
use qcvar::dgp::{build_var, simulate, DgpSpec, StationarySeed};
use qcvar::linalg::{kron, mat_pow};
use qcvar::representation::{decay_profile, irf, jacobians, qcs_basis, state_decompose};
use qcvar::rng::replication_rng;
use qcvar::spectral::{companion, defining_residual, reconstruct, split};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::design::{instances, Instance};
use crate::Outcome;

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

/// Residual of `Σ Φ_i R Λ^{k−i} = R Λ^k` relative to the size of its terms.
fn relative_defining_residual(inst: &Instance) -> (f64, f64) {
    let s = &inst.split;
    let res = max_abs(&defining_residual(&inst.coeffs, &s.r_lu, &s.lambda_lu));
    let k = s.k;
    let scale = inst
        .coeffs
        .phi()
        .iter()
        .enumerate()
        .map(|(i, phi)| max_abs(phi) * max_abs(&(&s.r_lu * mat_pow(&s.lambda_lu, k - i - 1))) * s.p as f64)
        .fold(max_abs(&(&s.r_lu * mat_pow(&s.lambda_lu, k))), f64::max)
        .max(1.0);
    (res, res / scale)
}

pub fn representation_suite() -> Outcome {
    let insts = instances(1000, 0);
    let mut round = 0.0_f64;
    let (mut defining_abs, mut defining) = (0.0_f64, 0.0_f64);
    let mut biorth = 0.0_f64;
    let (mut impulse_abs, mut impulse) = (0.0_f64, 0.0_f64);
    let mut parts = 0.0_f64;
    for inst in &insts {
        let s = &inst.split;
        let f = companion(&inst.coeffs);
        round = round.max((&f - reconstruct(s)).norm() / f.norm());
        let (abs, rel) = relative_defining_residual(inst);
        defining_abs = defining_abs.max(abs);
        defining = defining.max(rel);
        let kp = s.kp();
        biorth = biorth.max(max_abs(&(s.big_l.transpose() * &s.big_r - DMatrix::identity(kp, kp))));
        let mut power = DMatrix::identity(kp, kp);
        for h in 0..=100 {
            let oracle = power.view((0, 0), (s.p, s.p)).clone_owned();
            let got = irf(s, h);
            let err = max_abs(&(&got.value - &oracle));
            // the two parts can be much larger than their sum
            let scale = [1.0, max_abs(&oracle), max_abs(&got.lu_part), max_abs(&got.st_part)].into_iter().fold(0.0, f64::max);
            impulse_abs = impulse_abs.max(err);
            impulse = impulse.max(err / scale);
            parts = parts.max(max_abs(&(&got.lu_part + &got.st_part - &got.value)) / scale);
            power = &f * power;
        }
    }
    let tol = 1e-8;
    let pass = insts.len() == 1000 && round <= tol && defining <= tol && biorth <= tol && impulse <= tol && parts <= tol;
    Outcome::new(
        pass,
        format!(
            "{} instances, all relative to term size (tol {tol:.0e}): round trip {round:.1e}; defining residual {defining:.1e} (absolute {defining_abs:.1e}); L'R - I {biorth:.1e}; IRF vs F^s {impulse:.1e} (absolute {impulse_abs:.1e}); lu+st split {parts:.1e}",
            insts.len()
        ),
    )
}

pub fn qcs_orthogonality() -> Outcome {
    let insts = instances(1000, 0);
    let mut ortho = 0.0_f64;
    let mut worst_ratio = 0.0_f64;
    let mut checked = 0;
    for inst in &insts {
        let s = &inst.split;
        let beta = qcs_basis(s).beta;
        ortho = ortho.max(max_abs(&(beta.transpose() * &s.r_lu)));
        if inst.gap < 0.2 || s.r() == 0 {
            continue;
        }
        let lu_dir: Vec<f64> = s.r_lu.column(0).iter().copied().collect();
        let reference = decay_profile(s, &lu_dir, 200).expect("decay profile")[199];
        for i in 0..s.r() {
            let b: Vec<f64> = beta.column(i).iter().copied().collect();
            let v = decay_profile(s, &b, 200).expect("decay profile")[199];
            worst_ratio = worst_ratio.max(v / reference);
        }
        checked += 1;
    }
    let pass = ortho <= 1e-10 && worst_ratio < 1e-4 && checked > 0;
    Outcome::new(
        pass,
        format!(
            "max |beta' R_lu| {ortho:.1e} (tol 1e-10); decay ratio at s=200 {worst_ratio:.1e} on {checked} gap>=0.2 instances (tol 1e-4)"
        ),
    )
}

/// Condition proxy for the split: `‖𝐋‖‖𝐑‖`.
fn well_conditioned(inst: &Instance) -> bool {
    inst.gap >= 0.05 && inst.split.big_l.norm() * inst.split.big_r.norm() <= 1e3
}

fn a_and_lambda(stacked: &DMatrix<f64>, k: usize, q: usize) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    let c = qcvar::VarCoefficients::from_stacked(stacked, k).ok()?;
    let s = split(&c, q).ok()?;
    Some((s.a, s.lambda_lu))
}

fn stack_vec(a: &DMatrix<f64>, l: &DMatrix<f64>) -> Vec<f64> {
    a.iter().chain(l.iter()).copied().collect()
}

/// Ridders' extrapolated central differences of a vector function along a
/// scalar step; returns the estimate and its error estimate.
fn ridders(f: impl Fn(f64) -> Option<Vec<f64>>, h0: f64) -> Option<(Vec<f64>, f64)> {
    const CON: f64 = 1.4;
    const NTAB: usize = 12;
    let central = |h: f64| -> Option<Vec<f64>> {
        let (p, m) = (f(h)?, f(-h)?);
        Some(p.iter().zip(&m).map(|(x, y)| (x - y) / (2.0 * h)).collect())
    };
    let dist = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()));
    let mut tab: Vec<Vec<Vec<f64>>> = vec![vec![Vec::new(); NTAB]; NTAB];
    let mut h = h0;
    tab[0][0] = central(h)?;
    let mut best = (tab[0][0].clone(), f64::INFINITY);
    for i in 1..NTAB {
        h /= CON;
        tab[0][i] = central(h)?;
        let mut fac = CON * CON;
        for j in 1..=i {
            tab[j][i] = tab[j - 1][i].iter().zip(&tab[j - 1][i - 1]).map(|(x, y)| (x * fac - y) / (fac - 1.0)).collect();
            fac *= CON * CON;
            let err = dist(&tab[j][i], &tab[j - 1][i]).max(dist(&tab[j][i], &tab[j - 1][i - 1]));
            if err <= best.1 {
                best = (tab[j][i].clone(), err);
            }
        }
        if dist(&tab[i][i], &tab[i - 1][i - 1]) >= 2.0 * best.1 {
            break;
        }
    }
    Some(best)
}

fn jacobians_fd() -> (usize, f64, f64) {
    let insts: Vec<Instance> = (10_000u64..).filter_map(crate::design::random_instance).filter(well_conditioned).take(100).collect();
    let mut fd_err = 0.0_f64;
    let mut inv_err = 0.0_f64;
    for (n, inst) in insts.iter().enumerate() {
        let s = &inst.split;
        let (p, k, q) = (s.p, s.k, s.q);
        let j = jacobians(s).expect("jacobians").stacked();
        let phi = inst.coeffs.stacked();
        let r_lu = s.big_r_lu();
        for a in 0..p {
            for b in 0..p * k {
                let mut e = DMatrix::zeros(p, p * k);
                e[(a, b)] = 1.0;
                let along = |h: f64| a_and_lambda(&(&phi + &e * h), k, q).map(|(a, l)| stack_vec(&a, &l));
                let Some((fd, _)) = ridders(along, 1e-3) else {
                    fd_err = f64::INFINITY;
                    continue;
                };
                let de = &e * &r_lu;
                let pred = &j * nalgebra::DVector::from_column_slice(de.as_slice());
                for (x, y) in fd.iter().zip(pred.iter()) {
                    fd_err = fd_err.max((x - y).abs());
                }
            }
        }
        // perturbations that annihilate 𝐑_lu leave (A, Λ_lu) unchanged
        let mut rng = replication_rng(77, n as u64);
        let m = DMatrix::from_fn(p, p * k - q, |_, _| rng.sample::<f64, _>(StandardNormal) * 1e-3);
        let moved = &phi + m * s.big_l_st().transpose();
        match a_and_lambda(&moved, k, q) {
            Some((a2, l2)) => inv_err = inv_err.max(max_abs(&(&a2 - &s.a)).max(max_abs(&(&l2 - &s.lambda_lu)))),
            None => inv_err = f64::INFINITY,
        }
    }
    (insts.len(), fd_err, inv_err)
}

/// Largest deviation from the closed form at `Λ_lu = I` over instances built
/// with an exact unit block.
fn unit_block_closed_form() -> (usize, f64) {
    let mut worst = 0.0_f64;
    let mut count = 0;
    for seed in 0..200u64 {
        let mut rng = replication_rng(seed, 5);
        let p = rng.random_range(2..=4);
        let k = rng.random_range(1..=3);
        let q = rng.random_range(1..p);
        let a = DMatrix::from_fn(p - q, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let Ok(coeffs) = build_var(&a, &DMatrix::identity(q, q), &StationarySeed::Random { seed, radius: 0.7 }, k) else { continue };
        let Ok(s) = split(&coeffs, q) else { continue };
        let j = jacobians(&s).expect("jacobians");
        let iq = DMatrix::<f64>::identity(q, q);
        let beta_t = qcs_basis(&s).beta.transpose();
        let ist = DMatrix::<f64>::identity(s.kp() - q, s.kp() - q);
        let core = beta_t * &s.r_st * (ist - &s.lambda_st).try_inverse().expect("I - Lambda_st invertible") * s.l_st.transpose();
        let ja = kron(&iq, &core);
        let jl = kron(&iq, &s.l_lu.transpose());
        worst = worst.max(max_abs(&(&j.j_a - ja))).max(max_abs(&(&j.j_lambda - jl)));
        count += 1;
        if count == 100 {
            break;
        }
    }
    (count, worst)
}

pub fn perturbation_jacobians() -> Outcome {
    let (n, fd, inv) = jacobians_fd();
    let (m, closed) = unit_block_closed_form();
    let pass = n == 100 && fd <= 1e-5 && inv <= 1e-8 && m == 100 && closed <= 1e-10;
    Outcome::new(
        pass,
        format!(
            "finite differences {fd:.1e} over {n} instances (tol 1e-5); invariance under M L_st' {inv:.1e} (tol 1e-8); unit-block closed form {closed:.1e} over {m} instances (tol 1e-10)"
        ),
    )
}

pub fn state_decomposition() -> Outcome {
    let mut worst = 0.0_f64;
    let mut runs = 0;
    for seed in 0..50u64 {
        let mut rng = replication_rng(seed, 9);
        let p = rng.random_range(2..=4);
        let k = rng.random_range(1..=3);
        let q = rng.random_range(1..p);
        let n = 500;
        let a = DMatrix::from_fn(p - q, q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let lam = DMatrix::identity(q, q) * (1.0 - 5.0 / n as f64);
        let coeffs = build_var(&a, &lam, &StationarySeed::Random { seed, radius: 0.8 }, k).expect("design");
        let sigma = DMatrix::identity(p, p);
        let path = simulate(&DgpSpec::new(coeffs.clone(), sigma, n).expect("spec"), seed).expect("path");
        let s = split(&coeffs, q).expect("split");
        let d = state_decompose(&s, &path.x, &path.eps).expect("decomposition");
        worst = worst.max(d.max_residual() / (1.0 + max_abs(&path.x)));
        runs += 1;
    }
    Outcome::new(worst <= 1e-10, format!("{runs} paths of length 500; max residual / (1 + |x|_inf) = {worst:.1e} (tol 1e-10)"))
}
