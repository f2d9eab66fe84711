//! Instance generators shared by the criteria.

use nalgebra::{DMatrix, DVector};
use qcvar::dgp::{build_var, DgpSpec, StationaryPart, StationarySeed};
use qcvar::rng::replication_rng;
use qcvar::spectral::{roots, split, SpectralSplit};
use qcvar::VarCoefficients;
use rand::Rng;
use rand_distr::StandardNormal;

pub struct Instance {
    pub coeffs: VarCoefficients,
    pub split: SpectralSplit,
    /// Modulus gap between the q-th and (q+1)-th roots.
    pub gap: f64,
}

/// Random VAR with spectral radius in `[0.85, 1]` and a random `q ≤ p`;
/// `None` when the draw fails separation or normalization.
pub fn random_instance(seed: u64) -> Option<Instance> {
    let mut rng = replication_rng(seed, 0);
    let p = rng.random_range(2..=4);
    let k = rng.random_range(1..=3);
    let q = rng.random_range(1..=p);
    let scale = 1.0 / ((p * k) as f64).sqrt();
    let phi: Vec<DMatrix<f64>> =
        (0..k).map(|_| DMatrix::from_fn(p, p, |_, _| rng.sample::<f64, _>(StandardNormal) * scale)).collect();
    let raw = VarCoefficients::new(phi.clone()).ok()?;
    let radius = roots(&raw).ok()?.moduli()[0];
    let c = rng.random_range(0.85..1.0) / radius;
    let scaled: Vec<DMatrix<f64>> = phi.iter().enumerate().map(|(i, m)| m * c.powi(i as i32 + 1)).collect();
    let coeffs = VarCoefficients::new(scaled).ok()?;
    let moduli = roots(&coeffs).ok()?.moduli();
    let split = split(&coeffs, q).ok()?;
    let gap = if q < moduli.len() { moduli[q - 1] - moduli[q] } else { moduli[q - 1] };
    Some(Instance { coeffs, split, gap })
}

/// The first `count` seeds (from `start`) that pass separation.
pub fn instances(count: usize, start: u64) -> Vec<Instance> {
    (start..).filter_map(random_instance).take(count).collect()
}

pub const N: usize = 500;
pub const C: f64 = -5.0;
pub const LAMBDA: f64 = 1.0 + C / N as f64;

/// Bivariate VAR(1) with one local-to-unity root and `A = 1`:
/// `Φ₁ = [[0.5, λ − 0.5], [0, λ]]`.
pub fn local_design() -> DgpSpec {
    let st = StationaryPart { r_st: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), lambda_st: DMatrix::from_element(1, 1, 0.5) };
    let coeffs = build_var(&DMatrix::from_element(1, 1, 1.0), &DMatrix::from_element(1, 1, LAMBDA), &StationarySeed::Explicit(st), 1)
        .expect("design coefficients");
    let sigma = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
    DgpSpec::new(coeffs, sigma, N)
        .and_then(|s| s.with_deterministics(DVector::from_vec(vec![1.0, -2.0]), DVector::from_vec(vec![0.05, 0.02])))
        .expect("design spec")
}
