//! Designs with prescribed `(A, Λ_lu)`, local-to-unity sequences and
//! path simulation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::linalg::{cholesky_lower, inverse, solve};
use crate::rng::replication_rng;
use crate::schur::RealSchur;
use crate::spectral::{companion, roots, stack_basis, VarCoefficients};
use crate::{Error, Result};

/// Modulus margin between the smallest near-unit root and the largest
/// stable root of a constructed design.
pub const ROOT_GAP: f64 = 1e-3;
/// Redraw budget for randomly seeded constructions.
pub const MAX_DRAWS: u64 = 500;

/// Stable block `(R_st, Λ_st)` of a design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryPart {
    pub r_st: DMatrix<f64>,
    pub lambda_st: DMatrix<f64>,
}

/// Source of the stable part of a constructed VAR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum StationarySeed {
    /// Exact similarity construction `F = 𝐑 Λ 𝐑⁻¹`.
    Explicit(StationaryPart),
    /// Random stable base, minimally corrected to satisfy the near-unit
    /// constraint. `radius` scales the base's spectral radius relative to the
    /// smallest near-unit modulus.
    Random { seed: u64, radius: f64 },
}

fn moduli(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    Ok(RealSchur::new(m)?.eigenvalues().iter().map(|z| z.norm()).collect())
}

/// Returns coefficients whose companion matrix has `Λ_lu` acting on the
/// subspace spanned by `col{[A; I_q] Λ_lu^{k−i}}`.
pub fn build_var(a: &DMatrix<f64>, lambda_lu: &DMatrix<f64>, seed: &StationarySeed, k: usize) -> Result<VarCoefficients> {
    let q = lambda_lu.nrows();
    if lambda_lu.ncols() != q || a.ncols() != q || q == 0 {
        return Err(Error::Dimension(format!(
            "A is {}x{}, Lambda_lu is {}x{}",
            a.nrows(),
            a.ncols(),
            lambda_lu.nrows(),
            lambda_lu.ncols()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let p = a.nrows() + q;
    let lu_mod = moduli(lambda_lu)?;
    if lu_mod.iter().any(|&m| m > 1.0 + 1e-12) {
        return Err(Error::Domain(format!("Lambda_lu has eigenvalue moduli {lu_mod:?} above one")));
    }
    let floor = lu_mod.iter().cloned().fold(f64::INFINITY, f64::min) - ROOT_GAP;
    let mut r_lu = DMatrix::zeros(p, q);
    r_lu.rows_mut(0, p - q).copy_from(a);
    r_lu.rows_mut(p - q, q).fill_with_identity();
    let big_r_lu = stack_basis(&r_lu, lambda_lu, k);
    let target = &r_lu * crate::linalg::mat_pow(lambda_lu, k);
    match seed {
        StationarySeed::Explicit(st) => {
            let m = p * k - q;
            if st.r_st.shape() != (p, m) || st.lambda_st.shape() != (m, m) {
                return Err(Error::Dimension(format!(
                    "stationary part must be {p}x{m} and {m}x{m}, got {:?} and {:?}",
                    st.r_st.shape(),
                    st.lambda_st.shape()
                )));
            }
            let st_mod = moduli(&st.lambda_st)?;
            if let Some(&bad) = st_mod.iter().find(|&&x| x >= floor) {
                return Err(Error::Construction(format!(
                    "stable root modulus {bad:.6} is not below {floor:.6} (near-unit minimum less the gap)"
                )));
            }
            let mut big_r = DMatrix::zeros(p * k, p * k);
            big_r.columns_mut(0, q).copy_from(&big_r_lu);
            big_r.columns_mut(q, m).copy_from(&stack_basis(&st.r_st, &st.lambda_st, k));
            let mut lam = DMatrix::zeros(p * k, p * k);
            lam.view_mut((0, 0), (q, q)).copy_from(lambda_lu);
            lam.view_mut((q, q), (m, m)).copy_from(&st.lambda_st);
            let inv = inverse(&big_r, "stacked basis")
                .map_err(|_| Error::Construction("stacked basis [R_lu, R_st] is singular".into()))?;
            let f = &big_r * lam * inv;
            VarCoefficients::from_stacked(&f.rows(0, p).clone_owned(), k)
        }
        StationarySeed::Random { seed, radius } => {
            let gram = big_r_lu.transpose() * &big_r_lu;
            let proj = solve(&gram, &big_r_lu.transpose(), "constraint gram")?;
            let mut last = Vec::new();
            for attempt in 0..MAX_DRAWS {
                let mut rng = replication_rng(*seed, attempt);
                let base = random_stable(p, k, radius * (floor + ROOT_GAP), &mut rng)?;
                let phi = &base + (&target - &base * &big_r_lu) * &proj;
                let coeffs = VarCoefficients::from_stacked(&phi, k)?;
                let rs = roots(&coeffs)?;
                let next = rs.roots.get(q).map(|z| z.norm()).unwrap_or(0.0);
                if next < floor {
                    return Ok(coeffs);
                }
                last = rs.moduli();
            }
            Err(Error::Construction(format!(
                "no admissible draw in {MAX_DRAWS} attempts; last root moduli {last:?} (need roots beyond the first {q} below {floor:.6})"
            )))
        }
    }
}

/// Gaussian `[Φ_1 … Φ_k]` rescaled so its companion spectral radius is `target`.
fn random_stable<R: Rng + ?Sized>(p: usize, k: usize, target: f64, rng: &mut R) -> Result<DMatrix<f64>> {
    let scale = 1.0 / (p as f64).sqrt();
    let mut phi = DMatrix::from_fn(p, p * k, |_, _| scale * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng));
    let c = VarCoefficients::from_stacked(&phi, k)?;
    let radius = moduli(&companion(&c))?.into_iter().fold(0.0, f64::max);
    if radius > 0.0 {
        let shrink = target / radius;
        for i in 0..k {
            phi.columns_mut(i * p, p).scale_mut(shrink.powi(i as i32 + 1));
        }
    }
    Ok(phi)
}

/// Fixed pieces of a local-to-unity design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalBase {
    pub a: DMatrix<f64>,
    pub stationary: StationaryPart,
    pub k: usize,
}

/// Member `n` of the sequence with `Λ_lu = I + C/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalSequence {
    pub c: DMatrix<f64>,
    pub base: LocalBase,
    pub n: usize,
    pub lambda_lu: DMatrix<f64>,
    pub realized: VarCoefficients,
}

pub fn local_sequence(c: &DMatrix<f64>, n: usize, base: &LocalBase) -> Result<LocalSequence> {
    let q = c.nrows();
    if c.ncols() != q || n == 0 {
        return Err(Error::InvalidInput(format!("C must be square and n positive (C {:?}, n {n})", c.shape())));
    }
    let lambda_lu = DMatrix::identity(q, q) + c / n as f64;
    let lim = 1.0 + 1.0 / n as f64;
    let m = moduli(&lambda_lu)?;
    if m.iter().any(|&x| x > lim + 1e-12) {
        return Err(Error::Domain(format!("I + C/n has explosive eigenvalue moduli {m:?}")));
    }
    let realized = build_local(&base.a, &lambda_lu, &base.stationary, base.k)?;
    Ok(LocalSequence { c: c.clone(), base: base.clone(), n, lambda_lu, realized })
}

fn build_local(a: &DMatrix<f64>, lambda_lu: &DMatrix<f64>, st: &StationaryPart, k: usize) -> Result<VarCoefficients> {
    let max_mod = moduli(lambda_lu)?.into_iter().fold(0.0, f64::max);
    if max_mod <= 1.0 + 1e-12 {
        return build_var(a, lambda_lu, &StationarySeed::Explicit(st.clone()), k);
    }
    // mildly explosive drift: scale into the unit disc, build, then rescale the roots back
    let s = max_mod;
    let scaled = lambda_lu / s;
    let st_scaled = StationaryPart { r_st: st.r_st.clone(), lambda_st: &st.lambda_st / s };
    let coeffs = build_var(a, &scaled, &StationarySeed::Explicit(st_scaled), k)?;
    let phi: Vec<DMatrix<f64>> = coeffs.phi().iter().enumerate().map(|(i, m)| m * s.powi(i as i32 + 1)).collect();
    VarCoefficients::new(phi)
}

/// Full data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub coeffs: VarCoefficients,
    pub sigma: DMatrix<f64>,
    pub mu: DVector<f64>,
    pub delta: DVector<f64>,
    pub n: usize,
}

impl DgpSpec {
    pub fn new(coeffs: VarCoefficients, sigma: DMatrix<f64>, n: usize) -> Result<Self> {
        let p = coeffs.p();
        let spec = Self { coeffs, sigma, mu: DVector::zeros(p), delta: DVector::zeros(p), n };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_deterministics(mut self, mu: DVector<f64>, delta: DVector<f64>) -> Result<Self> {
        self.mu = mu;
        self.delta = delta;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.coeffs.p();
        if self.sigma.shape() != (p, p) || self.mu.len() != p || self.delta.len() != p {
            return Err(Error::Dimension(format!(
                "sigma {:?}, mu {}, delta {} for p = {p}",
                self.sigma.shape(),
                self.mu.len(),
                self.delta.len()
            )));
        }
        if (&self.sigma - self.sigma.transpose()).amax() > 1e-12 * self.sigma.amax().max(1.0) {
            return Err(Error::NotPositiveDefinite("sigma is not symmetric".into()));
        }
        cholesky_lower(&self.sigma, "sigma")?;
        Ok(())
    }
}

/// Observed path `y`, stochastic component `x` and innovations `ε`, with
/// periods in rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedPath {
    pub y: DMatrix<f64>,
    pub x: DMatrix<f64>,
    pub eps: DMatrix<f64>,
}

/// Gaussian path from the stream `(seed, 0)`.
pub fn simulate(spec: &DgpSpec, seed: u64) -> Result<SimulatedPath> {
    simulate_replication(spec, seed, 0)
}

/// Gaussian path for replication `index` of a batch seeded by `master`.
pub fn simulate_replication(spec: &DgpSpec, master: u64, index: u64) -> Result<SimulatedPath> {
    spec.validate()?;
    let chol = cholesky_lower(&spec.sigma, "sigma")?;
    let p = spec.coeffs.p();
    let mut rng = replication_rng(master, index);
    simulate_with(spec, |_| {
        let z = DVector::from_fn(p, |_, _| <StandardNormal as Distribution<f64>>::sample(&StandardNormal, &mut rng));
        &chol * z
    })
}

/// Path with `ε ≡ 0`, i.e. `y_t = μ + δ t`.
pub fn simulate_noiseless(spec: &DgpSpec) -> Result<SimulatedPath> {
    let p = spec.coeffs.p();
    simulate_with(spec, |_| DVector::zeros(p))
}

/// Path driven by a caller-supplied innovation sampler `t ↦ ε_t` (`t` from 1).
pub fn simulate_with<F: FnMut(usize) -> DVector<f64>>(spec: &DgpSpec, mut draw: F) -> Result<SimulatedPath> {
    let (p, n) = (spec.coeffs.p(), spec.n);
    let mut x = DMatrix::zeros(n, p);
    let mut eps = DMatrix::zeros(n, p);
    let mut y = DMatrix::zeros(n, p);
    for t in 0..n {
        let e = draw(t + 1);
        if e.len() != p {
            return Err(Error::Dimension(format!("sampler returned {} entries, expected {p}", e.len())));
        }
        let mut xt = e.clone();
        for (i, phi) in spec.coeffs.phi().iter().enumerate() {
            if t > i {
                xt += phi * x.row(t - i - 1).transpose();
            }
        }
        x.set_row(t, &xt.transpose());
        eps.set_row(t, &e.transpose());
        let yt = &spec.mu + &spec.delta * (t + 1) as f64 + xt;
        y.set_row(t, &yt.transpose());
    }
    Ok(SimulatedPath { y, x, eps })
}
