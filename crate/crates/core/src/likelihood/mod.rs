//! Concentrated Gaussian likelihood of a VAR with deterministic terms, the
//! unrestricted fit, fits restricted to a near-unit block `(A, Λ₀)`, the
//! reduced-rank special case and profiling over `Λ₀`.
//!
//! Deterministic regressors are partialled out once. Every fit keeps the
//! unrestricted covariance `Σ̂` fixed, so a restricted fit differs from OLS by
//! the quadratic `½ tr(Σ̂⁻¹ ΔΦ M ΔΦᵀ)` with `M` the lag moment matrix.

mod profile;
mod restricted;
mod rrr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::linalg::{all_finite, cholesky_lower};
use crate::spectral::{SpectralSplit, VarCoefficients};
use crate::{Error, Result};

pub use profile::{profile_lambda, GridPoint, LambdaProfile, LambdaSpace};
pub use restricted::{profile_a, restricted_fit, FixedEntry, ProfileFit, ProfileOptions};
pub use rrr::rrr_fit;

/// Deterministic terms concentrated out of the likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeterministicCase {
    /// Unrestricted intercept and linear trend.
    Trend,
    /// Unrestricted intercept.
    Const,
    None,
}

impl DeterministicCase {
    pub fn n_terms(self) -> usize {
        match self {
            Self::Trend => 2,
            Self::Const => 1,
            Self::None => 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Trend => "trend",
            Self::Const => "const",
            Self::None => "none",
        }
    }
}

impl std::str::FromStr for DeterministicCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trend" => Ok(Self::Trend),
            "const" => Ok(Self::Const),
            "none" => Ok(Self::None),
            other => Err(Error::InvalidInput(format!("unknown deterministic case '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitStatus {
    Converged,
    MaxIter,
    ConstraintInfeasible,
    /// Lag regressors are collinear after removing deterministic terms; the
    /// minimum-norm least-squares solution is reported.
    RankDeficient,
}

/// `y_t = m + d t + Σ Φ_i y_{t−i} + u_t`, with `t` counted from the first row
/// of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeterministicCoefficients {
    pub intercept: Option<DVector<f64>>,
    pub trend: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub coeffs: VarCoefficients,
    pub sigma_hat: DMatrix<f64>,
    pub det_coeffs: DeterministicCoefficients,
    pub loglik: f64,
    pub status: FitStatus,
    pub constraint_residual: Option<f64>,
    pub split: Option<SpectralSplit>,
    /// `A` imposed or estimated, when the fit involves a near-unit block.
    pub a: Option<DMatrix<f64>>,
    pub lambda0: Option<DMatrix<f64>>,
    pub n_eff: usize,
}

/// Sample moments shared by every fit on one data set.
#[derive(Debug, Clone)]
pub struct VarLikelihood {
    p: usize,
    k: usize,
    det: DeterministicCase,
    n: usize,
    /// Partialled `y_t`.
    y0: DMatrix<f64>,
    /// Partialled `(y_{t−1}', …, y_{t−k}')`.
    y1: DMatrix<f64>,
    gamma0: DMatrix<f64>,
    gamma1: DMatrix<f64>,
    rank: usize,
    /// `V S⁻¹` from the thin SVD `y1 = U S Vᵀ`, so `M⁻¹ = (V S⁻¹)(V S⁻¹)ᵀ`.
    vs_inv: DMatrix<f64>,
    phi_ols: DMatrix<f64>,
    sigma: DMatrix<f64>,
    sigma_chol: Option<DMatrix<f64>>,
    loglik_ols: f64,
}

const RANK_TOL: f64 = 1e-10;

impl VarLikelihood {
    /// `data` holds periods in rows and series in columns.
    pub fn new(data: &DMatrix<f64>, k: usize, det: DeterministicCase) -> Result<Self> {
        let (n_obs, p) = data.shape();
        if k == 0 || p == 0 {
            return Err(Error::InvalidInput("k and p must be positive".into()));
        }
        if !all_finite(data) {
            return Err(Error::InvalidInput("data contain non-finite values".into()));
        }
        if n_obs <= k || n_obs - k <= k * p + p + 2 {
            return Err(Error::InvalidInput(format!(
                "{n_obs} observations are too few for p = {p}, k = {k} (need more than {})",
                k * p + p + 2 + k
            )));
        }
        let n = n_obs - k;
        let kp = k * p;
        let y0_raw = data.rows(k, n).clone_owned();
        let mut y1_raw = DMatrix::zeros(n, kp);
        for i in 0..k {
            y1_raw.columns_mut(i * p, p).copy_from(&data.rows(k - i - 1, n));
        }
        let raw_scale = y1_raw.norm();
        let nd = det.n_terms();
        let (y0, y1, gamma0, gamma1) = if nd == 0 {
            (y0_raw, y1_raw, DMatrix::zeros(0, p), DMatrix::zeros(0, kp))
        } else {
            let d = DMatrix::from_fn(n, nd, |t, j| if j == 0 { 1.0 } else { (t + k + 1) as f64 });
            let qr = d.clone().qr();
            let q = qr.q();
            let r = qr.r();
            let g0 = r.solve_upper_triangular(&(q.transpose() * &y0_raw)).ok_or_else(|| {
                Error::SingularDesign("deterministic regressors".into())
            })?;
            let g1 = r.solve_upper_triangular(&(q.transpose() * &y1_raw)).ok_or_else(|| {
                Error::SingularDesign("deterministic regressors".into())
            })?;
            let y0 = &y0_raw - &d * &g0;
            let y1 = &y1_raw - &d * &g1;
            (y0, y1, g0, g1)
        };
        let svd = y1.clone().svd(true, true);
        let (u, vt) = match (svd.u, svd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::SingularDesign("SVD of lag regressors failed".into())),
        };
        let s = &svd.singular_values;
        // cutoff is relative to the regressors before detrending, so a column wiped out by
        // the deterministic terms counts as lost rank
        let cut = RANK_TOL * s.max().max(raw_scale);
        let keep = |x: f64| x > cut && x > 0.0;
        let rank = s.iter().filter(|&&x| keep(x)).count();
        let sinv = s.map(|x| if keep(x) { 1.0 / x } else { 0.0 });
        let vs_inv = vt.transpose() * DMatrix::from_diagonal(&sinv);
        // Φ̂ᵀ = V S⁺ Uᵀ y0
        let phi_ols = (&vs_inv * (u.transpose() * &y0)).transpose();
        let resid = &y0 - &y1 * phi_ols.transpose();
        let sigma = crate::linalg::symmetrize(&(resid.transpose() * &resid / n as f64));
        let sigma_chol = cholesky_lower(&sigma, "sigma_hat").ok();
        let loglik_ols = match &sigma_chol {
            Some(l) => {
                let logdet: f64 = 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
                -0.5 * n as f64 * logdet - 0.5 * (n * p) as f64
            }
            None => f64::INFINITY,
        };
        Ok(Self { p, k, det, n, y0, y1, gamma0, gamma1, rank, vs_inv, phi_ols, sigma, sigma_chol, loglik_ols })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn det(&self) -> DeterministicCase {
        self.det
    }

    /// Effective sample size `N − k`.
    pub fn n_eff(&self) -> usize {
        self.n
    }

    pub fn sigma_hat(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn ols_loglik(&self) -> f64 {
        self.loglik_ols
    }

    pub fn ols_coefficients(&self) -> &DMatrix<f64> {
        &self.phi_ols
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.k * self.p
    }

    pub(crate) fn require_full_rank(&self) -> Result<()> {
        if self.is_full_rank() {
            Ok(())
        } else {
            Err(Error::SingularDesign(format!(
                "lag regressors have rank {} < {} after removing deterministic terms",
                self.rank,
                self.k * self.p
            )))
        }
    }

    pub(crate) fn sigma_chol(&self) -> Result<&DMatrix<f64>> {
        self.sigma_chol
            .as_ref()
            .ok_or_else(|| Error::NotPositiveDefinite("residual covariance is singular".into()))
    }

    pub(crate) fn y0(&self) -> &DMatrix<f64> {
        &self.y0
    }

    pub(crate) fn y1(&self) -> &DMatrix<f64> {
        &self.y1
    }

    pub(crate) fn vs_inv(&self) -> &DMatrix<f64> {
        &self.vs_inv
    }

    /// `m̂, d̂` implied by stacked coefficients `Φ`.
    pub fn det_coefficients(&self, phi: &DMatrix<f64>) -> DeterministicCoefficients {
        let g = &self.gamma0 - &self.gamma1 * phi.transpose();
        match self.det {
            DeterministicCase::None => DeterministicCoefficients { intercept: None, trend: None },
            DeterministicCase::Const => {
                DeterministicCoefficients { intercept: Some(g.row(0).transpose()), trend: None }
            }
            DeterministicCase::Trend => DeterministicCoefficients {
                intercept: Some(g.row(0).transpose()),
                trend: Some(g.row(1).transpose()),
            },
        }
    }

    /// `tr(Σ̂⁻¹ ΔΦ M ΔΦᵀ)` for `ΔΦ = phi − Φ̂`.
    pub(crate) fn excess(&self, phi: &DMatrix<f64>) -> Result<f64> {
        let l = self.sigma_chol()?;
        let d = phi - &self.phi_ols;
        let dy = &self.y1 * d.transpose();
        let z = l.solve_lower_triangular(&dy.transpose()).ok_or_else(|| Error::NotPositiveDefinite("sigma_hat".into()))?;
        Ok(z.norm_squared())
    }

    /// `ℓ*` at arbitrary coefficients.
    pub fn loglik_at(&self, phi: &DMatrix<f64>) -> Result<f64> {
        if self.sigma_chol.is_none() {
            let d = phi - &self.phi_ols;
            let dy = &self.y1 * d.transpose();
            let scale = self.y0.amax().max(1.0);
            return Ok(if dy.amax() <= 1e-10 * scale { f64::INFINITY } else { f64::NEG_INFINITY });
        }
        Ok(self.loglik_ols - 0.5 * self.excess(phi)?)
    }

    pub fn ols(&self) -> Result<FitResult> {
        let coeffs = VarCoefficients::from_stacked(&self.phi_ols, self.k)?;
        Ok(FitResult {
            coeffs,
            sigma_hat: self.sigma.clone(),
            det_coeffs: self.det_coefficients(&self.phi_ols),
            loglik: self.loglik_ols,
            status: if self.is_full_rank() { FitStatus::Converged } else { FitStatus::RankDeficient },
            constraint_residual: None,
            split: None,
            a: None,
            lambda0: None,
            n_eff: self.n,
        })
    }
}

/// Equation-by-equation least squares on `k` lags and the deterministic terms.
pub fn ols_fit(data: &DMatrix<f64>, k: usize, det: DeterministicCase) -> Result<FitResult> {
    VarLikelihood::new(data, k, det)?.ols()
}

/// `−(n/2) log det Σ − ½ Σ_t ‖u_t‖²_{Σ⁻¹}` with the deterministic
/// coefficients concentrated out by least squares.
pub fn concentrated_loglik(
    coeffs: &VarCoefficients,
    sigma: &DMatrix<f64>,
    data: &DMatrix<f64>,
    det: DeterministicCase,
) -> Result<f64> {
    let lik = VarLikelihood::new(data, coeffs.k(), det)?;
    if coeffs.p() != lik.p || sigma.shape() != (lik.p, lik.p) {
        return Err(Error::Dimension("coefficients, sigma and data disagree on p".into()));
    }
    let l = cholesky_lower(sigma, "sigma")?;
    let u = lik.y0() - lik.y1() * coeffs.stacked().transpose();
    let z = l
        .solve_lower_triangular(&u.transpose())
        .ok_or_else(|| Error::NotPositiveDefinite("sigma".into()))?;
    let logdet: f64 = 2.0 * l.diagonal().iter().map(|x| x.ln()).sum::<f64>();
    Ok(-0.5 * lik.n as f64 * logdet - 0.5 * z.norm_squared())
}
