//! Fits subject to `Φ 𝐑_lu = [A; I_q] Λ₀ᵏ` and the outer search over `A`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{DeterministicCase, FitResult, FitStatus, VarLikelihood};
use crate::linalg::{cholesky_lower, mat_pow};
use crate::optim::{nelder_mead, NelderMeadOptions};
use crate::spectral::{split, stack_basis, VarCoefficients};
use crate::{Error, Result};

/// Pins `A[i, j]` (zero-based) at `value`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedEntry {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileOptions {
    pub init: Option<DMatrix<f64>>,
    pub fixed_entry: Option<FixedEntry>,
    pub nm: NelderMeadOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { init: None, fixed_entry: None, nm: NelderMeadOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileFit {
    pub fit: FitResult,
    pub a_hat: DMatrix<f64>,
    pub evals: usize,
    pub restarts: usize,
}

fn r_lu(a: &DMatrix<f64>) -> DMatrix<f64> {
    let (r, q) = a.shape();
    let mut out = DMatrix::zeros(r + q, q);
    out.rows_mut(0, r).copy_from(a);
    out.rows_mut(r, q).fill_with_identity();
    out
}

impl VarLikelihood {
    fn check_block(&self, a: &DMatrix<f64>, lambda0: &DMatrix<f64>) -> Result<usize> {
        let q = lambda0.nrows();
        if lambda0.ncols() != q || q > self.p || a.shape() != (self.p - q, q) {
            return Err(Error::Dimension(format!(
                "A is {:?} and Lambda0 is {:?} for p = {}",
                a.shape(),
                lambda0.shape(),
                self.p
            )));
        }
        Ok(q)
    }

    /// `(𝐑_lu, [A; I] Λ₀ᵏ)` for the linear constraint.
    fn constraint(&self, a: &DMatrix<f64>, lambda0: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let r = r_lu(a);
        let big = stack_basis(&r, lambda0, self.k);
        let h = &r * mat_pow(lambda0, self.k);
        (big, h)
    }

    /// `2(ℓ_OLS − ℓ*)` at the best coefficients satisfying the constraint.
    pub fn restricted_penalty(&self, a: &DMatrix<f64>, lambda0: &DMatrix<f64>) -> Result<f64> {
        let q = self.check_block(a, lambda0)?;
        if q == 0 {
            return Ok(0.0);
        }
        self.require_full_rank()?;
        let (big, h) = self.constraint(a, lambda0);
        let g = h - &self.phi_ols * &big;
        let w = self.vs_inv().transpose() * &big;
        let lk = cholesky_lower(&(w.transpose() * &w), "constraint moment")
            .map_err(|_| Error::SingularDesign("restricted design is singular".into()))?;
        let gs = self
            .sigma_chol()?
            .solve_lower_triangular(&g)
            .ok_or_else(|| Error::NotPositiveDefinite("sigma_hat".into()))?;
        let x = lk
            .solve_lower_triangular(&gs.transpose())
            .ok_or_else(|| Error::SingularDesign("restricted design is singular".into()))?;
        Ok(x.norm_squared())
    }

    /// Closed-form maximizer of `ℓ*` under the constraint.
    pub fn restricted(&self, a: &DMatrix<f64>, lambda0: &DMatrix<f64>) -> Result<FitResult> {
        let q = self.check_block(a, lambda0)?;
        if q == 0 {
            return self.ols();
        }
        self.require_full_rank()?;
        let (big, h) = self.constraint(a, lambda0);
        let g = &h - &self.phi_ols * &big;
        let w = self.vs_inv().transpose() * &big;
        let k_mat = w.transpose() * &w;
        let minv_r = self.vs_inv() * &w;
        let kinv_rt = crate::linalg::solve(&k_mat, &minv_r.transpose(), "restricted design")?;
        let phi = &self.phi_ols + &g * kinv_rt;
        let residual = (&phi * &big - &h).norm();
        let tol = 1e-8 * (1.0 + self.phi_ols.norm());
        let coeffs = VarCoefficients::from_stacked(&phi, self.k)?;
        let loglik = self.loglik_at(&phi)?;
        Ok(FitResult {
            split: split(&coeffs, q).ok(),
            coeffs,
            sigma_hat: self.sigma.clone(),
            det_coeffs: self.det_coefficients(&phi),
            loglik,
            status: if residual <= tol { FitStatus::Converged } else { FitStatus::ConstraintInfeasible },
            constraint_residual: Some(residual),
            a: Some(a.clone()),
            lambda0: Some(lambda0.clone()),
            n_eff: self.n,
        })
    }

    /// Starting values for the search over `A`: the unrestricted split and
    /// the reduced-rank estimate at the average near-unit eigenvalue.
    fn a_candidates(&self, lambda0: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
        let q = lambda0.nrows();
        let mut out = Vec::new();
        if let Ok(c) = VarCoefficients::from_stacked(&self.phi_ols, self.k) {
            if let Ok(s) = split(&c, q) {
                out.push(s.a);
            }
        }
        let lam = lambda0.trace() / q as f64;
        if let Ok(a) = self.rrr_a(lam, q) {
            out.push(a);
        }
        out
    }

    /// Maximizes `A ↦ ℓ*(A, Λ₀)` by simplex search.
    pub fn profile_a(&self, lambda0: &DMatrix<f64>, opts: &ProfileOptions) -> Result<ProfileFit> {
        let q = lambda0.nrows();
        if lambda0.ncols() != q || q > self.p {
            return Err(Error::Dimension(format!("Lambda0 is {:?} for p = {}", lambda0.shape(), self.p)));
        }
        let r = self.p - q;
        if let Some(fe) = opts.fixed_entry {
            if fe.i >= r || fe.j >= q {
                return Err(Error::InvalidInput(format!("entry ({}, {}) outside the {r}x{q} matrix A", fe.i, fe.j)));
            }
        }
        if r * q == 0 {
            let a = DMatrix::zeros(r, q);
            let fit = self.restricted(&a, lambda0)?;
            return Ok(ProfileFit { fit, a_hat: a, evals: 0, restarts: 0 });
        }
        self.require_full_rank()?;
        self.sigma_chol()?;
        let pin = |mut a: DMatrix<f64>| {
            if let Some(fe) = opts.fixed_entry {
                a[(fe.i, fe.j)] = fe.value;
            }
            a
        };
        let candidates = match &opts.init {
            Some(a) => {
                if a.shape() != (r, q) {
                    return Err(Error::Dimension(format!("initial A is {:?}, expected ({r}, {q})", a.shape())));
                }
                vec![a.clone()]
            }
            None => self.a_candidates(lambda0),
        };
        let start = candidates
            .into_iter()
            .map(pin)
            .filter_map(|a| self.restricted_penalty(&a, lambda0).ok().map(|f| (a, f)))
            .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
            .map(|(a, _)| a)
            .unwrap_or_else(|| pin(DMatrix::zeros(r, q)));
        let fixed_idx = opts.fixed_entry.map(|fe| fe.j * r + fe.i);
        let free: Vec<usize> = (0..r * q).filter(|&i| Some(i) != fixed_idx).collect();
        let x0: Vec<f64> = free.iter().map(|&i| start.as_slice()[i]).collect();
        let assemble = |x: &[f64]| {
            let mut a = start.clone();
            for (&i, &v) in free.iter().zip(x) {
                a.as_mut_slice()[i] = v;
            }
            a
        };
        let m = nelder_mead(
            |x| self.restricted_penalty(&assemble(x), lambda0).unwrap_or(f64::INFINITY),
            &x0,
            &opts.nm,
        );
        let a_hat = assemble(&m.x);
        let mut fit = self.restricted(&a_hat, lambda0)?;
        if !m.converged && fit.status == FitStatus::Converged {
            fit.status = FitStatus::MaxIter;
        }
        Ok(ProfileFit { fit, a_hat, evals: m.evals, restarts: m.restarts })
    }
}

/// Maximizes `ℓ*` subject to `Φ 𝐑_lu(A, Λ₀) = [A; I_q] Λ₀ᵏ`.
pub fn restricted_fit(
    a: &DMatrix<f64>,
    lambda0: &DMatrix<f64>,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
) -> Result<FitResult> {
    VarLikelihood::new(data, k, det)?.restricted(a, lambda0)
}

/// Profile maximization over `A` at fixed `Λ₀`.
pub fn profile_a(
    lambda0: &DMatrix<f64>,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
    opts: &ProfileOptions,
) -> Result<ProfileFit> {
    VarLikelihood::new(data, k, det)?.profile_a(lambda0, opts)
}
