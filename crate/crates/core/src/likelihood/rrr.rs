//! Reduced-rank regression for `Λ₀ = λ₀ I_q`.
//!
//! With `Z1 = y_{t−k}` and `Z2 = (y_{t−i} − λ₀^{k−i} y_{t−k})_{i<k}` the VAR
//! reads `y_t − λ₀ᵏ y_{t−k} = Π Z1 + Ψ Z2 + u_t` with `Π = −Φ(λ₀)`, and the
//! constraint is `rank Π ≤ r`. This lag basis stays valid at `λ₀ = 0`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::{DeterministicCase, FitResult, FitStatus, VarLikelihood};
use crate::linalg::{cholesky_lower, solve};
use crate::spectral::{split, VarCoefficients};
use crate::{Error, Result};

fn residualize(y: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    if x.ncols() == 0 {
        return y.clone();
    }
    let q = x.clone().qr().q();
    y - &q * (q.transpose() * y)
}

fn least_squares(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let qr = x.clone().qr();
    let q = qr.q();
    qr.r()
        .solve_upper_triangular(&(q.transpose() * y))
        .ok_or_else(|| Error::SingularDesign("lagged quasi-differences".into()))
}

struct RrrSolution {
    phi: DMatrix<f64>,
    beta: DMatrix<f64>,
}

impl VarLikelihood {
    fn rrr_solve(&self, lambda0: f64, q: usize) -> Result<RrrSolution> {
        let (p, k, n) = (self.p, self.k, self.n as f64);
        if q > p {
            return Err(Error::InvalidInput(format!("q = {q} exceeds p = {p}")));
        }
        self.require_full_rank()?;
        let r = p - q;
        let lk = lambda0.powi(k as i32);
        let y1 = self.y1();
        let z1 = y1.columns((k - 1) * p, p).clone_owned();
        let mut z2 = DMatrix::zeros(self.n, (k - 1) * p);
        for i in 0..k - 1 {
            let w = lambda0.powi((k - i - 1) as i32);
            z2.columns_mut(i * p, p).copy_from(&(y1.columns(i * p, p) - &z1 * w));
        }
        let w0 = self.y0() - &z1 * lk;
        let r0 = residualize(&w0, &z2);
        let r1 = residualize(&z1, &z2);
        let s00 = r0.transpose() * &r0 / n;
        let s01 = r0.transpose() * &r1 / n;
        let s11 = r1.transpose() * &r1 / n;
        let beta = if r == 0 {
            DMatrix::zeros(p, 0)
        } else {
            let c = cholesky_lower(&s11, "S11")?;
            let s00_inv_s01 = solve(&s00, &s01, "S00").map_err(|_| Error::NotPositiveDefinite("S00".into()))?;
            let inner = s01.transpose() * s00_inv_s01;
            let ci_inner = c.solve_lower_triangular(&inner).ok_or_else(|| Error::EigenSolver("S11 factor".into()))?;
            let sym = c
                .solve_lower_triangular(&ci_inner.transpose())
                .ok_or_else(|| Error::EigenSolver("S11 factor".into()))?;
            let eig = SymmetricEigen::new(crate::linalg::symmetrize(&sym));
            let mut order: Vec<usize> = (0..p).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap_or(std::cmp::Ordering::Equal));
            let v = DMatrix::from_columns(&order[..r].iter().map(|&i| eig.eigenvectors.column(i)).collect::<Vec<_>>());
            c.transpose()
                .solve_upper_triangular(&v)
                .ok_or_else(|| Error::EigenSolver("S11 factor".into()))?
        };
        let pi = if r == 0 {
            DMatrix::zeros(p, p)
        } else {
            let btsb = beta.transpose() * &s11 * &beta;
            let alpha = (solve(&btsb, &(&s01 * &beta).transpose(), "beta' S11 beta")?).transpose();
            &alpha * beta.transpose()
        };
        let psi = if k > 1 {
            least_squares(&(&w0 - &z1 * pi.transpose()), &z2)?.transpose()
        } else {
            DMatrix::zeros(p, 0)
        };
        let phi_v = &pi + DMatrix::identity(p, p) * lk;
        let mut phi = DMatrix::zeros(p, k * p);
        let mut last = phi_v;
        for i in 0..k - 1 {
            let block = psi.columns(i * p, p).clone_owned();
            last -= &block * lambda0.powi((k - i - 1) as i32);
            phi.columns_mut(i * p, p).copy_from(&block);
        }
        phi.columns_mut((k - 1) * p, p).copy_from(&last);
        Ok(RrrSolution { phi, beta })
    }

    /// `A` implied by the reduced-rank `β` under the `[I_r; −Aᵀ]` normalization.
    pub(crate) fn rrr_a(&self, lambda0: f64, q: usize) -> Result<DMatrix<f64>> {
        let sol = self.rrr_solve(lambda0, q)?;
        a_from_beta(&sol.beta, q)
    }

    pub fn rrr(&self, lambda0: f64, q: usize) -> Result<FitResult> {
        let sol = self.rrr_solve(lambda0, q)?;
        let coeffs = VarCoefficients::from_stacked(&sol.phi, self.k)?;
        let a = if q > 0 { a_from_beta(&sol.beta, q).ok() } else { None };
        let lam = DMatrix::identity(q, q) * lambda0;
        let residual = a.as_ref().map(|a| {
            let mut rl = DMatrix::zeros(self.p, q);
            rl.rows_mut(0, self.p - q).copy_from(a);
            rl.rows_mut(self.p - q, q).fill_with_identity();
            (coeffs.char_matrix(lambda0) * rl).norm()
        });
        Ok(FitResult {
            split: if q > 0 { split(&coeffs, q).ok() } else { None },
            loglik: self.loglik_at(&sol.phi)?,
            det_coeffs: self.det_coefficients(&sol.phi),
            coeffs,
            sigma_hat: self.sigma.clone(),
            status: FitStatus::Converged,
            constraint_residual: residual,
            a,
            lambda0: Some(lam),
            n_eff: self.n,
        })
    }
}

/// `A = −B₁⁻ᵀ B₂ᵀ` for `β = [B₁; B₂]` with `B₁` the leading `r × r` block.
pub fn a_from_beta(beta: &DMatrix<f64>, q: usize) -> Result<DMatrix<f64>> {
    let (p, r) = beta.shape();
    if r + q != p {
        return Err(Error::Dimension(format!("beta is {p}x{r}, q = {q}")));
    }
    if r == 0 {
        return Ok(DMatrix::zeros(0, q));
    }
    let b1 = beta.rows(0, r).clone_owned();
    let b2 = beta.rows(r, q).clone_owned();
    let x = solve(&b1.transpose(), &b2.transpose(), "leading block of beta")
        .map_err(|_| Error::Normalization("leading r x r block of beta is singular".into()))?;
    Ok(-x)
}

/// Johansen-type reduced-rank fit of `Φ(λ₀)` with rank `r = p − q`.
pub fn rrr_fit(lambda0: f64, q: usize, data: &DMatrix<f64>, k: usize, det: DeterministicCase) -> Result<FitResult> {
    VarLikelihood::new(data, k, det)?.rrr(lambda0, q)
}
