//! Impulse responses, the quasi-cointegrating basis, the state-space
//! decomposition of a path and first-order perturbation Jacobians of
//! `(A, Λ_lu)` with respect to the VAR coefficients.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::{inverse, kron, mat_pow, unvec, vec_of};
use crate::spectral::{SpectralSplit, VarCoefficients};
use crate::sylvester::Sylvester;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseResponse {
    pub horizon: usize,
    pub value: DMatrix<f64>,
    pub lu_part: DMatrix<f64>,
    pub st_part: DMatrix<f64>,
}

/// Response of `y_{t+s}` to `ε_t`. At `s = 0` the response is the identity,
/// attributed entirely to the stable part.
pub fn irf(split: &SpectralSplit, s: usize) -> ImpulseResponse {
    let p = split.p;
    if s == 0 {
        return ImpulseResponse {
            horizon: 0,
            value: DMatrix::identity(p, p),
            lu_part: DMatrix::zeros(p, p),
            st_part: DMatrix::identity(p, p),
        };
    }
    let e = split.k - 1 + s;
    let lu_part = split.lu_response(e);
    let st_part = &split.r_st * mat_pow(&split.lambda_st, e) * split.l_st.transpose();
    ImpulseResponse { horizon: s, value: &lu_part + &st_part, lu_part, st_part }
}

/// `β` with `βᵀ = [I_r, −A]`, spanning the quasi-cointegrating space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcsBasis {
    pub beta: DMatrix<f64>,
}

pub fn qcs_basis(split: &SpectralSplit) -> QcsBasis {
    let (p, r) = (split.p, split.r());
    let mut bt = DMatrix::zeros(r, p);
    bt.view_mut((0, 0), (r, r)).fill_with_identity();
    bt.view_mut((0, r), (r, split.q)).copy_from(&(-&split.a));
    QcsBasis { beta: bt.transpose() }
}

/// `‖bᵀ IRF_s‖` for `s = 1..=s_max`.
pub fn decay_profile(split: &SpectralSplit, b: &[f64], s_max: usize) -> Result<Vec<f64>> {
    if b.len() != split.p {
        return Err(Error::Dimension(format!("direction has {} entries, expected {}", b.len(), split.p)));
    }
    if b.iter().all(|&x| x == 0.0) {
        return Err(Error::InvalidInput("direction must be nonzero".into()));
    }
    let bt = DMatrix::from_row_slice(1, split.p, b);
    let left_lu = &bt * &split.u_lu;
    let left_st = &bt * &split.r_st;
    let lt_lu = split.w_lu.transpose();
    let lt_st = split.l_st.transpose();
    let mut pow_lu = mat_pow(&split.t_lu, split.k);
    let mut pow_st = mat_pow(&split.lambda_st, split.k);
    let mut out = Vec::with_capacity(s_max);
    for _ in 0..s_max {
        let row = &left_lu * &pow_lu * &lt_lu + &left_st * &pow_st * &lt_st;
        out.push(row.norm());
        pow_lu *= &split.t_lu;
        pow_st *= &split.lambda_st;
    }
    Ok(out)
}

/// Path of the near-unit and stable states together with the one-step
/// identity residual `x_t − Φ_lu z_lu,t−1 − Φ_st z_st,t−1 − ε_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateDecomposition {
    pub z_lu: DMatrix<f64>,
    pub z_st: DMatrix<f64>,
    pub phi_lu: DMatrix<f64>,
    pub phi_st: DMatrix<f64>,
    pub residual: DMatrix<f64>,
}

impl StateDecomposition {
    pub fn max_residual(&self) -> f64 {
        self.residual.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

/// Decomposes a zero-initialized path `x` (rows are periods) driven by `eps`.
pub fn state_decompose(split: &SpectralSplit, x: &DMatrix<f64>, eps: &DMatrix<f64>) -> Result<StateDecomposition> {
    let (p, k, q) = (split.p, split.k, split.q);
    if x.shape() != eps.shape() {
        return Err(Error::Dimension(format!("x is {:?} but eps is {:?}", x.shape(), eps.shape())));
    }
    if x.ncols() != p {
        return Err(Error::Dimension(format!("paths have {} columns, expected {p}", x.ncols())));
    }
    let n = x.nrows();
    let kp = p * k;
    let l_lu_t = split.big_l_lu().transpose();
    let l_st_t = split.big_l_st().transpose();
    let phi_lu = &split.r_lu * mat_pow(&split.lambda_lu, k);
    let phi_st = &split.r_st * mat_pow(&split.lambda_st, k);
    let mut z_lu = DMatrix::zeros(n, q);
    let mut z_st = DMatrix::zeros(n, kp - q);
    let mut residual = DMatrix::zeros(n, p);
    let mut state = nalgebra::DVector::<f64>::zeros(kp);
    let mut prev_lu = nalgebra::DVector::<f64>::zeros(q);
    let mut prev_st = nalgebra::DVector::<f64>::zeros(kp - q);
    for t in 0..n {
        for i in (1..k).rev() {
            let (src, dst) = ((i - 1) * p, i * p);
            for j in 0..p {
                state[dst + j] = state[src + j];
            }
        }
        for j in 0..p {
            state[j] = x[(t, j)];
        }
        let lu = &l_lu_t * &state;
        let st = &l_st_t * &state;
        let fitted = &phi_lu * &prev_lu + &phi_st * &prev_st;
        for j in 0..p {
            residual[(t, j)] = x[(t, j)] - fitted[j] - eps[(t, j)];
        }
        z_lu.set_row(t, &lu.transpose());
        z_st.set_row(t, &st.transpose());
        prev_lu = lu;
        prev_st = st;
    }
    Ok(StateDecomposition { z_lu, z_st, phi_lu, phi_st, residual })
}

/// `B = (I_q ⊗ R_st)[(Λ_luᵀ ⊗ I) − (I ⊗ Λ_st)]⁻¹(I_q ⊗ L_stᵀ)`, applied
/// column by column through Sylvester solves.
pub fn b_matrix(split: &SpectralSplit) -> Result<DMatrix<f64>> {
    let (p, q) = (split.p, split.q);
    let pq = p * q;
    let mut out = DMatrix::zeros(pq, pq);
    if pq == 0 {
        return Ok(out);
    }
    let solver = Sylvester::new(&split.lambda_st, &split.lambda_lu)?;
    let l_st_t = split.l_st.transpose();
    for m in 0..pq {
        let mut e = nalgebra::DVector::zeros(pq);
        e[m] = 1.0;
        let y = solver.solve(&(&l_st_t * unvec(&e, p, q)))?;
        out.set_column(m, &vec_of(&(&split.r_st * y)));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationJacobians {
    pub j_a: DMatrix<f64>,
    pub j_lambda: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl PerturbationJacobians {
    /// `[J_A; J_Λ]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let (ra, rl, c) = (self.j_a.nrows(), self.j_lambda.nrows(), self.j_a.ncols());
        let mut out = DMatrix::zeros(ra + rl, c);
        out.rows_mut(0, ra).copy_from(&self.j_a);
        out.rows_mut(ra, rl).copy_from(&self.j_lambda);
        out
    }
}

/// Differentials of `vec A` and `vec Λ_lu` with respect to `vec(ΔΦ 𝐑_lu)`.
pub fn jacobians(split: &SpectralSplit) -> Result<PerturbationJacobians> {
    let (p, q, r) = (split.p, split.q, split.r());
    let b = b_matrix(split)?;
    let iq = DMatrix::<f64>::identity(q, q);
    let beta_t = qcs_basis(split).beta.transpose();
    let j_a = kron(&iq, &beta_t) * &b;
    let mut g_t = DMatrix::zeros(q, p);
    g_t.view_mut((0, r), (q, q)).fill_with_identity();
    let commutator = kron(&split.lambda_lu.transpose(), &iq) - kron(&iq, &split.lambda_lu);
    let j_lambda = commutator * kron(&iq, &g_t) * &b + kron(&iq, &split.l_lu.transpose());
    Ok(PerturbationJacobians { j_a, j_lambda, b })
}

/// `α = Φ(1) β (βᵀβ)⁻¹` with `Φ(1) = I − Σ Φ_i`.
pub fn adjustment_alpha(coeffs: &VarCoefficients, qcs: &QcsBasis) -> Result<DMatrix<f64>> {
    let p = coeffs.p();
    if qcs.beta.nrows() != p {
        return Err(Error::Dimension(format!("beta has {} rows, expected {p}", qcs.beta.nrows())));
    }
    let phi1 = coeffs.phi().iter().fold(DMatrix::identity(p, p), |acc, m| acc - m);
    let gram = qcs.beta.transpose() * &qcs.beta;
    Ok(phi1 * &qcs.beta * inverse(&gram, "beta gram")?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{companion, split};
    use approx::assert_relative_eq;

    fn diag_case() -> (VarCoefficients, SpectralSplit) {
        let c = VarCoefficients::new(vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.95])]).unwrap();
        let s = split(&c, 1).unwrap();
        (c, s)
    }

    #[test]
    fn scalar_irf() {
        let c = VarCoefficients::new(vec![DMatrix::from_element(1, 1, 0.9)]).unwrap();
        let s = split(&c, 1).unwrap();
        assert_relative_eq!(irf(&s, 3).value[(0, 0)], 0.729, epsilon = 1e-14);
        assert_eq!(irf(&s, 0).value, DMatrix::identity(1, 1));
    }

    #[test]
    fn one_step_irf_is_phi() {
        let phi = DMatrix::from_row_slice(2, 2, &[0.9, 0.1, 0.05, 0.6]);
        let c = VarCoefficients::new(vec![phi.clone()]).unwrap();
        let s = split(&c, 1).unwrap();
        let r = irf(&s, 1);
        assert_relative_eq!(r.value, phi, epsilon = 1e-12);
        assert_relative_eq!(&r.lu_part + &r.st_part, r.value, epsilon = 1e-14);
    }

    #[test]
    fn irf_matches_companion_power() {
        let c = VarCoefficients::new(vec![
            DMatrix::from_row_slice(2, 2, &[1.1, 0.2, -0.1, 0.7]),
            DMatrix::from_row_slice(2, 2, &[-0.2, 0.05, 0.1, -0.1]),
        ])
        .unwrap();
        let s = split(&c, 1).unwrap();
        let f = companion(&c);
        let mut fp = DMatrix::identity(4, 4);
        for h in 1..=50 {
            fp *= &f;
            let got = irf(&s, h).value;
            assert_relative_eq!(got, fp.view((0, 0), (2, 2)).clone_owned(), epsilon = 1e-8);
        }
    }

    #[test]
    fn qcs_basis_examples() {
        let (_, s) = diag_case();
        assert_relative_eq!(qcs_basis(&s).beta.transpose(), DMatrix::from_row_slice(1, 2, &[1.0, 0.0]), epsilon = 1e-14);
        let mut s2 = s.clone();
        s2.a = DMatrix::from_element(1, 1, 1.0);
        assert_eq!(qcs_basis(&s2).beta.transpose(), DMatrix::from_row_slice(1, 2, &[1.0, -1.0]));
        let mut s3 = s;
        s3.p = 3;
        s3.a = DMatrix::from_column_slice(2, 1, &[0.5, 2.0]);
        let bt = qcs_basis(&s3).beta.transpose();
        assert_eq!(bt, DMatrix::from_row_slice(2, 3, &[1.0, 0.0, -0.5, 0.0, 1.0, -2.0]));
        let r_lu = DMatrix::from_column_slice(3, 1, &[0.5, 2.0, 1.0]);
        assert!((bt * r_lu).norm() < 1e-15);
    }

    #[test]
    fn decay_diagonal() {
        let (_, s) = diag_case();
        let d = decay_profile(&s, &[1.0, 0.0], 20).unwrap();
        assert_relative_eq!(d[19], 0.5_f64.powi(20), max_relative = 1e-10);
        let d = decay_profile(&s, &[0.0, 1.0], 20).unwrap();
        assert_relative_eq!(d[19], 0.95_f64.powi(20), max_relative = 1e-10);
        assert!(decay_profile(&s, &[0.0, 0.0], 3).is_err());
    }

    #[test]
    fn zero_path_decomposes_to_zero() {
        let (_, s) = diag_case();
        let x = DMatrix::zeros(10, 2);
        let d = state_decompose(&s, &x, &x).unwrap();
        assert_eq!(d.z_lu, DMatrix::zeros(10, 1));
        assert_eq!(d.z_st, DMatrix::zeros(10, 1));
        assert!(state_decompose(&s, &x, &DMatrix::zeros(9, 2)).is_err());
    }

    #[test]
    fn b_matrix_scalar_kernel() {
        // Λ_lu = [1]: B = R_st L_stᵀ / (1 − λ_s)
        let c = VarCoefficients::new(vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0])]).unwrap();
        let s = split(&c, 1).unwrap();
        let b = b_matrix(&s).unwrap();
        let ls = s.lambda_st[(0, 0)];
        let expect = &s.r_st * s.l_st.transpose() / (1.0 - ls);
        assert_relative_eq!(b, expect, epsilon = 1e-12);
    }

    #[test]
    fn alpha_diagonal() {
        let c = VarCoefficients::new(vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0])]).unwrap();
        let qcs = QcsBasis { beta: DMatrix::from_column_slice(2, 1, &[1.0, 0.0]) };
        let a = adjustment_alpha(&c, &qcs).unwrap();
        assert_relative_eq!(a, DMatrix::from_column_slice(2, 1, &[0.5, 0.0]), epsilon = 1e-15);
    }
}
