//! Companion form, characteristic roots, and the split of a VAR into its
//! near-unit (`lu`) and stable (`st`) invariant subspaces.

use std::cmp::Ordering;
use std::f64::consts::LN_2;

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::linalg::{all_finite, inverse, mat_pow, mat_powers, rcond};
use crate::schur::RealSchur;
use crate::sylvester::solve_sylvester;
use crate::{Error, Result};

/// Relative modulus gap required between root `q` and root `q + 1`.
pub const SEPARATION_TOL: f64 = 1e-8;
/// Width of the band in which a root counts as sitting on a region boundary.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Eigenvector condition number of `Λ_lu` above which a warning is attached.
pub const EIGVEC_COND_WARN: f64 = 1e6;
const NORMALIZATION_RCOND: f64 = 1e-10;

/// Lag matrices `Φ_1, …, Φ_k` of a `p`-variate VAR(k).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarCoefficients {
    p: usize,
    k: usize,
    phi: Vec<DMatrix<f64>>,
}

impl VarCoefficients {
    pub fn new(phi: Vec<DMatrix<f64>>) -> Result<Self> {
        let k = phi.len();
        if k == 0 {
            return Err(Error::InvalidInput("a VAR needs at least one lag".into()));
        }
        let p = phi[0].nrows();
        if p == 0 {
            return Err(Error::InvalidInput("series dimension must be positive".into()));
        }
        for (i, m) in phi.iter().enumerate() {
            if m.nrows() != p || m.ncols() != p {
                return Err(Error::Dimension(format!(
                    "lag {} is {}x{}, expected {p}x{p}",
                    i + 1,
                    m.nrows(),
                    m.ncols()
                )));
            }
            if !all_finite(m) {
                return Err(Error::InvalidInput(format!("lag {} has non-finite entries", i + 1)));
            }
        }
        Ok(Self { p, k, phi })
    }

    /// From the `p × kp` block row `[Φ_1 … Φ_k]`.
    pub fn from_stacked(stacked: &DMatrix<f64>, k: usize) -> Result<Self> {
        let p = stacked.nrows();
        if k == 0 || stacked.ncols() != p * k {
            return Err(Error::Dimension(format!(
                "stacked coefficients are {}x{}, expected {p}x{}",
                p,
                stacked.ncols(),
                p * k
            )));
        }
        Self::new((0..k).map(|i| stacked.columns(i * p, p).clone_owned()).collect())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn phi(&self) -> &[DMatrix<f64>] {
        &self.phi
    }

    /// `[Φ_1 … Φ_k]` as a `p × kp` matrix.
    pub fn stacked(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.p, self.p * self.k);
        for (i, m) in self.phi.iter().enumerate() {
            out.columns_mut(i * self.p, self.p).copy_from(m);
        }
        out
    }

    /// `Φ(λ) = I λ^k − Σ Φ_i λ^{k−i}`.
    pub fn char_matrix(&self, lambda: f64) -> DMatrix<f64> {
        let mut out = DMatrix::identity(self.p, self.p) * lambda.powi(self.k as i32);
        for (i, m) in self.phi.iter().enumerate() {
            out -= m * lambda.powi((self.k - i - 1) as i32);
        }
        out
    }

    pub fn companion(&self) -> DMatrix<f64> {
        companion(self)
    }
}

/// Companion matrix with `[Φ_1 … Φ_k]` on top and identity blocks below.
pub fn companion(coeffs: &VarCoefficients) -> DMatrix<f64> {
    let (p, k) = (coeffs.p, coeffs.k);
    let mut f = DMatrix::zeros(p * k, p * k);
    f.rows_mut(0, p).copy_from(&coeffs.stacked());
    for i in 1..k {
        f.view_mut((i * p, (i - 1) * p), (p, p)).fill_with_identity();
    }
    f
}

/// Total order on roots: modulus descending, then real part descending,
/// then the member with nonnegative imaginary part first.
pub fn root_order(a: &Complex64, b: &Complex64) -> Ordering {
    b.norm()
        .partial_cmp(&a.norm())
        .unwrap_or(Ordering::Equal)
        .then(b.re.partial_cmp(&a.re).unwrap_or(Ordering::Equal))
        .then((b.im >= 0.0).cmp(&(a.im >= 0.0)))
        .then(b.im.partial_cmp(&a.im).unwrap_or(Ordering::Equal))
}

/// The `kp` characteristic roots in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Complex64>,
}

impl RootSet {
    pub fn from_unsorted(mut roots: Vec<Complex64>) -> Self {
        roots.sort_by(root_order);
        Self { roots }
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.roots.iter().map(|z| z.norm()).collect()
    }
}

pub fn roots(coeffs: &VarCoefficients) -> Result<RootSet> {
    let schur = RealSchur::new(&companion(coeffs))?;
    Ok(RootSet::from_unsorted(schur.eigenvalues()))
}

/// Radius `ρ` delimiting the near-unit disc `{|z| ≤ 1, |1 − z| ≤ 1 − ρ}` and
/// the stable disc `{|z| < ρ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    rho: f64,
}

impl RegionSpec {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Domain(format!("radius {rho} outside (0, 1]")));
        }
        Ok(Self { rho })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn contains_lu(&self, z: Complex64) -> bool {
        z.norm() <= 1.0 + BOUNDARY_TOL && (Complex64::new(1.0, 0.0) - z).norm() <= 1.0 - self.rho + BOUNDARY_TOL
    }

    pub fn contains_st(&self, z: Complex64) -> bool {
        z.norm() < self.rho
    }

    fn on_boundary(&self, z: Complex64) -> bool {
        let m = z.norm();
        let d = (Complex64::new(1.0, 0.0) - z).norm();
        ((m - 1.0).abs() <= BOUNDARY_TOL && d <= 1.0 - self.rho + BOUNDARY_TOL)
            || ((d - (1.0 - self.rho)).abs() <= BOUNDARY_TOL && m <= 1.0 + BOUNDARY_TOL)
            || (m - self.rho).abs() <= BOUNDARY_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RootClass {
    NearUnit,
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub q: usize,
    pub flags: Vec<RootClass>,
    pub warnings: Vec<String>,
}

/// Assigns every root to the near-unit or the stable region.
pub fn classify(roots: &RootSet, region: &RegionSpec) -> Result<Classification> {
    let mut flags = Vec::with_capacity(roots.len());
    let mut warnings = Vec::new();
    for (i, &z) in roots.roots.iter().enumerate() {
        if region.on_boundary(z) {
            warnings.push(format!("root {} ({:.12}{:+.12}i) lies on a region boundary", i + 1, z.re, z.im));
        }
        if region.contains_lu(z) {
            flags.push(RootClass::NearUnit);
        } else if region.contains_st(z) {
            flags.push(RootClass::Stable);
        } else {
            return Err(Error::Classification(format!(
                "root {} = {:.6}{:+.6}i (modulus {:.6}, distance to 1 {:.6}) is in neither region at rho = {}",
                i + 1,
                z.re,
                z.im,
                z.norm(),
                (Complex64::new(1.0, 0.0) - z).norm(),
                region.rho
            )));
        }
    }
    let q = flags.iter().filter(|&&f| f == RootClass::NearUnit).count();
    Ok(Classification { q, flags, warnings })
}

/// Invariant-subspace decomposition `F = 𝐑 Λ 𝐋ᵀ` of the companion matrix,
/// normalized so that the bottom `q` rows of `R_lu` are the identity.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralSplit {
    pub p: usize,
    pub k: usize,
    pub q: usize,
    pub a: DMatrix<f64>,
    pub lambda_lu: DMatrix<f64>,
    pub r_lu: DMatrix<f64>,
    pub r_st: DMatrix<f64>,
    pub lambda_st: DMatrix<f64>,
    pub l_lu: DMatrix<f64>,
    pub l_st: DMatrix<f64>,
    pub big_r: DMatrix<f64>,
    pub big_l: DMatrix<f64>,
    /// Orthonormal Schur form of the near-unit block: `R_lu Λ_luᵉ L_luᵀ`
    /// equals `u_lu T_luᵉ w_luᵀ`. Powers of `T_lu` stay well scaled even
    /// when the normalized `Λ_lu` is far from normal.
    pub t_lu: DMatrix<f64>,
    pub u_lu: DMatrix<f64>,
    pub w_lu: DMatrix<f64>,
    /// Condition number of the eigenvector matrix of `Λ_lu`.
    pub eigvec_condition: f64,
    pub warnings: Vec<String>,
}

impl SpectralSplit {
    pub fn r(&self) -> usize {
        self.p - self.q
    }

    pub fn kp(&self) -> usize {
        self.p * self.k
    }

    pub fn big_r_lu(&self) -> DMatrix<f64> {
        self.big_r.columns(0, self.q).clone_owned()
    }

    pub fn big_r_st(&self) -> DMatrix<f64> {
        self.big_r.columns(self.q, self.kp() - self.q).clone_owned()
    }

    pub fn big_l_lu(&self) -> DMatrix<f64> {
        self.big_l.columns(0, self.q).clone_owned()
    }

    pub fn big_l_st(&self) -> DMatrix<f64> {
        self.big_l.columns(self.q, self.kp() - self.q).clone_owned()
    }

    /// Block-diagonal `Λ = diag(Λ_lu, Λ_st)`.
    pub fn lambda(&self) -> DMatrix<f64> {
        let kp = self.kp();
        let mut out = DMatrix::zeros(kp, kp);
        out.view_mut((0, 0), (self.q, self.q)).copy_from(&self.lambda_lu);
        out.view_mut((self.q, self.q), (kp - self.q, kp - self.q)).copy_from(&self.lambda_st);
        out
    }

    /// `R_lu Λ_luᵉ L_luᵀ` evaluated through the Schur block.
    pub fn lu_response(&self, e: usize) -> DMatrix<f64> {
        &self.u_lu * mat_pow(&self.t_lu, e) * self.w_lu.transpose()
    }

    /// `R = [R_lu, R_st]`, the last `p` rows of `𝐑`.
    pub fn r_full(&self) -> DMatrix<f64> {
        self.big_r.rows((self.k - 1) * self.p, self.p).clone_owned()
    }

    /// `L = [L_lu, L_st]`, the first `p` rows of `𝐋`.
    pub fn l_full(&self) -> DMatrix<f64> {
        self.big_l.rows(0, self.p).clone_owned()
    }
}

/// Splits the companion matrix of `coeffs` at its `q` largest roots.
pub fn split(coeffs: &VarCoefficients, q: usize) -> Result<SpectralSplit> {
    let (p, k) = (coeffs.p, coeffs.k);
    let kp = p * k;
    if q > p {
        return Err(Error::InvalidInput(format!("q = {q} exceeds the series dimension {p}")));
    }
    let f = companion(coeffs);
    let mut schur = RealSchur::new(&f)?;
    let roots = RootSet::from_unsorted(schur.eigenvalues());
    if q > 0 && q < kp {
        let (hi, lo) = (roots.roots[q - 1].norm(), roots.roots[q].norm());
        if (hi - lo) / hi.max(1.0) <= SEPARATION_TOL {
            return Err(Error::Separation(format!(
                "root {q} (modulus {hi:.10}) and root {} (modulus {lo:.10}) are not separated",
                q + 1
            )));
        }
        let threshold = 0.5 * (hi + lo);
        let got = schur.reorder(|z| z.norm() > threshold)?;
        if got != q {
            return Err(Error::Separation(format!("selected {got} roots, expected {q}")));
        }
    }
    let z = &schur.z;
    let t = &schur.t;
    if q == 0 {
        return Ok(SpectralSplit {
            p,
            k,
            q,
            a: DMatrix::zeros(p, 0),
            lambda_lu: DMatrix::zeros(0, 0),
            r_lu: DMatrix::zeros(p, 0),
            r_st: z.rows((k - 1) * p, p).clone_owned(),
            lambda_st: t.clone(),
            l_lu: DMatrix::zeros(p, 0),
            l_st: z.rows(0, p).clone_owned(),
            big_r: z.clone(),
            big_l: z.clone(),
            t_lu: DMatrix::zeros(0, 0),
            u_lu: DMatrix::zeros(p, 0),
            w_lu: DMatrix::zeros(p, 0),
            eigvec_condition: 1.0,
            warnings: Vec::new(),
        });
    }
    let u1 = z.columns(0, q).clone_owned();
    let u2 = z.columns(q, kp - q).clone_owned();
    let t11 = t.view((0, 0), (q, q)).clone_owned();
    let t12 = t.view((0, q), (q, kp - q)).clone_owned();
    let t22 = t.view((q, q), (kp - q, kp - q)).clone_owned();
    // T11 X − X T22 = −T12 block-diagonalizes T
    let x = solve_sylvester(&t11, &t22, &t12)?;
    let (r_lu_big, lambda_lu, n) = normalize_lu_basis(&u1, &t11, p)?;
    let r_st_big = &u1 * &x + &u2;
    let mut big_r = DMatrix::zeros(kp, kp);
    big_r.columns_mut(0, q).copy_from(&r_lu_big);
    big_r.columns_mut(q, kp - q).copy_from(&r_st_big);
    let mut big_lt = DMatrix::zeros(kp, kp);
    let w_big = u1.transpose() - &x * u2.transpose();
    big_lt.rows_mut(0, q).copy_from(&(&n * &w_big));
    big_lt.rows_mut(q, kp - q).copy_from(&u2.transpose());
    let big_l = big_lt.transpose();
    let r_lu = r_lu_big.rows((k - 1) * p, p).clone_owned();
    let eigvec_condition = eigvec_condition(&lambda_lu);
    let mut warnings = Vec::new();
    if eigvec_condition > EIGVEC_COND_WARN {
        warnings.push(format!(
            "near-unit block is close to defective (eigenvector condition {eigvec_condition:.3e})"
        ));
    }
    Ok(SpectralSplit {
        p,
        k,
        q,
        a: r_lu.rows(0, p - q).clone_owned(),
        lambda_lu,
        r_st: r_st_big.rows((k - 1) * p, p).clone_owned(),
        lambda_st: t22,
        l_lu: big_l.view((0, 0), (p, q)).clone_owned(),
        l_st: big_l.view((0, q), (p, kp - q)).clone_owned(),
        r_lu,
        big_r,
        big_l,
        u_lu: u1.rows((k - 1) * p, p).clone_owned(),
        w_lu: w_big.columns(0, p).transpose(),
        t_lu: t11,
        eigvec_condition,
        warnings,
    })
}

/// Rebases an invariant-subspace basis `(U, T)` of a companion matrix with
/// `p`-row blocks so that the bottom `q` rows become `I_q`. Returns the
/// rebased basis, the conjugated dynamics and the change of basis `N`.
pub fn normalize_lu_basis(
    basis: &DMatrix<f64>,
    dynamics: &DMatrix<f64>,
    p: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (kp, q) = basis.shape();
    if q > p || kp % p != 0 {
        return Err(Error::Dimension(format!("basis {kp}x{q} for p = {p}")));
    }
    let n = basis.rows(kp - q, q).clone_owned();
    if rcond(&n) < NORMALIZATION_RCOND {
        return Err(Error::Normalization(
            "the trailing q series carry (almost) no weight on the near-unit subspace".into(),
        ));
    }
    let n_inv = inverse(&n, "normalization block")?;
    let mut rebased = basis * &n_inv;
    rebased.rows_mut(kp - q, q).fill_with_identity();
    let lambda = &n * dynamics * &n_inv;
    Ok((rebased, lambda, n))
}

/// `𝐑 Λ 𝐋ᵀ`, which reproduces the companion matrix.
pub fn reconstruct(split: &SpectralSplit) -> DMatrix<f64> {
    &split.big_r * split.lambda() * split.big_l.transpose()
}

/// Condition number of a (complex) eigenvector basis with unit columns;
/// infinite for defective matrices.
pub fn eigvec_condition(m: &DMatrix<f64>) -> f64 {
    let q = m.nrows();
    if q <= 1 {
        return 1.0;
    }
    let eigs = match RealSchur::new(m) {
        Ok(s) => s.eigenvalues(),
        Err(_) => return f64::INFINITY,
    };
    let scale = m.norm().max(1e-300);
    let mc: DMatrix<Complex<f64>> = m.map(|x| Complex::new(x, 0.0));
    let mut used = vec![false; q];
    let mut cols: Vec<nalgebra::DVector<Complex<f64>>> = Vec::new();
    for i in 0..q {
        if used[i] {
            continue;
        }
        let cluster: Vec<usize> = (i..q).filter(|&j| !used[j] && (eigs[j] - eigs[i]).norm() <= 1e-8 * scale).collect();
        for &j in &cluster {
            used[j] = true;
        }
        let mult = cluster.len();
        let centre = cluster.iter().map(|&j| eigs[j]).sum::<Complex64>() / mult as f64;
        let shifted = &mc - DMatrix::<Complex<f64>>::identity(q, q) * Complex::new(centre.re, centre.im);
        let svd = shifted.svd(false, true);
        let vt = match svd.v_t {
            Some(v) => v,
            None => return f64::INFINITY,
        };
        let mut order: Vec<usize> = (0..q).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap_or(Ordering::Equal));
        if svd.singular_values[order[mult - 1]] > 1e-6 * scale {
            return f64::INFINITY;
        }
        for &idx in order.iter().take(mult) {
            cols.push(vt.row(idx).adjoint());
        }
    }
    let v = DMatrix::from_columns(&cols);
    let sv = v.svd(false, false).singular_values;
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        sv.max() / min
    }
}

/// Family of the near-unit block search space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LambdaFamily {
    /// `λ I_q`.
    Scalar,
    /// `Q diag(λ) Qᵀ`.
    Symmetric,
    /// `Q D Qᵀ` with `D` holding 1×1 reals and 2×2 `[[a, b], [−b, a]]` blocks.
    Normal,
}

impl std::str::FromStr for LambdaFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "scalar" => Ok(Self::Scalar),
            "symmetric" => Ok(Self::Symmetric),
            "normal" => Ok(Self::Normal),
            other => Err(Error::InvalidInput(format!("unknown lambda family '{other}'"))),
        }
    }
}

/// Parametrization of a candidate `Λ_lu`.
///
/// `theta` layout: scalar `[λ]`; symmetric `[λ_1..λ_q, angles]`; normal
/// `[reals, (a, b) pairs, angles]` with `pairs` complex blocks. Angles follow
/// the plane order (1,2), (1,3), …, (2,3), ….
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaParam {
    pub family: LambdaFamily,
    pub q: usize,
    pub pairs: usize,
    pub theta: Vec<f64>,
}

impl LambdaParam {
    pub fn scalar(lambda: f64, q: usize) -> Self {
        Self { family: LambdaFamily::Scalar, q, pairs: 0, theta: vec![lambda] }
    }

    pub fn symmetric(eigenvalues: &[f64], angles: &[f64]) -> Self {
        let q = eigenvalues.len();
        Self { family: LambdaFamily::Symmetric, q, pairs: 0, theta: [eigenvalues, angles].concat() }
    }

    pub fn normal(reals: &[f64], pairs: &[(f64, f64)], angles: &[f64]) -> Self {
        let q = reals.len() + 2 * pairs.len();
        let mut theta = reals.to_vec();
        for &(a, b) in pairs {
            theta.extend([a, b]);
        }
        theta.extend_from_slice(angles);
        Self { family: LambdaFamily::Normal, q, pairs: pairs.len(), theta }
    }

    pub fn expected_len(family: LambdaFamily, q: usize) -> usize {
        match family {
            LambdaFamily::Scalar => 1,
            _ => q + q * (q.saturating_sub(1)) / 2,
        }
    }

    fn check_len(&self) -> Result<()> {
        let want = Self::expected_len(self.family, self.q);
        let bad_pairs = match self.family {
            LambdaFamily::Normal => 2 * self.pairs > self.q,
            _ => self.pairs != 0,
        };
        if self.theta.len() != want || bad_pairs || self.q == 0 {
            return Err(Error::InvalidInput(format!(
                "{:?} family with q = {} needs {want} parameters, got {} ({} complex pairs)",
                self.family,
                self.q,
                self.theta.len(),
                self.pairs
            )));
        }
        Ok(())
    }

    fn eigen_len(&self) -> usize {
        match self.family {
            LambdaFamily::Scalar => 1,
            _ => self.q,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.theta[self.eigen_len().min(self.theta.len())..]
    }

    /// Moduli of the eigenvalue parameters, one per real root or complex pair.
    pub fn moduli(&self) -> Vec<f64> {
        match self.family {
            LambdaFamily::Scalar | LambdaFamily::Symmetric => {
                self.theta[..self.eigen_len()].iter().map(|x| x.abs()).collect()
            }
            LambdaFamily::Normal => {
                let nr = self.q - 2 * self.pairs;
                let mut out: Vec<f64> = self.theta[..nr].iter().map(|x| x.abs()).collect();
                for i in 0..self.pairs {
                    out.push(self.theta[nr + 2 * i].hypot(self.theta[nr + 2 * i + 1]));
                }
                out
            }
        }
    }

    /// Whether all eigenvalue moduli lie in `[ρ, 1]`.
    pub fn in_domain(&self, rho: f64) -> bool {
        self.check_len().is_ok() && self.moduli().iter().all(|&m| m >= rho - 1e-12 && m <= 1.0 + 1e-12)
    }

    /// Builds `Λ_lu` after checking that the eigenvalue moduli lie in `[ρ, 1]`.
    pub fn materialize(&self, region: &RegionSpec) -> Result<DMatrix<f64>> {
        self.check_len()?;
        if !self.in_domain(region.rho()) {
            return Err(Error::Domain(format!(
                "eigenvalue moduli {:?} outside [{}, 1]",
                self.moduli(),
                region.rho()
            )));
        }
        Ok(self.matrix())
    }

    /// Builds `Λ_lu` without domain checks.
    pub fn matrix(&self) -> DMatrix<f64> {
        let q = self.q;
        if self.family == LambdaFamily::Scalar {
            return DMatrix::identity(q, q) * self.theta[0];
        }
        let mut d = DMatrix::zeros(q, q);
        match self.family {
            LambdaFamily::Symmetric => {
                for i in 0..q {
                    d[(i, i)] = self.theta[i];
                }
            }
            _ => {
                let nr = q - 2 * self.pairs;
                for i in 0..nr {
                    d[(i, i)] = self.theta[i];
                }
                for j in 0..self.pairs {
                    let (a, b) = (self.theta[nr + 2 * j], self.theta[nr + 2 * j + 1]);
                    let o = nr + 2 * j;
                    d[(o, o)] = a;
                    d[(o, o + 1)] = b;
                    d[(o + 1, o)] = -b;
                    d[(o + 1, o + 1)] = a;
                }
            }
        }
        let rot = rotation_product(q, self.angles());
        &rot * d * rot.transpose()
    }
}

/// Product of plane rotations in lexicographic plane order.
pub fn rotation_product(q: usize, angles: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::identity(q, q);
    let mut idx = 0;
    for i in 0..q {
        for j in (i + 1)..q {
            let th = angles.get(idx).copied().unwrap_or(0.0);
            idx += 1;
            let mut g = DMatrix::identity(q, q);
            let (s, c) = th.sin_cos();
            g[(i, i)] = c;
            g[(i, j)] = -s;
            g[(j, i)] = s;
            g[(j, j)] = c;
            out *= g;
        }
    }
    out
}

/// `ρ = 2^{−1/h}`.
pub fn half_life_to_radius(h: f64) -> Result<f64> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::Domain(format!("half-life {h} must be positive and finite")));
    }
    Ok((-LN_2 / h).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HalfLife {
    Periods(f64),
    Infinite,
}

/// `h = −log 2 / log ρ`; a unit radius has infinite half-life.
pub fn radius_to_half_life(rho: f64) -> Result<HalfLife> {
    if rho == 1.0 {
        return Ok(HalfLife::Infinite);
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Domain(format!("radius {rho} outside (0, 1]")));
    }
    Ok(HalfLife::Periods(-LN_2 / rho.ln()))
}

/// Evaluates `R_lu Λ_lu^k − Σ Φ_i R_lu Λ_lu^{k−i}`.
pub fn defining_residual(coeffs: &VarCoefficients, r_lu: &DMatrix<f64>, lambda_lu: &DMatrix<f64>) -> DMatrix<f64> {
    let k = coeffs.k;
    let pw = mat_powers(lambda_lu, k);
    let mut out = r_lu * &pw[k];
    for (i, m) in coeffs.phi.iter().enumerate() {
        out -= m * r_lu * &pw[k - i - 1];
    }
    out
}

/// `𝐑_lu = col{R_lu Λ^{k−i}}_{i=1..k}`.
pub fn stack_basis(r: &DMatrix<f64>, lambda: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let (p, q) = r.shape();
    let mut out = DMatrix::zeros(p * k, q);
    for i in 0..k {
        out.rows_mut(i * p, p).copy_from(&(r * mat_pow(lambda, k - i - 1)));
    }
    out
}
