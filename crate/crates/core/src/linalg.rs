//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Column-major vectorization.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Integer matrix power by repeated squaring; `m^0 = I`.
pub fn mat_pow(m: &DMatrix<f64>, e: usize) -> DMatrix<f64> {
    let n = m.nrows();
    let mut out = DMatrix::identity(n, n);
    let mut base = m.clone();
    let mut e = e;
    while e > 0 {
        if e & 1 == 1 {
            out = &out * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    out
}

/// Powers `m^0, m^1, ..., m^upto`.
pub fn mat_powers(m: &DMatrix<f64>, upto: usize) -> Vec<DMatrix<f64>> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(upto + 1);
    out.push(DMatrix::identity(n, n));
    for i in 1..=upto {
        let next = &out[i - 1] * m;
        out.push(next);
    }
    out
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|x| x.is_finite())
}

/// Reciprocal 2-norm condition number from the singular values; 0 when singular.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if max == 0.0 || !max.is_finite() {
        0.0
    } else {
        min / max
    }
}

/// Solves `a x = b` with partial-pivot LU, rejecting systems whose reciprocal
/// condition estimate falls below `1e-14`.
pub fn solve(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "{what}: {}x{} system with {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    if a.is_empty() {
        return Ok(b.clone());
    }
    let lu = a.clone().lu();
    let u = lu.u();
    let diag = u.diagonal();
    let umax = diag.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let umin = diag.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
    if !(umax > 0.0) || umin / umax < 1e-14 {
        return Err(Error::SingularDesign(format!("{what}: matrix is numerically singular")));
    }
    lu.solve(b)
        .filter(all_finite)
        .ok_or_else(|| Error::SingularDesign(format!("{what}: LU solve failed")))
}

pub fn inverse(a: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    solve(a, &DMatrix::identity(n, n), what)
}

/// Symmetrized copy `(m + m')/2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Principal symmetric square root and its inverse of an SPD matrix.
pub fn spd_sqrt_pair(m: &DMatrix<f64>, what: &str) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, x| a.max(x.abs())).max(1e-300);
    if eig.eigenvalues.iter().any(|&l| !(l > 1e-14 * scale)) {
        return Err(Error::NotPositiveDefinite(what.to_string()));
    }
    let v = &eig.eigenvectors;
    let root = DMatrix::from_diagonal(&eig.eigenvalues.map(f64::sqrt));
    let inv_root = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()));
    Ok((v * root * v.transpose(), v * inv_root * v.transpose()))
}

/// Lower Cholesky factor of an SPD matrix.
pub fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(symmetrize(m))
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Orthogonal `Q` (n×n) from Householder QR of a tall `n×m` matrix; the first
/// `m` columns span the column space of `a`.
pub fn full_q(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut work = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    for j in 0..a.ncols().min(n.saturating_sub(1)) {
        let x = work.view((j, j), (n - j, 1)).clone_owned();
        let norm = x.norm();
        if norm == 0.0 {
            continue;
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x;
        v[0] -= alpha;
        let vn = v.norm();
        if vn == 0.0 {
            continue;
        }
        v /= vn;
        // work <- (I - 2vv') work on rows j..
        let mut block = work.rows_mut(j, n - j);
        let proj = v.transpose() * &block;
        block -= &v * proj * 2.0;
        // q <- q (I - 2vv') on columns j..
        let mut qb = q.columns_mut(j, n - j);
        let proj = &qb * &v;
        qb -= proj * v.transpose() * 2.0;
    }
    q
}

/// Random orthogonal matrix via QR of a Gaussian draw.
pub fn random_orthogonal<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let g = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    full_q(&g)
}
