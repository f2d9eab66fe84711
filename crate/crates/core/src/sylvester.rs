//! Sylvester equations `Y·S − L·Y = C`.
//!
//! `S` is reduced to real Schur form once, after which each column (or
//! coupled column pair for a complex 2×2 block) is a shifted linear system
//! in `L`.

use nalgebra::DMatrix;

use crate::linalg::{kron, solve};
use crate::schur::RealSchur;
use crate::{Error, Result};

/// Reusable solver for a fixed pair `(left, right)`.
#[derive(Debug, Clone)]
pub struct Sylvester {
    left: DMatrix<f64>,
    schur: RealSchur,
}

impl Sylvester {
    pub fn new(left: &DMatrix<f64>, right: &DMatrix<f64>) -> Result<Self> {
        if left.nrows() != left.ncols() || right.nrows() != right.ncols() {
            return Err(Error::Dimension("sylvester operands must be square".into()));
        }
        Ok(Self { left: left.clone(), schur: RealSchur::new(right)? })
    }

    /// Returns `Y` with `Y·right − left·Y = c`.
    pub fn solve(&self, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let m = self.left.nrows();
        let n = self.schur.dim();
        if c.nrows() != m || c.ncols() != n {
            return Err(Error::Dimension(format!("sylvester rhs {}x{}, expected {m}x{n}", c.nrows(), c.ncols())));
        }
        if m == 0 || n == 0 {
            return Ok(DMatrix::zeros(m, n));
        }
        let s = &self.schur.t;
        let v = &self.schur.z;
        let ct = c * v;
        let mut y = DMatrix::<f64>::zeros(m, n);
        let eye = DMatrix::<f64>::identity(m, m);
        let singular = |_| Error::Separation("Sylvester operator is singular (shared eigenvalues)".into());
        for b in self.schur.blocks() {
            let j = b.start;
            let mut rhs = ct.columns(j, b.size).clone_owned();
            if j > 0 {
                rhs -= y.columns(0, j) * s.view((0, j), (j, b.size));
            }
            if b.size == 1 {
                let a = &eye * s[(j, j)] - &self.left;
                let col = solve(&a, &rhs, "sylvester column").map_err(singular)?;
                y.set_column(j, &col.column(0));
            } else {
                let sb = s.view((j, j), (2, 2)).clone_owned();
                let a = kron(&sb.transpose(), &eye) - kron(&DMatrix::identity(2, 2), &self.left);
                let rv = DMatrix::from_column_slice(2 * m, 1, rhs.as_slice());
                let sol = solve(&a, &rv, "sylvester pair").map_err(singular)?;
                y.columns_mut(j, 2).copy_from_slice(sol.as_slice());
            }
        }
        Ok(y * v.transpose())
    }
}

/// One-shot convenience wrapper around [`Sylvester`].
pub fn solve_sylvester(left: &DMatrix<f64>, right: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Sylvester::new(left, right)?.solve(c)
}
