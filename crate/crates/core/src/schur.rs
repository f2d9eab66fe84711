//! Real Schur decomposition with block reordering.
//!
//! nalgebra supplies the unordered factorization; the swap of adjacent
//! diagonal blocks solves a small Sylvester equation and applies the
//! orthogonal factor of `[-X; I]`, the direct-swap scheme used by LAPACK.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;

use crate::linalg::{all_finite, full_q, kron, max_abs, random_orthogonal, solve};
use crate::rng::replication_rng;
use crate::{Error, Result};

/// A diagonal block of a quasi-triangular matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Block {
    pub start: usize,
    pub size: usize,
}

/// `a = z * t * z'` with `t` quasi upper triangular and `z` orthogonal.
/// Every 2×2 diagonal block holds a complex-conjugate pair.
#[derive(Debug, Clone)]
pub struct RealSchur {
    pub t: DMatrix<f64>,
    pub z: DMatrix<f64>,
}

const MAX_SWEEPS_PER_DIM: usize = 500;
const RETRIES: u64 = 3;

impl RealSchur {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension(format!("schur of {}x{} matrix", a.nrows(), a.ncols())));
        }
        if !all_finite(a) {
            return Err(Error::EigenSolver("matrix has non-finite entries".into()));
        }
        let n = a.nrows();
        let max_iter = MAX_SWEEPS_PER_DIM * n.max(1);
        if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, max_iter) {
            return Ok(Self::standardized(s.unpack()));
        }
        // Stagnating shifts are usually broken by an orthogonal change of basis.
        for attempt in 0..RETRIES {
            let mut rng = replication_rng(0x5c4e_11a5, attempt);
            let p = random_orthogonal(n, &mut rng);
            let b = p.transpose() * a * &p;
            if let Some(s) = Schur::try_new(b, f64::EPSILON, max_iter) {
                let (z, t) = s.unpack();
                return Ok(Self::standardized((&p * z, t)));
            }
        }
        Err(Error::EigenSolver(format!("QR iteration did not converge for {n}x{n} matrix")))
    }

    fn standardized((z, t): (DMatrix<f64>, DMatrix<f64>)) -> Self {
        let mut s = RealSchur { t, z };
        let n = s.t.nrows();
        for j in 0..n {
            for i in (j + 2)..n {
                s.t[(i, j)] = 0.0;
            }
        }
        let mut i = 0;
        while i + 1 < n {
            if s.t[(i + 1, i)] != 0.0 {
                let small = f64::EPSILON * (s.t[(i, i)].abs() + s.t[(i + 1, i + 1)].abs());
                if s.t[(i + 1, i)].abs() <= small {
                    s.t[(i + 1, i)] = 0.0;
                    i += 1;
                    continue;
                }
                s.split_if_real(i);
                if s.t[(i + 1, i)] != 0.0 && i + 2 < n {
                    s.t[(i + 2, i + 1)] = 0.0;
                }
                i += 2;
            } else {
                i += 1;
            }
        }
        s
    }

    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    pub fn blocks(&self) -> Vec<Block> {
        let n = self.dim();
        let mut out = Vec::new();
        let mut i = 0;
        while i < n {
            let size = if i + 1 < n && self.t[(i + 1, i)] != 0.0 { 2 } else { 1 };
            out.push(Block { start: i, size });
            i += size;
        }
        out
    }

    /// Eigenvalues of one diagonal block; a 2×2 block yields the pair with
    /// the positive-imaginary member first.
    pub fn block_eigenvalues(&self, b: Block) -> Vec<Complex64> {
        let j = b.start;
        if b.size == 1 {
            return vec![Complex64::new(self.t[(j, j)], 0.0)];
        }
        let (a, bb, c, d) = (self.t[(j, j)], self.t[(j, j + 1)], self.t[(j + 1, j)], self.t[(j + 1, j + 1)]);
        let half = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + bb * c;
        if disc >= 0.0 {
            let s = disc.sqrt();
            vec![Complex64::new(half + s, 0.0), Complex64::new(half - s, 0.0)]
        } else {
            let s = (-disc).sqrt();
            vec![Complex64::new(half, s), Complex64::new(half, -s)]
        }
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.blocks().into_iter().flat_map(|b| self.block_eigenvalues(b)).collect()
    }

    /// Triangularizes the 2×2 block at `j` when its eigenvalues are real.
    fn split_if_real(&mut self, j: usize) -> bool {
        let (a, b, c, d) = (self.t[(j, j)], self.t[(j, j + 1)], self.t[(j + 1, j)], self.t[(j + 1, j + 1)]);
        if c == 0.0 {
            return true;
        }
        let half = 0.5 * (a + d);
        let disc = 0.25 * (a - d) * (a - d) + b * c;
        if disc < 0.0 {
            return false;
        }
        let s = disc.sqrt();
        let l1 = half + s;
        let l2 = half - s;
        // Eigenvector (lambda - d, c); pick the root giving the larger first entry.
        let lam = if (l1 - d).abs() >= (l2 - d).abs() { l1 } else { l2 };
        let (v1, v2) = (lam - d, c);
        let nv = v1.hypot(v2);
        let (cs, sn) = (v1 / nv, v2 / nv);
        self.rotate(j, cs, sn);
        self.t[(j + 1, j)] = 0.0;
        true
    }

    /// Applies `G = [[cs, -sn], [sn, cs]]` on coordinates `j, j+1`.
    fn rotate(&mut self, j: usize, cs: f64, sn: f64) {
        let n = self.dim();
        for col in 0..n {
            let x = self.t[(j, col)];
            let y = self.t[(j + 1, col)];
            self.t[(j, col)] = cs * x + sn * y;
            self.t[(j + 1, col)] = -sn * x + cs * y;
        }
        for row in 0..n {
            let x = self.t[(row, j)];
            let y = self.t[(row, j + 1)];
            self.t[(row, j)] = cs * x + sn * y;
            self.t[(row, j + 1)] = -sn * x + cs * y;
        }
        for row in 0..n {
            let x = self.z[(row, j)];
            let y = self.z[(row, j + 1)];
            self.z[(row, j)] = cs * x + sn * y;
            self.z[(row, j + 1)] = -sn * x + cs * y;
        }
    }

    /// Exchanges the adjacent blocks `first` and the one following it.
    fn swap(&mut self, first: Block, second: Block) -> Result<()> {
        let (j, n1, n2) = (first.start, first.size, second.size);
        let m = n1 + n2;
        let n = self.dim();
        let t11 = self.t.view((j, j), (n1, n1)).clone_owned();
        let t12 = self.t.view((j, j + n1), (n1, n2)).clone_owned();
        let t22 = self.t.view((j + n1, j + n1), (n2, n2)).clone_owned();
        // T11 X - X T22 = T12
        let op = kron(&DMatrix::identity(n2, n2), &t11) - kron(&t22.transpose(), &DMatrix::identity(n1, n1));
        let rhs = DMatrix::from_column_slice(n1 * n2, 1, t12.as_slice());
        let x = solve(&op, &rhs, "block swap")
            .map_err(|_| Error::Separation("adjacent Schur blocks share eigenvalues".into()))?;
        let x = DMatrix::from_column_slice(n1, n2, x.as_slice());
        let mut basis = DMatrix::zeros(m, n2);
        basis.view_mut((0, 0), (n1, n2)).copy_from(&(-x));
        basis.view_mut((n1, 0), (n2, n2)).fill_with_identity();
        let q = full_q(&basis);

        let sub_before = max_abs(&self.t.view((j, j), (m, m)).clone_owned());
        let rows = self.t.view((j, 0), (m, n)).clone_owned();
        self.t.view_mut((j, 0), (m, n)).copy_from(&(q.transpose() * rows));
        let cols = self.t.view((0, j), (n, m)).clone_owned();
        self.t.view_mut((0, j), (n, m)).copy_from(&(cols * &q));
        let zc = self.z.view((0, j), (n, m)).clone_owned();
        self.z.view_mut((0, j), (n, m)).copy_from(&(zc * &q));

        let leak = max_abs(&self.t.view((j + n2, j), (n1, n2)).clone_owned());
        if leak > 1e-10 * sub_before.max(1.0) {
            return Err(Error::Separation(format!("block swap too ill-conditioned (residual {leak:.3e})")));
        }
        self.t.view_mut((j + n2, j), (n1, n2)).fill(0.0);
        if n2 == 2 {
            self.split_if_real(j);
        }
        if n1 == 2 {
            self.split_if_real(j + n2);
        }
        Ok(())
    }

    /// Moves every block whose eigenvalue satisfies `select` to the leading
    /// position, keeping relative order within each group. Returns the
    /// dimension of the leading selected subspace. The predicate is evaluated
    /// on the member with nonnegative imaginary part.
    pub fn reorder<F: Fn(Complex64) -> bool>(&mut self, select: F) -> Result<usize> {
        loop {
            let blocks = self.blocks();
            let flags: Vec<bool> = blocks.iter().map(|&b| select(self.block_eigenvalues(b)[0])).collect();
            let first_unselected = flags.iter().position(|&f| !f);
            let target = match first_unselected {
                Some(u) => flags.iter().enumerate().skip(u + 1).find(|(_, &f)| f).map(|(i, _)| i),
                None => None,
            };
            match target {
                Some(i) => self.swap(blocks[i - 1], blocks[i])?,
                None => {
                    return Ok(blocks.iter().zip(&flags).filter(|(_, &f)| f).map(|(b, _)| b.size).sum());
                }
            }
        }
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.z * &self.t * self.z.transpose()
    }
}
