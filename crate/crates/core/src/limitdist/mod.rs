//! Monte Carlo approximation of the limit law of the near-unit-root LR
//! statistic, `tr{∫dW Z̄ᵀ (∫Z̄Z̄ᵀ)⁻¹ ∫Z̄ dWᵀ}`, and persisted quantile tables.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::likelihood::DeterministicCase;
use crate::linalg::{all_finite, cholesky_lower, rcond, spd_sqrt_pair};
use crate::rng::replication_rng;

mod table;

pub use table::{build_table, compute_entry, lookup, Lookup, QuantileTable, TableEntry, TABLE_VERSION};

pub const DEFAULT_STEPS: usize = 2000;
pub const DEFAULT_REPS: usize = 100_000;
pub const DEFAULT_LEVELS: [f64; 6] = [0.5, 0.8, 0.9, 0.95, 0.975, 0.99];
const MAX_REDRAWS: usize = 1000;
const SINGULAR_RCOND: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LimitDistConfig {
    pub q: usize,
    pub c_star: DMatrix<f64>,
    pub det: DeterministicCase,
    pub steps: usize,
    pub reps: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
}

impl LimitDistConfig {
    pub fn new(c_star: DMatrix<f64>, det: DeterministicCase, seed: u64) -> Result<Self> {
        let cfg = Self {
            q: c_star.nrows(),
            c_star,
            det,
            steps: DEFAULT_STEPS,
            reps: DEFAULT_REPS,
            seed,
            levels: DEFAULT_LEVELS.to_vec(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scalar(c: f64, det: DeterministicCase, seed: u64) -> Result<Self> {
        Self::new(DMatrix::from_element(1, 1, c), det, seed)
    }

    pub fn with_steps(mut self, steps: usize) -> Self {
        self.steps = steps;
        self
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_levels(mut self, levels: Vec<f64>) -> Self {
        self.levels = levels;
        self
    }

    pub fn with_c(&self, c_star: DMatrix<f64>) -> Self {
        Self { q: c_star.nrows(), c_star, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q == 0 || self.c_star.shape() != (self.q, self.q) {
            return Err(Error::InvalidInput(format!("C_* is {:?}, expected square of size q >= 1", self.c_star.shape())));
        }
        if !all_finite(&self.c_star) {
            return Err(Error::InvalidInput("C_* has non-finite entries".into()));
        }
        if self.steps < 100 {
            return Err(Error::InvalidInput(format!("steps = {} (need >= 100)", self.steps)));
        }
        if self.reps < 1000 {
            return Err(Error::InvalidInput(format!("reps = {} (need >= 1000)", self.reps)));
        }
        if self.levels.is_empty() || self.levels.iter().any(|&l| !(l > 0.0 && l < 1.0)) {
            return Err(Error::InvalidInput("quantile levels must lie in (0, 1)".into()));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("quantile levels must be strictly increasing".into()));
        }
        Ok(())
    }
}

/// `C_* = Δ^{-1/2} C Δ^{1/2}`.
pub fn c_star(c: &DMatrix<f64>, delta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !c.is_square() || c.shape() != delta.shape() {
        return Err(Error::Dimension(format!("C is {:?}, Delta is {:?}", c.shape(), delta.shape())));
    }
    let (root, inv_root) = spd_sqrt_pair(delta, "Delta")?;
    Ok(inv_root * c * root)
}

/// One replication; `redraws` counts paths discarded for a singular `∫Z̄Z̄ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub value: f64,
    pub redraws: usize,
}

/// Residual of each column of a path sampled at `s = j/(rows−1)` after the
/// L² projection on the deterministic terms, with trapezoid weights.
pub fn detrend(path: &DMatrix<f64>, det: DeterministicCase) -> DMatrix<f64> {
    let nodes = path.nrows();
    if det == DeterministicCase::None || nodes < 2 {
        return path.clone();
    }
    let h = 1.0 / (nodes - 1) as f64;
    let w = |j: usize| if j == 0 || j == nodes - 1 { 0.5 * h } else { h };
    let s = |j: usize| j as f64 * h;
    let mut out = path.clone();
    for mut col in out.column_iter_mut() {
        let (mut m0, mut m1) = (0.0, 0.0);
        for (j, x) in col.iter().enumerate() {
            m0 += w(j) * x;
            m1 += w(j) * s(j) * x;
        }
        match det {
            DeterministicCase::Const => col.add_scalar_mut(-m0),
            DeterministicCase::Trend => {
                let (g00, g01, g11) = (0..nodes).fold((0.0, 0.0, 0.0), |(a, b, c), j| {
                    (a + w(j), b + w(j) * s(j), c + w(j) * s(j) * s(j))
                });
                let d = g00 * g11 - g01 * g01;
                let b0 = (g11 * m0 - g01 * m1) / d;
                let b1 = (g00 * m1 - g01 * m0) / d;
                for (j, x) in col.iter_mut().enumerate() {
                    *x -= b0 + b1 * s(j);
                }
            }
            DeterministicCase::None => unreachable!(),
        }
    }
    out
}

/// Functional of a given increment path (`steps × q`, rows are `ΔW_j`).
/// `None` when `∫Z̄Z̄ᵀ` is numerically singular.
pub fn statistic_from_increments(dw: &DMatrix<f64>, c_star: &DMatrix<f64>, det: DeterministicCase) -> Option<f64> {
    let (steps, q) = dw.shape();
    let step = DMatrix::identity(q, q) + c_star / steps as f64;
    let mut z = DMatrix::zeros(steps + 1, q);
    for j in 1..=steps {
        for a in 0..q {
            let mut v = dw[(j - 1, a)];
            for b in 0..q {
                v += step[(a, b)] * z[(j - 1, b)];
            }
            z[(j, a)] = v;
        }
    }
    let zbar = detrend(&z, det);
    let lagged = zbar.rows(0, steps);
    let s1 = dw.transpose() * lagged;
    let s2 = lagged.transpose() * lagged / steps as f64;
    if !(rcond(&s2) > SINGULAR_RCOND) {
        return None;
    }
    let l = cholesky_lower(&s2, "S2").ok()?;
    let x = l.solve_lower_triangular(&s1.transpose())?;
    let v = x.norm_squared();
    v.is_finite().then_some(v)
}

/// Replication `rep_index` of the limit statistic, redrawing on singularity.
pub fn simulate_statistic(config: &LimitDistConfig, rep_index: u64) -> Result<Draw> {
    config.validate()?;
    let mut rng = replication_rng(config.seed, rep_index);
    let scale = 1.0 / (config.steps as f64).sqrt();
    for redraws in 0..MAX_REDRAWS {
        let dw = DMatrix::from_fn(config.steps, config.q, |_, _| rng.sample::<f64, _>(StandardNormal) * scale);
        if let Some(value) = statistic_from_increments(&dw, &config.c_star, config.det) {
            return Ok(Draw { value, redraws });
        }
    }
    Err(Error::Internal(format!("replication {rep_index}: {MAX_REDRAWS} singular paths in a row")))
}

/// All `reps` replications in index order, with the total redraw count.
pub fn simulate_sample(config: &LimitDistConfig) -> Result<(Vec<f64>, usize)> {
    config.validate()?;
    let draws: Vec<Draw> = (0..config.reps as u64)
        .into_par_iter()
        .map(|i| simulate_statistic(config, i))
        .collect::<Result<_>>()?;
    let redraws = draws.iter().map(|d| d.redraws).sum();
    Ok((draws.into_iter().map(|d| d.value).collect(), redraws))
}
