//! Profiling the likelihood over a discretized near-unit block space.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DeterministicCase, ProfileFit, ProfileOptions, VarLikelihood};
use crate::optim::{golden_section, nelder_mead, NelderMeadOptions};
use crate::spectral::{LambdaFamily, LambdaParam, RegionSpec};
use crate::{Error, Result};
use num_complex::Complex64;

/// Search space for `Λ_lu` together with its discretization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSpace {
    pub family: LambdaFamily,
    pub q: usize,
    pub rho: f64,
    /// Spacing of eigenvalue parameters, anchored at one.
    pub lambda_step: f64,
    pub angle_step: f64,
    /// Polish the grid argmax by a local search between neighbouring nodes.
    pub refine: bool,
}

impl LambdaSpace {
    pub fn new(family: LambdaFamily, q: usize, rho: f64) -> Result<Self> {
        RegionSpec::new(rho)?;
        if q == 0 {
            return Err(Error::InvalidInput("the near-unit block needs q >= 1".into()));
        }
        let one_dim = q == 1 || family == LambdaFamily::Scalar;
        Ok(Self {
            family,
            q,
            rho,
            lambda_step: if one_dim { 0.005 } else { 0.01 },
            angle_step: PI / 16.0,
            refine: true,
        })
    }

    pub fn scalar(q: usize, rho: f64) -> Result<Self> {
        Self::new(LambdaFamily::Scalar, q, rho)
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.lambda_step = step;
        self
    }

    pub fn without_refinement(mut self) -> Self {
        self.refine = false;
        self
    }

    pub fn region(&self) -> RegionSpec {
        RegionSpec::new(self.rho).expect("validated on construction")
    }

    /// Whether the search is over a single scalar.
    pub fn is_one_dimensional(&self) -> bool {
        self.q == 1 || self.family == LambdaFamily::Scalar
    }

    /// Real eigenvalue nodes `1, 1 − h, 1 − 2h, …` down to `ρ`, plus `ρ`.
    pub fn eigen_nodes(&self) -> Vec<f64> {
        let h = self.lambda_step;
        let mut out = Vec::new();
        if h > 0.0 {
            let mut i = 0usize;
            loop {
                let v = 1.0 - i as f64 * h;
                if v < self.rho - 1e-12 {
                    break;
                }
                out.push(v.max(self.rho));
                i += 1;
            }
        } else {
            out.push(1.0);
        }
        if out.last().map_or(true, |&v| (v - self.rho).abs() > 1e-12) {
            out.push(self.rho);
        }
        out.reverse();
        out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);
        out
    }

    fn angle_nodes(&self) -> Vec<f64> {
        let n = ((PI / self.angle_step) - 1e-9).ceil().max(1.0) as usize;
        (0..n).map(|i| i as f64 * self.angle_step).collect()
    }

    fn in_region(&self, z: Complex64) -> bool {
        self.region().contains_lu(z) && z.norm() >= self.rho - 1e-12
    }

    /// Membership of a parameter in the space.
    pub fn contains(&self, param: &LambdaParam) -> bool {
        if param.family != self.family || param.q != self.q || !param.in_domain(self.rho) {
            return false;
        }
        if param.family == LambdaFamily::Normal {
            let nr = param.q - 2 * param.pairs;
            for j in 0..param.pairs {
                let z = Complex64::new(param.theta[nr + 2 * j], param.theta[nr + 2 * j + 1]);
                if !self.in_region(z) {
                    return false;
                }
            }
        }
        true
    }

    pub fn grid(&self) -> Vec<LambdaParam> {
        let nodes = self.eigen_nodes();
        if self.is_one_dimensional() {
            return nodes
                .iter()
                .map(|&v| match self.family {
                    LambdaFamily::Scalar => LambdaParam::scalar(v, self.q),
                    LambdaFamily::Symmetric => LambdaParam::symmetric(&[v], &[]),
                    LambdaFamily::Normal => LambdaParam::normal(&[v], &[], &[]),
                })
                .collect();
        }
        let q = self.q;
        let n_angles = q * (q - 1) / 2;
        let angles = self.angle_nodes();
        let angle_sets = product(&angles, n_angles);
        let max_pairs = if self.family == LambdaFamily::Normal { q / 2 } else { 0 };
        let pair_nodes: Vec<(f64, f64)> = {
            let mut v = Vec::new();
            for &a in &nodes {
                let mut j = 1usize;
                loop {
                    let b = j as f64 * self.lambda_step;
                    let z = Complex64::new(a, b);
                    if z.norm() > 1.0 + 1e-12 || b > 1.0 {
                        break;
                    }
                    if self.in_region(z) {
                        v.push((a, b));
                    }
                    j += 1;
                }
            }
            v
        };
        let mut out = Vec::new();
        for m in 0..=max_pairs {
            let reals = nonincreasing(&nodes, q - 2 * m);
            let pair_idx = nonincreasing_idx(pair_nodes.len(), m);
            for re in &reals {
                for pi in &pair_idx {
                    let pairs: Vec<(f64, f64)> = pi.iter().map(|&i| pair_nodes[i]).collect();
                    let all_equal = m == 0 && re.iter().all(|&x| (x - re[0]).abs() < 1e-15);
                    let rotation_free = all_equal || (m == 1 && q == 2);
                    let sets: Vec<Vec<f64>> =
                        if rotation_free { vec![vec![0.0; n_angles]] } else { angle_sets.clone() };
                    for ang in sets {
                        out.push(match self.family {
                            LambdaFamily::Normal => LambdaParam::normal(re, &pairs, &ang),
                            _ => LambdaParam::symmetric(re, &ang),
                        });
                    }
                }
            }
        }
        out
    }
}

fn product(values: &[f64], len: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

/// Sequences of length `len` drawn from `values` (ascending) in
/// non-increasing order.
fn nonincreasing(values: &[f64], len: usize) -> Vec<Vec<f64>> {
    nonincreasing_idx(values.len(), len)
        .into_iter()
        .map(|idx| idx.into_iter().map(|i| values[i]).collect())
        .collect()
}

fn nonincreasing_idx(n: usize, len: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, len: usize, upper: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for i in (0..upper).rev() {
            prefix.push(i);
            rec(n, len, i + 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if len == 0 {
        out.push(Vec::new());
        return out;
    }
    rec(n, len, n, &mut Vec::new(), &mut out);
    out
}

/// One evaluated node of the search grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridPoint {
    pub param: LambdaParam,
    pub lambda: DMatrix<f64>,
    pub loglik: Option<f64>,
    pub a_hat: Option<DMatrix<f64>>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LambdaProfile {
    pub best_param: LambdaParam,
    pub best_lambda: DMatrix<f64>,
    pub best: ProfileFit,
    pub trace: Vec<GridPoint>,
    /// Whether the local search improved on the best grid node.
    pub refined: bool,
}

impl LambdaProfile {
    pub fn max_loglik(&self) -> f64 {
        self.best.fit.loglik
    }

    pub fn failures(&self) -> usize {
        self.trace.iter().filter(|g| g.loglik.is_none()).count()
    }
}

impl VarLikelihood {
    pub fn profile_lambda(&self, space: &LambdaSpace) -> Result<LambdaProfile> {
        if space.q > self.p {
            return Err(Error::InvalidInput(format!("q = {} exceeds p = {}", space.q, self.p)));
        }
        let grid = space.grid();
        if grid.is_empty() {
            return Err(Error::InvalidInput("empty lambda grid".into()));
        }
        let evaluated: Vec<(GridPoint, Option<ProfileFit>)> = grid
            .into_par_iter()
            .map(|param| {
                let lambda = param.matrix();
                match self.profile_a(&lambda, &ProfileOptions::default()) {
                    Ok(pf) => (
                        GridPoint {
                            param,
                            lambda,
                            loglik: Some(pf.fit.loglik),
                            a_hat: Some(pf.a_hat.clone()),
                            error: None,
                        },
                        Some(pf),
                    ),
                    Err(e) => {
                        (GridPoint { param, lambda, loglik: None, a_hat: None, error: Some(e.to_string()) }, None)
                    }
                }
            })
            .collect();
        let mut best_idx: Option<usize> = None;
        for (i, (g, _)) in evaluated.iter().enumerate() {
            if let Some(v) = g.loglik {
                if best_idx.map_or(true, |b| v > evaluated[b].0.loglik.unwrap_or(f64::NEG_INFINITY)) {
                    best_idx = Some(i);
                }
            }
        }
        let best_idx = best_idx.ok_or_else(|| {
            let msg = evaluated.iter().find_map(|(g, _)| g.error.clone()).unwrap_or_default();
            Error::Internal(format!("every grid point failed; first error: {msg}"))
        })?;
        let mut trace = Vec::with_capacity(evaluated.len());
        let mut best_fit = None;
        for (i, (g, pf)) in evaluated.into_iter().enumerate() {
            if i == best_idx {
                best_fit = pf;
            }
            trace.push(g);
        }
        let mut best = best_fit.expect("best grid point has a fit");
        let mut best_param = trace[best_idx].param.clone();
        let mut refined = false;
        if space.refine && trace.len() > 1 {
            if let Some((param, pf)) = self.refine(space, &trace, best_idx, &best) {
                if pf.fit.loglik > best.fit.loglik {
                    best = pf;
                    best_param = param;
                    refined = true;
                }
            }
        }
        Ok(LambdaProfile { best_lambda: best_param.matrix(), best_param, best, trace, refined })
    }

    fn refine(
        &self,
        space: &LambdaSpace,
        trace: &[GridPoint],
        best_idx: usize,
        best: &ProfileFit,
    ) -> Option<(LambdaParam, ProfileFit)> {
        let warm = ProfileOptions { init: Some(best.a_hat.clone()), ..ProfileOptions::default() };
        let centre = &trace[best_idx].param;
        let eval = |param: &LambdaParam| self.profile_a(&param.matrix(), &warm).ok();
        if space.is_one_dimensional() {
            let v = centre.theta[0];
            let lo = if best_idx > 0 { trace[best_idx - 1].param.theta[0] } else { v };
            let hi = if best_idx + 1 < trace.len() { trace[best_idx + 1].param.theta[0] } else { v };
            if hi - lo <= 0.0 {
                return None;
            }
            let with = |x: f64| {
                let mut p = centre.clone();
                p.theta[0] = x;
                p
            };
            let (x, _) = golden_section(
                |x| eval(&with(x)).map_or(f64::INFINITY, |pf| -pf.fit.loglik),
                lo.max(space.rho),
                hi.min(1.0),
                1e-7,
            );
            let param = with(x);
            return eval(&param).map(|pf| (param, pf));
        }
        let opts = NelderMeadOptions { x_tol: 1e-6, restarts: 1, max_evals: 2000, initial_step: space.lambda_step, ..Default::default() };
        let with = |x: &[f64]| {
            let mut p = centre.clone();
            p.theta = x.to_vec();
            p
        };
        let m = nelder_mead(
            |x| {
                let p = with(x);
                if !space.contains(&p) {
                    return f64::INFINITY;
                }
                eval(&p).map_or(f64::INFINITY, |pf| -pf.fit.loglik)
            },
            &centre.theta,
            &opts,
        );
        let param = with(&m.x);
        eval(&param).map(|pf| (param, pf))
    }
}

/// Maximizes the profile likelihood over the grid of `space`.
pub fn profile_lambda(space: &LambdaSpace, data: &DMatrix<f64>, k: usize, det: DeterministicCase) -> Result<LambdaProfile> {
    VarLikelihood::new(data, k, det)?.profile_lambda(space)
}
