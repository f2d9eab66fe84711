//! Likelihood-ratio statistics for the near-unit block and for single
//! quasi-cointegrating coefficients, and the confidence sets built from them.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::likelihood::{
    DeterministicCase, FitResult, FixedEntry, LambdaProfile, LambdaSpace, ProfileFit, ProfileOptions, VarLikelihood,
};
use crate::limitdist::{c_star, lookup, QuantileTable};
use crate::spectral::LambdaParam;
use crate::stats::chi2_quantile;

/// LR values below zero by more than this indicate an optimizer failure.
pub const LR_SLACK: f64 = 1e-8;
const BISECTION_TOL: f64 = 1e-6;
const MAX_EXPANSIONS: usize = 60;
const SCAN_POINTS: usize = 21;

#[derive(Debug, Clone, PartialEq)]
pub enum LrKind {
    Lambda,
    Coefficient { i: usize, j: usize, a0: f64 },
}

#[derive(Debug, Clone)]
pub struct LrStatistic {
    pub kind: LrKind,
    /// Clamped at zero.
    pub value: f64,
    pub raw: f64,
    pub lambda0: DMatrix<f64>,
    pub unrestricted: FitResult,
    pub restricted: FitResult,
}

fn clamp_lr(raw: f64, what: &str) -> Result<f64> {
    if raw < -LR_SLACK {
        return Err(Error::Internal(format!("{what}: LR = {raw:e} is negative; the unrestricted maximum was missed")));
    }
    if raw < 0.0 {
        log::debug!("{what}: LR {raw:e} clamped to 0");
    }
    Ok(raw.max(0.0))
}

fn check_alpha(alpha: f64, name: &str) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{name} = {alpha} outside (0, 1)")))
    }
}

fn check_entry(a: &DMatrix<f64>, i: usize, j: usize) -> Result<()> {
    if i < a.nrows() && j < a.ncols() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("entry ({i}, {j}) outside the {}x{} matrix A", a.nrows(), a.ncols())))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Minimal union of possibly overlapping intervals, sorted.
pub fn union_of(mut pieces: Vec<Interval>) -> Vec<Interval> {
    pieces.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out: Vec<Interval> = Vec::with_capacity(pieces.len());
    for p in pieces {
        match out.last_mut() {
            Some(last) if p.lo <= last.hi => last.hi = last.hi.max(p.hi),
            _ => out.push(p),
        }
    }
    out
}

fn hull(pieces: &[Interval]) -> Option<Interval> {
    let lo = pieces.iter().map(|p| p.lo).fold(f64::INFINITY, f64::min);
    let hi = pieces.iter().map(|p| p.hi).fold(f64::NEG_INFINITY, f64::max);
    (lo <= hi).then_some(Interval { lo, hi })
}

#[derive(Debug, Clone)]
pub struct LambdaNode {
    pub param: LambdaParam,
    pub lambda: DMatrix<f64>,
    pub lr: Option<f64>,
    /// Localization matrix passed to the table, `n(Λ₀ − I)` or its `Δ̂` transform.
    pub c: Option<DMatrix<f64>>,
    pub critical: Option<f64>,
    /// Distance to the nearest table node when the lookup was not exact.
    pub lookup_distance: f64,
    pub accepted: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct LambdaConfidenceSet {
    pub level: f64,
    pub nodes: Vec<LambdaNode>,
    /// Maximal runs of accepted adjacent grid values (one-dimensional spaces only).
    pub intervals: Vec<Interval>,
    pub argmax: LambdaParam,
    pub max_loglik: f64,
    pub grid_step: f64,
    pub failed_fits: usize,
}

impl LambdaConfidenceSet {
    pub fn accepted(&self) -> impl Iterator<Item = &LambdaNode> {
        self.nodes.iter().filter(|n| n.accepted)
    }

    pub fn is_empty(&self) -> bool {
        !self.nodes.iter().any(|n| n.accepted)
    }
}

#[derive(Debug, Clone)]
pub struct CoefficientSet {
    pub level: f64,
    pub i: usize,
    pub j: usize,
    pub lambda0: DMatrix<f64>,
    pub estimate: f64,
    pub critical: f64,
    pub pieces: Vec<Interval>,
    pub hull: Interval,
    pub standard_error: f64,
    pub diagnostics: Vec<String>,
}

impl CoefficientSet {
    pub fn contains(&self, a: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(a))
    }

    pub fn is_bounded(&self) -> bool {
        self.hull.lo.is_finite() && self.hull.hi.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct BonferroniSet {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Overall nominal coverage `1 − α₁ − α₂`.
    pub level: f64,
    pub lambda_set: LambdaConfidenceSet,
    pub conditional: Vec<CoefficientSet>,
    pub pieces: Vec<Interval>,
    pub hull: Interval,
    /// Set when no Λ₀ was accepted and the argmax-conditional interval is reported instead.
    pub fallback: bool,
    pub warnings: Vec<String>,
}

impl BonferroniSet {
    pub fn contains(&self, a: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(a))
    }
}

impl VarLikelihood {
    /// `LR_n(Λ₀)` against a precomputed profile over the Λ space.
    pub fn lr_lambda_given(&self, lambda0: &DMatrix<f64>, profile: &LambdaProfile) -> Result<LrStatistic> {
        let null = self.profile_a(lambda0, &ProfileOptions::default())?;
        let best = if null.fit.loglik > profile.best.fit.loglik { &null } else { &profile.best };
        let raw = 2.0 * (best.fit.loglik - null.fit.loglik);
        Ok(LrStatistic {
            kind: LrKind::Lambda,
            value: clamp_lr(raw, "LR(Lambda0)")?,
            raw,
            lambda0: lambda0.clone(),
            unrestricted: best.fit.clone(),
            restricted: null.fit,
        })
    }

    pub fn lr_lambda(&self, lambda0: &DMatrix<f64>, space: &LambdaSpace) -> Result<LrStatistic> {
        if lambda0.shape() != (space.q, space.q) {
            return Err(Error::Dimension(format!("Lambda0 is {:?}, space has q = {}", lambda0.shape(), space.q)));
        }
        let profile = self.profile_lambda(space)?;
        self.lr_lambda_given(lambda0, &profile)
    }

    fn pinned(&self, lambda0: &DMatrix<f64>, i: usize, j: usize, a0: f64, init: &DMatrix<f64>) -> Result<ProfileFit> {
        let mut start = init.clone();
        start[(i, j)] = a0;
        let opts = ProfileOptions {
            init: Some(start),
            fixed_entry: Some(FixedEntry { i, j, value: a0 }),
            ..ProfileOptions::default()
        };
        self.profile_a(lambda0, &opts)
    }

    /// `LR_n(a₀; Λ₀)` given the maximizer over `A` at `Λ₀`.
    pub fn lr_coefficient_given(&self, a0: f64, i: usize, j: usize, lambda0: &DMatrix<f64>, free: &ProfileFit) -> Result<LrStatistic> {
        check_entry(&free.a_hat, i, j)?;
        let pinned = self.pinned(lambda0, i, j, a0, &free.a_hat)?;
        let mut unrestricted = free.fit.clone();
        if pinned.fit.loglik > unrestricted.loglik + LR_SLACK {
            // the pinned optimum is feasible for the free problem; restart from it
            let again = self.profile_a(lambda0, &ProfileOptions { init: Some(pinned.a_hat.clone()), ..Default::default() })?;
            log::debug!("LR(a0): free maximum improved by a restart from the pinned optimum");
            if again.fit.loglik > unrestricted.loglik {
                unrestricted = again.fit;
            }
        }
        let raw = 2.0 * (unrestricted.loglik - pinned.fit.loglik);
        Ok(LrStatistic {
            kind: LrKind::Coefficient { i, j, a0 },
            value: clamp_lr(raw, "LR(a0; Lambda0)")?,
            raw,
            lambda0: lambda0.clone(),
            unrestricted,
            restricted: pinned.fit,
        })
    }

    pub fn lr_coefficient(&self, a0: f64, i: usize, j: usize, lambda0: &DMatrix<f64>) -> Result<LrStatistic> {
        let free = self.profile_a(lambda0, &ProfileOptions::default())?;
        self.lr_coefficient_given(a0, i, j, lambda0, &free)
    }

    /// Table coordinate of `Λ₀`: `C = n(Λ₀ − I)`, or `Δ̂^{-1/2} C Δ̂^{1/2}` with
    /// `Δ̂ = L_luᵀ Σ̂ L_lu` from the restricted fit at `(A, Λ₀)` when `q ≥ 2`.
    pub fn localization(&self, lambda0: &DMatrix<f64>, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let q = lambda0.nrows();
        let c = (lambda0 - DMatrix::identity(q, q)) * self.n_eff() as f64;
        if q == 1 {
            return Ok(c);
        }
        let fit = self.restricted(a, lambda0)?;
        let s = fit.split.ok_or_else(|| Error::Separation("restricted fit has no spectral split".into()))?;
        let delta = s.l_lu.transpose() * self.sigma_hat() * &s.l_lu;
        c_star(&c, &delta)
    }

    /// Grid nodes accepted by `LR_n(Λ₀) ≤ c_{1−α₁}[C]` with `C = n(Λ₀ − I)`,
    /// transformed to `Δ̂^{-1/2} C Δ̂^{1/2}` when `q ≥ 2`.
    pub fn ci_lambda(&self, alpha1: f64, space: &LambdaSpace, table: &QuantileTable) -> Result<LambdaConfidenceSet> {
        check_alpha(alpha1, "alpha1")?;
        if table.q != space.q {
            return Err(Error::TableCoverage(format!("table has q = {}, lambda space has q = {}", table.q, space.q)));
        }
        if table.det != self.det() {
            log::warn!("table was simulated for det = {}, data use det = {}", table.det.as_str(), self.det().as_str());
        }
        let level = 1.0 - alpha1;
        table.level_index(level)?;
        let profile = self.profile_lambda(space)?;
        let max = profile.max_loglik();
        let q = space.q;
        let mut missing = Vec::new();
        let mut nodes: Vec<LambdaNode> = profile
            .trace
            .par_iter()
            .map(|g| {
                let mut node = LambdaNode {
                    param: g.param.clone(),
                    lambda: g.lambda.clone(),
                    lr: None,
                    c: None,
                    critical: None,
                    lookup_distance: 0.0,
                    accepted: false,
                    error: g.error.clone(),
                };
                let Some(ll) = g.loglik else { return node };
                match clamp_lr(2.0 * (max - ll), "LR(Lambda0)") {
                    Ok(v) => node.lr = Some(v),
                    Err(e) => node.error = Some(e.to_string()),
                }
                let a = g.a_hat.clone().unwrap_or_else(|| DMatrix::zeros(self.p() - q, q));
                let c = self.localization(&g.lambda, &a);
                match c {
                    Ok(c) => node.c = Some(c),
                    Err(e) => node.error = Some(e.to_string()),
                }
                node
            })
            .collect();
        for node in &mut nodes {
            let Some(c) = &node.c else { continue };
            match lookup(table, c, level) {
                Ok(l) => {
                    node.critical = Some(l.value);
                    node.lookup_distance = l.distance;
                    node.accepted = node.lr.is_some_and(|v| v <= l.value);
                }
                Err(Error::TableCoverage(_)) => {
                    let cells: Vec<String> = c.transpose().iter().map(|x| format!("{}", (x * 1e9).round() / 1e9)).collect();
                    missing.push(format!("[{}]", cells.join("; ")));
                }
                Err(e) => return Err(e),
            }
        }
        if !missing.is_empty() {
            let shown = if missing.len() > 4 {
                format!("{}, ... ({} points)", missing[..3].join(", "), missing.len())
            } else {
                missing.join(", ")
            };
            return Err(Error::TableCoverage(format!("table lacks coverage for C = {shown}")));
        }
        let intervals = if space.is_one_dimensional() {
            let mut sorted: Vec<&LambdaNode> = nodes.iter().collect();
            sorted.sort_by(|a, b| a.param.theta[0].total_cmp(&b.param.theta[0]));
            let mut out: Vec<Interval> = Vec::new();
            let mut open = false;
            for nd in sorted {
                let x = nd.param.theta[0];
                match (nd.accepted, open) {
                    (true, true) => out.last_mut().expect("open interval").hi = x,
                    (true, false) => {
                        out.push(Interval { lo: x, hi: x });
                        open = true;
                    }
                    (false, _) => open = false,
                }
            }
            out
        } else {
            Vec::new()
        };
        Ok(LambdaConfidenceSet {
            level,
            failed_fits: profile.failures(),
            argmax: profile.best_param.clone(),
            max_loglik: max,
            grid_step: space.lambda_step,
            nodes,
            intervals,
        })
    }

    /// `{a₀ : LR_n(a₀; Λ₀) ≤ χ²₁(1 − α₂)}` by bracketing and bisection from `Â_ij`.
    pub fn ci_coefficient_given_lambda(&self, alpha2: f64, i: usize, j: usize, lambda0: &DMatrix<f64>) -> Result<CoefficientSet> {
        check_alpha(alpha2, "alpha2")?;
        let crit = chi2_quantile(1.0, 1.0 - alpha2)?;
        let free = self.profile_a(lambda0, &ProfileOptions::default())?;
        check_entry(&free.a_hat, i, j)?;
        let centre = free.a_hat[(i, j)];
        let mut diagnostics = Vec::new();
        let lr = |a0: f64| -> f64 {
            self.pinned(lambda0, i, j, a0, &free.a_hat)
                .map(|p| 2.0 * (free.fit.loglik - p.fit.loglik))
                .unwrap_or(f64::INFINITY)
        };
        let g = |a0: f64| lr(a0) - crit;

        let h = 1e-3 * (1.0 + centre.abs());
        let curv = (lr(centre + h) + lr(centre - h)) / (2.0 * h * h);
        let se = if curv.is_finite() && curv > 0.0 { 1.0 / curv.sqrt() } else { 1.0 + centre.abs() };

        let mut ends = [f64::NAN; 2];
        for (side, dir) in [(0, -1.0), (1, 1.0)] {
            let mut inner = 0.0;
            let mut w = 2.0 * se;
            let mut found = false;
            for _ in 0..=MAX_EXPANSIONS {
                if g(centre + dir * w) > 0.0 {
                    found = true;
                    break;
                }
                inner = w;
                w *= 2.0;
            }
            if !found {
                diagnostics.push(format!(
                    "profile LR stays below {crit:.4} out to {:.3e}; interval unbounded on the {} side",
                    w / 2.0,
                    if dir < 0.0 { "lower" } else { "upper" }
                ));
                ends[side] = dir * f64::INFINITY;
                continue;
            }
            ends[side] = centre + dir * bisect(|d| g(centre + dir * d), inner, w);
        }

        // a scan across the bracket detects interior excursions above the threshold
        let lo_scan = if ends[0].is_finite() { ends[0] } else { centre - 2.0 * se };
        let hi_scan = if ends[1].is_finite() { ends[1] } else { centre + 2.0 * se };
        let xs: Vec<f64> = (0..SCAN_POINTS)
            .map(|m| lo_scan + (hi_scan - lo_scan) * m as f64 / (SCAN_POINTS - 1) as f64)
            .collect();
        let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
        let mut pieces = Vec::new();
        let mut start = Some(ends[0]);
        for m in 1..SCAN_POINTS {
            let inside = m == SCAN_POINTS - 1 || gs[m] <= 0.0;
            match (start, inside) {
                (Some(lo), false) => {
                    pieces.push(Interval { lo, hi: bisect_between(&g, xs[m - 1], xs[m]) });
                    start = None;
                }
                (None, true) => start = Some(bisect_between(&g, xs[m], xs[m - 1])),
                _ => {}
            }
        }
        if let Some(lo) = start {
            pieces.push(Interval { lo, hi: ends[1] });
        }
        if pieces.len() > 1 {
            diagnostics.push(format!("profile LR crosses the threshold inside the bracket; {} pieces", pieces.len()));
        }
        // moving away from the estimate the LR should not fall
        let violations = (1..SCAN_POINTS)
            .filter(|&m| {
                if xs[m] <= centre {
                    gs[m] > gs[m - 1] + 1e-9
                } else {
                    xs[m - 1] >= centre && gs[m] < gs[m - 1] - 1e-9
                }
            })
            .count();
        if violations > 0 {
            diagnostics.push(format!("{violations} non-monotone steps in the profile LR scan"));
        }
        let hull = Interval { lo: ends[0], hi: ends[1] };
        Ok(CoefficientSet {
            level: 1.0 - alpha2,
            i,
            j,
            lambda0: lambda0.clone(),
            estimate: centre,
            critical: crit,
            pieces,
            hull,
            standard_error: se,
            diagnostics,
        })
    }

    /// Union over `Λ₀ ∈ 𝒞_Λ(α₁)` of the conditional intervals at level `1 − α₂`.
    pub fn bonferroni_ci(
        &self,
        alpha1: f64,
        alpha2: f64,
        i: usize,
        j: usize,
        space: &LambdaSpace,
        table: &QuantileTable,
    ) -> Result<BonferroniSet> {
        check_alpha(alpha1, "alpha1")?;
        check_alpha(alpha2, "alpha2")?;
        if alpha1 + alpha2 >= 1.0 {
            return Err(Error::InvalidInput(format!("alpha1 + alpha2 = {} must be below 1", alpha1 + alpha2)));
        }
        let lambda_set = self.ci_lambda(alpha1, space, table)?;
        let mut warnings = Vec::new();
        let mut targets: Vec<DMatrix<f64>> = lambda_set.accepted().map(|n| n.lambda.clone()).collect();
        let fallback = targets.is_empty();
        if fallback {
            let best = lambda_set
                .nodes
                .iter()
                .filter(|n| n.lr.is_some())
                .min_by(|a, b| a.lr.unwrap_or(f64::INFINITY).total_cmp(&b.lr.unwrap_or(f64::INFINITY)))
                .ok_or_else(|| Error::Internal("no grid point could be evaluated".into()))?;
            let msg = "confidence set for Lambda is empty on this grid; reporting the interval conditional on the grid argmax";
            log::warn!("{msg}");
            warnings.push(msg.to_string());
            targets.push(best.lambda.clone());
        }
        let conditional: Vec<CoefficientSet> = targets
            .par_iter()
            .map(|l| self.ci_coefficient_given_lambda(alpha2, i, j, l))
            .collect::<Result<_>>()?;
        let pieces = union_of(conditional.iter().flat_map(|c| c.pieces.iter().copied()).collect());
        let hull = hull(&pieces).ok_or_else(|| Error::Internal("empty union of conditional intervals".into()))?;
        Ok(BonferroniSet {
            alpha1,
            alpha2,
            level: 1.0 - alpha1 - alpha2,
            lambda_set,
            conditional,
            pieces,
            hull,
            fallback,
            warnings,
        })
    }
}

/// Root of an increasing-then-positive `f` on `[inner, outer]` with `f(inner) ≤ 0 < f(outer)`.
fn bisect(f: impl Fn(f64) -> f64, mut inner: f64, mut outer: f64) -> f64 {
    while (outer - inner).abs() > BISECTION_TOL {
        let mid = 0.5 * (inner + outer);
        if f(mid) > 0.0 {
            outer = mid;
        } else {
            inner = mid;
        }
    }
    0.5 * (inner + outer)
}

/// Boundary between an accepted point `inside` and a rejected point `outside`.
fn bisect_between(f: &impl Fn(f64) -> f64, inside: f64, outside: f64) -> f64 {
    bisect(|t| f(inside + t * (outside - inside)), 0.0, 1.0) * (outside - inside) + inside
}

pub fn lr_lambda(
    lambda0: &DMatrix<f64>,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
    space: &LambdaSpace,
) -> Result<LrStatistic> {
    VarLikelihood::new(data, k, det)?.lr_lambda(lambda0, space)
}

pub fn lr_coefficient(
    a0: f64,
    i: usize,
    j: usize,
    lambda0: &DMatrix<f64>,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
) -> Result<LrStatistic> {
    VarLikelihood::new(data, k, det)?.lr_coefficient(a0, i, j, lambda0)
}

pub fn ci_lambda(
    alpha1: f64,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
    space: &LambdaSpace,
    table: &QuantileTable,
) -> Result<LambdaConfidenceSet> {
    VarLikelihood::new(data, k, det)?.ci_lambda(alpha1, space, table)
}

pub fn ci_coefficient_given_lambda(
    alpha2: f64,
    i: usize,
    j: usize,
    lambda0: &DMatrix<f64>,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
) -> Result<CoefficientSet> {
    VarLikelihood::new(data, k, det)?.ci_coefficient_given_lambda(alpha2, i, j, lambda0)
}

#[allow(clippy::too_many_arguments)]
pub fn bonferroni_ci(
    alpha1: f64,
    alpha2: f64,
    i: usize,
    j: usize,
    data: &DMatrix<f64>,
    k: usize,
    det: DeterministicCase,
    space: &LambdaSpace,
    table: &QuantileTable,
) -> Result<BonferroniSet> {
    VarLikelihood::new(data, k, det)?.bonferroni_ci(alpha1, alpha2, i, j, space, table)
}
