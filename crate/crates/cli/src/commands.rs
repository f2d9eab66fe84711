//! One function per subcommand, each returning a [`Report`].

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use qcvar::dgp::{simulate_replication, DgpSpec};
use qcvar::inference::Interval;
use qcvar::likelihood::{DeterministicCase, LambdaSpace, VarLikelihood};
use qcvar::limitdist::{build_table, lookup, LimitDistConfig, QuantileTable};
use qcvar::representation::{irf, qcs_basis};
use qcvar::spectral::{
    classify, half_life_to_radius, radius_to_half_life, roots, split, Classification, HalfLife, RegionSpec, RootClass,
};
use qcvar::stats::chi2_quantile;
use qcvar::{LambdaFamily, RootSet, VarCoefficients};
use sha2::{Digest, Sha256};

use crate::args::*;
use crate::error::{CliError, CliResult};
use crate::ingest::{ingest_csv, Dataset};
use crate::output::{fmt_num, round_sig, Cell, Report, Table};

type Config = BTreeMap<String, String>;

fn num(x: f64) -> String {
    fmt_num(x)
}

fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

fn file_sha256(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `(ρ, half-life)` from whichever of the two was given.
fn resolve_region(r: &Region) -> CliResult<(f64, HalfLife)> {
    match (r.rho, r.half_life) {
        (Some(rho), None) => {
            RegionSpec::new(rho)?;
            Ok((rho, radius_to_half_life(rho)?))
        }
        (None, Some(h)) => Ok((half_life_to_radius(h)?, HalfLife::Periods(h))),
        _ => Err(input("give exactly one of --rho and --half-life")),
    }
}

fn half_life_text(h: HalfLife) -> String {
    match h {
        HalfLife::Periods(x) => num(x),
        HalfLife::Infinite => "inf".into(),
    }
}

fn region_config(cfg: &mut Config, rho: f64, h: HalfLife) {
    cfg.insert("rho".into(), num(rho));
    cfg.insert("half_life".into(), half_life_text(h));
}

fn parse_det(s: &str) -> CliResult<DeterministicCase> {
    Ok(s.parse()?)
}

/// One-based `"i,j"` to zero-based indices.
fn parse_coef(s: &str) -> CliResult<(usize, usize)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || input(format!("--coef expects 'i,j' with one-based indices, got '{s}'"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let i: usize = parts[0].parse().map_err(|_| bad())?;
    let j: usize = parts[1].parse().map_err(|_| bad())?;
    if i == 0 || j == 0 {
        return Err(bad());
    }
    Ok((i - 1, j - 1))
}

fn parse_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| input(format!("{what}: bad number '{x}'"))))
        .collect()
}

fn matrix_from_json(v: &serde_json::Value, what: &str) -> CliResult<DMatrix<f64>> {
    let bad = || input(format!("{what} must be a non-empty list of equal-length numeric rows"));
    let rows = v.as_array().filter(|r| !r.is_empty()).ok_or_else(bad)?;
    let parsed: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.as_array().ok_or_else(bad)?.iter().map(|x| x.as_f64().ok_or_else(bad)).collect())
        .collect::<CliResult<_>>()?;
    let m = parsed[0].len();
    if m == 0 || parsed.iter().any(|r| r.len() != m) {
        return Err(bad());
    }
    Ok(DMatrix::from_fn(parsed.len(), m, |i, j| parsed[i][j]))
}

/// `[[[..], ..], ..]` or `{"phi": [...]}`, one matrix per lag.
fn parse_coeffs(text: &str) -> CliResult<VarCoefficients> {
    let v: serde_json::Value = serde_json::from_str(text).map_err(|e| input(format!("--coeffs: {e}")))?;
    let list = v.get("phi").unwrap_or(&v);
    let mats = list.as_array().filter(|l| !l.is_empty()).ok_or_else(|| input("--coeffs must list at least one lag matrix"))?;
    let phi = mats.iter().map(|m| matrix_from_json(m, "each lag matrix")).collect::<CliResult<Vec<_>>>()?;
    Ok(VarCoefficients::new(phi)?)
}

fn coeffs_text(c: &VarCoefficients) -> String {
    let mats: Vec<Vec<Vec<f64>>> = c
        .phi()
        .iter()
        .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().map(|&x| round_sig(x)).collect()).collect())
        .collect();
    serde_json::to_string(&mats).expect("numeric json")
}

fn load(path: &Path, cfg: &mut Config, report_notes: &mut Vec<String>) -> CliResult<Dataset> {
    let data = ingest_csv(path)?;
    cfg.insert("data".into(), path.display().to_string());
    cfg.insert("data_sha256".into(), file_sha256(path)?);
    cfg.insert("series".into(), data.names.join(","));
    if let Some(col) = &data.dropped {
        let msg = format!("dropped leading non-numeric column '{col}'");
        eprintln!("notice: {msg}");
        report_notes.push(msg);
    }
    Ok(data)
}

fn matrix_table(name: &str, m: &DMatrix<f64>) -> Table {
    let mut t = Table::new(name, &["row", "col", "value"]);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            t.push(vec![(i + 1).into(), (j + 1).into(), m[(i, j)].into()]);
        }
    }
    t
}

fn phi_table(c: &VarCoefficients) -> Table {
    let mut t = Table::new("phi", &["lag", "row", "col", "value"]);
    for (l, m) in c.phi().iter().enumerate() {
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                t.push(vec![(l + 1).into(), (i + 1).into(), (j + 1).into(), m[(i, j)].into()]);
            }
        }
    }
    t
}

fn roots_table(rs: &RootSet, cls: &Classification) -> Table {
    let mut t = Table::new("roots", &["index", "re", "im", "modulus", "dist_to_one", "class", "half_life"]);
    for (i, (z, c)) in rs.roots.iter().zip(&cls.flags).enumerate() {
        let hl = match radius_to_half_life(z.norm()) {
            Ok(h) => Cell::Text(half_life_text(h)),
            Err(_) => Cell::Empty,
        };
        let class = match c {
            RootClass::NearUnit => "lu",
            RootClass::Stable => "st",
        };
        t.push(vec![
            (i + 1).into(),
            z.re.into(),
            z.im.into(),
            z.norm().into(),
            (1.0 - z).norm().into(),
            class.into(),
            hl,
        ]);
    }
    t
}

/// The requested `q`, or the number of roots classified as near-unit.
fn resolve_q(requested: Option<usize>, cls: &Classification, p: usize, report: &mut Report) -> CliResult<usize> {
    let q = requested.unwrap_or(cls.q);
    if q > p {
        return Err(input(format!("q = {q} exceeds the number of series p = {p}")));
    }
    if q != cls.q {
        report.note(format!("q = {q} requested; {} root(s) lie in the near-unit region", cls.q));
    }
    Ok(q)
}

fn space(search: &Search, q: usize, rho: f64, cfg: &mut Config) -> CliResult<LambdaSpace> {
    let family: LambdaFamily = search.family.parse()?;
    let mut s = LambdaSpace::new(family, q, rho)?;
    if let Some(h) = search.grid_step {
        if !(h > 0.0 && h < 1.0) {
            return Err(input(format!("--grid-step {h} outside (0, 1)")));
        }
        s = s.with_step(h);
    }
    cfg.insert("family".into(), search.family.clone());
    cfg.insert("grid_step".into(), num(s.lambda_step));
    Ok(s)
}

fn model_config(m: &Model, cfg: &mut Config) {
    cfg.insert("k".into(), m.k.to_string());
    cfg.insert("det".into(), m.det.clone());
}

fn base_config(seed: u64) -> Config {
    let mut cfg = Config::new();
    cfg.insert("seed".into(), seed.to_string());
    cfg
}

/// Fits OLS, classifies roots and resolves `q`.
struct Prepared {
    lik: VarLikelihood,
    roots: RootSet,
    classification: Classification,
    q: usize,
    rho: f64,
}

fn prepare(model: &Model, region: &Region, q: Option<usize>, cfg: &mut Config, report: &mut Report) -> CliResult<Prepared> {
    let data = load(&model.data, cfg, &mut report.notes)?;
    model_config(model, cfg);
    let (rho, h) = resolve_region(region)?;
    region_config(cfg, rho, h);
    let lik = VarLikelihood::new(&data.values, model.k, parse_det(&model.det)?)?;
    let ols = lik.ols()?;
    let rs = roots(&ols.coeffs)?;
    let cls = classify(&rs, &RegionSpec::new(rho)?)?;
    report.notes.extend(cls.warnings.iter().cloned());
    let q = resolve_q(q, &cls, data.p(), report)?;
    cfg.insert("q".into(), q.to_string());
    Ok(Prepared { lik, roots: rs, classification: cls, q, rho })
}

fn need_block(q: usize) -> CliResult<()> {
    if q == 0 {
        return Err(input("no near-unit roots at this rho; pass --q or widen the region"));
    }
    Ok(())
}

pub fn fit(a: &FitArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let mut report = Report::new("fit", Config::new());
    let pr = prepare(&a.model, &a.region, a.search.q, &mut cfg, &mut report)?;
    let lik = &pr.lik;
    let ols = lik.ols()?;
    report.set("n_eff", lik.n_eff());
    report.set("p", lik.p());
    report.set("q", pr.q);
    report.set("ols_loglik", ols.loglik);
    report.set("ols_status", format!("{:?}", ols.status));
    report.tables.push(phi_table(&ols.coeffs));
    report.tables.push(matrix_table("sigma_hat", &ols.sigma_hat));
    report.tables.push(roots_table(&pr.roots, &pr.classification));
    if pr.q > 0 {
        let sp = space(&a.search, pr.q, pr.rho, &mut cfg)?;
        let profile = lik.profile_lambda(&sp)?;
        let fit = &profile.best.fit;
        report.set("profile_loglik", fit.loglik);
        report.set("profile_status", format!("{:?}", fit.status));
        report.set("grid_failures", profile.failures());
        let moduli = profile.best_param.moduli();
        for (i, m) in moduli.iter().enumerate() {
            report.set(&format!("lambda_hat_modulus_{}", i + 1), *m);
            if let Ok(h) = radius_to_half_life(*m) {
                report.set(&format!("lambda_hat_half_life_{}", i + 1), half_life_text(h));
            }
        }
        report.tables.push(matrix_table("lambda_hat", &profile.best_lambda));
        report.tables.push(matrix_table("a_hat", &profile.best.a_hat));
        if let Some(s) = &fit.split {
            report.notes.extend(s.warnings.iter().cloned());
            if s.r() > 0 {
                report.tables.push(matrix_table("beta", &qcs_basis(s).beta));
            }
        }
    } else {
        report.note("no near-unit roots at this rho; profile estimates skipped");
    }
    report.config = cfg;
    Ok(report)
}

fn coefficients_from(source: &Source, opts: &SourceOpts, cfg: &mut Config, report: &mut Report) -> CliResult<VarCoefficients> {
    match (&source.data, &source.coeffs) {
        (Some(path), None) => {
            let data = load(path, cfg, &mut report.notes)?;
            cfg.insert("k".into(), opts.k.to_string());
            cfg.insert("det".into(), opts.det.clone());
            let lik = VarLikelihood::new(&data.values, opts.k, parse_det(&opts.det)?)?;
            Ok(lik.ols()?.coeffs)
        }
        (None, Some(text)) => {
            let c = parse_coeffs(text)?;
            cfg.insert("coeffs".into(), coeffs_text(&c));
            Ok(c)
        }
        _ => Err(input("give exactly one of --data and --coeffs")),
    }
}

pub fn roots_cmd(a: &RootsArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let mut report = Report::new("roots", Config::new());
    let coeffs = coefficients_from(&a.source, &a.opts, &mut cfg, &mut report)?;
    let (rho, h) = resolve_region(&a.region)?;
    region_config(&mut cfg, rho, h);
    let rs = roots(&coeffs)?;
    let cls = classify(&rs, &RegionSpec::new(rho)?)?;
    report.set("p", coeffs.p());
    report.set("k", coeffs.k());
    report.set("q", cls.q);
    report.notes.extend(cls.warnings.iter().cloned());
    report.tables.push(roots_table(&rs, &cls));
    report.config = cfg;
    Ok(report)
}

pub fn irf_cmd(a: &IrfArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let mut report = Report::new("irf", Config::new());
    let coeffs = coefficients_from(&a.source, &a.opts, &mut cfg, &mut report)?;
    let region: Option<Region> = a.region.clone().into();
    let q = match (a.q, region) {
        (Some(q), None) => q,
        (q, Some(r)) => {
            let (rho, h) = resolve_region(&r)?;
            region_config(&mut cfg, rho, h);
            let cls = classify(&roots(&coeffs)?, &RegionSpec::new(rho)?)?;
            report.notes.extend(cls.warnings.iter().cloned());
            resolve_q(q, &cls, coeffs.p(), &mut report)?
        }
        (None, None) => return Err(input("give --q or one of --rho / --half-life")),
    };
    cfg.insert("q".into(), q.to_string());
    cfg.insert("horizon".into(), a.horizon.to_string());
    let s = split(&coeffs, q)?;
    report.notes.extend(s.warnings.iter().cloned());
    report.set("q", q);
    let mut t = Table::new("irf", &["horizon", "response", "shock", "total", "near_unit", "stable"]);
    for h in 0..=a.horizon {
        let r = irf(&s, h);
        for i in 0..s.p {
            for j in 0..s.p {
                t.push(vec![
                    h.into(),
                    (i + 1).into(),
                    (j + 1).into(),
                    r.value[(i, j)].into(),
                    r.lu_part[(i, j)].into(),
                    r.st_part[(i, j)].into(),
                ]);
            }
        }
    }
    report.tables.push(t);
    report.config = cfg;
    Ok(report)
}

fn check_alphas(a1: f64, a2: f64) -> CliResult<()> {
    for (name, a) in [("alpha1", a1), ("alpha2", a2)] {
        if !(a > 0.0 && a < 1.0) {
            return Err(input(format!("--{name} = {a} outside (0, 1)")));
        }
    }
    Ok(())
}

fn c_cell(c: &DMatrix<f64>) -> Cell {
    if c.len() == 1 {
        Cell::Num(c[(0, 0)])
    } else {
        Cell::Text(c.transpose().iter().map(|&x| num(x)).collect::<Vec<_>>().join(";"))
    }
}

pub fn lr_cmd(a: &LrArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let mut report = Report::new("lr", Config::new());
    check_alphas(a.alpha1, a.alpha2)?;
    let pr = prepare(&a.model, &a.region, a.search.q, &mut cfg, &mut report)?;
    need_block(pr.q)?;
    let sp = space(&a.search, pr.q, pr.rho, &mut cfg)?;
    cfg.insert("lambda0".into(), num(a.lambda0));
    cfg.insert("alpha1".into(), num(a.alpha1));
    cfg.insert("alpha2".into(), num(a.alpha2));
    let lambda0 = DMatrix::identity(pr.q, pr.q) * a.lambda0;
    let lik = &pr.lik;
    let stat = lik.lr_lambda(&lambda0, &sp)?;
    let a_null = stat.restricted.a.clone().unwrap_or_else(|| DMatrix::zeros(lik.p() - pr.q, pr.q));
    let c = lik.localization(&lambda0, &a_null)?;
    report.set("lr_lambda", stat.value);
    report.set("c", c_cell(&c));
    if let Some(path) = &a.table {
        cfg.insert("table".into(), path.display().to_string());
        cfg.insert("table_sha256".into(), file_sha256(path)?);
        let table = QuantileTable::read(path)?;
        let l = lookup(&table, &c, 1.0 - a.alpha1)?;
        report.set("lr_lambda_critical", l.value);
        report.set("lr_lambda_reject", (stat.value > l.value).to_string());
        if l.nodes.len() == 1 && l.distance > 0.0 {
            report.note(format!("critical value taken from the nearest table node at distance {}", num(l.distance)));
        }
    }
    if let (Some(coef), Some(a0)) = (&a.coef, a.a0) {
        let (i, j) = parse_coef(coef)?;
        cfg.insert("coef".into(), coef.clone());
        cfg.insert("a0".into(), num(a0));
        let st = lik.lr_coefficient(a0, i, j, &lambda0)?;
        let crit = chi2_quantile(1.0, 1.0 - a.alpha2)?;
        if let Some(a_hat) = &st.unrestricted.a {
            report.set("a_hat", a_hat[(i, j)]);
        }
        report.set("lr_coefficient", st.value);
        report.set("lr_coefficient_critical", crit);
        report.set("lr_coefficient_reject", (st.value > crit).to_string());
    }
    report.config = cfg;
    Ok(report)
}

fn interval_rows(t: &mut Table, pieces: &[Interval]) {
    for p in pieces {
        t.push(vec![p.lo.into(), p.hi.into()]);
    }
}

pub fn ci_cmd(a: &CiArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let mut report = Report::new("ci", Config::new());
    check_alphas(a.alpha1, a.alpha2)?;
    if a.alpha1 + a.alpha2 >= 1.0 {
        return Err(input("alpha1 + alpha2 must be below 1"));
    }
    let (i, j) = parse_coef(&a.coef)?;
    let pr = prepare(&a.model, &a.region, a.search.q, &mut cfg, &mut report)?;
    need_block(pr.q)?;
    let sp = space(&a.search, pr.q, pr.rho, &mut cfg)?;
    let lik = &pr.lik;
    cfg.insert("coef".into(), a.coef.clone());
    cfg.insert("alpha1".into(), num(a.alpha1));
    cfg.insert("alpha2".into(), num(a.alpha2));
    cfg.insert("table".into(), a.table.display().to_string());
    let table = if a.build_table {
        if !(sp.family == LambdaFamily::Scalar || pr.q == 1) {
            return Err(input("--build-table supports the scalar family only; build the table with critvals"));
        }
        let n = lik.n_eff() as f64;
        let grid: Vec<DMatrix<f64>> =
            sp.eigen_nodes().iter().map(|&v| (DMatrix::identity(pr.q, pr.q) * v - DMatrix::identity(pr.q, pr.q)) * n).collect();
        let template = LimitDistConfig::new(DMatrix::zeros(pr.q, pr.q), lik.det(), seed)?
            .with_steps(a.steps)
            .with_reps(a.reps);
        eprintln!("notice: simulating up to {} table node(s) into {}", grid.len(), a.table.display());
        build_table(&grid, &template, Some(&a.table))?
    } else {
        if !a.table.exists() {
            return Err(input(format!(
                "{} not found; build it with critvals or pass --build-table",
                a.table.display()
            )));
        }
        QuantileTable::read(&a.table)?
    };
    cfg.insert("table_sha256".into(), file_sha256(&a.table)?);
    let set = lik.bonferroni_ci(a.alpha1, a.alpha2, i, j, &sp, &table)?;
    let alpha = round_sig(a.alpha1 + a.alpha2);
    report.set("coefficient", format!("a[{},{}]", i + 1, j + 1));
    report.set("level_lambda", 1.0 - a.alpha1);
    report.set("level_conditional", 1.0 - a.alpha2);
    report.set("overall_level", set.level);
    report.set("alpha", alpha);
    report.set("lambda_argmax", c_cell(&DMatrix::from_row_slice(1, set.lambda_set.argmax.theta.len(), &set.lambda_set.argmax.theta)));
    report.set("lambda_nodes_accepted", set.lambda_set.accepted().count());
    report.set("bonferroni_lo", set.hull.lo);
    report.set("bonferroni_hi", set.hull.hi);
    report.set("fallback", set.fallback.to_string());
    report.note(format!(
        "overall level {}% (alpha = {}) from alpha1 = {} and alpha2 = {}",
        num(100.0 * set.level),
        num(alpha),
        num(a.alpha1),
        num(a.alpha2)
    ));
    report.notes.extend(set.warnings.iter().cloned());
    let mut nodes = Table::new("lambda_nodes", &["theta", "lr", "c", "critical", "accepted", "error"]);
    for nd in &set.lambda_set.nodes {
        nodes.push(vec![
            c_cell(&DMatrix::from_row_slice(1, nd.param.theta.len(), &nd.param.theta)),
            nd.lr.into(),
            nd.c.as_ref().map_or(Cell::Empty, c_cell),
            nd.critical.into(),
            nd.accepted.to_string().into(),
            nd.error.clone().into(),
        ]);
    }
    report.tables.push(nodes);
    if !set.lambda_set.intervals.is_empty() {
        let mut t = Table::new("lambda_intervals", &["lo", "hi"]);
        interval_rows(&mut t, &set.lambda_set.intervals);
        report.tables.push(t);
    }
    let mut cond = Table::new("conditional", &["lambda", "estimate", "standard_error", "lo", "hi"]);
    for c in &set.conditional {
        let lam = c_cell(&c.lambda0);
        for p in &c.pieces {
            cond.push(vec![lam.clone(), c.estimate.into(), c.standard_error.into(), p.lo.into(), p.hi.into()]);
        }
    }
    report.tables.push(cond);
    let mut b = Table::new("bonferroni", &["lo", "hi"]);
    interval_rows(&mut b, &set.pieces);
    report.tables.push(b);
    report.config = cfg;
    Ok(report)
}

/// `lo:hi:step` or a comma list.
fn parse_grid(s: &str) -> CliResult<Vec<f64>> {
    if s.contains(':') {
        let v = s.split(':').map(|x| x.trim().parse::<f64>()).collect::<Result<Vec<_>, _>>();
        let v = v.map_err(|_| input(format!("--c-grid: bad range '{s}'")))?;
        let [lo, hi, step] = v[..] else { return Err(input(format!("--c-grid: expected lo:hi:step, got '{s}'"))) };
        if !(step > 0.0) || hi < lo {
            return Err(input(format!("--c-grid: need lo <= hi and step > 0, got '{s}'")));
        }
        let count = ((hi - lo) / step + 1e-9).floor() as usize;
        Ok((0..=count).map(|i| lo + i as f64 * step).collect())
    } else {
        parse_list(s, "--c-grid")
    }
}

pub fn critvals_cmd(a: &CritvalsArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let det = parse_det(&a.det)?;
    let grid: Vec<DMatrix<f64>> = parse_grid(&a.c_grid)?.into_iter().map(|c| DMatrix::identity(a.q, a.q) * c).collect();
    if a.q == 0 {
        return Err(input("--q must be at least 1"));
    }
    cfg.insert("q".into(), a.q.to_string());
    cfg.insert("det".into(), a.det.clone());
    cfg.insert("c_grid".into(), a.c_grid.clone());
    cfg.insert("steps".into(), a.steps.to_string());
    cfg.insert("reps".into(), a.reps.to_string());
    if let Some(p) = &a.table {
        cfg.insert("table".into(), p.display().to_string());
    }
    let template = LimitDistConfig::new(DMatrix::zeros(a.q, a.q), det, seed)?.with_steps(a.steps).with_reps(a.reps);
    let table = build_table(&grid, &template, a.table.as_deref())?;
    let mut report = Report::new("critvals", cfg);
    report.set("entries", table.entries.len());
    let mut t = Table::new("quantiles", &["c", "level", "quantile", "se", "redraws"]);
    for e in &table.entries {
        for (l, (qv, se)) in table.levels.iter().zip(e.quantiles.iter().zip(&e.se)) {
            t.push(vec![c_cell(&e.c), (*l).into(), (*qv).into(), (*se).into(), e.redraws.into()]);
        }
    }
    report.tables.push(t);
    Ok(report)
}

pub fn simulate_cmd(a: &SimulateArgs, seed: u64) -> CliResult<Report> {
    let mut cfg = base_config(seed);
    let coeffs = parse_coeffs(&a.coeffs)?;
    let p = coeffs.p();
    let sigma = match &a.sigma {
        Some(text) => {
            let v: serde_json::Value = serde_json::from_str(text).map_err(|e| input(format!("--sigma: {e}")))?;
            matrix_from_json(&v, "--sigma")?
        }
        None => DMatrix::identity(p, p),
    };
    let vector = |s: &Option<String>, what: &str| -> CliResult<DVector<f64>> {
        match s {
            Some(t) => {
                let v = parse_list(t, what)?;
                if v.len() != p {
                    return Err(input(format!("{what} has {} entries, expected {p}", v.len())));
                }
                Ok(DVector::from_vec(v))
            }
            None => Ok(DVector::zeros(p)),
        }
    };
    let mu = vector(&a.mu, "--mu")?;
    let delta = vector(&a.delta, "--delta")?;
    if a.n == 0 || a.reps == 0 {
        return Err(input("--n and --reps must be positive"));
    }
    cfg.insert("coeffs".into(), coeffs_text(&coeffs));
    cfg.insert("sigma".into(), (0..p).map(|i| (0..p).map(|j| num(sigma[(i, j)])).collect::<Vec<_>>().join(",")).collect::<Vec<_>>().join(";"));
    cfg.insert("mu".into(), mu.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","));
    cfg.insert("delta".into(), delta.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","));
    cfg.insert("n".into(), a.n.to_string());
    cfg.insert("reps".into(), a.reps.to_string());
    let spec = DgpSpec::new(coeffs, sigma, a.n)?.with_deterministics(mu, delta)?;
    let names: Vec<String> = (1..=p).map(|i| format!("y{i}")).collect();
    let mut cols = vec!["rep", "t"];
    cols.extend(names.iter().map(String::as_str));
    let mut t = Table::new("paths", &cols);
    for rep in 0..a.reps {
        let path = simulate_replication(&spec, seed, rep)?;
        for s in 0..path.y.nrows() {
            let mut row: Vec<Cell> = vec![(rep as usize).into(), (s + 1).into()];
            row.extend(path.y.row(s).iter().map(|&x| Cell::Num(x)));
            t.push(row);
        }
    }
    let mut report = Report::new("simulate", cfg);
    report.tables.push(t);
    Ok(report)
}
