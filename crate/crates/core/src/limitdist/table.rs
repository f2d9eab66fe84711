use std::cmp::Ordering;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use super::{simulate_sample, LimitDistConfig};
use crate::error::{Error, Result};
use crate::likelihood::DeterministicCase;
use crate::stats::{quantile_se_sorted, quantile_sorted, sorted};

pub const TABLE_VERSION: &str = concat!("qcvar-", env!("CARGO_PKG_VERSION"), "/1");

#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub c: DMatrix<f64>,
    pub quantiles: Vec<f64>,
    pub se: Vec<f64>,
    pub redraws: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    pub version: String,
    pub q: usize,
    pub det: DeterministicCase,
    pub steps: usize,
    pub reps: usize,
    pub seed: u64,
    pub levels: Vec<f64>,
    /// Sorted lexicographically by the row-major entries of `c`.
    pub entries: Vec<TableEntry>,
}

fn row_major(c: &DMatrix<f64>) -> Vec<f64> {
    c.transpose().as_slice().to_vec()
}

fn cmp_c(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Ordering {
    let (a, b) = (row_major(a), row_major(b));
    a.iter().zip(&b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

fn join(xs: &[f64], sep: &str) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::TableFormat(format!("line {line}: bad number '{s}'")))
}

impl QuantileTable {
    pub fn empty(template: &LimitDistConfig) -> Self {
        Self {
            version: TABLE_VERSION.to_string(),
            q: template.q,
            det: template.det,
            steps: template.steps,
            reps: template.reps,
            seed: template.seed,
            levels: template.levels.clone(),
            entries: Vec::new(),
        }
    }

    pub fn metadata_matches(&self, template: &LimitDistConfig) -> bool {
        self.version == TABLE_VERSION
            && self.q == template.q
            && self.det == template.det
            && self.steps == template.steps
            && self.reps == template.reps
            && self.seed == template.seed
            && self.levels == template.levels
    }

    pub fn config_for(&self, c: DMatrix<f64>) -> LimitDistConfig {
        LimitDistConfig {
            q: self.q,
            c_star: c,
            det: self.det,
            steps: self.steps,
            reps: self.reps,
            seed: self.seed,
            levels: self.levels.clone(),
        }
    }

    pub fn entry(&self, c: &DMatrix<f64>) -> Option<&TableEntry> {
        self.entries.iter().find(|e| &e.c == c)
    }

    pub fn level_index(&self, level: f64) -> Result<usize> {
        self.levels.iter().position(|&l| (l - level).abs() < 1e-9).ok_or_else(|| {
            Error::TableCoverage(format!("level {level} not in table levels [{}]", join(&self.levels, ", ")))
        })
    }

    pub fn insert(&mut self, entry: TableEntry) {
        match self.entries.binary_search_by(|e| cmp_c(&e.c, &entry.c)) {
            Ok(i) => self.entries[i] = entry,
            Err(i) => self.entries.insert(i, entry),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# qcvar limit-distribution quantile table");
        let _ = writeln!(s, "# version={}", self.version);
        let _ = writeln!(s, "# q={}", self.q);
        let _ = writeln!(s, "# det={}", self.det.as_str());
        let _ = writeln!(s, "# steps={}", self.steps);
        let _ = writeln!(s, "# reps={}", self.reps);
        let _ = writeln!(s, "# seed={}", self.seed);
        let _ = writeln!(s, "# levels={}", join(&self.levels, ";"));
        let names: Vec<String> = self
            .levels
            .iter()
            .map(|l| format!("q{l}"))
            .chain(self.levels.iter().map(|l| format!("se{l}")))
            .collect();
        let _ = writeln!(s, "c,{},redraws", names.join(","));
        for e in &self.entries {
            let _ = writeln!(s, "{},{},{},{}", join(&row_major(&e.c), ";"), join(&e.quantiles, ","), join(&e.se, ","), e.redraws);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta = std::collections::HashMap::new();
        let mut body = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if let Some(rest) = line.strip_prefix('#') {
                if let Some((k, v)) = rest.trim().split_once('=') {
                    meta.insert(k.trim().to_string(), v.trim().to_string());
                }
            } else if !line.trim().is_empty() {
                body.push((line_no, line));
            }
        }
        let get = |k: &str| meta.get(k).ok_or_else(|| Error::TableFormat(format!("missing header key '{k}'")));
        let int = |k: &str| -> Result<u64> {
            get(k)?.parse().map_err(|_| Error::TableFormat(format!("header key '{k}' is not an integer")))
        };
        let q = int("q")? as usize;
        let levels = get("levels")?
            .split(';')
            .map(|x| parse_f64(x, 0))
            .collect::<Result<Vec<_>>>()?;
        let mut table = Self {
            version: get("version")?.clone(),
            q,
            det: get("det")?.parse().map_err(|_| Error::TableFormat("bad det header".into()))?,
            steps: int("steps")? as usize,
            reps: int("reps")? as usize,
            seed: int("seed")?,
            levels,
            entries: Vec::new(),
        };
        let nl = table.levels.len();
        let mut rows = body.into_iter();
        match rows.next() {
            Some((_, h)) if h.starts_with("c,") => {}
            Some((n, _)) => return Err(Error::TableFormat(format!("line {n}: expected column header"))),
            None => return Ok(table),
        }
        for (n, line) in rows {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 2 + 2 * nl {
                return Err(Error::TableFormat(format!("line {n}: {} fields, expected {}", cells.len(), 2 + 2 * nl)));
            }
            let c_vals = cells[0].split(';').map(|x| parse_f64(x, n)).collect::<Result<Vec<_>>>()?;
            if c_vals.len() != q * q {
                return Err(Error::TableFormat(format!("line {n}: C has {} entries, expected {}", c_vals.len(), q * q)));
            }
            let nums = cells[1..1 + 2 * nl].iter().map(|x| parse_f64(x, n)).collect::<Result<Vec<_>>>()?;
            let redraws = cells[1 + 2 * nl]
                .trim()
                .parse()
                .map_err(|_| Error::TableFormat(format!("line {n}: bad redraw count")))?;
            table.insert(TableEntry {
                c: DMatrix::from_row_slice(q, q, &c_vals),
                quantiles: nums[..nl].to_vec(),
                se: nums[nl..].to_vec(),
                redraws,
            });
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Writes through a sibling temporary file so a crash never leaves a
    /// truncated table behind.
    pub fn write(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_text())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

/// Quantiles and their standard errors at one grid point.
pub fn compute_entry(config: &LimitDistConfig) -> Result<TableEntry> {
    let (sample, redraws) = simulate_sample(config)?;
    let xs = sorted(&sample);
    Ok(TableEntry {
        c: config.c_star.clone(),
        quantiles: config.levels.iter().map(|&l| quantile_sorted(&xs, l)).collect(),
        se: config.levels.iter().map(|&l| quantile_se_sorted(&xs, l)).collect(),
        redraws,
    })
}

/// Simulates every grid point missing from the table at `path` (if any),
/// saving after each one. An existing file with different metadata is an error.
pub fn build_table(grid: &[DMatrix<f64>], template: &LimitDistConfig, path: Option<&Path>) -> Result<QuantileTable> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty C grid".into()));
    }
    template.validate()?;
    let mut table = match path {
        Some(p) if p.exists() => {
            let t = QuantileTable::read(p)?;
            if !t.metadata_matches(template) {
                return Err(Error::TableFormat(format!(
                    "{} was built with different settings; use a new file",
                    p.display()
                )));
            }
            t
        }
        _ => QuantileTable::empty(template),
    };
    for c in grid {
        if c.shape() != (template.q, template.q) {
            return Err(Error::Dimension(format!("grid point is {:?}, expected q = {}", c.shape(), template.q)));
        }
        if table.entry(c).is_some() {
            continue;
        }
        let entry = compute_entry(&template.with_c(c.clone()))?;
        table.insert(entry);
        if let Some(p) = path {
            table.write(p)?;
        }
    }
    Ok(table)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    pub value: f64,
    /// Nodes used: one at an exact or nearest node, two when interpolating.
    pub nodes: Vec<DMatrix<f64>>,
    /// Frobenius distance from the query to the nearest node used.
    pub distance: f64,
}

/// Critical value at `c` and `level`.
pub fn lookup(table: &QuantileTable, c: &DMatrix<f64>, level: f64) -> Result<Lookup> {
    let li = table.level_index(level)?;
    if c.shape() != (table.q, table.q) {
        return Err(Error::Dimension(format!("query is {:?}, table has q = {}", c.shape(), table.q)));
    }
    if table.entries.is_empty() {
        return Err(Error::TableCoverage("table has no entries".into()));
    }
    if let Some(e) = table.entry(c) {
        return Ok(Lookup { value: e.quantiles[li], nodes: vec![e.c.clone()], distance: 0.0 });
    }
    let outside = || Error::TableCoverage(format!("C = [{}] lies outside the table grid", join(&row_major(c), "; ")));
    if table.q == 1 {
        let x = c[(0, 0)];
        let hi = table.entries.iter().position(|e| e.c[(0, 0)] > x).ok_or_else(outside)?;
        if hi == 0 {
            return Err(outside());
        }
        let (a, b) = (&table.entries[hi - 1], &table.entries[hi]);
        let (xa, xb) = (a.c[(0, 0)], b.c[(0, 0)]);
        let w = (x - xa) / (xb - xa);
        return Ok(Lookup {
            value: (1.0 - w) * a.quantiles[li] + w * b.quantiles[li],
            nodes: vec![a.c.clone(), b.c.clone()],
            distance: (x - xa).min(xb - x),
        });
    }
    for idx in 0..table.q * table.q {
        let (lo, hi) = table.entries.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| {
            (lo.min(e.c.as_slice()[idx]), hi.max(e.c.as_slice()[idx]))
        });
        let v = c.as_slice()[idx];
        if v < lo || v > hi {
            return Err(outside());
        }
    }
    let (e, d) = table
        .entries
        .iter()
        .map(|e| (e, (&e.c - c).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("nonempty");
    log::warn!("no table node at C; using the nearest node at distance {d:.3e}");
    Ok(Lookup { value: e.quantiles[li], nodes: vec![e.c.clone()], distance: d })
}
