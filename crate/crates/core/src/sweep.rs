//! Tabulated bound curves and seeded bound-soundness grids, with CSV output.

use std::io::Write;

use serde::Serialize;

use crate::bounds::{poc_esw_single, poc_usw_single, poc_usw_single_lower_achieved, TOLERANCE};
use crate::error::{Error, Result};
use crate::fuzz;
use crate::instance::Instance;
use crate::oracle::empirical_poc_with_budget;
use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let io = |e: csv::Error| Error::Parse(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header).map_err(io)?;
        for row in &self.rows {
            w.write_record(row).map_err(io)?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Column `name` of the row whose first column equals `key`.
    pub fn lookup(&self, key: &str, name: &str) -> Option<&str> {
        let col = self.header.iter().position(|h| h == name)?;
        let row = self.rows.iter().find(|r| r[0] == key)?;
        Some(&row[col])
    }
}

/// Decimal with at most 12 significant digits and no trailing zeros.
pub fn decimal(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

/// Utilitarian single-category price for `k = 1..m-1` at fixed `m`.
pub fn fig1(m: u64) -> Result<Table> {
    if m < 2 {
        return Err(Error::Domain("m must be at least 2".into()));
    }
    let mut t = Table::new(&["k", "k_over_m_minus_1", "poc"]);
    for k in 1..m {
        t.rows.push(vec![
            k.to_string(),
            decimal(k as f64 / (m - 1) as f64),
            decimal(poc_usw_single(m, k)?),
        ]);
    }
    Ok(t)
}

/// Upper bound against the achieved lower construction for `k = 1..m-2`.
pub fn fig2(m: u64) -> Result<Table> {
    if m < 3 {
        return Err(Error::Domain("m must be at least 3".into()));
    }
    let mut t = Table::new(&["k", "upper", "lower"]);
    for k in 1..=m - 2 {
        t.rows.push(vec![
            k.to_string(),
            decimal(poc_usw_single(m, k)?),
            decimal(poc_usw_single_lower_achieved(m, k)?),
        ]);
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridConfig {
    pub n_max: usize,
    pub m_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub budget: u128,
}

/// Result of one `(n, m, k)` grid cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCell {
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub max_usw_ratio: Rational,
    pub usw_bound: f64,
    pub max_esw_ratio: Rational,
    pub esw_bound: Rational,
}

impl GridCell {
    pub fn ok(&self) -> bool {
        self.max_usw_ratio.to_f64() <= self.usw_bound + TOLERANCE && self.max_esw_ratio <= self.esw_bound
    }
}

/// Random single-category instances for every `2 <= n <= n_max`,
/// `1 <= m <= m_max` and feasible cap `k`, measured by the oracle.
pub fn grid_cells(cfg: &GridConfig) -> Result<Vec<GridCell>> {
    if cfg.n_max < 2 || cfg.m_max < 1 || cfg.trials == 0 {
        return Err(Error::Domain("need n_max >= 2, m_max >= 1, trials >= 1".into()));
    }
    let mut rng = fuzz::rng(cfg.seed);
    let mut cells = Vec::new();
    for n in 2..=cfg.n_max {
        for m in 1..=cfg.m_max {
            for k in m.div_ceil(n)..=m {
                let mut max_usw = Rational::zero();
                let mut max_esw = Rational::zero();
                for _ in 0..cfg.trials {
                    let rows = (0..n).map(|_| fuzz::random_row(&mut rng, m)).collect();
                    let inst = Instance::single_category(n, k, rows)?;
                    let r = empirical_poc_with_budget(&inst, cfg.budget)?;
                    max_usw = max_usw.max(r.usw_ratio);
                    max_esw = max_esw.max(r.esw_ratio);
                }
                cells.push(GridCell {
                    n,
                    m,
                    k,
                    max_usw_ratio: max_usw,
                    usw_bound: poc_usw_single(m as u64, k as u64)?,
                    max_esw_ratio: max_esw,
                    esw_bound: poc_esw_single(m as u64, n as u64, k as u64)?,
                });
            }
        }
    }
    Ok(cells)
}

pub fn grid(cfg: &GridConfig) -> Result<Table> {
    let mut t = Table::new(&[
        "n",
        "m",
        "k",
        "trials",
        "max_usw_ratio",
        "usw_bound",
        "max_esw_ratio",
        "esw_bound",
        "ok",
    ]);
    for c in grid_cells(cfg)? {
        t.rows.push(vec![
            c.n.to_string(),
            c.m.to_string(),
            c.k.to_string(),
            cfg.trials.to_string(),
            decimal(c.max_usw_ratio.to_f64()),
            decimal(c.usw_bound),
            decimal(c.max_esw_ratio.to_f64()),
            decimal(c.esw_bound.to_f64()),
            c.ok().to_string(),
        ]);
    }
    Ok(t)
}
