//! Versioned CSV and JSON report bodies.
//!
//! Bodies contain no timestamps or host details, so identical inputs render
//! to identical bytes regardless of thread count.

use std::fmt::Write as _;
use std::hash::Hasher;

use fnv::FnvHasher;
use num_complex::Complex64;
use serde::Serialize;

use crate::analytic::{ConstantChoice, ConversionFit, GrowthFit, ResidueEstimate};
use crate::coeffs::CoeffTable;
use crate::error::{Error, Result};
use crate::fit::LinearFit;
use crate::ingham::{CascadeLevel, IdentityProbe, ReductionTrace};
use crate::perron::{ContourReport, TruncationScan};
use crate::riesz::RieszReport;

pub const SCHEMA: &str = "riesz-report/1";

pub fn report_schema_version() -> &'static str {
    SCHEMA
}

/// One JSON document plus named CSV tables. An empty table name is the
/// primary table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rendered {
    pub json: String,
    pub tables: Vec<(String, String)>,
}

pub enum Cell {
    F(f64),
    U(u64),
    B(bool),
    S(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::F(v)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::U(v as u64)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::U(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::B(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::S(v.to_string())
    }
}

/// CSV with a leading schema comment line.
pub struct Csv {
    width: usize,
    body: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        let mut body = format!("# schema: {SCHEMA}\n");
        body.push_str(&columns.join(","));
        body.push('\n');
        Self {
            width: columns.len(),
            body,
        }
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.width);
        for (i, c) in cells.into_iter().enumerate() {
            if i > 0 {
                self.body.push(',');
            }
            let _ = match c {
                Cell::F(v) => write!(self.body, "{v}"),
                Cell::U(v) => write!(self.body, "{v}"),
                Cell::B(v) => write!(self.body, "{v}"),
                Cell::S(v) => write!(self.body, "{v}"),
            };
        }
        self.body.push('\n');
    }

    pub fn finish(self) -> String {
        self.body
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema: &'static str,
    command: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with `schema` and `command` as the first keys.
pub fn envelope<T: Serialize>(command: &str, body: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Envelope {
        schema: SCHEMA,
        command,
        body,
    })
    .map_err(|e| Error::InvalidInput(format!("report serialization: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn primary(csv: Csv) -> Vec<(String, String)> {
    vec![(String::new(), csv.finish())]
}

/// FNV-1a over the bit patterns of the values.
pub fn table_fingerprint(table: &CoeffTable) -> String {
    let mut h = FnvHasher::default();
    for v in table.values() {
        h.write(&v.to_bits().to_le_bytes());
    }
    format!("{:016x}", h.finish())
}

#[derive(Serialize)]
struct CoeffsSummary<'a> {
    label: &'a str,
    cutoff: usize,
    nonneg: bool,
    fingerprint: String,
    min: f64,
    max: f64,
}

pub fn coeffs_report(table: &CoeffTable) -> Result<Rendered> {
    let vals = table.values();
    let summary = CoeffsSummary {
        label: &table.source_label,
        cutoff: table.cutoff(),
        nonneg: table.nonneg,
        fingerprint: table_fingerprint(table),
        min: vals.iter().copied().fold(f64::INFINITY, f64::min),
        max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    let mut csv = Csv::new(&["m", "a"]);
    for (i, &a) in vals.iter().enumerate() {
        csv.row(vec![(i + 1).into(), a.into()]);
    }
    Ok(Rendered {
        json: envelope("coeffs", &summary)?,
        tables: primary(csv),
    })
}

#[derive(Serialize)]
struct RieszSummary<'a> {
    label: &'a str,
    k: u32,
    c_used: f64,
    c_source: crate::analytic::CSource,
    points: usize,
    max_abs_error: f64,
    fitted_exponent: Option<f64>,
    fit: Option<LinearFit>,
}

pub fn riesz_render(r: &RieszReport) -> Result<Rendered> {
    let summary = RieszSummary {
        label: &r.label,
        k: r.k,
        c_used: r.c_used,
        c_source: r.c_source,
        points: r.x_grid.len(),
        max_abs_error: r.max_abs_error(),
        fitted_exponent: r.fitted_exponent,
        fit: r.fit,
    };
    let mut csv = Csv::new(&["x", "S_k", "main", "error"]);
    for i in 0..r.x_grid.len() {
        csv.row(vec![
            r.x_grid[i].into(),
            r.smoothed_sums[i].into(),
            r.main_terms[i].into(),
            r.errors[i].into(),
        ]);
    }
    Ok(Rendered {
        json: envelope("riesz", &summary)?,
        tables: primary(csv),
    })
}

#[derive(Serialize)]
struct PerronCell {
    y: f64,
    k: u32,
    expected_slope: f64,
    fit: Option<LinearFit>,
    saturated: bool,
    within_contract: Option<bool>,
}

#[derive(Serialize)]
struct PerronSummary {
    c: f64,
    t_grid: Vec<f64>,
    all_within_contract: bool,
    cells: Vec<PerronCell>,
}

pub fn perron_render(scan: &TruncationScan) -> Result<Rendered> {
    let summary = PerronSummary {
        c: scan.c,
        t_grid: scan.t_grid.clone(),
        all_within_contract: scan.all_within_contract(),
        cells: scan
            .cells
            .iter()
            .map(|c| PerronCell {
                y: c.y,
                k: c.k,
                expected_slope: -(c.k as f64),
                fit: c.fit,
                saturated: c.saturated,
                within_contract: c.within_contract,
            })
            .collect(),
    };
    let mut csv = Csv::new(&["y", "k", "T", "abs_error"]);
    for c in &scan.cells {
        for p in &c.points {
            csv.row(vec![c.y.into(), c.k.into(), p.t.into(), p.abs_error.into()]);
        }
    }
    Ok(Rendered {
        json: envelope("perron", &summary)?,
        tables: primary(csv),
    })
}

#[derive(Serialize)]
struct ContourSummary<'a> {
    label: &'a str,
    within_tolerance: bool,
    #[serde(flatten)]
    report: &'a ContourReport,
}

pub fn contour_render(label: &str, r: &ContourReport) -> Result<Rendered> {
    let summary = ContourSummary {
        label,
        within_tolerance: r.within_tolerance(),
        report: r,
    };
    let mut csv = Csv::new(&["component", "re", "im"]);
    let mut put = |name: &str, z: Complex64| csv.row(vec![name.into(), z.re.into(), z.im.into()]);
    put("integral", r.integral_value);
    put("right", r.right_contrib);
    put("top", r.horizontal_contrib.0);
    put("bottom", r.horizontal_contrib.1);
    put("left", r.left_contrib);
    put("residue_main", Complex64::new(r.residue_main, 0.0));
    for p in &r.other_poles {
        put(&format!("pole@{}{:+}i", p.location.re, p.location.im), p.residue);
    }
    put("expected", r.expected_total);
    Ok(Rendered {
        json: envelope("contour", &summary)?,
        tables: primary(csv),
    })
}

#[derive(Serialize)]
struct GrowthSummary<'a> {
    label: &'a str,
    sigma: f64,
    slope: f64,
    intercept: f64,
    residual: f64,
    reference: f64,
    epsilon_used: f64,
    windows: &'a [crate::analytic::GrowthWindow],
}

pub fn growth_render(label: &str, g: &GrowthFit) -> Result<Rendered> {
    let summary = GrowthSummary {
        label,
        sigma: g.sigma,
        slope: g.fit.slope,
        intercept: g.fit.intercept,
        residual: g.fit.residual,
        reference: g.reference_exponent,
        epsilon_used: g.epsilon_used,
        windows: &g.windows,
    };
    let mut csv = Csv::new(&["t", "abs_value", "window_max", "log_t", "log_max"]);
    for s in &g.samples {
        csv.row(vec![
            s.t.into(),
            s.abs_value.into(),
            s.window_max.into(),
            s.log_t.into(),
            s.log_max.into(),
        ]);
    }
    Ok(Rendered {
        json: envelope("growth", &summary)?,
        tables: primary(csv),
    })
}

#[derive(Serialize)]
struct ConversionSummary<'a> {
    label: &'a str,
    sigma: f64,
    slope: f64,
    intercept: f64,
    residual: f64,
    reference: f64,
    dropped: usize,
    within_contract: bool,
}

pub fn conversion_render(label: &str, f: &ConversionFit) -> Result<Rendered> {
    let summary = ConversionSummary {
        label,
        sigma: f.sigma,
        slope: f.fit.slope,
        intercept: f.fit.intercept,
        residual: f.fit.residual,
        reference: f.reference_exponent,
        dropped: f.dropped,
        within_contract: f.within_contract(),
    };
    let mut csv = Csv::new(&["t", "numerator", "denominator", "ratio", "dropped"]);
    for s in &f.samples {
        csv.row(vec![
            s.t.into(),
            s.numerator.into(),
            s.denominator.into(),
            s.ratio.into(),
            s.dropped.into(),
        ]);
    }
    Ok(Rendered {
        json: envelope("growth-conversion", &summary)?,
        tables: primary(csv),
    })
}

#[derive(Serialize)]
struct ResidueSummary<'a> {
    label: &'a str,
    chosen: &'a ConstantChoice,
    estimates: &'a [ResidueEstimate],
}

pub fn residue_render(
    label: &str,
    chosen: &ConstantChoice,
    estimates: &[ResidueEstimate],
) -> Result<Rendered> {
    let mut csv = Csv::new(&["method", "value", "error_estimate", "prime_cutoff"]);
    for e in estimates {
        let method = serde_json::to_value(e.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default();
        csv.row(vec![
            Cell::S(method),
            e.value.into(),
            e.error_estimate.into(),
            e.prime_cutoff.map_or(Cell::S(String::new()), Cell::from),
        ]);
    }
    Ok(Rendered {
        json: envelope(
            "residue",
            &ResidueSummary {
                label,
                chosen,
                estimates,
            },
        )?,
        tables: primary(csv),
    })
}

fn level_csv(samples: &[crate::ingham::LevelSample]) -> String {
    let mut csv = Csv::new(&[
        "x",
        "lower",
        "upper",
        "midpoint",
        "predicted_paper",
        "predicted_residue",
    ]);
    for s in samples {
        csv.row(vec![
            s.x.into(),
            s.lower.into(),
            s.upper.into(),
            s.midpoint.into(),
            s.predicted_paper.into(),
            s.predicted_residue.into(),
        ]);
    }
    csv.finish()
}

/// JSON holds the levels without samples; each level's samples go to a
/// table named `level-k<k>`.
pub fn reduce_render(trace: &ReductionTrace) -> Result<Rendered> {
    let mut lean = trace.clone();
    let mut tables = Vec::new();
    for level in &mut lean.levels {
        if !level.samples.is_empty() {
            tables.push((format!("level-k{}", level.k), level_csv(&level.samples)));
        }
        level.samples.clear();
    }
    Ok(Rendered {
        json: envelope("reduce", &lean)?,
        tables,
    })
}

#[derive(Serialize)]
struct CascadeSummary<'a> {
    label: &'a str,
    levels: Vec<CascadeLevel>,
}

pub fn cascade_render(label: &str, levels: &[CascadeLevel]) -> Result<Rendered> {
    let mut lean = levels.to_vec();
    let mut tables = Vec::new();
    for level in &mut lean {
        tables.push((format!("level-j{}", level.j), level_csv(&level.samples)));
        level.samples.clear();
    }
    Ok(Rendered {
        json: envelope("cascade", &CascadeSummary { label, levels: lean })?,
        tables,
    })
}

#[derive(Serialize)]
struct ProbeSummary<'a> {
    label: &'a str,
    k: u32,
    points: usize,
    max_abs_gap: f64,
    /// `(x, gap / x)` at the first, middle and last grid points.
    gap_over_x_trend: Vec<(f64, f64)>,
}

pub fn probe_render(label: &str, k: u32, probes: &[IdentityProbe]) -> Result<Rendered> {
    let n = probes.len();
    let trend = if n == 0 {
        Vec::new()
    } else {
        let mut idx = vec![0, n / 2, n - 1];
        idx.dedup();
        idx.iter().map(|&i| (probes[i].x, probes[i].gap_over_x)).collect()
    };
    let summary = ProbeSummary {
        label,
        k,
        points: n,
        max_abs_gap: probes.iter().fold(0.0, |m, p| m.max(p.gap.abs())),
        gap_over_x_trend: trend,
    };
    let mut csv = Csv::new(&["x", "k", "lhs", "rhs", "gap", "gap_over_x"]);
    for p in probes {
        csv.row(vec![
            p.x.into(),
            p.k.into(),
            p.lhs.into(),
            p.rhs.into(),
            p.gap.into(),
            p.gap_over_x.into(),
        ]);
    }
    Ok(Rendered {
        json: envelope("probe-identity", &summary)?,
        tables: primary(csv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_identifier() {
        assert_eq!(report_schema_version(), "riesz-report/1");
    }

    #[test]
    fn envelope_leads_with_schema() {
        #[derive(Serialize)]
        struct Body {
            zeta: f64,
            alpha: u32,
        }
        let s = envelope("demo", &Body { zeta: 0.5, alpha: 3 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema"], "riesz-report/1");
        assert!(s.trim_start().starts_with("{\n  \"schema\": \"riesz-report/1\""));
        assert_eq!(v["alpha"], 3);
    }

    #[test]
    fn csv_layout() {
        let mut csv = Csv::new(&["x", "y", "ok"]);
        csv.row(vec![0.1.into(), 2u32.into(), true.into()]);
        csv.row(vec![1e300.into(), 0usize.into(), false.into()]);
        let body = csv.finish();
        let lines: Vec<&str> = body.lines().collect();
        assert_eq!(lines[0], "# schema: riesz-report/1");
        assert_eq!(lines[1], "x,y,ok");
        assert_eq!(lines[2], "0.1,2,true");
        assert_eq!(lines[3].split(',').next().unwrap().parse::<f64>().unwrap(), 1e300);
    }

    #[test]
    fn coeffs_report_round_trips_values() {
        let t = CoeffTable::from_fn("sq", 20, true, |m| (m * m) as f64 / 7.0).unwrap();
        let r = coeffs_report(&t).unwrap();
        let body = &r.tables[0].1;
        for (line, m) in body.lines().skip(2).zip(1..) {
            let v: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(v, t.get(m));
        }
        let v: serde_json::Value = serde_json::from_str(&r.json).unwrap();
        assert_eq!(v["cutoff"], 20);
        assert_eq!(v["command"], "coeffs");
    }
}
