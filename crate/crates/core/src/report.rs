//! Per-stage statistics and the summary table.
//!
//! Displacements are Euclidean per vertex, in units of d. The median is over
//! displaced vertices only, so a stage that moves a few vertices reports a
//! nonzero median next to a tiny displaced percentage.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::geom::{rat_approx, ExactPoint, Rational};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DisplacementStats {
    pub considered: usize,
    pub displaced: usize,
    /// Percentage of considered vertices that moved.
    pub percent: f64,
    pub median: f64,
    pub max: f64,
}

/// Statistics over (before, after) position pairs.
pub fn displacement_stats<'a>(
    moves: impl IntoIterator<Item = (&'a ExactPoint, &'a ExactPoint)>,
    d: &Rational,
) -> DisplacementStats {
    let d2 = d * d;
    let mut considered = 0;
    let mut ds = Vec::new();
    for (a, b) in moves {
        considered += 1;
        if a != b {
            let r = b.sub(a).norm2() / &d2;
            ds.push(rat_approx(&r).sqrt());
        }
    }
    stats_from(considered, ds)
}

pub fn stats_from(considered: usize, mut ds: Vec<f64>) -> DisplacementStats {
    ds.sort_by(f64::total_cmp);
    let displaced = ds.len();
    let median = match displaced {
        0 => 0.0,
        n if n % 2 == 1 => ds[n / 2],
        n => 0.5 * (ds[n / 2 - 1] + ds[n / 2]),
    };
    DisplacementStats {
        considered,
        displaced,
        percent: if considered == 0 {
            0.0
        } else {
            100.0 * displaced as f64 / considered as f64
        },
        median,
        max: ds.last().copied().unwrap_or(0.0),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    /// Pairs closer than d when the stage started.
    pub close_pairs: usize,
    pub displaced_pct: f64,
    pub median: f64,
    pub max: f64,
    pub seconds: f64,
    pub iterations: usize,
    /// Stage-specific counters such as applied edits or rejected steps.
    #[serde(default)]
    pub counters: std::collections::BTreeMap<String, u64>,
}

impl StageReport {
    pub fn new(stage: &str) -> Self {
        Self {
            stage: stage.to_string(),
            ..Default::default()
        }
    }

    pub fn with_stats(mut self, s: &DisplacementStats) -> Self {
        self.displaced_pct = s.percent;
        self.median = s.median;
        self.max = s.max;
        self
    }

    pub fn bump(&mut self, key: &str, by: u64) {
        *self.counters.entry(key.to_string()).or_default() += by;
    }

    pub fn counter(&self, key: &str) -> u64 {
        self.counters.get(key).copied().unwrap_or(0)
    }
}

/// One row of the summary table.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub f: usize,
    pub c_m: usize,
    pub v_m: f64,
    pub a_m: f64,
    pub m_m: f64,
    pub c_e: usize,
    pub v_e: f64,
    pub a_e: f64,
    pub m_e: f64,
    pub v_o: f64,
    pub a_o: f64,
    pub m_o: f64,
    pub t: f64,
}

impl TableRow {
    /// Builds the row from stage reports named `modify`, `expand` and
    /// `optimize`; missing stages contribute zeros.
    pub fn from_reports(triangles: usize, reports: &[StageReport]) -> Self {
        let find = |name: &str| reports.iter().find(|r| r.stage == name);
        let mut row = TableRow {
            f: triangles,
            t: reports.iter().map(|r| r.seconds).sum(),
            ..Default::default()
        };
        if let Some(r) = find("modify") {
            (row.c_m, row.v_m, row.a_m, row.m_m) = (r.close_pairs, r.displaced_pct, r.median, r.max);
        }
        if let Some(r) = find("expand") {
            (row.c_e, row.v_e, row.a_e, row.m_e) = (r.close_pairs, r.displaced_pct, r.median, r.max);
        }
        if let Some(r) = find("optimize") {
            (row.v_o, row.a_o, row.m_o) = (r.displaced_pct, r.median, r.max);
        }
        row
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Table,
}

pub fn emit_report(rows: &[TableRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            if rows.len() == 1 {
                serde_json::to_string_pretty(&rows[0]).unwrap()
            } else {
                serde_json::to_string_pretty(rows).unwrap()
            }
        }
        ReportFormat::Table => {
            let head = [
                "f", "c_m", "v_m", "a_m", "m_m", "c_e", "v_e", "a_e", "m_e", "v_o", "a_o", "m_o", "t",
            ];
            let mut s = String::new();
            for h in head {
                let _ = write!(s, "{h:>9}");
            }
            s.push('\n');
            for r in rows {
                let _ = write!(s, "{:>9}{:>9}", r.f, r.c_m);
                for v in [r.v_m, r.a_m, r.m_m] {
                    let _ = write!(s, "{v:>9.2}");
                }
                let _ = write!(s, "{:>9}", r.c_e);
                for v in [r.v_e, r.a_e, r.m_e, r.v_o, r.a_o, r.m_o, r.t] {
                    let _ = write!(s, "{v:>9.2}");
                }
                s.push('\n');
            }
            s
        }
    }
}
