//! Per-run summary records and the cross-run comparison table.

use std::collections::BTreeMap;
use std::io;

use crate::executive::{MissionOutcome, MissionStatus, StepRow};

pub const SUMMARY_HEADER: [&str; 9] = [
    "planner",
    "env",
    "seed",
    "status",
    "final_coverage",
    "steps_to_90",
    "censored",
    "auc",
    "diagnostic",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub planner: String,
    pub env: String,
    pub seed: u64,
    /// `complete`, `budget`, `aborted` or `error`.
    pub status: String,
    pub final_coverage: f64,
    /// First step at which coverage reached 0.9; the horizon when `censored`.
    pub steps_to_90: usize,
    pub censored: bool,
    /// Mean coverage fraction over steps 1..=horizon.
    pub auc: f64,
    pub diagnostic: String,
}

/// First step whose coverage fraction reaches `level`.
pub fn first_crossing(rows: &[StepRow], level: f64) -> Option<usize> {
    rows.iter().find(|r| r.coverage_fraction >= level).map(|r| r.step)
}

/// Mean coverage over steps `1..=horizon`, holding the last value after the
/// run ends.
pub fn coverage_auc(rows: &[StepRow], horizon: usize) -> f64 {
    if horizon == 0 {
        return rows.last().map_or(0.0, |r| r.coverage_fraction);
    }
    let mut sum = 0.0;
    let mut i = 0;
    let mut cur = rows.first().map_or(0.0, |r| r.coverage_fraction);
    for t in 1..=horizon {
        while i < rows.len() && rows[i].step <= t {
            cur = rows[i].coverage_fraction;
            i += 1;
        }
        sum += cur;
    }
    sum / horizon as f64
}

impl SummaryRow {
    /// `budget` is the step cap; uncapped runs use their own length as the horizon.
    pub fn from_outcome(planner: &str, env: &str, seed: u64, budget: Option<usize>, outcome: &MissionOutcome) -> Self {
        let horizon = budget.unwrap_or(outcome.steps);
        let crossing = first_crossing(&outcome.rows, 0.9);
        let diagnostic = match &outcome.status {
            MissionStatus::Aborted(msg) => msg.clone(),
            _ => String::new(),
        };
        Self {
            planner: planner.to_string(),
            env: env.to_string(),
            seed,
            status: outcome.status.name().to_string(),
            final_coverage: outcome.coverage_fraction,
            steps_to_90: crossing.unwrap_or(horizon),
            censored: crossing.is_none(),
            auc: coverage_auc(&outcome.rows, horizon),
            diagnostic,
        }
    }

    pub fn failed(planner: &str, env: &str, seed: u64, budget: Option<usize>, diagnostic: String) -> Self {
        Self {
            planner: planner.to_string(),
            env: env.to_string(),
            seed,
            status: "error".to_string(),
            final_coverage: 0.0,
            steps_to_90: budget.unwrap_or(0),
            censored: true,
            auc: 0.0,
            diagnostic,
        }
    }

    fn record(&self) -> [String; 9] {
        [
            self.planner.clone(),
            self.env.clone(),
            self.seed.to_string(),
            self.status.clone(),
            format!("{:.6}", self.final_coverage),
            self.steps_to_90.to_string(),
            self.censored.to_string(),
            format!("{:.6}", self.auc),
            self.diagnostic.clone(),
        ]
    }
}

pub fn write_summary<W: io::Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_summary<R: io::Read>(input: R) -> Result<Vec<SummaryRow>, String> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(|e| e.to_string())?;
    if header.iter().ne(SUMMARY_HEADER) {
        return Err(format!("unexpected summary header: {}", header.iter().collect::<Vec<_>>().join(",")));
    }
    let mut out = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let line = i + 2;
        let field = |k: usize| rec.get(k).unwrap_or("");
        let parse_err = |what: &str| format!("summary line {line}: bad {what}");
        out.push(SummaryRow {
            planner: field(0).to_string(),
            env: field(1).to_string(),
            seed: field(2).parse().map_err(|_| parse_err("seed"))?,
            status: field(3).to_string(),
            final_coverage: field(4).parse().map_err(|_| parse_err("final_coverage"))?,
            steps_to_90: field(5).parse().map_err(|_| parse_err("steps_to_90"))?,
            censored: field(6).parse().map_err(|_| parse_err("censored"))?,
            auc: field(7).parse().map_err(|_| parse_err("auc"))?,
            diagnostic: field(8).to_string(),
        });
    }
    Ok(out)
}

/// Median; the mean of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub env: String,
    pub planner: String,
    pub runs: usize,
    pub median_final_coverage: f64,
    /// Censored runs enter at their horizon.
    pub median_steps_to_90: f64,
    pub censored: usize,
    pub median_auc: f64,
}

/// Medians per (environment, planner), in name order.
pub fn summarize(rows: &[SummaryRow]) -> Vec<Comparison> {
    let mut groups: BTreeMap<(&str, &str), Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.env, &r.planner)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((env, planner), rs)| {
            let col = |f: fn(&SummaryRow) -> f64| median(&rs.iter().map(|r| f(r)).collect::<Vec<_>>()).unwrap_or(0.0);
            Comparison {
                env: env.to_string(),
                planner: planner.to_string(),
                runs: rs.len(),
                median_final_coverage: col(|r| r.final_coverage),
                median_steps_to_90: col(|r| r.steps_to_90 as f64),
                censored: rs.iter().filter(|r| r.censored).count(),
                median_auc: col(|r| r.auc),
            }
        })
        .collect()
}

pub fn format_table(rows: &[Comparison]) -> String {
    let mut out = format!(
        "{:<12} {:<8} {:>4} {:>9} {:>9} {:>8} {:>7}\n",
        "env", "planner", "runs", "coverage", "steps_90", "censored", "auc"
    );
    for c in rows {
        out.push_str(&format!(
            "{:<12} {:<8} {:>4} {:>9.4} {:>9.1} {:>8} {:>7.4}\n",
            c.env, c.planner, c.runs, c.median_final_coverage, c.median_steps_to_90, c.censored, c.median_auc
        ));
    }
    out
}
