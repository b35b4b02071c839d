use std::io::Write;

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    pub accuracy: f64,
    pub loss: f64,
    pub slack: f64,
    /// `-3 ||u_0|| / q`.
    pub slack_floor: f64,
    pub included: usize,
    pub excluded: usize,
    pub flagged: usize,
    pub degenerate: bool,
    pub messages: u64,
    pub elements: u64,
}

impl IterationMetrics {
    pub fn descent_holds(&self) -> bool {
        self.slack >= self.slack_floor
    }
}

pub const CSV_HEADER: [&str; 11] = [
    "iteration",
    "accuracy",
    "loss",
    "slack",
    "slack_floor",
    "included",
    "excluded",
    "flagged",
    "degenerate",
    "messages",
    "elements",
];

/// Nine significant digits.
pub fn sig9(x: f64) -> String {
    format!("{x:.8e}")
}

pub fn write_csv<W: Write>(rows: &[IterationMetrics], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.iteration.to_string(),
            sig9(r.accuracy),
            sig9(r.loss),
            sig9(r.slack),
            sig9(r.slack_floor),
            r.included.to_string(),
            r.excluded.to_string(),
            r.flagged.to_string(),
            (r.degenerate as u8).to_string(),
            r.messages.to_string(),
            r.elements.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub aggregator: String,
    pub seed: u64,
    pub iterations: usize,
    pub final_accuracy: f64,
    pub final_loss: f64,
    /// Smallest `slack - slack_floor` over the run.
    pub min_descent_margin: f64,
    pub descent_violations: usize,
    pub exclusions: usize,
    pub degenerate_iterations: usize,
    pub messages: u64,
    pub elements: u64,
}

impl RunSummary {
    pub fn from_metrics(aggregator: &str, seed: u64, rows: &[IterationMetrics]) -> Self {
        let last = rows.last();
        Self {
            aggregator: aggregator.to_string(),
            seed,
            iterations: rows.len(),
            final_accuracy: last.map_or(f64::NAN, |r| r.accuracy),
            final_loss: last.map_or(f64::NAN, |r| r.loss),
            min_descent_margin: rows
                .iter()
                .map(|r| r.slack - r.slack_floor)
                .fold(f64::INFINITY, f64::min),
            descent_violations: rows.iter().filter(|r| !r.descent_holds()).count(),
            exclusions: rows.iter().map(|r| r.excluded).sum(),
            degenerate_iterations: rows.iter().filter(|r| r.degenerate).count(),
            messages: rows.iter().map(|r| r.messages).sum(),
            elements: rows.iter().map(|r| r.elements).sum(),
        }
    }
}
