//! The acceptance battery. Each criterion returns a [`Report`]; none of them
//! panics on a failed property.

use std::fmt;
use std::time::Instant;

mod primitives;
mod protocols;
mod training;

pub use primitives::{discriminator, mac_forgery, privacy, quantizer, rs_decoder};
pub use protocols::{accounting, defense_coverage, oracle_equivalence, threshold};
pub use training::{convergence, descent_monitor};

#[derive(Clone, Debug)]
pub struct Report {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{:>2}] {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

/// What a criterion body hands back before timing is attached.
pub(crate) struct Outcome {
    pub passed: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }

    pub fn fail(detail: impl Into<String>) -> Self {
        Self::new(false, detail)
    }
}

pub(crate) fn timed(
    id: usize,
    name: &'static str,
    budget: Option<f64>,
    body: impl FnOnce() -> Outcome,
) -> Report {
    let start = Instant::now();
    let out = body();
    let seconds = start.elapsed().as_secs_f64();
    let over = budget.is_some_and(|b| seconds >= b);
    let detail = match (over, budget) {
        (true, Some(b)) => format!("{}; over the {b:.0} s budget", out.detail),
        _ => out.detail,
    };
    Report {
        id,
        name,
        passed: out.passed && !over,
        detail,
        seconds,
    }
}

pub type Criterion = fn() -> Report;

/// Every criterion in order.
pub const ALL: [Criterion; 11] = [
    oracle_equivalence,
    threshold,
    rs_decoder,
    privacy,
    mac_forgery,
    quantizer,
    accounting,
    discriminator,
    descent_monitor,
    convergence,
    defense_coverage,
];
