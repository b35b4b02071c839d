//! Independent oracles and the acceptance battery for `itfl-core`.
//!
//! [`oracle`] recomputes protocol outputs without touching the core
//! arithmetic; [`criteria`] runs the eleven acceptance checks and reports one
//! line each.

pub mod criteria;
pub mod oracle;

pub use criteria::{Report, ALL};

/// Runs every criterion in order, calling `each` as reports arrive.
pub fn run_all(mut each: impl FnMut(&Report)) -> Vec<Report> {
    ALL.iter()
        .map(|c| {
            let r = c();
            each(&r);
            r
        })
        .collect()
}
