//! Acceptance battery: one PASS/FAIL line per criterion; exits non-zero if
//! any criterion fails.

fn main() {
    let reports = itfl_verify::run_all(|r| println!("{r}"));
    let failed: Vec<usize> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    if failed.is_empty() {
        println!(
            "acceptance: {} of {} criteria passed",
            reports.len(),
            reports.len()
        );
    } else {
        println!("acceptance: criteria {failed:?} failed");
        std::process::exit(1);
    }
}
