//! One line per acceptance criterion.

use pfuchs::selftest::{run_with, DEFAULT_SEED};

#[test]
fn acceptance() {
    let report = run_with(DEFAULT_SEED, |r| println!("{r}"));
    let failed: Vec<u32> = report.results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("total {:.1}s, {} of {} passed", report.total.as_secs_f64(), report.results.len() - failed.len(), report.results.len());
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}
