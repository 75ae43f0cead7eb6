//! Acceptance criteria 1 to 11, one line each. Lines go straight to stdout so they show
//! without `--nocapture`.

use std::io::Write;

use twophase_core::acceptance::{run_criterion, Suite};
use twophase_core::config::RunConfig;

#[test]
fn acceptance() {
    let mut out = std::io::stdout().lock();
    let cfg = RunConfig::default();
    let mut criteria = Vec::new();
    for id in 1..=11 {
        let c = run_criterion(id, &cfg);
        writeln!(out, "{}", c.line()).unwrap();
        for f in c.failures() {
            let tag = if f.known.is_some() { "known" } else { "UNEXPECTED" };
            writeln!(out, "    {tag}: {} = {:.6e} (tol {:.1e})", f.label, f.value, f.tol).unwrap();
        }
        criteria.push(c);
    }
    let suite = Suite { criteria };
    let passed = suite.criteria.iter().filter(|c| c.passed()).count();
    writeln!(out, "acceptance: {passed}/11 criteria pass").unwrap();
    let mut notes: Vec<(u8, &str)> = suite.criteria.iter().flat_map(|c| c.failures().into_iter().filter_map(move |f| f.known.map(|k| (c.id, k)))).collect();
    notes.dedup();
    for (id, note) in notes {
        writeln!(out, "known discrepancy (criterion {id}): {note}").unwrap();
    }
    assert!(!suite.any_error(), "a criterion could not be evaluated");
    assert!(suite.only_known_failures(), "unexpected acceptance failure");
}
