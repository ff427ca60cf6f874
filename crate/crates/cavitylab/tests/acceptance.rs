//! End-to-end verification battery. Prints one line per criterion so a
//! plain `cargo test --test acceptance -- --nocapture` doubles as a status
//! report.

use cavitylab::selftest::{render_report, run_all};

#[test]
fn acceptance_battery() {
    let reports = run_all(7);
    print!("{}", render_report(&reports));
    let failed: Vec<_> = reports.iter().filter(|r| !r.passed).collect();
    assert!(
        failed.is_empty(),
        "{} criterion(s) failed:\n{}",
        failed.len(),
        failed
            .iter()
            .map(|r| format!("criterion {:02} {}: {}", r.id, r.name, r.details))
            .collect::<Vec<_>>()
            .join("\n")
    );
}
