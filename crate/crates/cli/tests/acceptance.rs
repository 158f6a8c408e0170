//! Full acceptance suite: every experiment at its default size, run twice.

use std::io::Write;
use std::path::PathBuf;

use hyperdyn_cli::config::ExperimentConfig;
use hyperdyn_cli::verify::{compare_dirs, verify_all, Suite};

/// (criterion, runtime budget in seconds, label)
const CRITERIA: [(u32, f64, &str); 12] = [
    (1, 1.0, "classification of the default matrix"),
    (2, 30.0, "shadowing bound and periodic uniqueness"),
    (3, 5.0, "chain shortening vs linear bracket"),
    (4, 60.0, "loop subgroup is Z^3, dense unstable projections"),
    (5, 600.0, "orbit closure avoids the ball, saturation covers"),
    (6, 120.0, "DA map support, fixed points, cones"),
    (7, 600.0, "semiconjugacy residual, affine case, C stability"),
    (8, 300.0, "leaf correspondence under H"),
    (9, 300.0, "unstable and center leaf density"),
    (10, 600.0, "tube calibration and chain projection gaps"),
    (11, 30.0, "SFT hulls and bracket closure"),
    (12, 10.0, "enclosure and overlap detection"),
];

const SUITE_BUDGET_S: f64 = 2700.0;

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hyperdyn-acceptance-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

/// Writes past the test harness capture so the lines show in a plain `cargo test`.
fn say(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
    let _ = out.flush();
}

fn line(k: u32, ok: bool, elapsed: f64, budget: f64, label: &str) {
    say(&format!("criterion {k:>2} {} {elapsed:>7.1}s/{budget}s  {label}", if ok { "PASS" } else { "FAIL" }));
}

fn report(suite: &Suite, k: u32, budget: f64, label: &str) -> bool {
    let reports: Vec<_> = suite.criterion(k).collect();
    let elapsed: f64 = reports.iter().map(|r| r.timestamps.elapsed_s).sum();
    let checks_ok = !reports.is_empty() && reports.iter().all(|r| r.passed());
    let ok = checks_ok && elapsed <= budget;
    line(k, ok, elapsed, budget, label);
    for r in &reports {
        if let Some(e) = &r.error {
            say(&format!("    {} error: {e}", r.command));
        }
        for c in r.checks.iter().filter(|c| !c.passed) {
            say(&format!("    {} {}: {} {} {}", r.command, c.id, c.value, c.relation, c.bound));
        }
    }
    ok
}

#[test]
fn acceptance() {
    let cfg = ExperimentConfig::default();
    let (first, second) = (scratch("a"), scratch("b"));

    let t0 = std::time::Instant::now();
    let suite = verify_all(&cfg);
    let t_first = t0.elapsed().as_secs_f64();
    suite.write(&first).expect("write first run");

    let mut all = true;
    for (k, budget, label) in CRITERIA {
        all &= report(&suite, k, budget, label);
    }

    let t1 = std::time::Instant::now();
    let again = verify_all(&cfg);
    let t_second = t1.elapsed().as_secs_f64();
    again.write(&second).expect("write second run");
    let diffs = compare_dirs(&first, &second).expect("compare runs");
    let slowest = t_first.max(t_second);
    let ok13 = diffs.is_empty() && slowest <= SUITE_BUDGET_S;
    line(13, ok13, slowest, SUITE_BUDGET_S, "two runs give identical reports and artifacts");
    for d in &diffs {
        say(&format!("    differs: {d}"));
    }
    all &= ok13;

    let _ = std::fs::remove_dir_all(&first);
    let _ = std::fs::remove_dir_all(&second);
    assert!(all, "acceptance criteria failed");
}
