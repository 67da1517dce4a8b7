//! One line per acceptance criterion; non-zero exit if any fails.
//!
//! `SPQM_ACCEPT_ONLY=3,7` restricts the run to the listed criteria.

use spqm::verify::{run_check, VerifyConfig, CHECKS};

fn main() {
    let cfg = VerifyConfig::default();
    let only: Option<Vec<u32>> = std::env::var("SPQM_ACCEPT_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, _, _) in CHECKS {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let out = run_check(id, &cfg);
        println!("{out}");
        if !out.passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
