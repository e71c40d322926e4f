//! Runs every scenario of `configs/acceptance.toml` and prints one line per
//! criterion. A criterion passes when every check reported against it passes.

use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use weylflow::runner::{run_config, CheckId, Config, RunOptions};

fn main() -> ExitCode {
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/acceptance.toml");
    let config = match Config::load(&config_path) {
        Ok(c) => c,
        Err(e) => {
            println!("FAIL acceptance: cannot load config: {e}");
            return ExitCode::FAILURE;
        }
    };
    let dir = tempfile::tempdir().expect("temporary directory");
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        jobs: None,
        filter: None,
    };
    let start = Instant::now();
    let report = match run_config(&config, &opts) {
        Ok(r) => r,
        Err(e) => {
            println!("FAIL acceptance: run aborted: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!(
        "\nacceptance: {} scenarios in {:.1} s",
        report.scenarios.len(),
        start.elapsed().as_secs_f64()
    );

    let mut failed = 0;
    let mut supporting_failed = 0;
    for id in CheckId::CRITERIA {
        let checks: Vec<_> = report.checks_for(id).collect();
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        let scenarios: Vec<&str> = checks.iter().map(|c| c.scenario.as_str()).collect();
        println!(
            "{} {:<23} {} check(s) [{}]",
            if pass { "PASS" } else { "FAIL" },
            id.as_str(),
            checks.len(),
            scenarios.join(", ")
        );
        if !pass {
            failed += 1;
            for c in checks.iter().filter(|c| !c.pass) {
                println!("    {}", c.line());
            }
        }
    }
    for c in report
        .checks
        .iter()
        .filter(|c| !CheckId::CRITERIA.contains(&c.check_id))
    {
        println!(
            "{} {:<23} (supporting) [{}]",
            if c.pass { "PASS" } else { "FAIL" },
            c.check_id.as_str(),
            c.scenario
        );
        supporting_failed += usize::from(!c.pass);
    }
    println!(
        "acceptance: {} of {} criteria passed\n",
        CheckId::CRITERIA.len() - failed,
        CheckId::CRITERIA.len()
    );
    if failed == 0 && supporting_failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
