use std::fs;
use std::path::Path;
use std::process::Command;

use weylflow::runner::{resolve_out_dir, run_config, Config, RunOptions};

const SMALL: &str = r#"
schema_version = 1
seed = 3

[[scenario]]
name = "loop"
kind = "basic_loop"
[scenario.params]
gammas = [0.0, 1.0]
samples = 48

[[scenario]]
name = "flux"
kind = "chern_half"
[scenario.params]
density = 120
tolerance = 0.05
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("config.toml");
    fs::write(&p, text).unwrap();
    p
}

fn artifacts(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for scenario in fs::read_dir(dir).unwrap() {
        let scenario = scenario.unwrap().path();
        if !scenario.is_dir() {
            continue;
        }
        for f in fs::read_dir(&scenario).unwrap() {
            let f = f.unwrap().path();
            if f.extension().is_some_and(|e| e == "csv") {
                out.push((
                    f.strip_prefix(dir).unwrap().display().to_string(),
                    fs::read(&f).unwrap(),
                ));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn runs_are_deterministic_and_write_expected_files() {
    let config = Config::from_toml(SMALL).unwrap();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let r = run_config(
            &config,
            &RunOptions {
                out: Some(d.path().into()),
                jobs: Some(2),
                filter: None,
            },
        )
        .unwrap();
        assert!(
            r.all_pass,
            "{:?}",
            r.checks.iter().map(|c| c.line()).collect::<Vec<_>>()
        );
        assert_eq!(r.scenarios.len(), 2);
    }
    let (fa, fb) = (artifacts(a.path()), artifacts(b.path()));
    assert!(fa.iter().any(|(n, _)| n.ends_with("chern_half.csv")));
    assert!(fa.iter().any(|(n, _)| n.contains("trajectory")));
    assert_eq!(fa, fb);
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(a.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["schema_version"], 1);
    assert_eq!(report["seed"], 3);
    assert!(report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["claim_ref"].is_string()));
}

#[test]
fn filter_selects_scenarios_by_name() {
    let config = Config::from_toml(SMALL).unwrap();
    let d = tempfile::tempdir().unwrap();
    let r = run_config(
        &config,
        &RunOptions {
            out: Some(d.path().into()),
            jobs: None,
            filter: Some("flu".into()),
        },
    )
    .unwrap();
    assert_eq!(r.scenarios.len(), 1);
    assert_eq!(r.scenarios[0].name, "flux");
    assert!(!d.path().join("loop").exists());
}

#[test]
fn output_directory_precedence() {
    let mut config = Config::from_toml(SMALL).unwrap();
    config.output_dir = Some("from_config".into());
    let explicit = RunOptions {
        out: Some("explicit".into()),
        jobs: None,
        filter: None,
    };
    assert_eq!(resolve_out_dir(&config, &explicit), Path::new("explicit"));
    let none = RunOptions {
        out: None,
        jobs: None,
        filter: None,
    };
    // Only this test touches the variable.
    std::env::set_var("WEYLFLOW_OUT", "from_env");
    assert_eq!(resolve_out_dir(&config, &none), Path::new("from_env"));
    std::env::remove_var("WEYLFLOW_OUT");
    assert_eq!(resolve_out_dir(&config, &none), Path::new("from_config"));
    config.output_dir = None;
    assert_eq!(resolve_out_dir(&config, &none), Path::new("out"));
}

#[test]
fn invalid_parameters_abort_before_running() {
    let bad = SMALL.replace("density = 120", "density = 120\nradus = 3.0");
    let config = Config::from_toml(&bad).unwrap();
    let d = tempfile::tempdir().unwrap();
    let err = run_config(
        &config,
        &RunOptions {
            out: Some(d.path().into()),
            jobs: None,
            filter: None,
        },
    )
    .unwrap_err();
    assert!(err.to_string().contains("radus"), "{err}");
    assert!(!d.path().join("loop").exists());
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_weylflow"))
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let out = d.path().join("out");
    let good = write_config(d.path(), SMALL);
    let o = cli(&[
        "verify",
        good.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stdout)
    );
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.lines().any(|l| l.starts_with("PASS basic_loop_flow")));

    // A wrong expectation is a failed check, not a config error.
    let wrong = write_config(
        d.path(),
        &SMALL.replace("samples = 48", "samples = 48\nexpected_flow = 1"),
    );
    let o = cli(&[
        "run",
        wrong.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--filter",
        "loop",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL basic_loop_flow"));

    let broken = write_config(
        d.path(),
        &SMALL.replace("schema_version = 1", "schema_version = 9"),
    );
    assert_eq!(
        cli(&[
            "run",
            broken.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        cli(&["run", "/nonexistent/config.toml"]).status.code(),
        Some(2)
    );

    let o = cli(&["list-scenarios"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("halfline_bound_state"));
}
