//! Scenario runner: a TOML config lists named scenarios, each of a known
//! kind with its own parameter table. Running a config writes per-scenario
//! artifacts and a verification report with one record per check.

pub mod output;
mod params;
mod report;
mod scenarios;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use params::*;
pub use report::{Check, CheckId, ScenarioSummary, VerificationReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    HalflineBoundState,
    BasicLoop,
    GammaProfileLoop,
    HalfPlaneFamily,
    ChemicalShift,
    PotentialStability,
    GaugeTwist,
    TightBindingBattery,
    ContinuumBattery,
    SpuriousPair,
    ChernHalf,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 11] = [
        ScenarioKind::HalflineBoundState,
        ScenarioKind::BasicLoop,
        ScenarioKind::GammaProfileLoop,
        ScenarioKind::HalfPlaneFamily,
        ScenarioKind::ChemicalShift,
        ScenarioKind::PotentialStability,
        ScenarioKind::GaugeTwist,
        ScenarioKind::TightBindingBattery,
        ScenarioKind::ContinuumBattery,
        ScenarioKind::SpuriousPair,
        ScenarioKind::ChernHalf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::HalflineBoundState => "halfline_bound_state",
            ScenarioKind::BasicLoop => "basic_loop",
            ScenarioKind::GammaProfileLoop => "gamma_profile_loop",
            ScenarioKind::HalfPlaneFamily => "half_plane_family",
            ScenarioKind::ChemicalShift => "chemical_shift",
            ScenarioKind::PotentialStability => "potential_stability",
            ScenarioKind::GaugeTwist => "gauge_twist",
            ScenarioKind::TightBindingBattery => "tight_binding_battery",
            ScenarioKind::ContinuumBattery => "continuum_battery",
            ScenarioKind::SpuriousPair => "spurious_pair",
            ScenarioKind::ChernHalf => "chern_half",
        }
    }

    /// One-line description of what the kind reproduces.
    pub fn anchor(self) -> &'static str {
        match self {
            ScenarioKind::HalflineBoundState => {
                "discrete half-line bound state against m cos(theta - gamma), with first-order decay-rate convergence"
            }
            ScenarioKind::BasicLoop => "flow -1 around the basic loop theta -> theta + 2 pi at fixed mass and boundary angle",
            ScenarioKind::GammaProfileLoop => {
                "flow = -winding of exp(i (theta - gamma)) on random loops; zero-winding boundary profiles leave it unchanged"
            }
            ScenarioKind::HalfPlaneFamily => {
                "half-plane family m = a sec(theta): a zero crossing exists exactly for gamma in (-pi, 0)"
            }
            ScenarioKind::ChemicalShift => "level shifts below the smallest mass leave the flow unchanged; larger ones are rejected",
            ScenarioKind::PotentialStability => "small decaying matrix potentials leave the flow unchanged",
            ScenarioKind::GaugeTwist => "constant and affine gauge twists leave spectra and flow unchanged",
            ScenarioKind::TightBindingBattery => {
                "lattice Weyl pair: flow, exp winding, -Chern and arc intersection agree on every loop; arc ends at the projections"
            }
            ScenarioKind::ContinuumBattery => {
                "quadratic continuum field: arc joins the two projections, bisector crossings match the winding, loop flow factorizes"
            }
            ScenarioKind::SpuriousPair => {
                "opposite-chirality sectors on one surface: total flow 0, and a coupling removes every zero crossing"
            }
            ScenarioKind::ChernHalf => "half-plane Berry flux tends to one half of a flux quantum",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: ScenarioKind,
    #[serde(default)]
    pub params: toml::Table,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    /// Seed for every randomized scenario that does not set its own.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<Scenario>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Config = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        let mut names = std::collections::BTreeSet::new();
        for s in &c.scenarios {
            if s.name.is_empty() || s.name.contains(['/', '\\']) || s.name == "." || s.name == ".."
            {
                return Err(Error::Config(format!(
                    "scenario name `{}` is not a valid directory name",
                    s.name
                )));
            }
            if !names.insert(s.name.clone()) {
                return Err(Error::Config(format!(
                    "duplicate scenario name `{}`",
                    s.name
                )));
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Every kind once, with default parameters.
    pub fn all_defaults() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            seed: 0,
            output_dir: None,
            scenarios: ScenarioKind::ALL
                .iter()
                .map(|k| Scenario {
                    name: k.as_str().to_string(),
                    kind: *k,
                    params: toml::Table::new(),
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub out: Option<PathBuf>,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Substring of the scenario names to run.
    pub filter: Option<String>,
}

/// Output directory: explicit option, then the environment override, then
/// the config, then `out`.
pub fn resolve_out_dir(config: &Config, opts: &RunOptions) -> PathBuf {
    opts.out
        .clone()
        .or_else(|| {
            std::env::var_os("WEYLFLOW_OUT")
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
        })
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Parse and validate every selected scenario, then run them. Config
/// problems abort before any computation; compute failures become failed
/// checks.
pub fn run_config(config: &Config, opts: &RunOptions) -> Result<VerificationReport> {
    let selected: Vec<&Scenario> = config
        .scenarios
        .iter()
        .filter(|s| {
            opts.filter
                .as_ref()
                .is_none_or(|f| s.name.contains(f.as_str()))
        })
        .collect();
    let resolved = selected
        .iter()
        .map(|s| Ok((*s, ScenarioParams::parse(s, config.seed)?)))
        .collect::<Result<Vec<_>>>()?;
    let out = resolve_out_dir(config, opts);
    fs::create_dir_all(&out)?;
    let work = || -> Vec<(Vec<Check>, ScenarioSummary)> {
        resolved
            .par_iter()
            .map(|(s, p)| run_one(s, p, &out))
            .collect()
    };
    let results = match opts.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?
            .install(work),
        None => work(),
    };
    let mut checks = Vec::new();
    let mut scenarios = Vec::new();
    for (c, s) in results {
        checks.extend(c);
        scenarios.push(s);
    }
    let report = VerificationReport::new(config.seed, scenarios, checks);
    output::Artifacts::new(&out)?.json("report.json", &report)?;
    Ok(report)
}

fn run_one(s: &Scenario, p: &ScenarioParams, out: &Path) -> (Vec<Check>, ScenarioSummary) {
    let start = Instant::now();
    log::info!("scenario {} ({}) started", s.name, s.kind.as_str());
    let mut written = Vec::new();
    let outcome = match output::Artifacts::new(&out.join(&s.name)) {
        Ok(mut art) => {
            let r = catch_unwind(AssertUnwindSafe(|| scenarios::run(&s.name, p, &mut art)));
            written = art.written().to_vec();
            match r {
                Ok(r) => r,
                Err(panic) => {
                    let msg = panic
                        .downcast_ref::<String>()
                        .cloned()
                        .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                        .unwrap_or_else(|| "panic".into());
                    Err(Error::InvalidInput(format!("internal failure: {msg}")))
                }
            }
        }
        Err(e) => Err(e),
    };
    let checks = match outcome {
        Ok(c) => c,
        Err(e) => {
            log::error!("scenario {} failed: {e}", s.name);
            p.primary_checks()
                .iter()
                .map(|id| Check::error(*id, &s.name, &e))
                .collect()
        }
    };
    let seconds = start.elapsed().as_secs_f64();
    log::info!("scenario {} finished in {seconds:.2} s", s.name);
    let summary = ScenarioSummary {
        name: s.name.clone(),
        kind: s.kind,
        seconds,
        artifacts: written,
        passed: checks.iter().all(|c| c.pass),
    };
    (checks, summary)
}

/// Human-readable catalog of scenario kinds with their default parameters.
pub fn catalog() -> String {
    let mut s = String::new();
    for k in ScenarioKind::ALL {
        s.push_str(&format!("{}\n    {}\n", k.as_str(), k.anchor()));
        let checks: Vec<&str> = ScenarioParams::default_for(k)
            .primary_checks()
            .iter()
            .map(|c| c.as_str())
            .collect();
        s.push_str(&format!(
            "    checks: {}\n    defaults:\n",
            checks.join(", ")
        ));
        let table = ScenarioParams::default_for(k)
            .to_table()
            .unwrap_or_default();
        for line in toml::to_string(&table).unwrap_or_default().lines() {
            s.push_str(&format!("        {line}\n"));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_rejects_unknown_kind_and_bad_version() {
        let bad_kind = "schema_version = 1\n[[scenario]]\nname = \"x\"\nkind = \"nope\"\n";
        assert!(matches!(Config::from_toml(bad_kind), Err(Error::Config(_))));
        let bad_version = "schema_version = 7\n";
        let e = Config::from_toml(bad_version).unwrap_err().to_string();
        assert!(e.contains("schema_version"), "{e}");
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let text = "schema_version = 1\n[[scenario]]\nname = \"a\"\nkind = \"chern_half\"\n[[scenario]]\nname = \"a\"\nkind = \"basic_loop\"\n";
        assert!(Config::from_toml(text)
            .unwrap_err()
            .to_string()
            .contains("duplicate"));
    }

    #[test]
    fn default_config_round_trips() {
        let c = Config::all_defaults();
        let back = Config::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn every_kind_has_an_anchor_and_checks() {
        let cat = catalog();
        for k in ScenarioKind::ALL {
            assert!(cat.contains(k.as_str()));
            assert!(!ScenarioParams::default_for(k).primary_checks().is_empty());
        }
    }
}
