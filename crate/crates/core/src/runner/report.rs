use serde::Serialize;
use serde_json::{json, Value};

use super::{ScenarioKind, SCHEMA_VERSION};
use crate::error::Error;

/// Identifiers of the verified claims. Several scenario kinds may report
/// against the same identifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckId {
    BoundStateFormula,
    BasicLoopFlow,
    WindingIdentity,
    FlowIndependence,
    FourWayIdentity,
    ArcEndpoints,
    ContinuumConnectivity,
    SpuriousPair,
    ChernHalf,
    PoincareHopf,
    DecayRateOrder,
    ContinuumFactorization,
    TwistTransparency,
    ScalarTermInvariance,
}

impl CheckId {
    pub const CRITERIA: [CheckId; 10] = [
        CheckId::BoundStateFormula,
        CheckId::BasicLoopFlow,
        CheckId::WindingIdentity,
        CheckId::FlowIndependence,
        CheckId::FourWayIdentity,
        CheckId::ArcEndpoints,
        CheckId::ContinuumConnectivity,
        CheckId::SpuriousPair,
        CheckId::ChernHalf,
        CheckId::PoincareHopf,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CheckId::BoundStateFormula => "bound_state_formula",
            CheckId::BasicLoopFlow => "basic_loop_flow",
            CheckId::WindingIdentity => "winding_identity",
            CheckId::FlowIndependence => "flow_independence",
            CheckId::FourWayIdentity => "four_way_identity",
            CheckId::ArcEndpoints => "arc_endpoints",
            CheckId::ContinuumConnectivity => "continuum_connectivity",
            CheckId::SpuriousPair => "spurious_pair",
            CheckId::ChernHalf => "chern_half",
            CheckId::PoincareHopf => "poincare_hopf",
            CheckId::DecayRateOrder => "decay_rate_order",
            CheckId::ContinuumFactorization => "continuum_factorization",
            CheckId::TwistTransparency => "twist_transparency",
            CheckId::ScalarTermInvariance => "scalar_term_invariance",
        }
    }

    /// The claim in words.
    pub fn claim(self) -> &'static str {
        match self {
            CheckId::BoundStateFormula => "the half-line bound state has energy m cos(theta - gamma) when sin(theta - gamma) > 0",
            CheckId::BasicLoopFlow => "spectral flow around the basic loop is -1",
            CheckId::WindingIdentity => "spectral flow of a loop equals minus the winding of exp(i (theta - gamma))",
            CheckId::FlowIndependence => {
                "the flow does not depend on zero-winding boundary profiles, small potentials, gauge twists or small level shifts"
            }
            CheckId::FourWayIdentity => {
                "lattice loop flow by crossings, by exp winding, minus the cylinder Chern number and the arc intersection number agree"
            }
            CheckId::ArcEndpoints => {
                "the Fermi arc ends at the Weyl projections and is stable under boundary perturbations"
            }
            CheckId::ContinuumConnectivity => "the continuum arc joins the two projections and crosses each separating bisector once",
            CheckId::SpuriousPair => "two opposite-chirality sectors on one surface carry no net flow and can be gapped",
            CheckId::ChernHalf => "a single Weyl cone carries half a flux quantum through a half-plane",
            CheckId::PoincareHopf => "chiralities of a periodic or asymptotically trivial field sum to zero",
            CheckId::DecayRateOrder => "the discrete decay rate converges to m sin(theta - gamma) at first order",
            CheckId::ContinuumFactorization => "continuum loop flow equals minus the winding of g along the loop",
            CheckId::TwistTransparency => "a gauge twist leaves the spectrum unchanged pointwise",
            CheckId::ScalarTermInvariance => "a scalar term smaller than the gap leaves every loop flow unchanged",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check_id: CheckId,
    pub scenario: String,
    pub claim_ref: String,
    pub computed: Value,
    pub expected: Value,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn new(
        id: CheckId,
        scenario: &str,
        computed: Value,
        expected: Value,
        tolerance: Option<f64>,
        pass: bool,
    ) -> Self {
        Self {
            check_id: id,
            scenario: scenario.to_string(),
            claim_ref: id.claim().to_string(),
            computed,
            expected,
            tolerance,
            pass,
            error: None,
        }
    }

    pub fn error(id: CheckId, scenario: &str, e: &Error) -> Self {
        Self {
            error: Some(e.to_string()),
            ..Self::new(id, scenario, Value::Null, Value::Null, None, false)
        }
    }

    /// One-line summary for terminals.
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        match &self.error {
            Some(e) => format!(
                "{status} {} [{}] error: {e}",
                self.check_id.as_str(),
                self.scenario
            ),
            None => format!(
                "{status} {} [{}] computed {}",
                self.check_id.as_str(),
                self.scenario,
                self.computed
            ),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub kind: ScenarioKind,
    pub seconds: f64,
    pub artifacts: Vec<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub schema_version: u32,
    pub seed: u64,
    pub all_pass: bool,
    pub passed: usize,
    pub failed: usize,
    pub scenarios: Vec<ScenarioSummary>,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(seed: u64, scenarios: Vec<ScenarioSummary>, checks: Vec<Check>) -> Self {
        let passed = checks.iter().filter(|c| c.pass).count();
        Self {
            schema_version: SCHEMA_VERSION,
            seed,
            all_pass: passed == checks.len(),
            passed,
            failed: checks.len() - passed,
            scenarios,
            checks,
        }
    }

    pub fn checks_for(&self, id: CheckId) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(move |c| c.check_id == id)
    }

    pub fn summary(&self) -> Value {
        json!({ "passed": self.passed, "failed": self.failed, "all_pass": self.all_pass })
    }
}
