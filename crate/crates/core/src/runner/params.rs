//! Parameter tables of the scenario kinds. Every field has a default, so an
//! empty table runs the kind at its reference settings.

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::report::CheckId;
use super::{Scenario, ScenarioKind};
use crate::continuum::{ContinuumOptions, GammaField, SpuriousOptions, TwistPlan};
use crate::error::{Error, Result};
use crate::halfline::GridRule;
use crate::tight_binding::BatteryOptions;

fn bad<T>(field: &str, why: impl std::fmt::Display) -> Result<T> {
    Err(Error::Config(format!("{field}: {why}")))
}

fn positive(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x.is_finite()) {
        return bad(field, format!("must be positive and finite, got {x}"));
    }
    Ok(())
}

fn fraction(field: &str, x: f64) -> Result<()> {
    if !(x > 0.0 && x < 1.0) {
        return bad(field, format!("must lie in (0, 1), got {x}"));
    }
    Ok(())
}

fn at_least(field: &str, n: usize, min: usize) -> Result<()> {
    if n < min {
        return bad(field, format!("must be at least {min}, got {n}"));
    }
    Ok(())
}

fn finite_list(field: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return bad(field, "must not be empty");
    }
    if let Some(x) = v.iter().find(|x| !x.is_finite()) {
        return bad(field, format!("contains non-finite value {x}"));
    }
    Ok(())
}

fn grid_rule(field: &str, g: &GridRule) -> Result<()> {
    match *g {
        GridRule::Fixed { n_sites, spacing } => {
            at_least(&format!("{field}.n_sites"), n_sites, 8)?;
            positive(&format!("{field}.spacing"), spacing)
        }
        GridRule::MassScaled {
            n_sites,
            mass_spacing,
            max_spacing,
        } => {
            at_least(&format!("{field}.n_sites"), n_sites, 8)?;
            positive(&format!("{field}.mass_spacing"), mass_spacing)?;
            positive(&format!("{field}.max_spacing"), max_spacing)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundStateParams {
    pub masses: Vec<f64>,
    /// Values of `theta - gamma`, each in `(0, pi)`.
    pub phis: Vec<f64>,
    pub gamma: f64,
    pub n_sites: usize,
    pub spacing: f64,
    pub tolerance: f64,
    /// Absolute allowance in the halving comparison for rounding.
    pub roundoff_floor: f64,
    pub window_fraction: f64,
}

impl Default for BoundStateParams {
    fn default() -> Self {
        Self {
            masses: vec![0.5, 1.0, 2.0],
            phis: vec![PI / 6.0, PI / 4.0, PI / 2.0, 3.0 * PI / 4.0],
            gamma: 0.0,
            n_sites: 4000,
            spacing: 0.01,
            tolerance: 1e-2,
            roundoff_floor: 1e-12,
            window_fraction: 0.99,
        }
    }
}

impl BoundStateParams {
    fn validate(&self) -> Result<()> {
        finite_list("masses", &self.masses)?;
        for m in &self.masses {
            positive("masses", *m)?;
        }
        finite_list("phis", &self.phis)?;
        if let Some(p) = self.phis.iter().find(|p| !(**p > 0.0 && **p < PI)) {
            return bad(
                "phis",
                format!("{p} is outside (0, pi), where no bound state exists"),
            );
        }
        at_least("n_sites", self.n_sites, 8)?;
        positive("spacing", self.spacing)?;
        let mmax = self.masses.iter().fold(0.0f64, |a, b| a.max(*b));
        if self.spacing * mmax >= 1.0 {
            return bad(
                "spacing",
                format!("h m = {} must stay below 1", self.spacing * mmax),
            );
        }
        positive("tolerance", self.tolerance)?;
        if !(self.roundoff_floor >= 0.0) {
            return bad("roundoff_floor", "must be non-negative");
        }
        fraction("window_fraction", self.window_fraction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BasicLoopParams {
    pub m: f64,
    pub gammas: Vec<f64>,
    pub samples: usize,
    pub grid: GridRule,
    pub window_fraction: f64,
    pub budget: usize,
    pub expected_flow: i64,
    pub max_seconds: f64,
}

impl Default for BasicLoopParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            gammas: vec![0.0, PI / 3.0, -PI / 4.0],
            samples: 64,
            grid: GridRule::Fixed {
                n_sites: 600,
                spacing: 0.05,
            },
            window_fraction: 0.9,
            budget: 512,
            expected_flow: -1,
            max_seconds: 60.0,
        }
    }
}

impl BasicLoopParams {
    fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        finite_list("gammas", &self.gammas)?;
        at_least("samples", self.samples, 8)?;
        grid_rule("grid", &self.grid)?;
        fraction("window_fraction", self.window_fraction)?;
        positive("max_seconds", self.max_seconds)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GammaProfileParams {
    /// Random loops with random windings of `theta` and `gamma`.
    pub profiles: usize,
    /// Loops `theta = xi` at unit mass with random zero-winding `gamma`.
    pub zero_winding_profiles: usize,
    pub m_min: f64,
    pub max_winding: i64,
    pub harmonics: usize,
    pub grid: GridRule,
    pub window_fraction: f64,
    pub budget: usize,
    /// Largest phase change of `theta - gamma` between samples.
    pub max_phase_step: f64,
    pub min_samples: usize,
    pub seed: Option<u64>,
}

impl Default for GammaProfileParams {
    fn default() -> Self {
        Self {
            profiles: 20,
            zero_winding_profiles: 5,
            m_min: 0.5,
            max_winding: 2,
            harmonics: 2,
            grid: GridRule::MassScaled {
                n_sites: 600,
                mass_spacing: 0.05,
                max_spacing: 0.1,
            },
            window_fraction: 0.9,
            budget: 1024,
            max_phase_step: 0.2,
            min_samples: 64,
            seed: None,
        }
    }
}

impl GammaProfileParams {
    fn validate(&self) -> Result<()> {
        at_least("profiles", self.profiles + self.zero_winding_profiles, 1)?;
        positive("m_min", self.m_min)?;
        if !(0..=8).contains(&self.max_winding) {
            return bad("max_winding", "must lie in 0..=8");
        }
        grid_rule("grid", &self.grid)?;
        fraction("window_fraction", self.window_fraction)?;
        positive("max_phase_step", self.max_phase_step)?;
        at_least("min_samples", self.min_samples, 8)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HalfPlaneParams {
    pub a: f64,
    pub gammas: Vec<f64>,
    pub theta_max: f64,
    pub samples: usize,
    pub grid: GridRule,
    pub window_fraction: f64,
}

impl Default for HalfPlaneParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            gammas: vec![
                -3.0 * PI / 4.0,
                -PI / 2.0,
                -PI / 4.0,
                0.0,
                PI / 4.0,
                3.0 * PI / 4.0,
                PI,
            ],
            theta_max: 1.4,
            samples: 113,
            grid: GridRule::MassScaled {
                n_sites: 800,
                mass_spacing: 0.05,
                max_spacing: 0.1,
            },
            window_fraction: 0.9,
        }
    }
}

impl HalfPlaneParams {
    fn validate(&self) -> Result<()> {
        positive("a", self.a)?;
        finite_list("gammas", &self.gammas)?;
        if !(self.theta_max > 0.0 && self.theta_max < 0.5 * PI) {
            return bad("theta_max", "must lie in (0, pi/2)");
        }
        at_least("samples", self.samples, 8)?;
        grid_rule("grid", &self.grid)?;
        fraction("window_fraction", self.window_fraction)
    }
}

/// Shared settings of the basic-loop stability scenarios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LoopSettings {
    pub m: f64,
    pub gamma: f64,
    pub samples: usize,
    pub grid: GridRule,
    pub window_fraction: f64,
    pub budget: usize,
}

impl Default for LoopSettings {
    fn default() -> Self {
        Self {
            m: 1.0,
            gamma: 0.0,
            samples: 64,
            grid: GridRule::Fixed {
                n_sites: 600,
                spacing: 0.05,
            },
            window_fraction: 0.9,
            budget: 512,
        }
    }
}

impl LoopSettings {
    fn validate(&self) -> Result<()> {
        positive("loop.m", self.m)?;
        if !self.gamma.is_finite() {
            return bad("loop.gamma", "must be finite");
        }
        at_least("loop.samples", self.samples, 8)?;
        grid_rule("loop.grid", &self.grid)?;
        fraction("loop.window_fraction", self.window_fraction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChemicalShiftParams {
    #[serde(rename = "loop")]
    pub loop_: LoopSettings,
    /// Levels that must keep the flow.
    pub levels: Vec<f64>,
    /// Levels at or beyond the mass that must be rejected.
    pub rejected_levels: Vec<f64>,
}

impl Default for ChemicalShiftParams {
    fn default() -> Self {
        Self {
            loop_: LoopSettings {
                gamma: 0.3,
                window_fraction: 0.95,
                ..LoopSettings::default()
            },
            levels: vec![-0.85, -0.4, 0.0, 0.45, 0.85],
            rejected_levels: vec![1.0, -1.5],
        }
    }
}

impl ChemicalShiftParams {
    fn validate(&self) -> Result<()> {
        self.loop_.validate()?;
        finite_list("levels", &self.levels)?;
        if let Some(mu) = self
            .rejected_levels
            .iter()
            .find(|mu| mu.abs() < self.loop_.m)
        {
            return bad(
                "rejected_levels",
                format!("{mu} lies inside the gap and cannot be expected to fail"),
            );
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialParams {
    #[serde(rename = "loop")]
    pub loop_: LoopSettings,
    /// Operator norm of every potential at the boundary.
    pub norm: f64,
    /// Decay rate of `exp(-rate z)`.
    pub rate: f64,
    /// Random Hermitian potentials in addition to the Pauli directions.
    pub random: usize,
    pub seed: Option<u64>,
}

impl Default for PotentialParams {
    fn default() -> Self {
        Self {
            loop_: LoopSettings::default(),
            norm: 0.2,
            rate: 1.0,
            random: 3,
            seed: None,
        }
    }
}

impl PotentialParams {
    fn validate(&self) -> Result<()> {
        self.loop_.validate()?;
        positive("norm", self.norm)?;
        if self.norm >= self.loop_.m {
            return bad("norm", "must stay below the mass");
        }
        positive("rate", self.rate)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaugeTwistParams {
    #[serde(rename = "loop")]
    pub loop_: LoopSettings,
    pub constants: Vec<f64>,
    /// `[a, b]` pairs for `A(z) = a + b z`.
    pub affine: Vec<[f64; 2]>,
    /// Amplitude of an extra `sin(2 pi xi)` variation of `A` along the loop.
    pub loop_modulation: f64,
    /// Angles at which twisted and untwisted spectra are compared.
    pub compare_points: usize,
    pub spectrum_tolerance: f64,
}

impl Default for GaugeTwistParams {
    fn default() -> Self {
        Self {
            loop_: LoopSettings::default(),
            constants: vec![0.7, -1.3, 3.0],
            affine: vec![[0.5, 0.2], [-1.0, 0.05]],
            loop_modulation: 0.5,
            compare_points: 16,
            spectrum_tolerance: 1e-10,
        }
    }
}

impl GaugeTwistParams {
    fn validate(&self) -> Result<()> {
        self.loop_.validate()?;
        if self.constants.is_empty() && self.affine.is_empty() {
            return bad("constants", "at least one twist is needed");
        }
        if self
            .constants
            .iter()
            .chain(self.affine.iter().flatten())
            .any(|x| !x.is_finite())
            || !self.loop_modulation.is_finite()
        {
            return bad("affine", "twists must be finite");
        }
        at_least("compare_points", self.compare_points, 1)?;
        positive("spectrum_tolerance", self.spectrum_tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeField {
    ShiftedReference,
    /// Model file in the JSON hopping format.
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TightBindingParams {
    pub field: LatticeField,
    pub battery: BatteryOptions,
    pub perturbation_sites: usize,
    pub perturbation_norm: f64,
    /// Amplitude `eps` of the scalar term `eps sin(ky)`; zero skips it.
    pub scalar_term: f64,
    /// Endpoint tolerance in grid cells.
    pub endpoint_cells: f64,
    pub min_loops: usize,
    pub seed: Option<u64>,
}

impl Default for TightBindingParams {
    fn default() -> Self {
        Self {
            field: LatticeField::ShiftedReference,
            battery: BatteryOptions::default(),
            perturbation_sites: 2,
            perturbation_norm: 0.3,
            scalar_term: 0.3,
            endpoint_cells: 1.0,
            min_loops: 6,
            seed: None,
        }
    }
}

impl TightBindingParams {
    fn validate(&self) -> Result<()> {
        at_least("battery.n_sites", self.battery.n_sites, 8)?;
        at_least("battery.grid", self.battery.grid, 8)?;
        at_least("battery.kz_samples", self.battery.kz_samples, 8)?;
        fraction(
            "battery.surface.window_fraction",
            self.battery.surface.window_fraction,
        )?;
        if 4 * self.perturbation_sites > self.battery.n_sites {
            return bad(
                "perturbation_sites",
                "must cover at most a quarter of the chain",
            );
        }
        if !(self.perturbation_norm >= 0.0) {
            return bad("perturbation_norm", "must be non-negative");
        }
        if !(self.scalar_term >= 0.0 && self.scalar_term < 1.0) {
            return bad(
                "scalar_term",
                "must lie in [0, 1) so that |a| < |b| away from the Weyl points",
            );
        }
        positive("endpoint_cells", self.endpoint_cells)?;
        if let LatticeField::File(p) = &self.field {
            if !p.exists() {
                return bad(
                    "field",
                    format!("model file {} does not exist", p.display()),
                );
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContinuumParams {
    pub w_plus: [f64; 2],
    pub w_minus: [f64; 2],
    pub registries: Vec<GammaField>,
    /// Half-width of the square scan around the midpoint.
    pub extent: f64,
    pub grid: usize,
    /// Bisector offsets along the axis from the midpoint.
    pub offsets: Vec<f64>,
    pub winding_half_length: f64,
    pub winding_samples: usize,
    pub loop_samples: usize,
    pub twist: TwistPlan,
    pub twist_points: usize,
    pub twist_tolerance: f64,
    pub options: ContinuumOptions,
    pub window_fraction: f64,
    pub budget: usize,
}

impl Default for ContinuumParams {
    fn default() -> Self {
        Self {
            w_plus: [-1.0, 0.0],
            w_minus: [1.0, 0.0],
            registries: vec![
                GammaField::Constant { value: 0.0 },
                GammaField::Affine {
                    value: 0.2,
                    slope: [0.3, -0.2],
                },
                GammaField::RadialBump {
                    value: -0.1,
                    amplitude: 0.8,
                    center: [0.2, -0.6],
                    width: 0.6,
                },
            ],
            extent: 2.4,
            grid: 64,
            offsets: vec![-1.6, -1.2, -0.75, -0.4, 0.0, 0.4, 0.75, 1.2, 1.6],
            winding_half_length: 60.0,
            winding_samples: 6000,
            loop_samples: 64,
            twist: TwistPlan { a: 0.5, b: 0.2 },
            twist_points: 100,
            twist_tolerance: 1e-10,
            options: ContinuumOptions::default(),
            window_fraction: 0.9,
            budget: 256,
        }
    }
}

impl ContinuumParams {
    fn validate(&self) -> Result<()> {
        if self
            .w_plus
            .iter()
            .chain(&self.w_minus)
            .any(|x| !x.is_finite())
            || self.w_plus == self.w_minus
        {
            return bad("w_plus", "roots must be finite and distinct");
        }
        if self.registries.is_empty() {
            return bad("registries", "must not be empty");
        }
        for (i, g) in self.registries.iter().enumerate() {
            g.validate()
                .map_err(|e| Error::Config(format!("registries[{i}]: {e}")))?;
        }
        positive("extent", self.extent)?;
        at_least("grid", self.grid, 8)?;
        finite_list("offsets", &self.offsets)?;
        let sep = ((self.w_plus[0] - self.w_minus[0]).powi(2)
            + (self.w_plus[1] - self.w_minus[1]).powi(2))
        .sqrt();
        if let Some(o) = self
            .offsets
            .iter()
            .find(|o| (o.abs() - 0.5 * sep).abs() < 1e-3 * sep)
        {
            return bad(
                "offsets",
                format!("offset {o} puts a bisector through a root"),
            );
        }
        positive("winding_half_length", self.winding_half_length)?;
        at_least("winding_samples", self.winding_samples, 64)?;
        at_least("loop_samples", self.loop_samples, 16)?;
        positive("twist_tolerance", self.twist_tolerance)?;
        grid_rule("options.grid", &self.options.grid)?;
        fraction("window_fraction", self.window_fraction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpuriousParams {
    pub deltas: Vec<f64>,
    pub pair: SpuriousOptions,
}

impl Default for SpuriousParams {
    fn default() -> Self {
        Self {
            deltas: vec![0.0, 0.3],
            pair: SpuriousOptions::default(),
        }
    }
}

impl SpuriousParams {
    fn validate(&self) -> Result<()> {
        finite_list("deltas", &self.deltas)?;
        positive("pair.m", self.pair.m)?;
        if let Some(d) = self
            .deltas
            .iter()
            .find(|d| !(**d >= 0.0 && **d < self.pair.m))
        {
            return bad("deltas", format!("{d} is outside [0, m)"));
        }
        at_least("pair.n_sites", self.pair.n_sites, 8)?;
        positive("pair.spacing", self.pair.spacing)?;
        at_least("pair.samples", self.pair.samples, 8)?;
        fraction("pair.window_fraction", self.pair.window_fraction)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChernHalfParams {
    pub a: f64,
    /// Disk radius in units of `a`.
    pub radius: f64,
    /// Radial and angular steps.
    pub density: usize,
    pub tolerance: f64,
    /// Factor for the scale-invariance comparison.
    pub scale: f64,
}

impl Default for ChernHalfParams {
    fn default() -> Self {
        Self {
            a: 1.0,
            radius: 50.0,
            density: 400,
            tolerance: 0.02,
            scale: 2.0,
        }
    }
}

impl ChernHalfParams {
    fn validate(&self) -> Result<()> {
        positive("a", self.a)?;
        positive("radius", self.radius)?;
        at_least("density", self.density, 4)?;
        positive("tolerance", self.tolerance)?;
        positive("scale", self.scale)
    }
}

/// Parsed and validated parameters of one scenario.
#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioParams {
    HalflineBoundState(BoundStateParams),
    BasicLoop(BasicLoopParams),
    GammaProfileLoop(GammaProfileParams),
    HalfPlaneFamily(HalfPlaneParams),
    ChemicalShift(ChemicalShiftParams),
    PotentialStability(PotentialParams),
    GaugeTwist(GaugeTwistParams),
    TightBindingBattery(TightBindingParams),
    ContinuumBattery(ContinuumParams),
    SpuriousPair(SpuriousParams),
    ChernHalf(ChernHalfParams),
}

fn from_table<P: DeserializeOwned>(t: &toml::Table) -> Result<P> {
    toml::Value::Table(t.clone())
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))
}

impl ScenarioParams {
    pub fn parse(s: &Scenario, seed: u64) -> Result<Self> {
        let t = &s.params;
        let mut p = match s.kind {
            ScenarioKind::HalflineBoundState => Self::HalflineBoundState(from_table(t)?),
            ScenarioKind::BasicLoop => Self::BasicLoop(from_table(t)?),
            ScenarioKind::GammaProfileLoop => Self::GammaProfileLoop(from_table(t)?),
            ScenarioKind::HalfPlaneFamily => Self::HalfPlaneFamily(from_table(t)?),
            ScenarioKind::ChemicalShift => Self::ChemicalShift(from_table(t)?),
            ScenarioKind::PotentialStability => Self::PotentialStability(from_table(t)?),
            ScenarioKind::GaugeTwist => Self::GaugeTwist(from_table(t)?),
            ScenarioKind::TightBindingBattery => Self::TightBindingBattery(from_table(t)?),
            ScenarioKind::ContinuumBattery => Self::ContinuumBattery(from_table(t)?),
            ScenarioKind::SpuriousPair => Self::SpuriousPair(from_table(t)?),
            ScenarioKind::ChernHalf => Self::ChernHalf(from_table(t)?),
        };
        p.fill_seed(seed);
        p.validate().map_err(|e| match e {
            Error::Config(m) => {
                Error::Config(format!("scenario `{}` ({}): {m}", s.name, s.kind.as_str()))
            }
            other => other,
        })?;
        Ok(p)
    }

    pub fn default_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::HalflineBoundState => Self::HalflineBoundState(Default::default()),
            ScenarioKind::BasicLoop => Self::BasicLoop(Default::default()),
            ScenarioKind::GammaProfileLoop => Self::GammaProfileLoop(Default::default()),
            ScenarioKind::HalfPlaneFamily => Self::HalfPlaneFamily(Default::default()),
            ScenarioKind::ChemicalShift => Self::ChemicalShift(Default::default()),
            ScenarioKind::PotentialStability => Self::PotentialStability(Default::default()),
            ScenarioKind::GaugeTwist => Self::GaugeTwist(Default::default()),
            ScenarioKind::TightBindingBattery => Self::TightBindingBattery(Default::default()),
            ScenarioKind::ContinuumBattery => Self::ContinuumBattery(Default::default()),
            ScenarioKind::SpuriousPair => Self::SpuriousPair(Default::default()),
            ScenarioKind::ChernHalf => Self::ChernHalf(Default::default()),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        match self {
            Self::HalflineBoundState(_) => ScenarioKind::HalflineBoundState,
            Self::BasicLoop(_) => ScenarioKind::BasicLoop,
            Self::GammaProfileLoop(_) => ScenarioKind::GammaProfileLoop,
            Self::HalfPlaneFamily(_) => ScenarioKind::HalfPlaneFamily,
            Self::ChemicalShift(_) => ScenarioKind::ChemicalShift,
            Self::PotentialStability(_) => ScenarioKind::PotentialStability,
            Self::GaugeTwist(_) => ScenarioKind::GaugeTwist,
            Self::TightBindingBattery(_) => ScenarioKind::TightBindingBattery,
            Self::ContinuumBattery(_) => ScenarioKind::ContinuumBattery,
            Self::SpuriousPair(_) => ScenarioKind::SpuriousPair,
            Self::ChernHalf(_) => ScenarioKind::ChernHalf,
        }
    }

    pub fn to_table(&self) -> Result<toml::Table> {
        let r = match self {
            Self::HalflineBoundState(p) => toml::Table::try_from(p),
            Self::BasicLoop(p) => toml::Table::try_from(p),
            Self::GammaProfileLoop(p) => toml::Table::try_from(p),
            Self::HalfPlaneFamily(p) => toml::Table::try_from(p),
            Self::ChemicalShift(p) => toml::Table::try_from(p),
            Self::PotentialStability(p) => toml::Table::try_from(p),
            Self::GaugeTwist(p) => toml::Table::try_from(p),
            Self::TightBindingBattery(p) => toml::Table::try_from(p),
            Self::ContinuumBattery(p) => toml::Table::try_from(p),
            Self::SpuriousPair(p) => toml::Table::try_from(p),
            Self::ChernHalf(p) => toml::Table::try_from(p),
        };
        r.map_err(|e| Error::Config(e.to_string()))
    }

    fn fill_seed(&mut self, seed: u64) {
        match self {
            Self::GammaProfileLoop(p) => {
                p.seed.get_or_insert(seed);
            }
            Self::PotentialStability(p) => {
                p.seed.get_or_insert(seed);
            }
            Self::TightBindingBattery(p) => {
                p.seed.get_or_insert(seed);
            }
            _ => {}
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::HalflineBoundState(p) => p.validate(),
            Self::BasicLoop(p) => p.validate(),
            Self::GammaProfileLoop(p) => p.validate(),
            Self::HalfPlaneFamily(p) => p.validate(),
            Self::ChemicalShift(p) => p.validate(),
            Self::PotentialStability(p) => p.validate(),
            Self::GaugeTwist(p) => p.validate(),
            Self::TightBindingBattery(p) => p.validate(),
            Self::ContinuumBattery(p) => p.validate(),
            Self::SpuriousPair(p) => p.validate(),
            Self::ChernHalf(p) => p.validate(),
        }
    }

    /// Checks reported by the kind; a failed computation fails all of them.
    pub fn primary_checks(&self) -> &'static [CheckId] {
        match self.kind() {
            ScenarioKind::HalflineBoundState => {
                &[CheckId::BoundStateFormula, CheckId::DecayRateOrder]
            }
            ScenarioKind::BasicLoop => &[CheckId::BasicLoopFlow],
            ScenarioKind::GammaProfileLoop => {
                &[CheckId::WindingIdentity, CheckId::FlowIndependence]
            }
            ScenarioKind::HalfPlaneFamily => &[CheckId::ChernHalf],
            ScenarioKind::ChemicalShift => &[CheckId::FlowIndependence],
            ScenarioKind::PotentialStability => &[CheckId::FlowIndependence],
            ScenarioKind::GaugeTwist => &[CheckId::FlowIndependence, CheckId::TwistTransparency],
            ScenarioKind::TightBindingBattery => &[
                CheckId::FourWayIdentity,
                CheckId::ArcEndpoints,
                CheckId::PoincareHopf,
                CheckId::ScalarTermInvariance,
            ],
            ScenarioKind::ContinuumBattery => &[
                CheckId::ContinuumConnectivity,
                CheckId::ContinuumFactorization,
                CheckId::TwistTransparency,
                CheckId::PoincareHopf,
            ],
            ScenarioKind::SpuriousPair => &[CheckId::SpuriousPair],
            ScenarioKind::ChernHalf => &[CheckId::ChernHalf],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_default_schema_round_trips() {
        for k in ScenarioKind::ALL {
            let p = ScenarioParams::default_for(k);
            let table = p.to_table().unwrap();
            let text = toml::to_string(&table).unwrap();
            let s = Scenario {
                name: "x".into(),
                kind: k,
                params: toml::from_str(&text).unwrap(),
            };
            let mut back = ScenarioParams::parse(&s, 0).unwrap();
            let mut orig = p.clone();
            orig.fill_seed(0);
            back.fill_seed(0);
            assert_eq!(orig, back, "{}", k.as_str());
        }
    }

    #[test]
    fn invalid_fields_are_named() {
        let s = Scenario {
            name: "bad".into(),
            kind: ScenarioKind::BasicLoop,
            params: toml::from_str("window_fraction = 1.5").unwrap(),
        };
        let e = ScenarioParams::parse(&s, 0).unwrap_err().to_string();
        assert!(e.contains("window_fraction") && e.contains("bad"), "{e}");
        let s = Scenario {
            name: "typo".into(),
            kind: ScenarioKind::ChernHalf,
            params: toml::from_str("radus = 3.0").unwrap(),
        };
        assert!(ScenarioParams::parse(&s, 0)
            .unwrap_err()
            .to_string()
            .contains("radus"));
    }
}
