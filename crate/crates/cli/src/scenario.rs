//! Scenario configuration files.
//!
//! Scenarios are small, hand-edited sectioned key-value documents (TOML).
//! Parsing is strict: unknown keys are rejected, every invariant is
//! validated after deserialization, and validation failures name the
//! offending key.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use infogeo_core::{
    DirectionRule, ParameterPoint, Prior, QuadratureRule, Scenario, SensorConfiguration,
    SpdMatrix, SymMatrix, VonMisesModel,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Syntactic or structural problem; the message carries the TOML
    /// span/line information.
    #[error("scenario parse error: {0}")]
    Parse(String),
    /// A well-formed document violating an invariant.
    #[error("invalid scenario: {key}: {message}")]
    Validation { key: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid(key: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSection {
    pub x: f64,
    pub y: f64,
}

/// Either a scalar `c` (meaning `c * I`) or a full 2x2 matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CovarianceSpec {
    Scalar(f64),
    Full([[f64; 2]; 2]),
}

fn default_order() -> usize {
    9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSection {
    pub mean: [f64; 2],
    pub covariance: CovarianceSpec,
    #[serde(default = "default_order")]
    pub quadrature_order: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorsSection {
    pub positions: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DirectionRuleSpec {
    NaturalGradient,
    DominantEigenvector,
}

impl From<DirectionRuleSpec> for DirectionRule {
    fn from(spec: DirectionRuleSpec) -> Self {
        match spec {
            DirectionRuleSpec::NaturalGradient => DirectionRule::NaturalGradient,
            DirectionRuleSpec::DominantEigenvector => DirectionRule::DominantEigenvector,
        }
    }
}

fn default_guard() -> f64 {
    0.05
}

fn default_rule() -> DirectionRuleSpec {
    DirectionRuleSpec::NaturalGradient
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanSection {
    pub speed: f64,
    pub replan_period: f64,
    pub iterations: usize,
    pub ode_step: f64,
    #[serde(default = "default_guard")]
    pub guard_radius: f64,
    #[serde(default)]
    pub ridge: bool,
    #[serde(default = "default_rule")]
    pub direction_rule: DirectionRuleSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub csv: String,
    #[serde(default)]
    pub svg: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

/// Parsed scenario document, section by section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub target: TargetSection,
    pub prior: PriorSection,
    pub model: ModelSection,
    pub sensors: SensorsSection,
    pub plan: PlanSection,
    pub output: OutputSection,
}

impl ScenarioFile {
    /// Validates every invariant, naming the violated key on failure.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = |key: &str, vals: &[f64]| -> Result<(), ScenarioError> {
            if vals.iter().any(|v| !v.is_finite()) {
                return Err(invalid(key, "must be finite"));
            }
            Ok(())
        };
        finite("target", &[self.target.x, self.target.y])?;
        finite("prior.mean", &self.prior.mean)?;
        match &self.prior.covariance {
            CovarianceSpec::Scalar(c) => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(invalid("covariance", "scalar covariance must be > 0"));
                }
            }
            CovarianceSpec::Full(m) => {
                finite("covariance", &[m[0][0], m[0][1], m[1][0], m[1][1]])?;
                if (m[0][1] - m[1][0]).abs() > 1e-12 * m[0][0].abs().max(m[1][1].abs()) {
                    return Err(invalid("covariance", "matrix must be symmetric"));
                }
                if self.covariance_matrix().is_err() {
                    return Err(invalid("covariance", "covariance not SPD"));
                }
            }
        }
        if self.prior.quadrature_order == 0 || self.prior.quadrature_order > 16 {
            return Err(invalid("quadrature_order", "must be in 1..=16"));
        }
        if !(self.model.kappa.is_finite() && self.model.kappa > 0.0) {
            return Err(invalid("kappa", "must be a positive finite number"));
        }
        if self.sensors.positions.is_empty() {
            return Err(invalid("sensors.positions", "need at least one platform"));
        }
        for p in &self.sensors.positions {
            finite("sensors.positions", p)?;
        }
        if !(self.plan.speed.is_finite() && self.plan.speed > 0.0) {
            return Err(invalid("speed", "must be > 0"));
        }
        if !(self.plan.ode_step.is_finite() && self.plan.ode_step > 0.0) {
            return Err(invalid("ode_step", "must be > 0"));
        }
        if !(self.plan.replan_period.is_finite())
            || self.plan.replan_period < self.plan.ode_step
        {
            return Err(invalid("replan_period", "must be >= ode_step"));
        }
        if self.plan.iterations == 0 {
            return Err(invalid("iterations", "must be >= 1"));
        }
        if !(self.plan.guard_radius.is_finite() && self.plan.guard_radius >= 0.0) {
            return Err(invalid("guard_radius", "must be >= 0"));
        }
        if self.output.csv.is_empty() {
            return Err(invalid("output.csv", "must not be empty"));
        }
        Ok(())
    }

    fn covariance_matrix(&self) -> Result<SpdMatrix, infogeo_core::CoreError> {
        let sym = match &self.prior.covariance {
            CovarianceSpec::Scalar(c) => SymMatrix::from_diagonal(&[*c, *c]),
            CovarianceSpec::Full(m) => {
                SymMatrix::new(2, &[m[0][0], m[0][1], m[1][0], m[1][1]])?
            }
        };
        SpdMatrix::new(sym)
    }

    /// Builds the planner scenario from the validated document.
    pub fn to_scenario(&self) -> Result<Scenario, ScenarioError> {
        self.validate()?;
        fn as_validation(key: &'static str) -> impl Fn(infogeo_core::CoreError) -> ScenarioError {
            move |e| invalid(key, e.to_string())
        }
        let target = ParameterPoint::new(self.target.x, self.target.y)
            .map_err(as_validation("target"))?;
        let mean = ParameterPoint::new(self.prior.mean[0], self.prior.mean[1])
            .map_err(as_validation("prior.mean"))?;
        let covariance = self.covariance_matrix().map_err(as_validation("covariance"))?;
        let prior = Prior::new(
            mean,
            covariance,
            QuadratureRule::GaussHermite {
                order: self.prior.quadrature_order,
            },
        )
        .map_err(as_validation("prior"))?;
        let model = VonMisesModel::new(self.model.kappa).map_err(as_validation("kappa"))?;
        let initial_config = SensorConfiguration::new(self.sensors.positions.clone())
            .map_err(as_validation("sensors.positions"))?;
        Ok(Scenario {
            target,
            prior,
            model,
            initial_config,
            speed: self.plan.speed,
            replan_period: self.plan.replan_period,
            iterations: self.plan.iterations,
            ode_step: self.plan.ode_step,
            guard_radius: self.plan.guard_radius,
            ridge: self.plan.ridge,
            direction_rule: self.plan.direction_rule.into(),
        })
    }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<ScenarioFile, ScenarioError> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| {
        let message = e.to_string();
        // Missing required keys are semantic, not syntactic; the span
        // decoration varies, so locate the marker anywhere in the message.
        if let Some(pos) = message.find("missing field `") {
            let rest = &message[pos + "missing field `".len()..];
            if let Some(field) = rest.split('`').next() {
                return invalid(field, "required key is missing");
            }
        }
        ScenarioError::Parse(message)
    })?;
    file.validate()?;
    Ok(file)
}

/// Serializes a scenario document; `parse_scenario(serialize_scenario(s))`
/// reproduces `s` exactly.
pub fn serialize_scenario(file: &ScenarioFile) -> String {
    toml::to_string(file).expect("scenario documents are serializable")
}

/// Reads and parses a scenario from disk.
pub fn load_scenario(path: &std::path::Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    parse_scenario(&text)
}
