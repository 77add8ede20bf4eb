//! Scenario files.
//!
//! A scenario is a flat TOML document: top-level sections with scalar or
//! array values, no nested tables. See the README for the full grammar.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use crate::analysis::RunConfig;
use crate::error::Error;
use crate::integrator::{ClosedLoop, IntegrationSettings, LawId};
use crate::laws::{FixedTimeParams, Horizon, PredefParams};

/// Analyses a scenario may request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Simulate,
    Peaks,
    BoundScan,
    VelocityCheck,
    Singularity,
    Compare,
}

impl Analysis {
    pub fn as_str(self) -> &'static str {
        match self {
            Analysis::Simulate => "simulate",
            Analysis::Peaks => "peaks",
            Analysis::BoundScan => "bound_scan",
            Analysis::VelocityCheck => "velocity_check",
            Analysis::Singularity => "singularity",
            Analysis::Compare => "compare",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    law: RawLaw,
    initial: RawInitial,
    #[serde(default)]
    integration: RawIntegration,
    #[serde(default)]
    analyses: RawAnalyses,
    bound_scan: Option<RawBoundScan>,
    singularity: Option<RawSingularity>,
    compare: Option<RawCompare>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaw {
    kind: LawId,
    eta: Option<f64>,
    t0: Option<f64>,
    tf: Option<f64>,
    k1: Option<f64>,
    k2: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    x0: Vec<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegration {
    step: Option<f64>,
    terminal_margin: Option<f64>,
    span: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalyses {
    run: Option<Vec<Analysis>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBoundScan {
    x0: Option<Vec<f64>>,
    from: Option<f64>,
    to: Option<f64>,
    step: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSingularity {
    orders: Vec<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCompare {
    kind: LawId,
    eta: Option<f64>,
    t0: Option<f64>,
    tf: Option<f64>,
    k1: Option<f64>,
    k2: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    x0: Option<Vec<f64>>,
}

impl RawCompare {
    fn law(&self) -> RawLaw {
        RawLaw {
            kind: self.kind,
            eta: self.eta,
            t0: self.t0,
            tf: self.tf,
            k1: self.k1,
            k2: self.k2,
            alpha: self.alpha,
            beta: self.beta,
        }
    }
}

/// Failure to load a scenario.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    /// Unreadable scenario file.
    Io(String),
    /// Malformed TOML, unknown key or wrong value type.
    Parse(String),
    /// Well-formed but violating a parameter invariant; names the field.
    Validation { field: String, message: String },
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::Io(m) | ScenarioError::Parse(m) => write!(f, "{m}"),
            ScenarioError::Validation { field, message } => write!(f, "{field}: {message}"),
        }
    }
}

impl std::error::Error for ScenarioError {}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

/// A validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub law: ClosedLoop,
    pub x0: Vec<f64>,
    pub settings: IntegrationSettings,
    pub analyses: Vec<Analysis>,
    pub bound_scan_grid: Vec<f64>,
    pub singularity_orders: Vec<usize>,
    pub compare: Option<CompareSide>,
}

/// The second loop of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSide {
    pub law: ClosedLoop,
    pub x0: Vec<f64>,
}

impl Scenario {
    pub fn from_path(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let raw: RawScenario =
            toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        raw.validate()
    }

    /// The run configuration for the `i`-th initial state.
    pub fn run(&self, i: usize) -> RunConfig {
        RunConfig {
            law: self.law,
            x0: self.x0[i],
            settings: self.settings,
        }
    }

    pub fn predefined(&self) -> Option<PredefParams> {
        self.law.predefined_parts().map(|(p, _)| p)
    }
}

fn required(section: &str, name: &str, v: Option<f64>) -> Result<f64, ScenarioError> {
    v.ok_or_else(|| invalid(format!("{section}.{name}"), "missing required value"))
}

fn build_law(section: &str, raw: &RawLaw) -> Result<ClosedLoop, ScenarioError> {
    let field = |e: Error| match e {
        Error::InvalidParameter {
            name,
            value,
            reason,
        } => invalid(
            format!("{section}.{name}"),
            format!("{reason} (got {value})"),
        ),
        other => invalid(section, other.to_string()),
    };
    let horizon =
        Horizon::new(raw.t0.unwrap_or(0.0), required(section, "tf", raw.tf)?).map_err(field)?;
    let reject = |name: &str, present: bool| {
        if present {
            Err(invalid(
                format!("{section}.{name}"),
                format!("not a parameter of the {} law", raw.kind.as_str()),
            ))
        } else {
            Ok(())
        }
    };
    match raw.kind {
        LawId::Original | LawId::Corrected => {
            reject("k1", raw.k1.is_some())?;
            reject("k2", raw.k2.is_some())?;
            reject("alpha", raw.alpha.is_some())?;
            reject("beta", raw.beta.is_some())?;
            let p =
                PredefParams::new(required(section, "eta", raw.eta)?, horizon).map_err(field)?;
            Ok(if raw.kind == LawId::Original {
                ClosedLoop::Original(p)
            } else {
                ClosedLoop::Corrected(p)
            })
        }
        LawId::FixedTime => {
            reject("eta", raw.eta.is_some())?;
            let params = FixedTimeParams::new(
                required(section, "k1", raw.k1)?,
                required(section, "k2", raw.k2)?,
                required(section, "alpha", raw.alpha)?,
                required(section, "beta", raw.beta)?,
            )
            .map_err(field)?;
            Ok(ClosedLoop::FixedTime { params, horizon })
        }
    }
}

fn check_states(field: &str, xs: &[f64]) -> Result<(), ScenarioError> {
    if xs.is_empty() {
        return Err(invalid(field, "list must not be empty"));
    }
    if let Some((i, v)) = xs.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(invalid(
            format!("{field}[{i}]"),
            format!("must be finite (got {v})"),
        ));
    }
    Ok(())
}

impl RawScenario {
    fn validate(self) -> Result<Scenario, ScenarioError> {
        let law = build_law("law", &self.law)?;
        check_states("initial.x0", &self.initial.x0)?;

        let horizon = law.horizon();
        let step = self.integration.step.unwrap_or(1e-4 * horizon.duration());
        let margin = self
            .integration
            .terminal_margin
            .unwrap_or(1e-3 * horizon.duration());
        let mut settings = IntegrationSettings::new(step, margin);
        settings.span = self.integration.span;
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid(
                "integration.step",
                format!("must be positive (got {step})"),
            ));
        }
        if law.is_predefined() {
            if !(margin > 0.0 && margin < 0.5 * horizon.duration()) {
                return Err(invalid(
                    "integration.terminal_margin",
                    format!("must lie in (0, (tf - t0)/2) (got {margin})"),
                ));
            }
            if step > margin {
                return Err(invalid(
                    "integration.step",
                    format!("must not exceed terminal_margin {margin} (got {step})"),
                ));
            }
            if settings.span.is_some() {
                return Err(invalid(
                    "integration.span",
                    "only meaningful for the fixed_time law",
                ));
            }
        } else {
            let span = settings.span.unwrap_or(horizon.duration());
            if !(span.is_finite() && span > 0.0) {
                return Err(invalid(
                    "integration.span",
                    format!("must be positive (got {span})"),
                ));
            }
            if step > span {
                return Err(invalid(
                    "integration.step",
                    format!("must not exceed span {span} (got {step})"),
                ));
            }
        }

        let analyses = self
            .analyses
            .run
            .unwrap_or_else(|| vec![Analysis::Simulate]);
        if analyses.is_empty() {
            return Err(invalid("analyses.run", "list must not be empty"));
        }
        let needs_predefined = [
            Analysis::BoundScan,
            Analysis::VelocityCheck,
            Analysis::Singularity,
        ];
        if !law.is_predefined() {
            if let Some(a) = analyses.iter().find(|a| needs_predefined.contains(a)) {
                return Err(invalid(
                    "analyses.run",
                    format!("{} needs a predefined-time law", a.as_str()),
                ));
            }
        }

        let bound_scan_grid = match self.bound_scan {
            None => self.initial.x0.clone(),
            Some(b) => match (b.x0, b.from, b.to, b.step) {
                (Some(xs), None, None, None) => {
                    check_states("bound_scan.x0", &xs)?;
                    xs
                }
                (None, Some(from), Some(to), Some(dx)) => range_grid(from, to, dx)?,
                _ => {
                    return Err(invalid(
                        "bound_scan",
                        "give either x0 = [...] or all of from, to, step",
                    ))
                }
            },
        };

        let singularity_orders = match self.singularity {
            None => vec![1, 2, 3],
            Some(s) => {
                if s.orders.is_empty() {
                    return Err(invalid("singularity.orders", "list must not be empty"));
                }
                if let Some(k) = s
                    .orders
                    .iter()
                    .find(|&&k| !(1..=crate::derivatives::MAX_ORDER).contains(&k))
                {
                    return Err(invalid(
                        "singularity.orders",
                        format!("order {k} outside 1..={}", crate::derivatives::MAX_ORDER),
                    ));
                }
                s.orders
            }
        };

        let compare = match self.compare {
            None => None,
            Some(c) => {
                let other = build_law("compare", &c.law())?;
                if other.is_predefined() == law.is_predefined() {
                    return Err(invalid(
                        "compare.kind",
                        format!(
                            "mismatched kinds: comparison needs one predefined-time and one fixed-time law, got {} and {}",
                            law.law_id().as_str(),
                            other.law_id().as_str()
                        ),
                    ));
                }
                let x0 = c.x0.unwrap_or_else(|| self.initial.x0.clone());
                check_states("compare.x0", &x0)?;
                if x0.len() != self.initial.x0.len() {
                    return Err(invalid(
                        "compare.x0",
                        format!(
                            "needs {} entries to pair with initial.x0 (got {})",
                            self.initial.x0.len(),
                            x0.len()
                        ),
                    ));
                }
                Some(CompareSide { law: other, x0 })
            }
        };
        if analyses.contains(&Analysis::Compare) && compare.is_none() {
            return Err(invalid("compare", "section required by analyses.run"));
        }

        Ok(Scenario {
            law,
            x0: self.initial.x0,
            settings,
            analyses,
            bound_scan_grid,
            singularity_orders,
            compare,
        })
    }
}

fn range_grid(from: f64, to: f64, dx: f64) -> Result<Vec<f64>, ScenarioError> {
    if !(from.is_finite() && to.is_finite() && from <= to) {
        return Err(invalid("bound_scan.to", "need finite from <= to"));
    }
    if !(dx.is_finite() && dx > 0.0) {
        return Err(invalid(
            "bound_scan.step",
            format!("must be positive (got {dx})"),
        ));
    }
    let n = ((to - from) / dx + 1e-9).floor() as usize;
    if n > 10_000_000 {
        return Err(invalid("bound_scan.step", "grid exceeds 10^7 points"));
    }
    Ok((0..=n).map(|i| from + i as f64 * dx).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[law]
kind = "corrected"
eta = 2
t0 = 0
tf = 1

[initial]
x0 = [-0.6931471805599453, 1.5]
"#;

    #[test]
    fn minimal_scenario_gets_defaults() {
        let s = Scenario::parse(BASE).unwrap();
        assert_eq!(s.analyses, vec![Analysis::Simulate]);
        assert_eq!(s.settings.step, 1e-4);
        assert_eq!(s.settings.terminal_margin, 1e-3);
        assert_eq!(s.bound_scan_grid, s.x0);
        assert_eq!(s.singularity_orders, vec![1, 2, 3]);
        assert!(s.compare.is_none());
    }

    #[test]
    fn empty_initial_list_is_a_validation_error() {
        let text = BASE.replace("x0 = [-0.6931471805599453, 1.5]", "x0 = []");
        match Scenario::parse(&text) {
            Err(ScenarioError::Validation { field, .. }) => assert_eq!(field, "initial.x0"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_gain_names_the_field() {
        let text = BASE.replace("eta = 2", "eta = 0.5");
        match Scenario::parse(&text) {
            Err(ScenarioError::Validation { field, message }) => {
                assert_eq!(field, "law.eta");
                assert!(message.contains("0.5"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn syntax_and_type_errors_are_parse_errors() {
        assert!(matches!(
            Scenario::parse("[law\nkind = 1"),
            Err(ScenarioError::Parse(_))
        ));
        let typo = BASE.replace("eta = 2", "etta = 2");
        assert!(matches!(
            Scenario::parse(&typo),
            Err(ScenarioError::Parse(_))
        ));
        let wrong = BASE.replace("eta = 2", "eta = \"two\"");
        assert!(matches!(
            Scenario::parse(&wrong),
            Err(ScenarioError::Parse(_))
        ));
    }

    #[test]
    fn range_grid_is_inclusive() {
        let text = format!("{BASE}\n[bound_scan]\nfrom = -1.0\nto = 1.0\nstep = 0.5\n");
        let s = Scenario::parse(&text).unwrap();
        assert_eq!(s.bound_scan_grid, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn compare_needs_mixed_kinds() {
        let same = format!("{BASE}\n[compare]\nkind = \"original\"\neta = 3\ntf = 1\n");
        match Scenario::parse(&same) {
            Err(ScenarioError::Validation { field, message }) => {
                assert_eq!(field, "compare.kind");
                assert!(message.contains("mismatched kinds"));
            }
            other => panic!("unexpected {other:?}"),
        }
        let mixed = format!(
            "{BASE}\n[analyses]\nrun = [\"compare\"]\n[compare]\nkind = \"fixed_time\"\nk1 = 1\nk2 = 1\nalpha = 0.5\nbeta = 2\ntf = 1\n"
        );
        let s = Scenario::parse(&mixed).unwrap();
        assert_eq!(s.compare.unwrap().x0, s.x0);
    }

    #[test]
    fn fixed_time_rejects_predefined_only_analyses() {
        let text = r#"
[law]
kind = "fixed_time"
k1 = 1
k2 = 1
alpha = 0.5
beta = 2
tf = 1

[initial]
x0 = [4.0]

[analyses]
run = ["bound_scan"]
"#;
        assert!(matches!(
            Scenario::parse(text),
            Err(ScenarioError::Validation { .. })
        ));
    }
}
