//! Batch front end: load a scenario, run the requested analyses and write one
//! CSV per trajectory plus one JSON report per analysis.

pub mod output;
pub mod scenario;

use std::fmt;
use std::num::NonZeroUsize;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::{
    compare_trajectories, find_peak, initial_bound_scan, velocity_lower_bound_check,
};
use crate::derivatives::{
    derivative_profile, min_gain_for_dimension, Classification, LimitEstimate, RESIDUAL_TOL,
};
use crate::integrator::{integrate, ClosedLoop, IntegrationSettings, Trajectory};
use output::{to_json, trajectory_csv, Num, SCHEMA_VERSION};
pub use scenario::{Analysis, Scenario, ScenarioError};

/// Machine-readable failure category; each maps to a process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCategory {
    Runtime,
    Parse,
    Validation,
    Io,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Runtime => 1,
            ErrorCategory::Parse => 2,
            ErrorCategory::Validation => 3,
            ErrorCategory::Io => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Runtime => "runtime",
            ErrorCategory::Parse => "parse",
            ErrorCategory::Validation => "validation",
            ErrorCategory::Io => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CliError {
    pub category: ErrorCategory,
    pub message: String,
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        Self {
            category: ErrorCategory::Io,
            message: format!("{}: {e}", path.display()),
        }
    }

    fn runtime(e: crate::Error) -> Self {
        Self {
            category: ErrorCategory::Runtime,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.category.exit_code()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} error: {}", self.category.as_str(), self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        let category = match e {
            ScenarioError::Io(_) => ErrorCategory::Io,
            ScenarioError::Parse(_) => ErrorCategory::Parse,
            ScenarioError::Validation { .. } => ErrorCategory::Validation,
        };
        Self {
            category,
            message: e.to_string(),
        }
    }
}

/// What a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    /// Written files, in write order.
    pub files: Vec<PathBuf>,
    /// Number of integrated trajectories flagged as diverged.
    pub diverged: usize,
}

/// Loads `path` and runs either the scenario's declared analyses or only `only`.
pub fn run_scenario(
    path: &Path,
    out_dir: &Path,
    only: Option<Analysis>,
) -> Result<RunSummary, CliError> {
    let scenario = Scenario::from_path(path)?;
    let analyses = match only {
        Some(a) => vec![a],
        None => scenario.analyses.clone(),
    };
    run_analyses(&scenario, &analyses, out_dir)
}

/// Runs `analyses` in order against a loaded scenario.
pub fn run_analyses(
    scenario: &Scenario,
    analyses: &[Analysis],
    out_dir: &Path,
) -> Result<RunSummary, CliError> {
    for a in analyses {
        check_applicable(scenario, *a)?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let mut run = Run {
        scenario,
        out_dir,
        summary: RunSummary::default(),
        main: None,
        other: None,
    };
    for a in analyses {
        let report = match a {
            Analysis::Simulate => run.simulate()?,
            Analysis::Peaks => run.peaks()?,
            Analysis::BoundScan => run.bound_scan(),
            Analysis::VelocityCheck => run.velocity_check()?,
            Analysis::Singularity => run.singularity(),
            Analysis::Compare => run.compare()?,
        };
        run.write(&format!("{}.json", a.as_str()), &report)?;
    }
    Ok(run.summary)
}

fn check_applicable(scenario: &Scenario, a: Analysis) -> Result<(), CliError> {
    let fail = |message: String| {
        Err(CliError {
            category: ErrorCategory::Validation,
            message,
        })
    };
    match a {
        Analysis::BoundScan | Analysis::VelocityCheck | Analysis::Singularity
            if !scenario.law.is_predefined() =>
        {
            fail(format!(
                "analyses.run: {} needs a predefined-time law",
                a.as_str()
            ))
        }
        Analysis::Compare if scenario.compare.is_none() => {
            fail("compare: section required by the compare analysis".into())
        }
        _ => Ok(()),
    }
}

struct Run<'a> {
    scenario: &'a Scenario,
    out_dir: &'a Path,
    summary: RunSummary,
    main: Option<Vec<Trajectory>>,
    other: Option<Vec<Trajectory>>,
}

impl Run<'_> {
    fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.summary.files.push(path);
        Ok(())
    }

    fn integrate_all(
        &mut self,
        law: ClosedLoop,
        x0: &[f64],
        settings: &IntegrationSettings,
        prefix: &str,
    ) -> Result<Vec<Trajectory>, CliError> {
        let mut out = Vec::with_capacity(x0.len());
        for (i, &x) in x0.iter().enumerate() {
            let traj = integrate(law, x, settings).map_err(CliError::runtime)?;
            if traj.is_diverged() {
                self.summary.diverged += 1;
            }
            self.write(&format!("{prefix}_{i:03}.csv"), &trajectory_csv(&traj))?;
            out.push(traj);
        }
        Ok(out)
    }

    fn main_trajectories(&mut self) -> Result<Vec<Trajectory>, CliError> {
        if self.main.is_none() {
            let s = self.scenario;
            let trajs = self.integrate_all(s.law, &s.x0, &s.settings, "trajectory")?;
            self.main = Some(trajs);
        }
        Ok(self.main.clone().unwrap_or_default())
    }

    fn compare_trajectories(&mut self) -> Result<Vec<Trajectory>, CliError> {
        if self.other.is_none() {
            let s = self.scenario;
            let side = s.compare.as_ref().expect("checked by check_applicable");
            let trajs = self.integrate_all(side.law, &side.x0, &s.settings, "compare")?;
            self.other = Some(trajs);
        }
        Ok(self.other.clone().unwrap_or_default())
    }

    fn simulate(&mut self) -> Result<String, CliError> {
        let trajs = self.main_trajectories()?;
        let entries = trajs
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let error =
                    t.law()
                        .predefined_parts()
                        .filter(|_| !t.is_diverged())
                        .map(|(p, v)| {
                            Num(crate::integrator::solution_error(t, &p, v).unwrap_or(f64::NAN))
                        });
                SimulateEntry {
                    x0: Num(t.x0()),
                    file: format!("trajectory_{i:03}.csv"),
                    samples: t.samples().len(),
                    step: Num(t.step()),
                    clamped: t.is_clamped(),
                    diverged: t.is_diverged(),
                    diverged_at: t.diverged_at().map(Num),
                    solution_error: error,
                }
            })
            .collect();
        Ok(to_json(&Report::new(
            Analysis::Simulate,
            self.scenario,
            SimulateBody {
                trajectories: entries,
            },
        )))
    }

    fn peaks(&mut self) -> Result<String, CliError> {
        let trajs = self.main_trajectories()?;
        let entries = trajs.iter().map(peak_entry).collect();
        Ok(to_json(&Report::new(
            Analysis::Peaks,
            self.scenario,
            PeaksBody { peaks: entries },
        )))
    }

    fn bound_scan(&mut self) -> String {
        let p = self
            .scenario
            .predefined()
            .expect("checked by check_applicable");
        let rows = initial_bound_scan(&p, &self.scenario.bound_scan_grid);
        let bound = p.initial_bound();
        let violations = rows
            .iter()
            .filter(|r| r.u0_corrected.abs() > bound || !(r.corrected_gap > 0.0))
            .count();
        let rows = rows
            .iter()
            .map(|r| BoundRow {
                x0: Num(r.x0),
                u0_original: Num(r.u0_original),
                u0_corrected: Num(r.u0_corrected),
                corrected_gap: Num(r.corrected_gap),
                original_within_bound: r.u0_original.abs() <= bound,
            })
            .collect();
        to_json(&Report::new(
            Analysis::BoundScan,
            self.scenario,
            BoundBody {
                bound: Num(bound),
                corrected_violations: violations,
                rows,
            },
        ))
    }

    fn velocity_check(&mut self) -> Result<String, CliError> {
        let trajs = self.main_trajectories()?;
        let entries = trajs
            .iter()
            .map(|t| match velocity_lower_bound_check(t) {
                Ok(v) => VelocityEntry {
                    x0: Num(t.x0()),
                    diverged: false,
                    holds: Some(v.holds),
                    max_speed: Some(Num(v.max_speed)),
                    required: Some(Num(v.required)),
                },
                Err(_) => VelocityEntry {
                    x0: Num(t.x0()),
                    diverged: true,
                    holds: None,
                    max_speed: None,
                    required: None,
                },
            })
            .collect();
        Ok(to_json(&Report::new(
            Analysis::VelocityCheck,
            self.scenario,
            VelocityBody { checks: entries },
        )))
    }

    fn singularity(&mut self) -> String {
        let s = self.scenario;
        let p = s.predefined().expect("checked by check_applicable");
        let gain_rule = s
            .singularity_orders
            .iter()
            .filter_map(|&n| NonZeroUsize::new(n))
            .map(|n| {
                let threshold = min_gain_for_dimension(n);
                GainRuleRow {
                    dimension: n.get(),
                    threshold: Num(threshold),
                    satisfied: p.eta() > threshold,
                }
            })
            .collect();
        let mut entries = Vec::new();
        for &x0 in &s.x0 {
            for &k in &s.singularity_orders {
                let mut e = SingularityEntry {
                    x0: Num(x0),
                    order: k,
                    classification: None,
                    slope: None,
                    limit: None,
                    error: None,
                };
                match derivative_profile(&p, x0, k) {
                    Ok(profile) if profile.residual <= RESIDUAL_TOL => {
                        e.slope = Some(Num(profile.slope));
                        let (class, limit) = match profile.limit_estimate {
                            LimitEstimate::Diverging => (Classification::Divergent, None),
                            LimitEstimate::Finite(v) if v == 0.0 => {
                                (Classification::ContinuousZero, Some(Num(0.0)))
                            }
                            LimitEstimate::Finite(v) => {
                                (Classification::BoundedDiscontinuous, Some(Num(v)))
                            }
                        };
                        e.classification = Some(class);
                        e.limit = limit;
                    }
                    Ok(profile) => {
                        e.slope = Some(Num(profile.slope));
                        e.error = Some(
                            crate::Error::Inconclusive {
                                residual: profile.residual,
                                threshold: RESIDUAL_TOL,
                            }
                            .to_string(),
                        );
                    }
                    Err(err) => e.error = Some(err.to_string()),
                }
                entries.push(e);
            }
        }
        to_json(&Report::new(
            Analysis::Singularity,
            s,
            SingularityBody {
                eta: Num(p.eta()),
                gain_rule,
                derivatives: entries,
            },
        ))
    }

    fn compare(&mut self) -> Result<String, CliError> {
        let main = self.main_trajectories()?;
        let other = self.compare_trajectories()?;
        let entries = main
            .iter()
            .zip(&other)
            .map(|(a, b)| {
                let (pre, fix) = if a.law().is_predefined() {
                    (a, b)
                } else {
                    (b, a)
                };
                match compare_trajectories(pre, fix) {
                    Ok(c) => CompareEntry {
                        predefined: Some(PeakEntry::from_report(pre, &c.predefined)),
                        fixed_time: Some(PeakEntry::from_report(fix, &c.fixed_time)),
                        velocity: Some(VelocityEntry {
                            x0: Num(pre.x0()),
                            diverged: false,
                            holds: Some(c.velocity.holds),
                            max_speed: Some(Num(c.velocity.max_speed)),
                            required: Some(Num(c.velocity.required)),
                        }),
                        error: None,
                    },
                    Err(e) => CompareEntry {
                        predefined: None,
                        fixed_time: None,
                        velocity: None,
                        error: Some(e.to_string()),
                    },
                }
            })
            .collect();
        let side = self
            .scenario
            .compare
            .as_ref()
            .expect("checked by check_applicable");
        Ok(to_json(&Report::new(
            Analysis::Compare,
            self.scenario,
            CompareBody {
                other_law: LawReport::new(&side.law),
                comparisons: entries,
            },
        )))
    }
}

fn peak_entry(t: &Trajectory) -> PeakEntry {
    match find_peak(t) {
        Ok(r) => PeakEntry::from_report(t, &r),
        Err(_) => PeakEntry {
            x0: Num(t.x0()),
            law: t.law_id().as_str(),
            diverged: true,
            t_peak: None,
            u_peak: None,
            magnitude: None,
            location: None,
        },
    }
}

#[derive(Serialize)]
struct Report<B: Serialize> {
    schema_version: u32,
    analysis: &'static str,
    law: LawReport,
    #[serde(flatten)]
    body: B,
}

impl<B: Serialize> Report<B> {
    fn new(analysis: Analysis, scenario: &Scenario, body: B) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            analysis: analysis.as_str(),
            law: LawReport::new(&scenario.law),
            body,
        }
    }
}

#[derive(Serialize)]
struct LawReport {
    kind: &'static str,
    t0: Num,
    tf: Num,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k1: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k2: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    alpha: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Num>,
}

impl LawReport {
    fn new(law: &ClosedLoop) -> Self {
        let h = law.horizon();
        let mut r = LawReport {
            kind: law.law_id().as_str(),
            t0: Num(h.t0()),
            tf: Num(h.tf()),
            eta: None,
            k1: None,
            k2: None,
            alpha: None,
            beta: None,
        };
        match law {
            ClosedLoop::Original(p) | ClosedLoop::Corrected(p) => r.eta = Some(Num(p.eta())),
            ClosedLoop::FixedTime { params, .. } => {
                r.k1 = Some(Num(params.k1()));
                r.k2 = Some(Num(params.k2()));
                r.alpha = Some(Num(params.alpha()));
                r.beta = Some(Num(params.beta()));
            }
        }
        r
    }
}

#[derive(Serialize)]
struct SimulateBody {
    trajectories: Vec<SimulateEntry>,
}

#[derive(Serialize)]
struct SimulateEntry {
    x0: Num,
    file: String,
    samples: usize,
    step: Num,
    clamped: bool,
    diverged: bool,
    diverged_at: Option<Num>,
    solution_error: Option<Num>,
}

#[derive(Serialize)]
struct PeaksBody {
    peaks: Vec<PeakEntry>,
}

#[derive(Serialize)]
struct PeakEntry {
    x0: Num,
    law: &'static str,
    diverged: bool,
    t_peak: Option<Num>,
    u_peak: Option<Num>,
    magnitude: Option<Num>,
    location: Option<&'static str>,
}

impl PeakEntry {
    fn from_report(t: &Trajectory, r: &crate::analysis::PeakReport) -> Self {
        PeakEntry {
            x0: Num(t.x0()),
            law: t.law_id().as_str(),
            diverged: false,
            t_peak: Some(Num(r.t_peak)),
            u_peak: Some(Num(r.u_peak)),
            magnitude: Some(Num(r.magnitude)),
            location: Some(r.location.as_str()),
        }
    }
}

#[derive(Serialize)]
struct BoundBody {
    bound: Num,
    corrected_violations: usize,
    rows: Vec<BoundRow>,
}

#[derive(Serialize)]
struct BoundRow {
    x0: Num,
    u0_original: Num,
    u0_corrected: Num,
    corrected_gap: Num,
    original_within_bound: bool,
}

#[derive(Serialize)]
struct VelocityBody {
    checks: Vec<VelocityEntry>,
}

#[derive(Serialize)]
struct VelocityEntry {
    x0: Num,
    diverged: bool,
    holds: Option<bool>,
    max_speed: Option<Num>,
    required: Option<Num>,
}

#[derive(Serialize)]
struct SingularityBody {
    eta: Num,
    gain_rule: Vec<GainRuleRow>,
    derivatives: Vec<SingularityEntry>,
}

#[derive(Serialize)]
struct GainRuleRow {
    dimension: usize,
    threshold: Num,
    satisfied: bool,
}

#[derive(Serialize)]
struct SingularityEntry {
    x0: Num,
    order: usize,
    classification: Option<Classification>,
    slope: Option<Num>,
    limit: Option<Num>,
    error: Option<String>,
}

#[derive(Serialize)]
struct CompareBody {
    other_law: LawReport,
    comparisons: Vec<CompareEntry>,
}

#[derive(Serialize)]
struct CompareEntry {
    predefined: Option<PeakEntry>,
    fixed_time: Option<PeakEntry>,
    velocity: Option<VelocityEntry>,
    error: Option<String>,
}
