//! Fixed-step RK4 integration of the scalar closed loops `ẋ = u(t, x)`.
//!
//! Predefined-time loops are integrated up to `t_f − ε` (the terminal margin)
//! and then closed with the exact sample `(t_f, 0, 0)`. The fixed-time loop is
//! integrated over `[t₀, t₀ + span]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laws::{
    closed_form_state, fixed_time_law, predefined_law, sign, FixedTimeParams, Horizon,
    PredefParams, Variant,
};

/// States beyond this magnitude are treated as a blow-up.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawId {
    Original,
    Corrected,
    FixedTime,
}

impl LawId {
    pub fn as_str(self) -> &'static str {
        match self {
            LawId::Original => "original",
            LawId::Corrected => "corrected",
            LawId::FixedTime => "fixed_time",
        }
    }
}

/// A control law together with everything needed to evaluate it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum ClosedLoop {
    Original(PredefParams),
    Corrected(PredefParams),
    FixedTime {
        params: FixedTimeParams,
        horizon: Horizon,
    },
}

impl ClosedLoop {
    pub fn predefined(variant: Variant, p: PredefParams) -> Self {
        match variant {
            Variant::Original => ClosedLoop::Original(p),
            Variant::Corrected => ClosedLoop::Corrected(p),
        }
    }

    pub fn law_id(&self) -> LawId {
        match self {
            ClosedLoop::Original(_) => LawId::Original,
            ClosedLoop::Corrected(_) => LawId::Corrected,
            ClosedLoop::FixedTime { .. } => LawId::FixedTime,
        }
    }

    pub fn horizon(&self) -> Horizon {
        match self {
            ClosedLoop::Original(p) | ClosedLoop::Corrected(p) => p.horizon(),
            ClosedLoop::FixedTime { horizon, .. } => *horizon,
        }
    }

    /// Predefined-time parameters and variant, if this is a predefined-time loop.
    pub fn predefined_parts(&self) -> Option<(PredefParams, Variant)> {
        match self {
            ClosedLoop::Original(p) => Some((*p, Variant::Original)),
            ClosedLoop::Corrected(p) => Some((*p, Variant::Corrected)),
            ClosedLoop::FixedTime { .. } => None,
        }
    }

    pub fn is_predefined(&self) -> bool {
        self.predefined_parts().is_some()
    }

    /// The control `u(t, x)`, which is also the closed-loop velocity.
    pub fn control(&self, t: f64, x: f64) -> Result<f64> {
        match self {
            ClosedLoop::Original(p) => predefined_law(Variant::Original, t, x, p),
            ClosedLoop::Corrected(p) => predefined_law(Variant::Corrected, t, x, p),
            ClosedLoop::FixedTime { params, .. } => Ok(fixed_time_law(x, params)),
        }
    }

    /// One classical RK4 step of size `h` from `(t, x)`.
    ///
    /// For the fixed-time loop the step returns exactly `0` once the origin is
    /// provably reached within `h`, i.e. when `|x|^{1−α} / (k₁ (1 − α)) ≤ h`,
    /// or when the RK4 update jumps across it. The field is not Lipschitz at
    /// the origin and RK4 otherwise stalls on spurious fixed points there.
    pub fn rk4_step(&self, t: f64, x: f64, h: f64) -> Result<f64> {
        if let ClosedLoop::FixedTime { params, .. } = self {
            let settle =
                x.abs().powf(1.0 - params.alpha()) / (params.k1() * (1.0 - params.alpha()));
            if settle <= h {
                return Ok(0.0);
            }
        }
        let k1 = self.control(t, x)?;
        let k2 = self.control(t + 0.5 * h, x + 0.5 * h * k1)?;
        let k3 = self.control(t + 0.5 * h, x + 0.5 * h * k2)?;
        let k4 = self.control(t + h, x + h * k3)?;
        let next = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if matches!(self, ClosedLoop::FixedTime { .. }) && sign(next) != sign(x) {
            return Ok(0.0);
        }
        Ok(next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationSettings {
    /// Requested step; the actual step is shrunk so the grid ends exactly on
    /// the final time.
    pub step: f64,
    /// Standoff `ε` from `t_f` for predefined-time loops.
    pub terminal_margin: f64,
    /// Integration length for the fixed-time loop; defaults to `t_f − t₀`.
    pub span: Option<f64>,
    pub method: Method,
}

impl IntegrationSettings {
    pub fn new(step: f64, terminal_margin: f64) -> Self {
        Self {
            step,
            terminal_margin,
            span: None,
            method: Method::Rk4Fixed,
        }
    }

    /// Default standoff of `10⁻³ (t_f − t₀)`.
    pub fn for_horizon(horizon: Horizon, step: f64) -> Self {
        Self::new(step, 1e-3 * horizon.duration())
    }

    pub fn with_span(mut self, span: f64) -> Self {
        self.span = Some(span);
        self
    }

    fn validate(&self, law: &ClosedLoop) -> Result<(f64, f64)> {
        if !(self.step.is_finite() && self.step > 0.0) {
            return Err(Error::Settings(format!(
                "step must be finite and positive, got {}",
                self.step
            )));
        }
        let h = law.horizon();
        if law.is_predefined() {
            if !(self.terminal_margin > 0.0) {
                return Err(Error::Settings(format!(
                    "terminal_margin must be positive, got {}",
                    self.terminal_margin
                )));
            }
            if self.step > self.terminal_margin {
                return Err(Error::Settings(format!(
                    "step {} exceeds terminal_margin {}",
                    self.step, self.terminal_margin
                )));
            }
            if self.terminal_margin >= 0.5 * h.duration() {
                return Err(Error::Settings(format!(
                    "terminal_margin {} must be below half the horizon ({})",
                    self.terminal_margin,
                    0.5 * h.duration()
                )));
            }
            Ok((h.t0(), h.duration() - self.terminal_margin))
        } else {
            let span = self.span.unwrap_or_else(|| h.duration());
            if !(span.is_finite() && span > 0.0) {
                return Err(Error::Settings(format!(
                    "span must be positive, got {span}"
                )));
            }
            if self.step > span {
                return Err(Error::Settings(format!(
                    "step {} exceeds span {span}",
                    self.step
                )));
            }
            Ok((h.t0(), span))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub u: f64,
}

/// Sampled closed-loop run. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    law: ClosedLoop,
    x0: f64,
    step: f64,
    samples: Vec<Sample>,
    clamped: bool,
    diverged_at: Option<f64>,
}

impl Trajectory {
    /// Rebuilds a trajectory from stored samples (e.g. a parsed CSV file).
    ///
    /// The step is taken from the first sample interval; a final sample at
    /// `t_f` of a predefined-time loop is recognized as the terminal clamp.
    pub fn from_samples(law: ClosedLoop, x0: f64, samples: Vec<Sample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyTrajectory);
        }
        let step = if samples.len() > 1 {
            samples[1].t - samples[0].t
        } else {
            0.0
        };
        let clamped = law.is_predefined()
            && samples.len() > 1
            && samples.last().map(|s| s.t) == Some(law.horizon().tf());
        let traj = Self {
            law,
            x0,
            step,
            samples,
            clamped,
            diverged_at: None,
        };
        traj.validate()?;
        Ok(traj)
    }

    pub fn law(&self) -> &ClosedLoop {
        &self.law
    }

    pub fn law_id(&self) -> LawId {
        self.law.law_id()
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    /// Actual integration step.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    /// Samples produced by integration, without the terminal clamp.
    pub fn integrated_samples(&self) -> &[Sample] {
        if self.clamped {
            &self.samples[..self.samples.len() - 1]
        } else {
            &self.samples
        }
    }

    /// Whether the exact `(t_f, 0, 0)` sample closes the run.
    pub fn is_clamped(&self) -> bool {
        self.clamped
    }

    pub fn is_diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Time of the last accepted sample before a blow-up was detected.
    pub fn diverged_at(&self) -> Option<f64> {
        self.diverged_at
    }

    /// Checks the structural invariants: first sample at `t₀` with state
    /// `x₀`, strictly increasing times, stored controls equal to the law
    /// re-evaluated bit for bit, and an exact terminal clamp.
    pub fn validate(&self) -> Result<()> {
        let first = self.samples.first().ok_or(Error::EmptyTrajectory)?;
        let h = self.law.horizon();
        if first.t != h.t0() || first.x != self.x0 {
            return Err(Error::MismatchedLaw(format!(
                "first sample ({}, {}) does not match (t0, x0) = ({}, {})",
                first.t,
                first.x,
                h.t0(),
                self.x0
            )));
        }
        if let Some(w) = self.samples.windows(2).find(|w| !(w[0].t < w[1].t)) {
            return Err(Error::MismatchedLaw(format!(
                "sample times not strictly increasing at t = {}",
                w[1].t
            )));
        }
        for s in self.integrated_samples() {
            let u = self.law.control(s.t, s.x)?;
            if u.to_bits() != s.u.to_bits() && !(u.is_nan() && s.u.is_nan()) {
                return Err(Error::MismatchedLaw(format!(
                    "stored control {} at t = {} differs from law value {u}",
                    s.u, s.t
                )));
            }
        }
        if self.clamped {
            let last = self.samples[self.samples.len() - 1];
            if last.t != h.tf() || last.x != 0.0 || last.u != 0.0 {
                return Err(Error::MismatchedLaw(
                    "terminal sample is not the exact clamp (tf, 0, 0)".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Integrates `ẋ = u(t, x)` from `x₀` with fixed-step RK4.
///
/// A non-finite state or one beyond [`DIVERGENCE_LIMIT`] stops the run; the
/// samples accepted so far are returned with the divergence flag set.
pub fn integrate(law: ClosedLoop, x0: f64, settings: &IntegrationSettings) -> Result<Trajectory> {
    if !x0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: x0,
            reason: "must be finite",
        });
    }
    let (t0, span) = settings.validate(&law)?;
    let n = (span / settings.step * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let step = span / n as f64;
    let time = |i: usize| {
        if i == n {
            t0 + span
        } else {
            t0 + span * (i as f64 / n as f64)
        }
    };

    let mut samples = Vec::with_capacity(n + 2);
    let mut x = x0;
    let mut t = t0;
    let mut u = law.control(t, x)?;
    samples.push(Sample { t, x, u });
    let mut diverged_at = (!u.is_finite()).then_some(t);

    if diverged_at.is_none() {
        for i in 1..=n {
            let next_t = time(i);
            let next_x = law.rk4_step(t, x, next_t - t)?;
            let next_u = if next_x.is_finite() {
                law.control(next_t, next_x)?
            } else {
                f64::NAN
            };
            if !next_x.is_finite() || next_x.abs() > DIVERGENCE_LIMIT || !next_u.is_finite() {
                diverged_at = Some(t);
                break;
            }
            t = next_t;
            x = next_x;
            u = next_u;
            samples.push(Sample { t, x, u });
        }
    }

    let clamped = law.is_predefined() && diverged_at.is_none();
    if clamped {
        samples.push(Sample {
            t: law.horizon().tf(),
            x: 0.0,
            u: 0.0,
        });
    }
    Ok(Trajectory {
        law,
        x0,
        step,
        samples,
        clamped,
        diverged_at,
    })
}

/// Largest deviation of the integrated samples (`t < t_f`) from the exact
/// solution of the given variant.
///
/// An original-law run may be compared against the corrected solution (and
/// vice versa) only for `x₀ ≥ 0`, where the two laws coincide.
pub fn solution_error(traj: &Trajectory, p: &PredefParams, variant: Variant) -> Result<f64> {
    let (run_params, run_variant) = traj.law().predefined_parts().ok_or_else(|| {
        Error::MismatchedLaw("fixed-time trajectory has no closed-form solution".into())
    })?;
    if run_params != *p {
        return Err(Error::MismatchedLaw(
            "trajectory was produced with different parameters".into(),
        ));
    }
    if run_variant != variant && traj.x0() < 0.0 {
        return Err(Error::MismatchedLaw(format!(
            "{:?} run compared with {:?} solution for x0 = {} < 0",
            run_variant,
            variant,
            traj.x0()
        )));
    }
    if let Some(t) = traj.diverged_at() {
        return Err(Error::Diverged { t });
    }
    Ok(traj
        .integrated_samples()
        .iter()
        .map(|s| (s.x - closed_form_state(s.t, traj.x0(), p, variant)).abs())
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laws::Horizon;

    fn unit(eta: f64) -> PredefParams {
        PredefParams::new(eta, Horizon::new(0.0, 1.0).unwrap()).unwrap()
    }

    #[test]
    fn settings_are_checked() {
        let law = ClosedLoop::Corrected(unit(2.0));
        assert!(integrate(law, 1.0, &IntegrationSettings::new(0.0, 1e-3)).is_err());
        assert!(integrate(law, 1.0, &IntegrationSettings::new(2e-3, 1e-3)).is_err());
        assert!(integrate(law, 1.0, &IntegrationSettings::new(1e-3, 0.5)).is_err());
        assert!(integrate(law, f64::NAN, &IntegrationSettings::new(1e-4, 1e-3)).is_err());
        let fixed = ClosedLoop::FixedTime {
            params: FixedTimeParams::new(1.0, 1.0, 0.5, 2.0).unwrap(),
            horizon: Horizon::new(0.0, 1.0).unwrap(),
        };
        assert!(integrate(fixed, 1.0, &IntegrationSettings::new(2.0, 1e-3)).is_err());
    }

    #[test]
    fn grid_lands_on_standoff() {
        let law = ClosedLoop::Corrected(unit(2.0));
        let traj = integrate(law, 1.0, &IntegrationSettings::new(3e-4, 1e-3)).unwrap();
        let pre = traj.integrated_samples();
        assert_eq!(pre[0].t, 0.0);
        assert_eq!(pre[pre.len() - 1].t, 1.0 - 1e-3);
        assert!(traj.step() <= 3e-4);
        assert_eq!(
            traj.samples().last(),
            Some(&Sample {
                t: 1.0,
                x: 0.0,
                u: 0.0
            })
        );
        traj.validate().unwrap();
    }

    #[test]
    fn equilibrium_stays_put() {
        let law = ClosedLoop::Corrected(unit(2.0));
        let traj = integrate(law, 0.0, &IntegrationSettings::new(1e-3, 1e-2)).unwrap();
        assert!(traj.samples().iter().all(|s| s.x == 0.0 && s.u == 0.0));
        assert_eq!(
            solution_error(&traj, &unit(2.0), Variant::Corrected),
            Ok(0.0)
        );
    }

    #[test]
    fn corrected_run_matches_closed_form() {
        let p = unit(2.0);
        let x0 = -std::f64::consts::LN_2;
        let traj = integrate(
            ClosedLoop::Corrected(p),
            x0,
            &IntegrationSettings::new(1e-4, 1e-3),
        )
        .unwrap();
        let last = traj.integrated_samples().last().unwrap();
        let exact = closed_form_state(1.0 - 1e-3, x0, &p, Variant::Corrected);
        assert!((last.x - exact).abs() <= 1e-6);
        assert!(solution_error(&traj, &p, Variant::Corrected).unwrap() <= 1e-6);
    }

    #[test]
    fn original_law_blows_up_for_very_negative_start() {
        let p = unit(2.0);
        let traj = integrate(
            ClosedLoop::Original(p),
            -40.0,
            &IntegrationSettings::new(1e-3, 1e-2),
        )
        .unwrap();
        assert!(traj.is_diverged());
        assert!(!traj.is_clamped());
        assert_eq!(
            solution_error(&traj, &p, Variant::Original),
            Err(Error::Diverged { t: 0.0 })
        );
    }

    #[test]
    fn original_and_corrected_runs_agree_for_positive_start() {
        let p = unit(3.0);
        let settings = IntegrationSettings::new(1e-3, 1e-2);
        let a = integrate(ClosedLoop::Original(p), 2.5, &settings).unwrap();
        let b = integrate(ClosedLoop::Corrected(p), 2.5, &settings).unwrap();
        assert_eq!(a.samples(), b.samples());
        assert_eq!(
            solution_error(&a, &p, Variant::Corrected).unwrap(),
            solution_error(&b, &p, Variant::Corrected).unwrap()
        );
        let neg = integrate(ClosedLoop::Original(p), -2.5, &settings).unwrap();
        assert!(solution_error(&neg, &p, Variant::Corrected).is_err());
        assert!(solution_error(&a, &unit(2.0), Variant::Corrected).is_err());
    }

    #[test]
    fn fixed_time_run_settles() {
        let law = ClosedLoop::FixedTime {
            params: FixedTimeParams::new(1.0, 1.0, 0.5, 2.0).unwrap(),
            horizon: Horizon::new(0.0, 1.0).unwrap(),
        };
        let traj = integrate(
            law,
            4.0,
            &IntegrationSettings::new(1e-3, 1e-3).with_span(5.0),
        )
        .unwrap();
        assert!(!traj.is_clamped());
        let last = traj.samples().last().unwrap();
        assert!((last.t - 5.0).abs() < 1e-12);
        assert!(last.x.abs() < 1e-3);
        for w in traj.samples().windows(2) {
            assert!(w[1].x.abs() <= w[0].x.abs(), "{:?}", w);
            if w[0].x != 0.0 && w[1].x != 0.0 {
                assert!(w[1].x.abs() < w[0].x.abs());
            }
        }
    }

    #[test]
    fn tampered_samples_fail_validation() {
        let law = ClosedLoop::Corrected(unit(2.0));
        let traj = integrate(law, 1.0, &IntegrationSettings::new(1e-2, 1e-2)).unwrap();
        let mut samples = traj.samples().to_vec();
        samples[3].u += 1e-12;
        assert!(Trajectory::from_samples(law, 1.0, samples).is_err());
        let rebuilt = Trajectory::from_samples(law, 1.0, traj.samples().to_vec()).unwrap();
        assert!(rebuilt.is_clamped());
        assert_eq!(rebuilt.integrated_samples(), traj.integrated_samples());
    }
}
