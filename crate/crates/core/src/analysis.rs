//! Checks over control laws and trajectories: initial-control bound, peak
//! location, and the mean-value velocity bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate, ClosedLoop, IntegrationSettings, Trajectory};
use crate::laws::{
    closed_form_state, corrected_bound_gap, corrected_law, original_law, PredefParams,
};

/// Relative slack in the velocity lower-bound test.
pub const VELOCITY_REL_TOL: f64 = 1e-6;

const GOLDEN_TOL: f64 = 1e-12;
const GOLDEN_MAX_ITER: usize = 200;
const DENSE_SUBSTEPS: f64 = 64.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakLocation {
    Initial,
    Interior,
    TerminalStandoff,
}

impl PeakLocation {
    pub fn as_str(self) -> &'static str {
        match self {
            PeakLocation::Initial => "initial",
            PeakLocation::Interior => "interior",
            PeakLocation::TerminalStandoff => "terminal_standoff",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakReport {
    pub t_peak: f64,
    /// Signed control at the peak.
    pub u_peak: f64,
    pub magnitude: f64,
    pub location: PeakLocation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundScanRow {
    pub x0: f64,
    pub u0_original: f64,
    pub u0_corrected: f64,
    pub bound: f64,
    /// `bound − |u0_corrected|`, evaluated without cancellation.
    pub corrected_gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityCheck {
    pub holds: bool,
    pub max_speed: f64,
    pub required: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PeakGrowthPoint {
    pub x0: f64,
    pub magnitude: f64,
}

/// Maximizes `f` on `[a, b]` by golden-section search.
///
/// Returns the best interior abscissa found and its value. Assumes `f` is
/// unimodal on the bracket.
pub fn golden_section_max<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_MAX_ITER {
        if hi - lo <= tol {
            break;
        }
        if fc >= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Locates the largest control magnitude along a trajectory.
///
/// The coarse maximum over the stored samples is refined by golden-section
/// search between its neighbors, on the exact solution for predefined-time
/// loops and on a fine re-integration for the fixed-time loop. The location
/// tolerance is two integration steps.
pub fn find_peak(traj: &Trajectory) -> Result<PeakReport> {
    if let Some(t) = traj.diverged_at() {
        return Err(Error::Diverged { t });
    }
    let samples = traj.integrated_samples();
    if samples.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let (best, coarse) = samples
        .iter()
        .enumerate()
        .fold((0, samples[0]), |(bi, bs), (i, s)| {
            if s.u.abs() > bs.u.abs() {
                (i, *s)
            } else {
                (bi, bs)
            }
        });
    let lo = best.saturating_sub(1);
    let hi = (best + 1).min(samples.len() - 1);

    let mut t_peak = coarse.t;
    let mut u_peak = coarse.u;
    if hi > lo {
        let law = *traj.law();
        let anchor = samples[lo];
        let x0 = traj.x0();
        let step = traj.step();
        let control_at = |t: f64| -> f64 {
            let x = match law.predefined_parts() {
                Some((p, variant)) => closed_form_state(t, x0, &p, variant),
                None => {
                    let span = t - anchor.t;
                    let n = (span / step * DENSE_SUBSTEPS).ceil().max(1.0) as usize;
                    let h = span / n as f64;
                    (0..n).fold(anchor.x, |x, i| {
                        law.rk4_step(anchor.t + i as f64 * h, x, h)
                            .unwrap_or(f64::NAN)
                    })
                }
            };
            law.control(t, x).unwrap_or(f64::NAN)
        };
        let (t_ref, m_ref) =
            golden_section_max(|t| control_at(t).abs(), anchor.t, samples[hi].t, GOLDEN_TOL);
        if m_ref > coarse.u.abs() {
            t_peak = t_ref;
            u_peak = control_at(t_ref);
        }
    }

    let loc_tol = 2.0 * traj.step();
    let t_first = samples[0].t;
    let t_last = samples[samples.len() - 1].t;
    let location = if t_peak <= t_first + loc_tol {
        PeakLocation::Initial
    } else if t_peak >= t_last - loc_tol {
        PeakLocation::TerminalStandoff
    } else {
        PeakLocation::Interior
    };
    Ok(PeakReport {
        t_peak,
        u_peak,
        magnitude: u_peak.abs(),
        location,
    })
}

/// Both predefined-time laws evaluated at `t₀` for each `x₀`, in grid order.
pub fn initial_bound_scan(p: &PredefParams, x0_grid: &[f64]) -> Vec<BoundScanRow> {
    let t0 = p.horizon().t0();
    x0_grid
        .iter()
        .map(|&x0| BoundScanRow {
            x0,
            u0_original: original_law(t0, x0, p).expect("t0 precedes tf"),
            u0_corrected: corrected_law(t0, x0, p).expect("t0 precedes tf"),
            bound: p.initial_bound(),
            corrected_gap: corrected_bound_gap(t0, x0, p).expect("t0 precedes tf"),
        })
        .collect()
}

/// Checks that some sampled speed reaches the mean speed `|x₀| / (t_f − t₀)`
/// needed to cover the distance to the origin within the horizon.
pub fn velocity_lower_bound_check(traj: &Trajectory) -> Result<VelocityCheck> {
    if let Some(t) = traj.diverged_at() {
        return Err(Error::Diverged { t });
    }
    if !traj.law().is_predefined() || !traj.is_clamped() {
        return Err(Error::MismatchedLaw(
            "velocity bound needs a converged predefined-time trajectory".into(),
        ));
    }
    let required = traj.x0().abs() / traj.law().horizon().duration();
    let max_speed = traj
        .integrated_samples()
        .iter()
        .map(|s| s.u.abs())
        .fold(0.0, f64::max);
    Ok(VelocityCheck {
        holds: max_speed >= required * (1.0 - VELOCITY_REL_TOL),
        max_speed,
        required,
    })
}

/// Peak control magnitude of the corrected law for each `x₀`, in grid order.
pub fn peak_growth_curve(
    p: &PredefParams,
    x0_grid: &[f64],
    settings: &IntegrationSettings,
) -> Result<Vec<PeakGrowthPoint>> {
    x0_grid
        .iter()
        .map(|&x0| {
            let traj = integrate(ClosedLoop::Corrected(*p), x0, settings)?;
            Ok(PeakGrowthPoint {
                x0,
                magnitude: find_peak(&traj)?.magnitude,
            })
        })
        .collect()
}

/// One loop with its starting point and integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunConfig {
    pub law: ClosedLoop,
    pub x0: f64,
    pub settings: IntegrationSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub predefined: PeakReport,
    pub fixed_time: PeakReport,
    pub velocity: VelocityCheck,
}

/// Side-by-side peak reports of a predefined-time and a fixed-time run.
pub fn compare_peaks(predefined: &RunConfig, fixed: &RunConfig) -> Result<Comparison> {
    if !predefined.law.is_predefined() || fixed.law.is_predefined() {
        return Err(Error::MismatchedLaw(format!(
            "comparison needs one predefined-time and one fixed-time law, got {} and {}",
            predefined.law.law_id().as_str(),
            fixed.law.law_id().as_str()
        )));
    }
    let a = integrate(predefined.law, predefined.x0, &predefined.settings)?;
    let b = integrate(fixed.law, fixed.x0, &fixed.settings)?;
    compare_trajectories(&a, &b)
}

/// [`compare_peaks`] on already integrated runs.
pub fn compare_trajectories(predefined: &Trajectory, fixed: &Trajectory) -> Result<Comparison> {
    if !predefined.law().is_predefined() || fixed.law().is_predefined() {
        return Err(Error::MismatchedLaw(format!(
            "comparison needs one predefined-time and one fixed-time run, got {} and {}",
            predefined.law_id().as_str(),
            fixed.law_id().as_str()
        )));
    }
    Ok(Comparison {
        predefined: find_peak(predefined)?,
        fixed_time: find_peak(fixed)?,
        velocity: velocity_lower_bound_check(predefined)?,
    })
}
