//! Higher time derivatives of the corrected closed-form solution and their
//! behavior as `t → t_f⁻`.
//!
//! A controller built by differentiating the law `n − 1` times needs the
//! state's derivatives up to order `n` to vanish at `t_f`, since the state is
//! identically zero afterwards. With `x ~ C₁ (t_f − t)^η`, the k-th derivative
//! behaves like `(t_f − t)^{η − k}`: it vanishes for `η > k`, tends to a
//! nonzero constant for `η = k` (a jump at `t_f`) and blows up for `η < k`.

use std::num::NonZeroUsize;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{integration_constant, sign, PredefParams, Variant};
use crate::taylor::Series;

/// Highest derivative order supported by [`kth_derivative`].
pub const MAX_ORDER: usize = 6;

/// Log-log slope magnitude separating the three classifications.
pub const SLOPE_TOL: f64 = 0.1;

/// Largest accepted log-log fit residual (natural-log units).
pub const RESIDUAL_TOL: f64 = 0.1;

/// Decades `m` of the sampling grid `t = t_f − (t_f − t₀)·10^{−m}`.
pub const DECADES: std::ops::RangeInclusive<i32> = 2..=6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitEstimate {
    Finite(f64),
    Diverging,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeProfile {
    pub order: usize,
    /// `(t, dᵏx/dtᵏ)` pairs, strictly increasing in `t`, all before `t_f`.
    pub samples: Vec<(f64, f64)>,
    /// Fitted exponent `p` in `|dᵏx/dtᵏ| ~ (t_f − t)^p`.
    pub slope: f64,
    /// Largest absolute residual of the log-log fit.
    pub residual: f64,
    pub limit_estimate: LimitEstimate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    ContinuousZero,
    BoundedDiscontinuous,
    Divergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularityVerdict {
    pub classification: Classification,
    pub order: usize,
    pub eta: f64,
    pub slope: f64,
}

fn check_order(k: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange {
            order: k,
            max: MAX_ORDER,
        })
    }
}

/// dᵏx/dtᵏ at time-to-go `s > 0`, via the series of `ln(1 + C₁ (s + δ)^η)`.
fn derivative_at_time_to_go(s: f64, x0: f64, p: &PredefParams, k: usize) -> f64 {
    let c1 = integration_constant(x0, p, Variant::Corrected).value;
    let series = Series::variable(s, k).powf(p.eta()).scale(c1).ln_1p();
    // s = t_f − t flips the sign of every odd derivative.
    let chain = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign(x0) * chain * series.derivative(k)
}

/// k-th time derivative of the corrected closed-form trajectory from `x₀`.
///
/// Requires `t₀ ≤ t < t_f` and `1 ≤ k ≤ MAX_ORDER`.
pub fn kth_derivative(t: f64, x0: f64, p: &PredefParams, k: usize) -> Result<f64> {
    check_order(k)?;
    let h = p.horizon();
    if !(t < h.tf()) {
        return Err(Error::Domain { t, tf: h.tf() });
    }
    if t < h.t0() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            reason: "must not precede t0",
        });
    }
    Ok(derivative_at_time_to_go(h.time_to_go(t), x0, p, k))
}

/// Samples dᵏx/dtᵏ on the decade grid approaching `t_f` and fits the log-log
/// slope of its magnitude against the time to go.
pub fn derivative_profile(p: &PredefParams, x0: f64, k: usize) -> Result<DerivativeProfile> {
    check_order(k)?;
    if x0 == 0.0 || !x0.is_finite() {
        return Err(Error::InvalidParameter {
            name: "x0",
            value: x0,
            reason: "must be finite and nonzero",
        });
    }
    let h = p.horizon();
    let mut samples = Vec::new();
    let mut points = Vec::new();
    for m in DECADES {
        let s = h.duration() * 10f64.powi(-m);
        let d = derivative_at_time_to_go(s, x0, p, k);
        samples.push((h.tf() - s, d));
        points.push((s.ln(), d.abs().ln()));
    }
    if points.iter().any(|(_, y)| !y.is_finite()) {
        return Err(Error::Inconclusive {
            residual: f64::INFINITY,
            threshold: RESIDUAL_TOL,
        });
    }
    let (slope, residual) = fit_line(&points);
    let limit_estimate = if slope > SLOPE_TOL {
        LimitEstimate::Finite(0.0)
    } else if slope >= -SLOPE_TOL {
        LimitEstimate::Finite(samples.last().map_or(0.0, |&(_, d)| d))
    } else {
        LimitEstimate::Diverging
    };
    Ok(DerivativeProfile {
        order: k,
        samples,
        slope,
        residual,
        limit_estimate,
    })
}

/// Least-squares slope and the largest absolute residual.
fn fit_line(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = points
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).abs())
        .fold(0.0, f64::max);
    (slope, residual)
}

/// Classifies how dᵏx/dtᵏ behaves as `t → t_f⁻`.
pub fn classify_singularity(p: &PredefParams, x0: f64, k: usize) -> Result<SingularityVerdict> {
    let profile = derivative_profile(p, x0, k)?;
    if profile.residual > RESIDUAL_TOL {
        return Err(Error::Inconclusive {
            residual: profile.residual,
            threshold: RESIDUAL_TOL,
        });
    }
    let classification = match profile.limit_estimate {
        LimitEstimate::Diverging => Classification::Divergent,
        LimitEstimate::Finite(v) if v == 0.0 => Classification::ContinuousZero,
        LimitEstimate::Finite(_) => Classification::BoundedDiscontinuous,
    };
    Ok(SingularityVerdict {
        classification,
        order: k,
        eta: p.eta(),
        slope: profile.slope,
    })
}

/// Strict lower bound on the gain for an `n`-dimensional integrator chain.
pub fn min_gain_for_dimension(n: NonZeroUsize) -> f64 {
    n.get() as f64
}
