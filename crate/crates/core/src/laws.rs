//! Scalar control laws and their closed-form solutions.
//!
//! Two predefined-time laws share the time-varying gain `η / (t_f − t)`:
//!
//! * the original law `u = −η (eˣ − 1) / (eˣ (t_f − t))`,
//! * the corrected law `u = −η (e^|x| − 1) / (e^|x| (t_f − t)) · sign(x)`,
//!
//! and the autonomous fixed-time law `u = −k₁|x|^α sign(x) − k₂|x|^β sign(x)`.
//! Closing the loop with `ẋ = u`, the predefined-time laws have the exact
//! solutions `x(t) = ln(C (t_f − t)^η + 1)` (original) and
//! `x(t) = ln(C₁ (t_f − t)^η + 1) · sign(x₀)` (corrected), both identically
//! zero for `t ≥ t_f`.
//!
//! The ratio `(e^y − 1) / e^y` is always evaluated as `−expm1(−y)`, which is
//! algebraically the same and stays finite where `e^y` would underflow.

use serde::Serialize;

use crate::error::{Error, Result};

/// `sign(x)` with `sign(0) = 0`.
pub fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Time window `(t₀, t_f)` of a predefined-time run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Horizon {
    t0: f64,
    tf: f64,
}

impl Horizon {
    pub fn new(t0: f64, tf: f64) -> Result<Self> {
        if !t0.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t0",
                value: t0,
                reason: "must be finite",
            });
        }
        if !tf.is_finite() || tf <= t0 {
            return Err(Error::InvalidParameter {
                name: "tf",
                value: tf,
                reason: "must be finite and strictly greater than t0",
            });
        }
        Ok(Self { t0, tf })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    /// `t_f − t₀`, always positive.
    pub fn duration(&self) -> f64 {
        self.tf - self.t0
    }

    /// Time to go, `t_f − t`.
    pub fn time_to_go(&self, t: f64) -> f64 {
        self.tf - t
    }

    fn check_before_terminal(&self, t: f64) -> Result<f64> {
        if t < self.tf {
            Ok(self.tf - t)
        } else {
            Err(Error::Domain { t, tf: self.tf })
        }
    }
}

/// Gain `η > 1` together with the horizon it acts on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PredefParams {
    eta: f64,
    horizon: Horizon,
}

impl PredefParams {
    pub fn new(eta: f64, horizon: Horizon) -> Result<Self> {
        if !eta.is_finite() || eta <= 1.0 {
            return Err(Error::InvalidParameter {
                name: "eta",
                value: eta,
                reason: "must be finite and strictly greater than 1",
            });
        }
        Ok(Self { eta, horizon })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    /// Magnitude bound `η / (t_f − t₀)` of the corrected law at `t₀`.
    pub fn initial_bound(&self) -> f64 {
        self.eta / self.horizon.duration()
    }
}

/// Gains and exponents of the fixed-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FixedTimeParams {
    k1: f64,
    k2: f64,
    alpha: f64,
    beta: f64,
}

impl FixedTimeParams {
    pub fn new(k1: f64, k2: f64, alpha: f64, beta: f64) -> Result<Self> {
        let positive = |name, value: f64| {
            if value.is_finite() && value > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite and strictly positive",
                })
            }
        };
        positive("k1", k1)?;
        positive("k2", k2)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must lie in the open interval (0, 1)",
            });
        }
        if !(beta.is_finite() && beta > 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must be finite and strictly greater than 1",
            });
        }
        Ok(Self {
            k1,
            k2,
            alpha,
            beta,
        })
    }

    pub fn k1(&self) -> f64 {
        self.k1
    }

    pub fn k2(&self) -> f64 {
        self.k2
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Which of the two predefined-time laws (and closed forms) is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Original,
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrationConstant {
    pub value: f64,
    pub variant: Variant,
}

/// Original law `−η (eˣ − 1) / (eˣ (t_f − t))`. Requires `t < t_f`.
pub fn original_law(t: f64, x: f64, p: &PredefParams) -> Result<f64> {
    let s = p.horizon.check_before_terminal(t)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(p.eta * (-x).exp_m1() / s)
}

/// Corrected law `−η (e^|x| − 1) / (e^|x| (t_f − t)) · sign(x)`. Requires `t < t_f`.
///
/// Odd in `x`, zero at the origin and bounded in magnitude by `η / (t_f − t)`.
pub fn corrected_law(t: f64, x: f64, p: &PredefParams) -> Result<f64> {
    let s = p.horizon.check_before_terminal(t)?;
    if x == 0.0 {
        return Ok(0.0);
    }
    Ok(p.eta * (-x.abs()).exp_m1() * sign(x) / s)
}

/// `η / (t_f − t) − |u|` for the corrected law, computed as `η e^{−|x|} / (t_f − t)`.
///
/// Strictly positive for every finite `x` even where `|u|` itself rounds to
/// the bound (`|x| ≳ 36.7`).
pub fn corrected_bound_gap(t: f64, x: f64, p: &PredefParams) -> Result<f64> {
    let s = p.horizon.check_before_terminal(t)?;
    Ok(p.eta * (-x.abs()).exp() / s)
}

/// Evaluates the selected predefined-time law.
pub fn predefined_law(variant: Variant, t: f64, x: f64, p: &PredefParams) -> Result<f64> {
    match variant {
        Variant::Original => original_law(t, x, p),
        Variant::Corrected => corrected_law(t, x, p),
    }
}

/// Fixed-time law `−k₁|x|^α sign(x) − k₂|x|^β sign(x)`.
pub fn fixed_time_law(x: f64, p: &FixedTimeParams) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let m = x.abs();
    -sign(x) * (p.k1 * m.powf(p.alpha) + p.k2 * m.powf(p.beta))
}

/// `C = (e^{x₀} − 1) / (t_f − t₀)^η` or `C₁ = (e^{|x₀|} − 1) / (t_f − t₀)^η`.
pub fn integration_constant(x0: f64, p: &PredefParams, variant: Variant) -> IntegrationConstant {
    let lifted = match variant {
        Variant::Original => x0,
        Variant::Corrected => x0.abs(),
    };
    IntegrationConstant {
        value: lifted.exp_m1() / p.horizon.duration().powf(p.eta),
        variant,
    }
}

/// Exact closed-loop state at time `t` starting from `x₀` at `t₀`.
///
/// Returns exactly `0.0` for `t ≥ t_f`.
pub fn closed_form_state(t: f64, x0: f64, p: &PredefParams, variant: Variant) -> f64 {
    let s = p.horizon.time_to_go(t);
    if s <= 0.0 || x0 == 0.0 {
        return 0.0;
    }
    // C (t_f − t)^η = (e^{x₀} − 1) r with r = ((t_f − t)/(t_f − t₀))^η.
    let log_ratio = p.eta * (s / p.horizon.duration()).ln();
    let ratio = log_ratio.exp();
    match variant {
        Variant::Corrected => (x0.abs().exp_m1() * ratio).ln_1p() * sign(x0),
        Variant::Original if x0 > 0.0 || ratio <= 0.5 => (x0.exp_m1() * ratio).ln_1p(),
        // 1 + C s^η = (1 − r) + r e^{x₀}, both terms positive.
        Variant::Original => (-log_ratio.exp_m1() + ratio * x0.exp()).ln(),
    }
}
