//! Least-squares decay-rate fits on log-transformed series.
//!
//! Exponential fits are linear in `(t, ln v)`, algebraic fits in
//! `(ln(1+t), ln v)`, so both reduce to a straight-line regression and the
//! reported `r_squared` and sup-residual refer to the transformed data.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayModel {
    /// `a (1+t)^{-p}`.
    Algebraic,
    /// `a exp(-lambda t)`.
    Exponential,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DecayFit {
    pub model: DecayModel,
    pub amplitude: f64,
    /// `p` for the algebraic model, `lambda` for the exponential one.
    pub rate: f64,
    pub window: (f64, f64),
    pub n_samples: usize,
    pub r_squared: f64,
    /// Largest absolute log-space residual over the window.
    pub residual_sup: f64,
}

impl DecayFit {
    /// Model value at time `t`.
    pub fn eval(&self, t: f64) -> f64 {
        match self.model {
            DecayModel::Algebraic => self.amplitude * (1.0 + t).powf(-self.rate),
            DecayModel::Exponential => self.amplitude * (-self.rate * t).exp(),
        }
    }
}

/// Fit a decay model to `(t, value)` samples restricted to `window`.
/// Requires at least 10 strictly positive samples inside the window.
pub fn fit_decay(
    series: &[(f64, f64)],
    model: DecayModel,
    window: (f64, f64),
) -> Result<DecayFit> {
    let (lo, hi) = window;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Fit(format!("empty or invalid window [{lo}, {hi}]")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series {
        if t < lo || t > hi {
            continue;
        }
        if !(v > 0.0) {
            return Err(Error::Fit(format!(
                "nonpositive value {v} at t = {t} inside the fit window"
            )));
        }
        let x = match model {
            DecayModel::Algebraic => (1.0 + t).ln(),
            DecayModel::Exponential => t,
        };
        xs.push(x);
        ys.push(v.ln());
    }
    let n = xs.len();
    if n < 10 {
        return Err(Error::Fit(format!(
            "need at least 10 samples in the window, found {n}"
        )));
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        sxx += (xs[i] - mean_x) * (xs[i] - mean_x);
        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate window: all sample times equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut residual_sup = 0.0_f64;
    for i in 0..n {
        let r = ys[i] - (intercept + slope * xs[i]);
        ss_res += r * r;
        ss_tot += (ys[i] - mean_y) * (ys[i] - mean_y);
        residual_sup = residual_sup.max(r.abs());
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        // Flat data fitted by a flat line: perfect by convention.
        1.0
    };
    Ok(DecayFit {
        model,
        amplitude: intercept.exp(),
        rate: -slope,
        window,
        n_samples: n,
        r_squared,
        residual_sup,
    })
}
