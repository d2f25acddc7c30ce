//! Band-limited random forces supported on a spectral annulus.
//!
//! Coefficients are drawn per mode from a counter-style generator keyed on
//! `(seed, j1, j2)`, so a force is a well-defined function of the box: grids
//! that can represent a mode agree on its coefficient exactly, and no draw
//! depends on iteration order.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::multiplier::{apply_multiplier, MultiplierSpec};
use crate::norms::{lp_norm, x_norm};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceSpec {
    /// Inner spectral radius; no coefficient below it (assumption (A)).
    pub rho0: f64,
    /// Outer spectral radius; `rho1 >= rho0`, equality selects a single shell.
    pub rho1: f64,
    /// Per-mode standard deviation before any renormalization.
    pub amplitude: f64,
    pub seed: u64,
    /// If set, the force is rescaled so its smallness norm equals this value.
    pub target_x_norm: Option<f64>,
}

impl ForceSpec {
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.rho0 >= grid.k_min()) {
            return Err(Error::validation(
                "force.rho0",
                format!("must be >= 2*pi/L = {}", grid.k_min()),
            ));
        }
        if !(self.rho1 >= self.rho0) {
            return Err(Error::validation("force.rho1", "must be >= rho0"));
        }
        if !(self.rho1 <= grid.dealias_cutoff_k()) {
            return Err(Error::validation(
                "force.rho1",
                format!(
                    "must be <= dealias cutoff {} on this grid",
                    grid.dealias_cutoff_k()
                ),
            ));
        }
        if !(self.amplitude > 0.0) {
            return Err(Error::validation("force.amplitude", "must be > 0"));
        }
        if let Some(x) = self.target_x_norm {
            if !(x > 0.0) {
                return Err(Error::validation("force.target_x_norm", "must be > 0"));
            }
        }
        Ok(())
    }
}

/// Complex Gaussian coefficient for lattice mode `(j1, j2)` under `seed`,
/// unit variance. Deterministic and grid-independent.
fn mode_coefficient(seed: u64, j1: i64, j2: i64) -> Complex64 {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&j1.to_le_bytes());
    key[16..24].copy_from_slice(&j2.to_le_bytes());
    key[24..32].copy_from_slice(b"SQGFRC01");
    let mut rng = ChaCha8Rng::from_seed(key);
    let re: f64 = StandardNormal.sample(&mut rng);
    let im: f64 = StandardNormal.sample(&mut rng);
    Complex64::new(re, im) / std::f64::consts::SQRT_2
}

/// True for the representative of each conjugate mode pair.
fn canonical(j1: i64, j2: i64) -> bool {
    j1 > 0 || (j1 == 0 && j2 > 0)
}

/// Nearest realized shell radii strictly below and above the interval
/// `[rho0, rho1]`; used by the empty-annulus diagnostic.
fn nearest_shells(grid: &Grid, rho0: f64, rho1: f64) -> (f64, f64) {
    let shells = grid.shell_radii();
    let below = shells
        .iter()
        .copied()
        .filter(|r| *r < rho0)
        .fold(0.0_f64, f64::max);
    let above = shells
        .iter()
        .copied()
        .find(|r| *r > rho1)
        .unwrap_or(f64::INFINITY);
    (below, above)
}

/// Draw a mean-free random field with spectrum in `k_lo <= |k| <= k_hi`
/// (intersected with the dealias mask), unit per-mode variance.
pub fn make_band_field(grid: Grid, k_lo: f64, k_hi: f64, seed: u64) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    let m = grid.dealias_cutoff_freq();
    let unit = grid.k_unit();
    for j1 in -m..=m {
        for j2 in -m..=m {
            if !canonical(j1, j2) {
                continue;
            }
            let k = unit * ((j1 * j1 + j2 * j2) as f64).sqrt();
            if k < k_lo - 1e-12 || k > k_hi + 1e-12 {
                continue;
            }
            f.set_mode_pair(j1, j2, mode_coefficient(seed, j1, j2));
        }
    }
    f
}

/// Construct the annulus force. The result is real, mean-free, exactly
/// supported in `rho0 <= |k| <= rho1`, and (if requested) rescaled so that
/// `x_norm(f, alpha) = target_x_norm`.
pub fn make_annulus_force(spec: &ForceSpec, grid: Grid, alpha: f64) -> Result<SpectralField> {
    spec.validate(&grid)?;
    let mut f = make_band_field(grid, spec.rho0, spec.rho1, spec.seed);
    let occupied = f.coeffs.iter().any(|c| c.norm_sqr() > 0.0);
    if !occupied {
        let (below, above) = nearest_shells(&grid, spec.rho0, spec.rho1);
        return Err(Error::EmptyAnnulus {
            rho0: spec.rho0,
            rho1: spec.rho1,
            below,
            above,
        });
    }
    f.scale(spec.amplitude);
    if let Some(target) = spec.target_x_norm {
        let x = x_norm(&f, alpha)?;
        f.scale(target / x);
    }
    Ok(f)
}

/// Check assumption (A): every coefficient below `rho0` vanishes.
pub fn verify_assumption_a(f: &SpectralField, rho0: f64) -> Result<()> {
    let g = f.grid;
    for i in 0..f.coeffs.len() {
        let k = g.k_abs(i);
        if k < rho0 && f.coeffs[i].norm() > 0.0 {
            return Err(Error::AssumptionViolated { at: k, rho0 });
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeRow {
    pub t: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnvelopeReport {
    pub p: f64,
    pub nu: f64,
    pub rows: Vec<EnvelopeRow>,
    /// max over sampled times of value / bound; the spectral-gap envelope
    /// asserts this stays at or below one.
    pub max_ratio: f64,
}

/// Evaluate `||Lambda^nu exp(-kappa t Lambda^alpha) f||_p` against the
/// envelope `exp(-kappa rho0^alpha t) ||Lambda^nu f||_p` at the given times.
pub fn semigroup_decay_envelope(
    f: &SpectralField,
    rho0: f64,
    kappa: f64,
    alpha: f64,
    times: &[f64],
    p: f64,
    nu: f64,
) -> Result<EnvelopeReport> {
    verify_assumption_a(f, rho0)?;
    let weighted = apply_multiplier(f, MultiplierSpec::LambdaPower(nu));
    let initial = lp_norm(&weighted, p)?;
    let mut rows = Vec::with_capacity(times.len());
    let mut max_ratio = 0.0_f64;
    for &t in times {
        if !(t >= 0.0) {
            return Err(Error::validation("envelope.t", "times must be >= 0"));
        }
        let flowed = apply_multiplier(&weighted, MultiplierSpec::Semigroup { t, kappa, alpha });
        let value = lp_norm(&flowed, p)?;
        let bound = (-kappa * rho0.powf(alpha) * t).exp() * initial;
        if bound > 0.0 {
            max_ratio = max_ratio.max(value / bound);
        }
        rows.push(EnvelopeRow { t, value, bound });
    }
    Ok(EnvelopeReport {
        p,
        nu,
        rows,
        max_ratio,
    })
}
