//! Norms and inner products with one fixed normalization.
//!
//! Spectral sums carry the factor `L^2` so that Parseval holds against the
//! rectangle-rule quadrature used for the L^p norms:
//!
//! ```text
//! ||f||_2^2 = L^2 sum_k |coeff(k)|^2 = (L/n)^2 sum_x f(x)^2
//! ```

use crate::error::{Error, Result};
use crate::field::{inverse_transform, PhysicalField, SpectralField};
use crate::multiplier::{apply_multiplier, MultiplierSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    L2,
    /// Homogeneous seminorm `||Lambda^s f||_2`.
    HsSeminorm(f64),
    /// Grid-quadrature Lebesgue norm, `p >= 1`.
    Lp(f64),
    Linf,
}

/// `||f||_2` evaluated spectrally.
pub fn l2_norm(f: &SpectralField) -> f64 {
    let s: f64 = f.coeffs.iter().map(|c| c.norm_sqr()).sum();
    f.grid.box_length * s.sqrt()
}

/// `||Lambda^s f||_2`; the mean mode never contributes.
pub fn hs_seminorm(f: &SpectralField, s: f64) -> f64 {
    let g = f.grid;
    let mut acc = 0.0;
    for i in 0..f.coeffs.len() {
        let k = g.k_abs(i);
        if k > 0.0 {
            acc += k.powf(2.0 * s) * f.coeffs[i].norm_sqr();
        }
    }
    g.box_length * acc.sqrt()
}

/// Rectangle-rule `||f||_p` of the physical samples, overflow-safe.
pub fn lp_norm_physical(f: &PhysicalField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::validation("norm.p", "must be >= 1"));
    }
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let m = f.max_abs();
    if m == 0.0 {
        return Ok(0.0);
    }
    let dx2 = f.grid.dx() * f.grid.dx();
    let s: f64 = f.data.iter().map(|v| (v.abs() / m).powf(p)).sum();
    Ok(m * (s * dx2).powf(1.0 / p))
}

pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    lp_norm_physical(&inverse_transform(f), p)
}

pub fn linf_norm(f: &SpectralField) -> f64 {
    inverse_transform(f).max_abs()
}

pub fn norm(f: &SpectralField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::L2 => Ok(l2_norm(f)),
        NormKind::HsSeminorm(s) => Ok(hs_seminorm(f, s)),
        NormKind::Lp(p) => lp_norm(f, p),
        NormKind::Linf => Ok(linf_norm(f)),
    }
}

/// `(f, g) = integral f g dx` for real fields, evaluated spectrally.
pub fn l2_inner(a: &SpectralField, b: &SpectralField) -> f64 {
    debug_assert_eq!(a.grid, b.grid);
    let l2 = a.grid.box_length * a.grid.box_length;
    let s: f64 = a
        .coeffs
        .iter()
        .zip(b.coeffs.iter())
        .map(|(x, y)| (x * y.conj()).re)
        .sum();
    l2 * s
}

/// Smallness norm from the steady-state construction:
/// `||f||_4 + ||Lambda^{1-alpha/2} f||_4 + ||f||_{4/(alpha-1)}`, where the
/// last factor degenerates to `||f||_inf` at the critical value `alpha = 1`
/// (and the middle exponent to 1/2).
pub fn x_norm(f: &SpectralField, alpha: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&alpha) {
        return Err(Error::validation("alpha", "must lie in [1, 2)"));
    }
    let l4 = lp_norm(f, 4.0)?;
    let smoothed = apply_multiplier(f, MultiplierSpec::LambdaPower(1.0 - alpha / 2.0));
    let sobolev = lp_norm(&smoothed, 4.0)?;
    let tail = if alpha == 1.0 {
        linf_norm(f)
    } else {
        lp_norm(f, 4.0 / (alpha - 1.0))?
    };
    Ok(l4 + sobolev + tail)
}

/// Vector-field L^p norm of the pointwise speed `|u(x)|`.
pub fn velocity_lp_norm(u1: &PhysicalField, u2: &PhysicalField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::validation("norm.p", "must be >= 1"));
    }
    let speed = PhysicalField {
        grid: u1.grid,
        data: u1
            .data
            .iter()
            .zip(u2.data.iter())
            .map(|(a, b)| a.hypot(*b))
            .collect(),
    };
    if p.is_infinite() {
        Ok(speed.max_abs())
    } else {
        lp_norm_physical(&speed, p)
    }
}
