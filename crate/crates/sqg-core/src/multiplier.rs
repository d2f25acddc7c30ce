//! Radial Fourier multipliers and the perpendicular Riesz transform.
//!
//! All multipliers act diagonally per mode. The fractional Laplacian powers
//! use the convention `Lambda^s: coeff(k) -> |k|^s coeff(k)` with the mean
//! mode mapped to zero for every `s`, including negative powers.

use crate::error::{Error, Result};
use crate::field::{inverse_transform, PhysicalField, SpectralField};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MultiplierSpec {
    /// `|k|^s`, mean mode -> 0.
    LambdaPower(f64),
    /// `exp(-kappa * t * |k|^alpha)`; the mean mode is preserved.
    Semigroup { t: f64, kappa: f64, alpha: f64 },
    /// Low-frequency weight `phi(k) = exp(-|k|^2)`.
    LowWeight,
    /// High-frequency weight `psi(k) = 1 - exp(-|k|^2)`.
    HighWeight,
}

impl MultiplierSpec {
    /// Scalar symbol value at |k| = `k_abs`.
    pub fn symbol(&self, k_abs: f64) -> f64 {
        match *self {
            MultiplierSpec::LambdaPower(s) => {
                if k_abs == 0.0 {
                    0.0
                } else {
                    k_abs.powf(s)
                }
            }
            MultiplierSpec::Semigroup { t, kappa, alpha } => (-kappa * t * k_abs.powf(alpha)).exp(),
            MultiplierSpec::LowWeight => (-k_abs * k_abs).exp(),
            MultiplierSpec::HighWeight => 1.0 - (-k_abs * k_abs).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            MultiplierSpec::LambdaPower(s) => {
                if !s.is_finite() {
                    return Err(Error::validation("multiplier.s", "must be finite"));
                }
            }
            MultiplierSpec::Semigroup { t, kappa, alpha } => {
                if !(t >= 0.0) {
                    return Err(Error::validation("semigroup.t", "must be >= 0"));
                }
                if !(kappa > 0.0) {
                    return Err(Error::validation("semigroup.kappa", "must be > 0"));
                }
                if !(1.0..2.0).contains(&alpha) {
                    return Err(Error::validation("semigroup.alpha", "must lie in [1, 2)"));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Apply a radial multiplier, returning a new field.
pub fn apply_multiplier(f: &SpectralField, spec: MultiplierSpec) -> SpectralField {
    let mut out = f.clone();
    apply_multiplier_in_place(&mut out, spec);
    out
}

pub fn apply_multiplier_in_place(f: &mut SpectralField, spec: MultiplierSpec) {
    let g = f.grid;
    for i in 0..f.coeffs.len() {
        f.coeffs[i] *= spec.symbol(g.k_abs(i));
    }
}

/// Divergence-free velocity obtained from a scalar stream-like field.
#[derive(Debug, Clone)]
pub struct Velocity {
    pub u1: SpectralField,
    pub u2: SpectralField,
}

impl Velocity {
    pub fn zeros(grid: crate::grid::Grid) -> Self {
        Velocity {
            u1: SpectralField::zeros(grid),
            u2: SpectralField::zeros(grid),
        }
    }

    pub fn to_physical(&self) -> (PhysicalField, PhysicalField) {
        (inverse_transform(&self.u1), inverse_transform(&self.u2))
    }

    /// Largest pointwise speed `max_x |u(x)|` on the grid.
    pub fn max_speed(&self) -> f64 {
        let (p1, p2) = self.to_physical();
        p1.data
            .iter()
            .zip(p2.data.iter())
            .fold(0.0_f64, |m, (a, b)| m.max(a.hypot(*b)))
    }

    /// Largest divergence symbol magnitude, `max_k |k . u_hat(k)|`.
    pub fn divergence_defect(&self) -> f64 {
        let g = self.u1.grid;
        let mut worst = 0.0_f64;
        for i in 0..self.u1.coeffs.len() {
            let (k1, k2) = g.wavenumber(i);
            let d = (k1 * self.u1.coeffs[i] + k2 * self.u2.coeffs[i]).norm();
            worst = worst.max(d);
        }
        worst
    }

    pub fn l2_norm(&self) -> f64 {
        let l = self.u1.grid.box_length;
        let s: f64 = self
            .u1
            .coeffs
            .iter()
            .zip(self.u2.coeffs.iter())
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .sum();
        l * s.sqrt()
    }
}

/// `u = R_perp(theta) = Lambda^{-1} (-d2 theta, d1 theta)`: per mode
/// `u1_hat = -i k2/|k| theta_hat`, `u2_hat = i k1/|k| theta_hat`, zero at the
/// mean mode. The symbol has modulus one, so the map is an L^2 isometry on
/// mean-free fields, and `k . u_hat = 0` exactly.
pub fn riesz_perp(theta: &SpectralField) -> Velocity {
    let g = theta.grid;
    let mut u1 = SpectralField::zeros(g);
    let mut u2 = SpectralField::zeros(g);
    for i in 0..theta.coeffs.len() {
        let (k1, k2) = g.wavenumber(i);
        let k = k1.hypot(k2);
        if k == 0.0 {
            continue;
        }
        let c = theta.coeffs[i];
        u1.coeffs[i] = Complex64::new(0.0, -k2 / k) * c;
        u2.coeffs[i] = Complex64::new(0.0, k1 / k) * c;
    }
    Velocity { u1, u2 }
}

/// Spectral divergence `i k . (f1, f2)` of a vector field given by components.
pub fn div_spectral(f1: &SpectralField, f2: &SpectralField) -> SpectralField {
    let g = f1.grid;
    let mut out = SpectralField::zeros(g);
    for i in 0..out.coeffs.len() {
        let (k1, k2) = g.wavenumber(i);
        out.coeffs[i] = Complex64::new(0.0, 1.0) * (k1 * f1.coeffs[i] + k2 * f2.coeffs[i]);
    }
    out
}

/// Split into low and high parts with the smooth weights `phi`, `psi`.
/// The parts sum back to the input exactly since `phi + psi = 1`.
pub fn low_high_split(w: &SpectralField) -> (SpectralField, SpectralField) {
    let low = apply_multiplier(w, MultiplierSpec::LowWeight);
    let high = w.sub(&low);
    (low, high)
}
