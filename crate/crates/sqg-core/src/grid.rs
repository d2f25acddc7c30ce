//! Uniform periodic grid on `[0, L)^2` and its Fourier lattice.
//!
//! Mode indices follow FFT storage order: linear index `i` along an axis maps
//! to the integer frequency `j = i` for `i <= n/2 - 1` and `j = i - n`
//! otherwise, so `j` ranges over `[-n/2, n/2 - 1]`. Physical wavenumbers are
//! `k = (2*pi/L) * j`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Fraction of the axis Nyquist index retained by the default dealias mask
/// (classical 2/3 rule for quadratic nonlinearities).
pub const DEFAULT_DEALIAS_FRACTION: f64 = 2.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Points per axis; even and at least 8.
    pub n: usize,
    /// Side length of the periodic box.
    pub box_length: f64,
    /// Dealias mask keeps modes with max(|j1|, |j2|) <= dealias_fraction * n/2.
    pub dealias_fraction: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        Self::with_dealias(n, box_length, DEFAULT_DEALIAS_FRACTION)
    }

    pub fn with_dealias(n: usize, box_length: f64, dealias_fraction: f64) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::validation("grid.n", "must be even and >= 8"));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::validation("grid.box_length", "must be finite and > 0"));
        }
        if !(dealias_fraction > 0.0 && dealias_fraction <= 1.0) {
            return Err(Error::validation(
                "grid.dealias_fraction",
                "must lie in (0, 1]",
            ));
        }
        Ok(Grid {
            n,
            box_length,
            dealias_fraction,
        })
    }

    /// Number of lattice points (and spectral coefficients).
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `L / n`.
    pub fn dx(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Wavenumber unit `2*pi / L`; the lattice is `k = k_unit * (j1, j2)`.
    pub fn k_unit(&self) -> f64 {
        TWO_PI / self.box_length
    }

    /// Integer frequency for linear axis index `i` in `0..n`.
    #[inline]
    pub fn freq(&self, i: usize) -> i64 {
        let n = self.n as i64;
        let i = i as i64;
        if i <= n / 2 - 1 {
            i
        } else {
            i - n
        }
    }

    /// Axis index for an integer frequency in `[-n/2, n/2 - 1]`.
    #[inline]
    pub fn index_of_freq(&self, j: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(j >= -n / 2 && j <= n / 2 - 1);
        ((j + n) % n) as usize
    }

    /// Integer frequency pair for a linear coefficient index.
    #[inline]
    pub fn freq_pair(&self, idx: usize) -> (i64, i64) {
        (self.freq(idx / self.n), self.freq(idx % self.n))
    }

    /// Wavenumber vector `(k1, k2)` for a linear coefficient index.
    #[inline]
    pub fn wavenumber(&self, idx: usize) -> (f64, f64) {
        let (j1, j2) = self.freq_pair(idx);
        let u = self.k_unit();
        (u * j1 as f64, u * j2 as f64)
    }

    /// |k| for a linear coefficient index (0 at the mean mode).
    #[inline]
    pub fn k_abs(&self, idx: usize) -> f64 {
        let (k1, k2) = self.wavenumber(idx);
        k1.hypot(k2)
    }

    /// Largest integer frequency magnitude kept by the dealias mask:
    /// `floor(dealias_fraction * n/2)`.
    pub fn dealias_cutoff_freq(&self) -> i64 {
        (self.dealias_fraction * (self.n as f64) / 2.0 + 1e-9).floor() as i64
    }

    /// Largest |k| along an axis that survives dealiasing.
    pub fn dealias_cutoff_k(&self) -> f64 {
        self.k_unit() * self.dealias_cutoff_freq() as f64
    }

    /// Largest |k| over retained modes (corner of the dealias square). Used in
    /// the CFL guard and in residual scalings.
    pub fn k_max(&self) -> f64 {
        self.dealias_cutoff_k() * std::f64::consts::SQRT_2
    }

    /// True if the mode at `idx` survives the dealias mask.
    #[inline]
    pub fn keep(&self, idx: usize) -> bool {
        let (j1, j2) = self.freq_pair(idx);
        j1.abs().max(j2.abs()) <= self.dealias_cutoff_freq()
    }

    /// Smallest positive |k| on the lattice, `2*pi/L`.
    pub fn k_min(&self) -> f64 {
        self.k_unit()
    }

    /// Sorted distinct shell radii |k| realized by retained lattice modes
    /// (excludes the mean mode).
    pub fn shell_radii(&self) -> Vec<f64> {
        let m = self.dealias_cutoff_freq();
        let mut sq: Vec<i64> = Vec::new();
        for j1 in -m..=m {
            for j2 in -m..=m {
                let s = j1 * j1 + j2 * j2;
                if s > 0 {
                    sq.push(s);
                }
            }
        }
        sq.sort_unstable();
        sq.dedup();
        sq.iter().map(|s| self.k_unit() * (*s as f64).sqrt()).collect()
    }
}
