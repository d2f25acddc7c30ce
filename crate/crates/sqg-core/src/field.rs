//! Real fields on the grid and their spectral representations.
//!
//! The transform pair is normalized so that coefficients are mode amplitudes:
//!
//! ```text
//! coeff(k) = (1/n^2) * sum_x f(x) exp(-i k.x),    f(x) = sum_k coeff(k) exp(i k.x)
//! ```
//!
//! so `cos(k.x)` carries exactly two coefficients of modulus 1/2 at `+-k`, and
//! Parseval reads `||f||_2^2 = L^2 * sum_k |coeff(k)|^2`.

use crate::error::{Error, Result};
use crate::grid::Grid;
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalField {
    pub grid: Grid,
    /// Row-major samples: `data[i1 * n + i2] = f(x1_i1, x2_i2)`.
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    pub grid: Grid,
    /// Row-major coefficients over the full lattice in FFT index order.
    pub coeffs: Vec<Complex64>,
}

impl PhysicalField {
    pub fn zeros(grid: Grid) -> Self {
        PhysicalField {
            grid,
            data: vec![0.0; grid.len()],
        }
    }

    /// Sample a closure `f(x1, x2)` at the grid points.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n;
        let dx = grid.dx();
        let mut data = vec![0.0; grid.len()];
        for i1 in 0..n {
            for i2 in 0..n {
                data[i1 * n + i2] = f(dx * i1 as f64, dx * i2 as f64);
            }
        }
        PhysicalField { grid, data }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

impl SpectralField {
    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Coefficient at integer frequencies `(j1, j2)`.
    pub fn mode(&self, j1: i64, j2: i64) -> Complex64 {
        let n = self.grid.n;
        self.coeffs[self.grid.index_of_freq(j1) * n + self.grid.index_of_freq(j2)]
    }

    /// Set the `(j1, j2)` coefficient and its conjugate mirror, keeping the
    /// field real. Setting the mean mode requires a real value.
    pub fn set_mode_pair(&mut self, j1: i64, j2: i64, value: Complex64) {
        let n = self.grid.n;
        let i = self.grid.index_of_freq(j1) * n + self.grid.index_of_freq(j2);
        let im = self.mirror_index(i);
        self.coeffs[i] = value;
        if im == i {
            self.coeffs[i] = Complex64::new(value.re, 0.0);
        } else {
            self.coeffs[im] = value.conj();
        }
    }

    /// Index of the conjugate-mirror mode (`k -> -k` on the periodic lattice).
    #[inline]
    pub fn mirror_index(&self, idx: usize) -> usize {
        let n = self.grid.n;
        let i1 = idx / n;
        let i2 = idx % n;
        ((n - i1) % n) * n + (n - i2) % n
    }

    /// Largest deviation from conjugate symmetry, `max_k |c(k) - conj(c(-k))|`.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.coeffs.len() {
            let m = self.mirror_index(i);
            let d = (self.coeffs[i] - self.coeffs[m].conj()).norm();
            worst = worst.max(d);
        }
        worst
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Zero the mean mode (mean-free convention for dynamical fields).
    pub fn zero_mean(&mut self) {
        self.coeffs[0] = Complex64::new(0.0, 0.0);
    }

    /// Apply the grid's dealias mask in place.
    pub fn dealias(&mut self) {
        for i in 0..self.coeffs.len() {
            if !self.grid.keep(i) {
                self.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &SpectralField) {
        debug_assert_eq!(self.grid, other.grid);
        for (a, b) in self.coeffs.iter_mut().zip(other.coeffs.iter()) {
            *a += s * b;
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        debug_assert_eq!(self.grid, other.grid);
        let coeffs = self
            .coeffs
            .iter()
            .zip(other.coeffs.iter())
            .map(|(a, b)| a - b)
            .collect();
        SpectralField {
            grid: self.grid,
            coeffs,
        }
    }
}

thread_local! {
    static PLANS: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> = RefCell::new(HashMap::new());
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut map = cell.borrow_mut();
        map.entry((n, forward))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                let dir = if forward {
                    FftDirection::Forward
                } else {
                    FftDirection::Inverse
                };
                planner.plan_fft(n, dir)
            })
            .clone()
    })
}

/// In-place 2D FFT over a row-major `n x n` complex buffer.
fn fft2(buf: &mut [Complex64], n: usize, forward: bool) {
    let fft = plan(n, forward);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

/// Physical -> spectral with the `1/n^2` amplitude normalization.
pub fn forward_transform(f: &PhysicalField) -> SpectralField {
    let n = f.grid.n;
    let mut buf: Vec<Complex64> = f.data.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft2(&mut buf, n, true);
    let scale = 1.0 / (n * n) as f64;
    for c in &mut buf {
        *c *= scale;
    }
    SpectralField {
        grid: f.grid,
        coeffs: buf,
    }
}

/// Spectral -> physical. The imaginary residue of a conjugate-symmetric input
/// is roundoff; it is discarded.
pub fn inverse_transform(f: &SpectralField) -> PhysicalField {
    let n = f.grid.n;
    let mut buf = f.coeffs.clone();
    fft2(&mut buf, n, false);
    PhysicalField {
        grid: f.grid,
        data: buf.iter().map(|c| c.re).collect(),
    }
}

/// Inverse transform that keeps the complex output; used by conjugate-symmetry
/// diagnostics.
pub fn inverse_transform_complex(f: &SpectralField) -> Vec<Complex64> {
    let n = f.grid.n;
    let mut buf = f.coeffs.clone();
    fft2(&mut buf, n, false);
    buf
}

/// Pointwise product of two physical fields.
pub fn multiply(a: &PhysicalField, b: &PhysicalField) -> Result<PhysicalField> {
    if a.grid != b.grid {
        return Err(Error::Shape("product of fields on different grids".into()));
    }
    let data = a
        .data
        .iter()
        .zip(b.data.iter())
        .map(|(x, y)| x * y)
        .collect();
    Ok(PhysicalField { grid: a.grid, data })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TWO_PI;

    fn grid(n: usize) -> Grid {
        Grid::new(n, TWO_PI).unwrap()
    }

    /// O(n^4) discrete Fourier transform used as an oracle for the FFT path.
    fn dft_oracle(f: &PhysicalField) -> SpectralField {
        let g = f.grid;
        let n = g.n;
        let mut out = SpectralField::zeros(g);
        for idx in 0..g.len() {
            let (j1, j2) = g.freq_pair(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for g1 in 0..n {
                for g2 in 0..n {
                    let phase = -TWO_PI * (j1 as f64 * g1 as f64 + j2 as f64 * g2 as f64)
                        / n as f64;
                    acc += f.data[g1 * n + g2] * Complex64::new(phase.cos(), phase.sin());
                }
            }
            out.coeffs[idx] = acc / (n * n) as f64;
        }
        out
    }

    #[test]
    fn forward_matches_dft_oracle() {
        let g = grid(8);
        let f = PhysicalField::from_fn(g, |x1, x2| {
            (3.0 * x1).cos() * (x2).sin() + 0.5 * (2.0 * x1 + x2).sin()
        });
        let fast = forward_transform(&f);
        let slow = dft_oracle(&f);
        for i in 0..g.len() {
            assert!(
                (fast.coeffs[i] - slow.coeffs[i]).norm() < 1e-12,
                "mode {i}: fft {:?} vs dft {:?}",
                fast.coeffs[i],
                slow.coeffs[i]
            );
        }
    }

    #[test]
    fn pure_cosine_has_two_half_amplitude_coefficients() {
        let g = grid(64);
        let f = PhysicalField::from_fn(g, |x1, x2| (3.0 * x1 + 4.0 * x2).cos());
        let s = forward_transform(&f);
        for idx in 0..g.len() {
            let (j1, j2) = g.freq_pair(idx);
            let c = s.coeffs[idx];
            if (j1, j2) == (3, 4) || (j1, j2) == (-3, -4) {
                assert!(
                    (c - Complex64::new(0.5, 0.0)).norm() < 1e-12,
                    "expected amplitude 1/2 at ({j1},{j2}), got {c:?}"
                );
            } else {
                assert!(c.norm() < 1e-12, "leakage at ({j1},{j2}): {c:?}");
            }
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let g = grid(32);
        let f = PhysicalField::from_fn(g, |x1, x2| {
            (x1).cos() + (5.0 * x2).sin() * (2.0 * x1).cos() + 0.3
        });
        let back = inverse_transform(&forward_transform(&f));
        for i in 0..g.len() {
            assert!((back.data[i] - f.data[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn real_input_yields_conjugate_symmetry() {
        let g = grid(16);
        let f = PhysicalField::from_fn(g, |x1, x2| (3.0 * x1).sin() + (7.0 * x2).cos());
        let s = forward_transform(&f);
        assert!(s.hermitian_defect() < 1e-13);
    }

    #[test]
    fn set_mode_pair_round_trips_to_cosine() {
        let g = grid(16);
        let mut s = SpectralField::zeros(g);
        s.set_mode_pair(2, -1, Complex64::new(0.5, 0.0));
        let p = inverse_transform(&s);
        let expect = PhysicalField::from_fn(g, |x1, x2| (2.0 * x1 - x2).cos());
        for i in 0..g.len() {
            assert!((p.data[i] - expect.data[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn nyquist_mode_is_self_conjugate() {
        let g = grid(8);
        let mut s = SpectralField::zeros(g);
        s.set_mode_pair(-4, 0, Complex64::new(0.25, 0.7));
        // The mirror of the Nyquist row is itself, so the imaginary part must drop.
        assert_eq!(s.mode(-4, 0), Complex64::new(0.25, 0.0));
        assert!(s.hermitian_defect() < 1e-15);
    }

    #[test]
    fn dealias_zeroes_outside_mask() {
        let g = grid(8);
        let mut s = SpectralField::zeros(g);
        s.set_mode_pair(3, 0, Complex64::new(0.5, 0.1));
        s.set_mode_pair(2, 2, Complex64::new(0.5, -0.2));
        s.dealias();
        assert_eq!(s.mode(3, 0).norm(), 0.0);
        assert!((s.mode(2, 2).norm() - Complex64::new(0.5, -0.2).norm()).abs() < 1e-15);
    }
}
