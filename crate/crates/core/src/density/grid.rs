//! Grid-sampled log-densities on uniform grids.

use crate::error::{Error, Result};
use crate::numerics::{cubic_interp, trapezoid};

/// Relative log-depth below the peak at which grid integrals cut off,
/// mirroring the {f > 0} domain restriction: nodes with
/// log f < max(log f) - FLOOR_NATS (relative density ~1e-20) are excluded
/// from derivative-weighted integrals.
pub const FLOOR_NATS: f64 = 46.0;

/// Log-depth at which sampled values are clamped so that every stored
/// log f stays finite. Well below FLOOR_NATS, so clamped nodes never
/// enter an integral.
pub const CLAMP_NATS: f64 = 120.0;

/// A probability density sampled as log f on a uniform grid over [lo, hi],
/// normalized to unit trapezoidal mass.
#[derive(Debug, Clone)]
pub struct GridDensity {
    lo: f64,
    hi: f64,
    logf: Vec<f64>,
    /// True when the underlying density is non-smooth at t=0 (support
    /// boundary or kink); I, J, K then require prior heat evolution.
    kinked: bool,
    /// Log-depth below the peak to which pointwise curvature of log f is
    /// numerically trustworthy. Exactly sampled grids get FLOOR_NATS;
    /// spectrally convolved grids get a shallower depth set by the
    /// convolution's noise floor.
    curvature_trust: f64,
}

impl GridDensity {
    /// Build from raw log-density samples; clamps -inf tails, validates
    /// the geometry and normalizes to unit mass.
    pub fn new(lo: f64, hi: f64, mut logf: Vec<f64>, kinked: bool) -> Result<GridDensity> {
        let m = logf.len();
        if m < 16 {
            return Err(Error::GridTooCoarse(format!("m={m}, need m >= 16")));
        }
        if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::GridTooCoarse(format!("invalid window [{lo}, {hi}]")));
        }
        let peak = logf
            .iter()
            .copied()
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max);
        if !peak.is_finite() {
            return Err(Error::DegenerateMass { mass: 0.0 });
        }
        for v in &mut logf {
            if !v.is_finite() || *v < peak - CLAMP_NATS {
                *v = peak - CLAMP_NATS;
            }
        }
        let g = GridDensity {
            lo,
            hi,
            logf,
            kinked,
            curvature_trust: FLOOR_NATS,
        };
        g.normalized()
    }

    pub(crate) fn with_kinked(mut self, kinked: bool) -> GridDensity {
        self.kinked = kinked;
        self
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn m(&self) -> usize {
        self.logf.len()
    }

    /// Grid spacing.
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.logf.len() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step()
    }

    pub fn logf(&self) -> &[f64] {
        &self.logf
    }

    pub fn kinked(&self) -> bool {
        self.kinked
    }

    pub fn curvature_trust(&self) -> f64 {
        self.curvature_trust
    }

    pub fn max_logf(&self) -> f64 {
        self.logf.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Trapezoidal mass of exp(log f).
    pub fn mass(&self) -> f64 {
        let f: Vec<f64> = self.logf.iter().map(|v| v.exp()).collect();
        trapezoid(&f, self.step())
    }

    /// Shift log f by a constant so the trapezoidal mass is exactly one.
    /// Works entirely relative to the peak, so uniformly tiny log-densities
    /// normalize without underflow.
    pub fn normalized(mut self) -> Result<GridDensity> {
        let peak = self.max_logf();
        if !peak.is_finite() {
            return Err(Error::DegenerateMass { mass: 0.0 });
        }
        let f: Vec<f64> = self.logf.iter().map(|v| (v - peak).exp()).collect();
        let rel_mass = trapezoid(&f, self.step());
        if !rel_mass.is_finite() || rel_mass <= 0.0 {
            return Err(Error::DegenerateMass { mass: rel_mass });
        }
        let shift = peak + rel_mass.ln();
        for v in &mut self.logf {
            *v -= shift;
        }
        Ok(self)
    }

    /// Log-density at an arbitrary point by cubic interpolation of log f;
    /// -inf outside the window.
    pub fn log_pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            return f64::NEG_INFINITY;
        }
        cubic_interp(&self.logf, self.lo, self.step(), x)
    }

    /// Trapezoidal mean and variance.
    pub fn moments(&self) -> (f64, f64) {
        let h = self.step();
        let fx: Vec<f64> = (0..self.m())
            .map(|i| self.node(i) * self.logf[i].exp())
            .collect();
        let mean = trapezoid(&fx, h);
        let fx2: Vec<f64> = (0..self.m())
            .map(|i| {
                let d = self.node(i) - mean;
                d * d * self.logf[i].exp()
            })
            .collect();
        (mean, trapezoid(&fx2, h))
    }

    /// Law of a*X: support scaled by a, log f shifted by -log a.
    /// Exact (no resampling). Negative orientation is rejected upstream.
    pub fn dilated(&self, a: f64) -> Result<GridDensity> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonpositiveScale(a));
        }
        let logf: Vec<f64> = self.logf.iter().map(|v| v - a.ln()).collect();
        Ok(GridDensity {
            lo: a * self.lo,
            hi: a * self.hi,
            logf,
            kinked: self.kinked,
            curvature_trust: self.curvature_trust,
        })
    }

    /// Indices of nodes above the integral floor (relative density 1e-20).
    pub fn active_range(&self) -> (usize, usize) {
        let floor = self.max_logf() - FLOOR_NATS;
        let mut first = 0;
        while first < self.m() && self.logf[first] <= floor {
            first += 1;
        }
        let mut last = self.m() - 1;
        while last > first && self.logf[last] <= floor {
            last -= 1;
        }
        (first, last)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_density_normalizes_to_zero_log() {
        let g = GridDensity::new(0.0, 1.0, vec![3.0; 64], false).unwrap();
        for v in g.logf() {
            assert!(v.abs() < 1e-14);
        }
        assert!((g.mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalization_is_shift_invariant() {
        let f = |x: f64| -0.5 * x * x;
        let a: Vec<f64> = (0..256).map(|i| f(-5.0 + i as f64 * 10.0 / 255.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + 2.0_f64.ln()).collect();
        let ga = GridDensity::new(-5.0, 5.0, a, false).unwrap();
        let gb = GridDensity::new(-5.0, 5.0, b, false).unwrap();
        for (x, y) in ga.logf().iter().zip(gb.logf()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn normalize_idempotent() {
        let logf: Vec<f64> = (0..128)
            .map(|i| {
                let x = -4.0 + i as f64 * 8.0 / 127.0;
                -0.5 * x * x + 0.03 * (3.0 * x).sin()
            })
            .collect();
        let g = GridDensity::new(-4.0, 4.0, logf, false).unwrap();
        let g2 = g.clone().normalized().unwrap();
        for (a, b) in g.logf().iter().zip(g2.logf()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn too_coarse_rejected() {
        assert!(matches!(
            GridDensity::new(0.0, 1.0, vec![0.0; 8], false),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn degenerate_mass_rejected() {
        // Uniformly tiny log-densities normalize fine (peak-relative
        // arithmetic); an all-NaN grid does not.
        let g = GridDensity::new(0.0, 1.0, vec![-800.0; 32], false);
        assert!(g.is_ok());
        assert!(matches!(
            GridDensity::new(0.0, 1.0, vec![f64::NAN; 32], false),
            Err(Error::DegenerateMass { .. })
        ));
    }

    #[test]
    fn dilation_round_trip() {
        let logf: Vec<f64> = (0..64).map(|i| -((i as f64 - 31.0) / 10.0).powi(2)).collect();
        let g = GridDensity::new(-2.0, 2.0, logf, false).unwrap();
        let back = g.dilated(3.0).unwrap().dilated(1.0 / 3.0).unwrap();
        assert!((back.lo() - g.lo()).abs() < 1e-12);
        for (a, b) in g.logf().iter().zip(back.logf()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
