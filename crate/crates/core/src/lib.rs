// Guards like `!(t > 0.0)` intentionally reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Information functionals of log-concave probability densities along the
//! heat flow (addition of Gaussian noise), and numerical verification with
//! quantified slack of the identities and inequalities they satisfy:
//! entropy power and its derivatives, Fisher information, the second- and
//! third-order functionals J and K, the de Bruijn identity, Costa's
//! concavity, concavity of the reciprocal of Fisher information, and the
//! isoperimetric family.

pub mod density;
pub mod error;
pub mod flowcalc;
pub mod functionals;
pub mod heatflow;
pub mod inequalities;
pub mod numerics;
pub mod report;

pub use error::{Error, Result};

/// Global numerical parameters. Defaults keep every tolerance of the
/// verification suite achievable in well under a second per functional
/// evaluation.
#[derive(Debug, Clone, Copy)]
pub struct Params {
    /// Grid size for discretization.
    pub m: usize,
    /// Mass allowed outside the truncation window.
    pub tail_eps: f64,
    /// Minimum evolution time for families that are non-smooth at t=0.
    pub t_min: f64,
    /// Base step for flow differencing (Richardson stencils).
    pub h: f64,
    /// Relative density level above which spectral convolution output is
    /// trusted pointwise; below it, tails are recomputed by direct
    /// quadrature in log space.
    pub fft_trust: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            m: 4096,
            tail_eps: 1e-12,
            t_min: 1e-2,
            h: 1e-3,
            fft_trust: 1e-3,
        }
    }
}

impl Params {
    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_h(mut self, h: f64) -> Self {
        self.h = h;
        self
    }

    pub fn with_tail_eps(mut self, tail_eps: f64) -> Self {
        self.tail_eps = tail_eps;
        self
    }
}
