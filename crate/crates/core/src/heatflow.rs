//! Evolution of densities under addition of independent Gaussian noise
//! Z_t = N(0, t): the heat semigroup, realized as convolution with the
//! Gaussian kernel z_t.
//!
//! The engine is hybrid. Where the density is large the convolution is
//! computed spectrally (zero-padded FFT with multiplier exp(-xi^2 t / 2));
//! in the deep tails, where spectral output is dominated by roundoff at
//! absolute level ~1e-16 * peak, each node is recomputed by Gauss-Legendre
//! quadrature in log space, which is accurate *relative to the local
//! density value*. This keeps log f clean at all depths, so derivative
//! functionals and log-concavity probes of evolved states are trustworthy
//! down to the integral floor. Bases that are non-smooth at t=0 (kinks or
//! support boundaries) alias under the spectral multiplier, so they take
//! the quadrature path at every node, with panels split at the kinks.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::density::{Density, Density1D, Family, GridDensity};
use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, next_pow2, trapezoid};
use crate::Params;

/// A density together with its elapsed noise time: the law of X + Z_t.
#[derive(Debug, Clone)]
pub struct FlowState {
    /// Law of X.
    pub base: Density,
    pub t: f64,
    /// Law of X + Z_t, one evolved grid per coordinate factor.
    pub evolved: Density,
}

/// Flow states at strictly increasing times, all from the same base.
/// Each state is computed independently from the base (never chained),
/// so the error stays O(1) in the number of time points and the
/// semigroup property remains a test, not an implementation dependency.
#[derive(Debug, Clone)]
pub struct FlowCurve {
    pub states: Vec<FlowState>,
}

/// Evolve a one-dimensional density by time t (variance of added noise).
pub fn evolve(d: &Density1D, t: f64, params: &Params) -> Result<GridDensity> {
    evolve_windowed(d, t, t, params)
}

/// Evolve by time t on the window sized for `window_t >= t`. Flow-curve
/// and stencil evaluations pass the largest stencil time here so every
/// evaluation shares one grid geometry and differencing never sees window
/// rounding jumps.
pub fn evolve_windowed(
    d: &Density1D,
    t: f64,
    window_t: f64,
    params: &Params,
) -> Result<GridDensity> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::StencilOutOfDomain {
            t,
            reason: "evolution time must be positive".into(),
        });
    }
    let window_t = window_t.max(t);

    // Output grid: base window extended by 8*sqrt(window_t) on each side,
    // base spacing preserved and nodes kept aligned with the base grid.
    let (base_lo, h) = match d {
        Density1D::Analytic(f) => {
            let (lo, hi) = f.window(params.tail_eps)?;
            (lo, (hi - lo) / (params.m - 1) as f64)
        }
        Density1D::Grid(g) => (g.lo(), g.step()),
    };
    let ext_nodes = (8.0 * window_t.sqrt() / h).ceil() as usize;
    let out_lo = base_lo - ext_nodes as f64 * h;
    let base_m = match d {
        Density1D::Analytic(_) => params.m,
        Density1D::Grid(g) => g.m(),
    };
    let n_out = base_m + 2 * ext_nodes;

    // Base log-density sampled on the output grid (exact for analytic
    // sources, -inf outside a grid source's window).
    let node_logf: Vec<f64> = (0..n_out)
        .map(|j| {
            let x = out_lo + j as f64 * h;
            match d {
                Density1D::Analytic(f) => f.log_pdf(x),
                Density1D::Grid(g) => {
                    if j >= ext_nodes && j < ext_nodes + g.m() {
                        g.logf()[j - ext_nodes]
                    } else {
                        f64::NEG_INFINITY
                    }
                }
            }
        })
        .collect();

    let quad = TailQuadrature::new(d, out_lo, h, &node_logf, t);

    // Kinked bases alias under the spectral multiplier; tiny t cannot be
    // resolved by the grid (Nyquist). Both take the all-node quadrature path.
    let all_quadrature = d.kinked() || t < h * h;

    let logf_out: Vec<f64> = if all_quadrature {
        (0..n_out)
            .map(|j| quad.log_value(out_lo + j as f64 * h))
            .collect()
    } else {
        let f_fft = spectral_convolve(&node_logf, h, t);
        let peak = f_fft.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !(peak > 0.0) {
            return Err(Error::GridTooCoarse(
                "spectral convolution produced no positive values".into(),
            ));
        }
        let trust = params.fft_trust * peak;
        f_fft
            .iter()
            .enumerate()
            .map(|(j, &v)| {
                if v >= trust {
                    v.ln()
                } else {
                    quad.log_value(out_lo + j as f64 * h)
                }
            })
            .collect()
    };

    // Mass conservation before normalization.
    let f: Vec<f64> = logf_out.iter().map(|v| v.exp()).collect();
    let mass = trapezoid(&f, h);
    if (mass - 1.0).abs() > 1e-8 {
        return Err(Error::GridTooCoarse(format!(
            "kernel not resolved: evolved mass {mass} drifts from 1 by {:.3e} (t={t}, h={h})",
            (mass - 1.0).abs()
        )));
    }

    let out_hi = out_lo + (n_out - 1) as f64 * h;
    Ok(GridDensity::new(out_lo, out_hi, logf_out, false)?.with_kinked(false))
}

/// Circular convolution with the heat kernel via FFT on a grid
/// zero-padded by at least a factor of two.
fn spectral_convolve(node_logf: &[f64], h: f64, t: f64) -> Vec<f64> {
    let n = node_logf.len();
    let p = next_pow2(2 * n);
    let mut buf: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); p];
    for (j, &lv) in node_logf.iter().enumerate() {
        buf[j] = Complex::new(lv.exp(), 0.0);
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(p).process(&mut buf);
    let dxi = 2.0 * std::f64::consts::PI / (p as f64 * h);
    for (k, b) in buf.iter_mut().enumerate() {
        let kk = if k <= p / 2 { k as f64 } else { k as f64 - p as f64 };
        let xi = kk * dxi;
        *b *= (-0.5 * xi * xi * t).exp();
    }
    planner.plan_fft_inverse(p).process(&mut buf);
    let scale = 1.0 / p as f64;
    buf[..n].iter().map(|c| c.re * scale).collect()
}

/// Direct evaluation of log (f * z_t)(x) by panelized Gauss-Legendre
/// quadrature in log space. Accurate relative to the local value, so it
/// stays meaningful arbitrarily deep in the tails.
struct TailQuadrature<'a> {
    eval: LogEval<'a>,
    ylo: f64,
    yhi: f64,
    t: f64,
    /// Coarse scan lattice for locating integrand maxima.
    scan_x0: f64,
    scan_h: f64,
    scan_logf: Vec<f64>,
    /// Interior kinks of the base (panel split points).
    breakpoints: Vec<f64>,
    gl_nodes: Vec<f64>,
    gl_weights: Vec<f64>,
}

enum LogEval<'a> {
    Analytic(&'a Family, f64),
    Grid(&'a GridDensity),
}

impl LogEval<'_> {
    fn log_pdf(&self, y: f64) -> f64 {
        match self {
            LogEval::Analytic(f, norm) => f.log_pdf_with_const(y, *norm),
            LogEval::Grid(g) => g.log_pdf(y),
        }
    }
}

impl<'a> TailQuadrature<'a> {
    fn new(d: &'a Density1D, node_x0: f64, node_h: f64, node_logf: &[f64], t: f64) -> Self {
        let (eval, ylo, yhi, breakpoints) = match d {
            Density1D::Analytic(f) => {
                let (slo, shi) = f.support();
                let n = node_logf.len();
                let ylo = node_x0.max(slo);
                let yhi = (node_x0 + (n - 1) as f64 * node_h).min(shi);
                let mut br = Vec::new();
                for b in [slo, shi] {
                    if b.is_finite() && b > ylo && b < yhi {
                        br.push(b);
                    }
                }
                // The Laplace kink sits at the origin.
                if matches!(f, Family::Laplace { .. }) {
                    br.push(0.0);
                }
                (LogEval::Analytic(f, f.log_norm_const()), ylo, yhi, br)
            }
            Density1D::Grid(g) => (LogEval::Grid(g), g.lo(), g.hi(), Vec::new()),
        };
        // Coarse scan lattice: fine enough to see features at the kernel
        // scale sqrt(t) and base features, cheap enough per node.
        let span = yhi - ylo;
        let want = (span / (0.25 * t.sqrt().min(span / 8.0))).ceil() as usize;
        let scan_n = want.clamp(64, 1024);
        let scan_h = span / scan_n as f64;
        let scan_logf: Vec<f64> = (0..=scan_n)
            .map(|i| {
                let y = ylo + i as f64 * scan_h;
                match &eval {
                    LogEval::Analytic(f, norm) => f.log_pdf_with_const(y, *norm),
                    LogEval::Grid(g) => {
                        // Grid nodes align with the scan only by accident;
                        // interpolate.
                        g.log_pdf(y)
                    }
                }
            })
            .collect();
        let (gl_nodes, gl_weights) = gauss_legendre(12);
        TailQuadrature {
            eval,
            ylo,
            yhi,
            t,
            scan_x0: ylo,
            scan_h,
            scan_logf,
            breakpoints,
            gl_nodes,
            gl_weights,
        }
    }

    fn log_integrand(&self, x: f64, y: f64) -> f64 {
        let d = x - y;
        self.eval.log_pdf(y) - d * d / (2.0 * self.t)
            - 0.5 * (2.0 * std::f64::consts::PI * self.t).ln()
    }

    /// log (f * z_t)(x), clamped far below the integral floor when the
    /// true value underflows any reasonable scale.
    fn log_value(&self, x: f64) -> f64 {
        let t = self.t;
        // Candidate integrand maxima: coarse scan plus every breakpoint.
        // Streamed with a three-point window; this loop runs per output
        // node, so it must not allocate.
        let mut best = f64::NEG_INFINITY;
        let mut candidates: Vec<f64> = Vec::with_capacity(4 + self.breakpoints.len());
        let scan_at = |i: usize| -> f64 {
            let y = self.scan_x0 + i as f64 * self.scan_h;
            let d = x - y;
            self.scan_logf[i] - d * d / (2.0 * t)
        };
        let n_scan = self.scan_logf.len();
        let mut prev = f64::NEG_INFINITY;
        let mut cur = scan_at(0);
        for i in 0..n_scan {
            let next = if i + 1 < n_scan { scan_at(i + 1) } else { f64::NEG_INFINITY };
            if cur.is_finite() {
                best = best.max(cur);
                if cur >= prev && cur >= next {
                    candidates.push(self.scan_x0 + i as f64 * self.scan_h);
                }
            }
            prev = cur;
            cur = next;
        }
        for &b in &self.breakpoints {
            candidates.push(b);
        }
        if candidates.is_empty() || !best.is_finite() {
            return f64::NEG_INFINITY;
        }

        // Refine each candidate and derive a local integration interval
        // from the integrand's curvature there.
        let mut intervals: Vec<(f64, f64, f64)> = Vec::new(); // (lo, hi, sigma_loc)
        for &c in &candidates {
            let g = |y: f64| self.log_integrand(x, y);
            if g(c) < best - 46.0 {
                continue;
            }
            let bracket = self.scan_h;
            let (y_star, neg) = crate::numerics::golden_section_min(
                |y| -g(y),
                (c - bracket).max(self.ylo),
                (c + bracket).min(self.yhi),
                1e-12 * bracket.max(1.0),
            );
            let g_star = -neg;
            if g_star < best - 46.0 {
                continue;
            }
            let delta = (self.scan_h.min(t.sqrt())) / 8.0;
            let c2 = (g(y_star + delta) - 2.0 * g_star + g(y_star - delta)) / (delta * delta);
            // Kernel curvature 1/t is the floor; non-concave bases can dip below.
            let curv = if c2.is_finite() { (-c2).max(0.25 / t) } else { 0.25 / t };
            let sigma = (1.0 / curv.sqrt()).min((self.yhi - self.ylo) / 4.0);
            // A cusp (kink) makes the local curvature overestimate the
            // decay; beyond it the integrand still spreads on the kernel
            // scale, so the range never shrinks below sqrt(t).
            let range = sigma.max(t.sqrt());
            let lo = (y_star - 12.0 * range).max(self.ylo);
            let hi = (y_star + 12.0 * range).min(self.yhi);
            if hi > lo {
                intervals.push((lo, hi, sigma));
            }
        }
        if intervals.is_empty() {
            return f64::NEG_INFINITY;
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64, f64)> = Vec::new();
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.0 <= last.1 => {
                    last.1 = last.1.max(iv.1);
                    last.2 = last.2.min(iv.2);
                }
                _ => merged.push(iv),
            }
        }

        // Streaming log-sum-exp of Gauss-Legendre terms across all panels,
        // splitting panels at base kinks.
        let mut running_max = f64::NEG_INFINITY;
        let mut running_sum = 0.0;
        let mut add_term = |g: f64, w: f64| {
            if !g.is_finite() {
                return;
            }
            if g > running_max {
                running_sum = running_sum * (running_max - g).exp() + w;
                running_max = g;
            } else {
                running_sum += w * (g - running_max).exp();
            }
        };
        for (lo, hi, sigma) in merged {
            let mut edges = vec![lo];
            for &b in &self.breakpoints {
                if b > lo && b < hi {
                    edges.push(b);
                }
            }
            edges.push(hi);
            edges.sort_by(f64::total_cmp);
            for w in edges.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b - a <= 0.0 {
                    continue;
                }
                let panels = ((b - a) / sigma).ceil().clamp(2.0, 96.0) as usize;
                let pw = (b - a) / panels as f64;
                for p in 0..panels {
                    let mid = a + (p as f64 + 0.5) * pw;
                    let half = 0.5 * pw;
                    for (gn, gw) in self.gl_nodes.iter().zip(&self.gl_weights) {
                        let y = mid + half * gn;
                        add_term(self.log_integrand(x, y), gw * half);
                    }
                }
            }
        }
        if running_max.is_finite() && running_sum > 0.0 {
            running_max + running_sum.ln()
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Evolve every factor of a (product) density independently: adding
/// N(0, t I_n) adds N(0, t) per coordinate.
pub fn evolve_density(d: &Density, t: f64, params: &Params) -> Result<Density> {
    evolve_density_windowed(d, t, t, params)
}

pub fn evolve_density_windowed(
    d: &Density,
    t: f64,
    window_t: f64,
    params: &Params,
) -> Result<Density> {
    let factors = d
        .factors()
        .iter()
        .map(|f| {
            if t == 0.0 {
                f.discretize(params.m, params.tail_eps).map(Density1D::Grid)
            } else {
                evolve_windowed(f, t, window_t, params).map(Density1D::Grid)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Density::new(factors)
}

/// Flow states at the given times, each computed independently from the base.
pub fn flow_curve(d: &Density, times: &[f64], params: &Params) -> Result<FlowCurve> {
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::Config(format!(
                "flow times must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let floor = if d.kinked() { params.t_min } else { 0.0 };
    let mut states = Vec::with_capacity(times.len());
    for &t in times {
        if !(t > 0.0) || t < floor {
            return Err(Error::StencilOutOfDomain {
                t,
                reason: format!("flow time must be positive{}", if floor > 0.0 {
                    format!(" and >= t_min={floor} for a base that is non-smooth at t=0")
                } else {
                    String::new()
                }),
            });
        }
        let evolved = evolve_density(d, t, params).map_err(|e| match e {
            Error::GridTooCoarse(msg) => Error::GridTooCoarse(format!("at t={t}: {msg}")),
            other => other,
        })?;
        states.push(FlowState {
            base: d.clone(),
            t,
            evolved,
        });
    }
    Ok(FlowCurve { states })
}
