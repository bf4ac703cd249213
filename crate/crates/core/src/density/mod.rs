//! Construction, validation and transformation of probability densities:
//! the analytic log-concave catalog, grid-sampled log-densities, dilations,
//! mixtures and products.

mod family;
mod grid;
pub mod parse;

pub use family::Family;
pub use grid::{GridDensity, CLAMP_NATS, FLOOR_NATS};

use crate::error::{Error, Result};
use crate::Params;

/// A one-dimensional density: an analytic catalog member or a grid sample.
#[derive(Debug, Clone)]
pub enum Density1D {
    Analytic(Family),
    Grid(GridDensity),
}

impl Density1D {
    pub fn analytic(family: Family) -> Result<Density1D> {
        family.validate()?;
        Ok(Density1D::Analytic(family))
    }

    pub fn log_pdf(&self, x: f64) -> f64 {
        match self {
            Density1D::Analytic(f) => f.log_pdf(x),
            Density1D::Grid(g) => g.log_pdf(x),
        }
    }

    /// Truncation window holding all but tail_eps of the mass.
    pub fn window(&self, tail_eps: f64) -> Result<(f64, f64)> {
        match self {
            Density1D::Analytic(f) => f.window(tail_eps),
            Density1D::Grid(g) => Ok((g.lo(), g.hi())),
        }
    }

    /// Non-smooth at t=0: J, K (and I) need heat evolution first.
    pub fn kinked(&self) -> bool {
        match self {
            Density1D::Analytic(f) => !f.smooth_at_zero(),
            Density1D::Grid(g) => g.kinked(),
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, Density1D::Analytic(Family::Gaussian { .. }))
    }

    pub fn mean(&self) -> f64 {
        match self {
            Density1D::Analytic(f) => f.mean(),
            Density1D::Grid(g) => g.moments().0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Density1D::Analytic(f) => f.variance(),
            Density1D::Grid(g) => g.moments().1,
        }
    }

    pub fn spec_string(&self) -> String {
        match self {
            Density1D::Analytic(f) => f.spec_string(),
            Density1D::Grid(g) => format!("grid:[{:.6},{:.6}]x{}", g.lo(), g.hi(), g.m()),
        }
    }

    /// Sample the density on a uniform m-node grid over the certified
    /// window. Analytic sources are sampled exactly from log f; grid
    /// sources pass through unchanged (their window is already fixed).
    pub fn discretize(&self, m: usize, tail_eps: f64) -> Result<GridDensity> {
        if m < 16 {
            return Err(Error::GridTooCoarse(format!("m={m}, need m >= 16")));
        }
        if !(tail_eps > 0.0 && tail_eps <= 1e-10) {
            return Err(Error::ParamOutOfRange(format!(
                "tail_eps must lie in (0, 1e-10], got {tail_eps:e}"
            )));
        }
        match self {
            Density1D::Grid(g) => Ok(g.clone()),
            Density1D::Analytic(f) => {
                let (lo, hi) = f.window(tail_eps)?;
                let h = (hi - lo) / (m - 1) as f64;
                let logf: Vec<f64> = (0..m).map(|i| f.log_pdf(lo + i as f64 * h)).collect();
                GridDensity::new(lo, hi, logf, !f.smooth_at_zero())
            }
        }
    }

    /// Law of a*X.
    pub fn dilated(&self, a: f64) -> Result<Density1D> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::NonpositiveScale(a));
        }
        match self {
            Density1D::Analytic(f) => match f.dilated(a) {
                Some(fam) => Ok(Density1D::Analytic(fam)),
                // Beta is not closed under dilation: fall back to the
                // exact grid transform of a default discretization.
                None => {
                    let g = self.discretize(Params::default().m, Params::default().tail_eps)?;
                    Ok(Density1D::Grid(g.dilated(a)?))
                }
            },
            Density1D::Grid(g) => Ok(Density1D::Grid(g.dilated(a)?)),
        }
    }

    /// Log-concavity certificate: true iff the second derivative of log f
    /// stays below `tol` everywhere it can be probed. Returns the worst
    /// (largest) second-derivative value found and its location.
    pub fn is_log_concave(&self, tol: f64) -> LogConcavity {
        match self {
            Density1D::Analytic(f) => {
                let (lo, hi) = f.window(1e-12).expect("catalog windows are finite");
                let n = 4096;
                let span = hi - lo;
                let mut worst = f64::NEG_INFINITY;
                let mut at = lo;
                for j in 0..n {
                    // Midpoint lattice keeps support endpoints out.
                    let x = lo + (j as f64 + 0.5) * span / n as f64;
                    let d2 = f.d2_log_pdf(x);
                    if d2 > worst {
                        worst = d2;
                        at = x;
                    }
                }
                LogConcavity {
                    verdict: worst <= tol,
                    worst_violation: worst,
                    location: at,
                }
            }
            Density1D::Grid(g) => {
                let m = g.m();
                assert!(m >= 3, "log-concavity probe needs m >= 3");
                let h = g.step();
                let floor = g.max_logf() - g.curvature_trust();
                let u = g.logf();
                let mut worst = f64::NEG_INFINITY;
                let mut at = g.lo();
                for i in 1..m - 1 {
                    if u[i - 1] <= floor || u[i] <= floor || u[i + 1] <= floor {
                        continue;
                    }
                    let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
                    if d2 > worst {
                        worst = d2;
                        at = g.node(i);
                    }
                }
                LogConcavity {
                    verdict: worst <= tol,
                    worst_violation: worst,
                    location: at,
                }
            }
        }
    }
}

/// Result of a log-concavity probe.
#[derive(Debug, Clone, Copy)]
pub struct LogConcavity {
    pub verdict: bool,
    pub worst_violation: f64,
    pub location: f64,
}

/// Weighted mixture of one-dimensional densities, realized as a grid
/// density on the union envelope of the component windows. Mixtures are
/// the probe construction for explore mode; they are generally not
/// log-concave.
pub fn mixture(
    components: &[Density1D],
    weights: &[f64],
    m: usize,
    tail_eps: f64,
) -> Result<GridDensity> {
    if components.len() < 2 {
        return Err(Error::WeightMismatch(format!(
            "mixture needs >= 2 components, got {}",
            components.len()
        )));
    }
    if components.len() != weights.len() {
        return Err(Error::WeightMismatch(format!(
            "{} components vs {} weights",
            components.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::WeightMismatch("weights must be positive".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::WeightMismatch(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in components {
        let (l, h) = c.window(tail_eps)?;
        lo = lo.min(l);
        hi = hi.max(h);
    }
    let h = (hi - lo) / (m - 1) as f64;
    let logf: Vec<f64> = (0..m)
        .map(|i| {
            let x = lo + i as f64 * h;
            // Log-sum-exp over components.
            let terms: Vec<f64> = components
                .iter()
                .zip(weights)
                .map(|(c, w)| w.ln() + c.log_pdf(x))
                .collect();
            let mx = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            if mx.is_finite() {
                mx + terms.iter().map(|t| (t - mx).exp()).sum::<f64>().ln()
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let kinked = components.iter().any(|c| c.kinked());
    Ok(GridDensity::new(lo, hi, logf, kinked)?.with_kinked(kinked))
}

/// An n-dimensional density as a product of independent one-dimensional
/// factors. All functionals decompose additively over factors, which is
/// how the n-dimensional statements are exercised without n-D quadrature.
#[derive(Debug, Clone)]
pub struct Density {
    factors: Vec<Density1D>,
}

impl Density {
    pub fn new(factors: Vec<Density1D>) -> Result<Density> {
        if factors.is_empty() {
            return Err(Error::Config("product density needs >= 1 factor".into()));
        }
        Ok(Density { factors })
    }

    pub fn scalar(factor: Density1D) -> Density {
        Density {
            factors: vec![factor],
        }
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Density1D] {
        &self.factors
    }

    pub fn kinked(&self) -> bool {
        self.factors.iter().any(|f| f.kinked())
    }

    pub fn is_gaussian(&self) -> bool {
        self.factors.iter().all(|f| f.is_gaussian())
    }

    pub fn dilated(&self, a: f64) -> Result<Density> {
        let factors = self
            .factors
            .iter()
            .map(|f| f.dilated(a))
            .collect::<Result<Vec<_>>>()?;
        Ok(Density { factors })
    }

    /// Worst log-concavity probe across factors.
    pub fn is_log_concave(&self, tol: f64) -> LogConcavity {
        let mut out = LogConcavity {
            verdict: true,
            worst_violation: f64::NEG_INFINITY,
            location: 0.0,
        };
        for f in &self.factors {
            let lc = f.is_log_concave(tol);
            if lc.worst_violation > out.worst_violation {
                out.worst_violation = lc.worst_violation;
                out.location = lc.location;
            }
            out.verdict &= lc.verdict;
        }
        out
    }

    pub fn spec_string(&self) -> String {
        if self.factors.len() == 1 {
            self.factors[0].spec_string()
        } else {
            let parts: Vec<String> = self.factors.iter().map(|f| f.spec_string()).collect();
            format!("product:{}", parts.join("|"))
        }
    }
}
