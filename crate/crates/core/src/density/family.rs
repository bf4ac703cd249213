//! The log-concave analytic family catalog: Gaussian, Laplace, logistic,
//! Gamma (shape >= 1), Weibull (shape >= 1), Beta (a, b >= 1), Gumbel and
//! exponential. Each family provides an exact log-density, certified
//! truncation windows from closed-form tail bounds, closed-form moments
//! and the analytic second derivative of log f.

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// A member of the analytic catalog. Parameters are validated on
/// construction so every value of this type is log-concave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// N(mu, sigma2)
    Gaussian { mu: f64, sigma2: f64 },
    /// f(x) = exp(-|x|/b) / (2b)
    Laplace { scale: f64 },
    /// f(x) = e^{-x/s} / (s (1 + e^{-x/s})^2)
    Logistic { scale: f64 },
    /// shape k >= 1, scale theta
    Gamma { shape: f64, scale: f64 },
    /// shape k >= 1, scale lambda
    Weibull { shape: f64, scale: f64 },
    /// Beta(a, b) on [0, 1], a, b >= 1
    Beta { a: f64, b: f64 },
    /// location 0, scale beta: F(x) = exp(-e^{-x/beta})
    Gumbel { scale: f64 },
    /// rate lambda on [0, inf)
    Exponential { rate: f64 },
}

fn require(cond: bool, msg: String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ParamOutOfRange(msg))
    }
}

fn finite_pos(v: f64, name: &str, family: &str) -> Result<()> {
    require(
        v.is_finite() && v > 0.0,
        format!("{family}: {name} must be positive and finite, got {v}"),
    )
}

impl Family {
    /// Validate parameters; rejects any request outside the log-concave catalog.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Family::Gaussian { mu, sigma2 } => {
                require(mu.is_finite(), format!("gaussian: mu must be finite, got {mu}"))?;
                finite_pos(sigma2, "sigma2", "gaussian")
            }
            Family::Laplace { scale } => finite_pos(scale, "scale", "laplace"),
            Family::Logistic { scale } => finite_pos(scale, "scale", "logistic"),
            Family::Gamma { shape, scale } => {
                finite_pos(scale, "scale", "gamma")?;
                require(
                    shape.is_finite() && shape >= 1.0,
                    format!("gamma: shape must be >= 1 (log-concavity), got {shape}"),
                )
            }
            Family::Weibull { shape, scale } => {
                finite_pos(scale, "scale", "weibull")?;
                require(
                    shape.is_finite() && shape >= 1.0,
                    format!("weibull: shape must be >= 1 (log-concavity), got {shape}"),
                )
            }
            Family::Beta { a, b } => require(
                a.is_finite() && b.is_finite() && a >= 1.0 && b >= 1.0,
                format!("beta: both parameters must be >= 1 (log-concavity), got a={a}, b={b}"),
            ),
            Family::Gumbel { scale } => finite_pos(scale, "scale", "gumbel"),
            Family::Exponential { rate } => finite_pos(rate, "rate", "exponential"),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian { .. } => "gaussian",
            Family::Laplace { .. } => "laplace",
            Family::Logistic { .. } => "logistic",
            Family::Gamma { .. } => "gamma",
            Family::Weibull { .. } => "weibull",
            Family::Beta { .. } => "beta",
            Family::Gumbel { .. } => "gumbel",
            Family::Exponential { .. } => "exponential",
        }
    }

    /// Canonical spec string, parseable by the density mini-language.
    pub fn spec_string(&self) -> String {
        match *self {
            Family::Gaussian { mu, sigma2 } => format!("gaussian:mu={mu},sigma2={sigma2}"),
            Family::Laplace { scale } => format!("laplace:scale={scale}"),
            Family::Logistic { scale } => format!("logistic:scale={scale}"),
            Family::Gamma { shape, scale } => format!("gamma:shape={shape},scale={scale}"),
            Family::Weibull { shape, scale } => format!("weibull:shape={shape},scale={scale}"),
            Family::Beta { a, b } => format!("beta:a={a},b={b}"),
            Family::Gumbel { scale } => format!("gumbel:scale={scale}"),
            Family::Exponential { rate } => format!("exponential:rate={rate}"),
        }
    }

    /// Additive normalization constant of log f (the x-independent part).
    /// Hoisted out of hot loops: evaluating it costs a lgamma for the
    /// Gamma/Weibull/Beta families.
    pub fn log_norm_const(&self) -> f64 {
        match *self {
            Family::Gaussian { sigma2, .. } => {
                -0.5 * (2.0 * std::f64::consts::PI * sigma2).ln()
            }
            Family::Laplace { scale } => -(2.0 * scale).ln(),
            Family::Logistic { scale } => -scale.ln(),
            Family::Gamma { shape, scale } => -shape * scale.ln() - libm::lgamma(shape),
            Family::Weibull { shape, scale } => shape.ln() - scale.ln(),
            Family::Beta { a, b } => {
                -(libm::lgamma(a) + libm::lgamma(b) - libm::lgamma(a + b))
            }
            Family::Gumbel { scale } => -scale.ln(),
            Family::Exponential { rate } => rate.ln(),
        }
    }

    /// log f given a precomputed normalization constant.
    pub fn log_pdf_with_const(&self, x: f64, norm: f64) -> f64 {
        match *self {
            Family::Gaussian { mu, sigma2 } => {
                let z = x - mu;
                norm - z * z / (2.0 * sigma2)
            }
            Family::Laplace { scale } => norm - x.abs() / scale,
            Family::Logistic { scale } => {
                // Symmetric form: stable for large |x|.
                let z = x.abs() / scale;
                norm - z - 2.0 * (-z).exp().ln_1p()
            }
            Family::Gamma { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                norm + (shape - 1.0) * x.ln() - x / scale
            }
            Family::Weibull { shape, scale } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                let z = x / scale;
                norm + (shape - 1.0) * z.ln() - z.powf(shape)
            }
            Family::Beta { a, b } => {
                if !(0.0..=1.0).contains(&x) {
                    return f64::NEG_INFINITY;
                }
                norm + (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln()
            }
            Family::Gumbel { scale } => {
                let z = x / scale;
                norm - z - (-z).exp()
            }
            Family::Exponential { rate } => {
                if x < 0.0 {
                    return f64::NEG_INFINITY;
                }
                norm - rate * x
            }
        }
    }

    /// Natural log of the density. Returns -inf outside the support and at
    /// interior support endpoints where the density vanishes.
    pub fn log_pdf(&self, x: f64) -> f64 {
        self.log_pdf_with_const(x, self.log_norm_const())
    }

    /// Analytic second derivative of log f on the interior of the support.
    pub fn d2_log_pdf(&self, x: f64) -> f64 {
        match *self {
            Family::Gaussian { sigma2, .. } => -1.0 / sigma2,
            Family::Laplace { .. } => 0.0,
            Family::Logistic { scale } => {
                let s = 1.0 / (1.0 + (-x / scale).exp());
                -2.0 * s * (1.0 - s) / (scale * scale)
            }
            Family::Gamma { shape, .. } => -(shape - 1.0) / (x * x),
            Family::Weibull { shape, scale } => {
                -(shape - 1.0) / (x * x)
                    - shape * (shape - 1.0) * (x / scale).powf(shape - 2.0) / (scale * scale)
            }
            Family::Beta { a, b } => -(a - 1.0) / (x * x) - (b - 1.0) / ((1.0 - x) * (1.0 - x)),
            Family::Gumbel { scale } => -(-x / scale).exp() / (scale * scale),
            Family::Exponential { .. } => 0.0,
        }
    }

    /// Support of the density, possibly unbounded.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            Family::Gaussian { .. } | Family::Laplace { .. } | Family::Logistic { .. }
            | Family::Gumbel { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            Family::Gamma { .. } | Family::Weibull { .. } | Family::Exponential { .. } => {
                (0.0, f64::INFINITY)
            }
            Family::Beta { .. } => (0.0, 1.0),
        }
    }

    /// Truncation window [lo, hi] certified to hold all but `tail_eps` of
    /// the mass, each unbounded tail holding < tail_eps/2. The bounds come
    /// from closed-form tail inequalities, not quadrature.
    pub fn window(&self, tail_eps: f64) -> Result<(f64, f64)> {
        let eps = 0.5 * tail_eps;
        // Solves bound(x) = eps for each closed-form tail bound below.
        let (lo, hi) = match *self {
            Family::Gaussian { mu, sigma2 } => {
                // Upper tail of N(0,1): P(Z > z) <= exp(-z^2/2)/2.
                let z = (2.0 * (0.5 / eps).ln()).sqrt();
                let s = sigma2.sqrt();
                (mu - z * s, mu + z * s)
            }
            Family::Laplace { scale } => {
                // P(X > x) = exp(-x/b)/2 for x > 0.
                let x = scale * (0.5 / eps).ln();
                (-x, x)
            }
            Family::Logistic { scale } => {
                // P(X > x) = 1/(1+e^{x/s}) <= e^{-x/s}.
                let x = scale * (1.0 / eps).ln();
                (-x, x)
            }
            Family::Gamma { shape, scale } => {
                // Chernoff bound at s = 1/(2 theta): P(X > x) <= 2^k exp(-x/(2 theta)).
                let hi = 2.0 * scale * (shape * 2.0_f64.ln() + (1.0 / eps).ln());
                (0.0, hi)
            }
            Family::Weibull { shape, scale } => {
                // Exact: P(X > x) = exp(-(x/lambda)^k).
                let hi = scale * (1.0 / eps).ln().powf(1.0 / shape);
                (0.0, hi)
            }
            Family::Beta { .. } => (0.0, 1.0),
            Family::Gumbel { scale } => {
                // Upper: 1 - F(x) <= e^{-x/beta}. Lower: F(x) = exp(-e^{-x/beta}).
                let hi = scale * (1.0 / eps).ln();
                let lo = -scale * (1.0 / eps).ln().ln();
                (lo, hi)
            }
            Family::Exponential { rate } => (0.0, (1.0 / eps).ln() / rate),
        };
        let span_limit = 1e6 * self.variance().sqrt();
        if !(lo.is_finite() && hi.is_finite()) || hi - lo > span_limit {
            return Err(Error::UnboundedTail {
                family: self.name().to_string(),
                tail_eps,
            });
        }
        Ok((lo, hi))
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Family::Gaussian { mu, .. } => mu,
            Family::Laplace { .. } | Family::Logistic { .. } => 0.0,
            Family::Gamma { shape, scale } => shape * scale,
            Family::Weibull { shape, scale } => scale * gamma_fn(1.0 + 1.0 / shape),
            Family::Beta { a, b } => a / (a + b),
            Family::Gumbel { scale } => EULER_GAMMA * scale,
            Family::Exponential { rate } => 1.0 / rate,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Family::Gaussian { sigma2, .. } => sigma2,
            Family::Laplace { scale } => 2.0 * scale * scale,
            Family::Logistic { scale } => {
                std::f64::consts::PI * std::f64::consts::PI * scale * scale / 3.0
            }
            Family::Gamma { shape, scale } => shape * scale * scale,
            Family::Weibull { shape, scale } => {
                let g1 = gamma_fn(1.0 + 1.0 / shape);
                let g2 = gamma_fn(1.0 + 2.0 / shape);
                scale * scale * (g2 - g1 * g1)
            }
            Family::Beta { a, b } => a * b / ((a + b) * (a + b) * (a + b + 1.0)),
            Family::Gumbel { scale } => {
                std::f64::consts::PI * std::f64::consts::PI * scale * scale / 6.0
            }
            Family::Exponential { rate } => 1.0 / (rate * rate),
        }
    }

    /// Whether log f is smooth enough at t=0 for derivative functionals.
    /// Support-boundary families and the Laplace kink need heat evolution
    /// (t >= t_min) before I, J or K make sense.
    pub fn smooth_at_zero(&self) -> bool {
        matches!(
            self,
            Family::Gaussian { .. } | Family::Logistic { .. } | Family::Gumbel { .. }
        )
    }

    /// Law of a*X when it stays inside the catalog. Beta is not closed
    /// under dilation; callers fall back to a grid.
    pub fn dilated(&self, a: f64) -> Option<Family> {
        Some(match *self {
            Family::Gaussian { mu, sigma2 } => Family::Gaussian {
                mu: a * mu,
                sigma2: a * a * sigma2,
            },
            Family::Laplace { scale } => Family::Laplace { scale: a * scale },
            Family::Logistic { scale } => Family::Logistic { scale: a * scale },
            Family::Gamma { shape, scale } => Family::Gamma {
                shape,
                scale: a * scale,
            },
            Family::Weibull { shape, scale } => Family::Weibull {
                shape,
                scale: a * scale,
            },
            Family::Beta { .. } => return None,
            Family::Gumbel { scale } => Family::Gumbel { scale: a * scale },
            Family::Exponential { rate } => Family::Exponential { rate: rate / a },
        })
    }
}

fn gamma_fn(x: f64) -> f64 {
    libm::lgamma(x).exp()
}
