//! Differentiation of functional curves in t and verification of the exact
//! flow identities: de Bruijn (dH/dt = I/2), dI/dt = -J, K = -dJ/dt
//! (equivalently d2I/dt2 = K), and the closed-form derivatives of the
//! entropy power and of the reciprocal of Fisher information, each
//! cross-validated against direct differencing of the corresponding curve.

use crate::density::Density;
use crate::error::{Error, Result};
use crate::functionals::Flow;
use crate::Params;

/// A numerically differenced derivative with a Richardson residual.
#[derive(Debug, Clone, Copy)]
pub struct DerivativeEstimate {
    pub t: f64,
    pub order: u8,
    pub value: f64,
    /// |extrapolated - unextrapolated|: conservative error gauge.
    pub err_est: f64,
    pub h: f64,
}

/// Centered finite difference of the given order with one Richardson
/// extrapolation level. The curve must be evaluable at t0 +- 4h for
/// order 3 (and within +-2h otherwise); h <= t0/8 keeps stencils positive.
pub fn d_dt<F>(curve: F, t0: f64, order: u8, h: f64) -> Result<DerivativeEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    if !(h > 0.0) || h > t0 / 8.0 {
        return Err(Error::StepTooLarge { t: t0, h });
    }
    let stencil = |s: f64| -> Result<f64> {
        Ok(match order {
            1 => (curve(t0 + s)? - curve(t0 - s)?) / (2.0 * s),
            2 => (curve(t0 + s)? - 2.0 * curve(t0)? + curve(t0 - s)?) / (s * s),
            3 => {
                (curve(t0 + 2.0 * s)? - 2.0 * curve(t0 + s)? + 2.0 * curve(t0 - s)?
                    - curve(t0 - 2.0 * s)?)
                    / (2.0 * s * s * s)
            }
            _ => {
                return Err(Error::Config(format!(
                    "derivative order must be 1, 2 or 3, got {order}"
                )))
            }
        })
    };
    let d_h = stencil(h)?;
    let d_2h = stencil(2.0 * h)?;
    let value = (4.0 * d_h - d_2h) / 3.0;
    Ok(DerivativeEstimate {
        t: t0,
        order,
        value,
        err_est: (value - d_h).abs(),
        h,
    })
}

/// Two-sided evaluation of one identity: a differenced left side against a
/// directly computed right side.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResidual {
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// |lhs - rhs| / |rhs|.
    pub residual: f64,
    pub err_est: f64,
}

fn window_for(t: f64, h: f64, order: u8) -> f64 {
    t + if order >= 3 { 4.0 * h } else { 2.0 * h }
}

/// de Bruijn identity: dH(X+Z_t)/dt = I(X+Z_t)/2. The left side is
/// differenced from the entropy curve, the right side comes from the
/// Fisher quadrature at t; the two paths share no derivative machinery.
pub fn check_debruijn(base: &Density, t: f64, h: f64, params: &Params) -> Result<IdentityResidual> {
    let flow = Flow::new(base, *params);
    let wt = window_for(t, h, 1);
    let d = d_dt(|s| flow.entropy_at(s, wt), t, 1, h)?;
    let rhs = 0.5 * flow.fisher_at(t, t)?;
    Ok(IdentityResidual {
        t,
        lhs: d.value,
        rhs,
        residual: (d.value - rhs).abs() / rhs.abs(),
        err_est: d.err_est,
    })
}

/// dI(X+Z_t)/dt = -J(X+Z_t).
pub fn check_jj(base: &Density, t: f64, h: f64, params: &Params) -> Result<IdentityResidual> {
    let flow = Flow::new(base, *params);
    let wt = window_for(t, h, 1);
    let d = d_dt(|s| flow.fisher_at(s, wt), t, 1, h)?;
    let rhs = -flow.j_at(t, t)?;
    Ok(IdentityResidual {
        t,
        lhs: d.value,
        rhs,
        residual: (d.value - rhs).abs() / rhs.abs(),
        err_est: d.err_est,
    })
}

/// K = -dJ/dt against the independent route K = d2I/dt2: the first path
/// differences the J curve (second log-derivatives under the integral),
/// the second differences the I curve (first log-derivatives) twice.
pub fn check_kk(base: &Density, t: f64, h: f64, params: &Params) -> Result<IdentityResidual> {
    let flow = Flow::new(base, *params);
    let (k, k_err) = flow.k_at(t, h)?;
    let wt = window_for(t, h, 2);
    let d = d_dt(|s| flow.fisher_at(s, wt), t, 2, h)?;
    Ok(IdentityResidual {
        t,
        lhs: k,
        rhs: d.value,
        residual: (k - d.value).abs() / k.abs(),
        err_est: k_err.max(d.err_est),
    })
}

/// A derivative computed along two independent paths: the closed form in
/// terms of (N, I, J, K) and direct differencing of the curve itself.
#[derive(Debug, Clone, Copy)]
pub struct DerivativePair {
    pub order: u8,
    pub closed: f64,
    pub direct: f64,
    pub direct_err: f64,
}

/// First three t-derivatives of the entropy power N(X+Z_t):
/// d1 = N I / n, d2 = (N/n)(I^2/n - J), d3 = (N/n)(K + I^3/n^2 - 3 I J/n),
/// each cross-validated against direct differencing of the N curve.
pub fn n_derivatives(
    base: &Density,
    t: f64,
    h: f64,
    params: &Params,
) -> Result<[DerivativePair; 3]> {
    let flow = Flow::new(base, *params);
    let rec = flow.record(t, h)?;
    let d3_closed = rec.n_d3().ok_or(Error::StepTooLarge { t, h })?;
    let wt = window_for(t, h, 3);
    let curve = |s: f64| flow.entropy_power_at(s, wt);
    let d1 = d_dt(curve, t, 1, h)?;
    let d2 = d_dt(curve, t, 2, h)?;
    let d3 = d_dt(curve, t, 3, h)?;
    Ok([
        DerivativePair { order: 1, closed: rec.n_d1(), direct: d1.value, direct_err: d1.err_est },
        DerivativePair { order: 2, closed: rec.n_d2(), direct: d2.value, direct_err: d2.err_est },
        DerivativePair { order: 3, closed: d3_closed, direct: d3.value, direct_err: d3.err_est },
    ])
}

/// First two t-derivatives of the reciprocal of Fisher information:
/// d1 = n J / I^2, d2 = n (2 J^2/I^3 - K/I^2), cross-validated against
/// direct differencing of the n/I curve.
pub fn itilde_derivatives(
    base: &Density,
    t: f64,
    h: f64,
    params: &Params,
) -> Result<[DerivativePair; 2]> {
    let flow = Flow::new(base, *params);
    let rec = flow.record(t, h)?;
    let d2_closed = rec.itilde_d2().ok_or(Error::StepTooLarge { t, h })?;
    let wt = window_for(t, h, 2);
    let curve = |s: f64| flow.fisher_reciprocal_at(s, wt);
    let d1 = d_dt(curve, t, 1, h)?;
    let d2 = d_dt(curve, t, 2, h)?;
    Ok([
        DerivativePair { order: 1, closed: rec.itilde_d1(), direct: d1.value, direct_err: d1.err_est },
        DerivativePair { order: 2, closed: d2_closed, direct: d2.value, direct_err: d2.err_est },
    ])
}
