//! The density mini-language shared by the CLI and config files:
//!
//! - `family:key=val,...`      analytic catalog member
//! - `grid:file=PATH`          two-column CSV (x, logf), header required
//! - `product:spec1|spec2|...` independent product of 1-D factors
//! - `mix:w1*spec1+w2*spec2`   weighted mixture (grid-sampled)

use std::path::Path;

use crate::density::{mixture, Density, Density1D, Family, GridDensity};
use crate::error::{Error, Result};
use crate::Params;

fn parse_err(spec: &str, reason: impl Into<String>) -> Error {
    Error::ParseError {
        spec: spec.to_string(),
        reason: reason.into(),
    }
}

/// Parse a full density spec (may be a product).
pub fn parse_density(spec: &str, params: &Params) -> Result<Density> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("product:") {
        let factors = rest
            .split('|')
            .map(|s| parse_density_1d(s, params))
            .collect::<Result<Vec<_>>>()?;
        if factors.is_empty() {
            return Err(parse_err(spec, "product needs at least one factor"));
        }
        Density::new(factors)
    } else {
        Ok(Density::scalar(parse_density_1d(spec, params)?))
    }
}

/// Parse a one-dimensional density spec (family, grid file or mixture).
pub fn parse_density_1d(spec: &str, params: &Params) -> Result<Density1D> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("mix:") {
        return parse_mixture(spec, rest, params);
    }
    if let Some(rest) = spec.strip_prefix("grid:") {
        let path = rest
            .strip_prefix("file=")
            .ok_or_else(|| parse_err(spec, "grid spec must be grid:file=PATH"))?;
        return Ok(Density1D::Grid(load_grid_csv(Path::new(path))?));
    }
    parse_family(spec).map(Density1D::Analytic)
}

fn parse_family(spec: &str) -> Result<Family> {
    let (name, args) = match spec.split_once(':') {
        Some((n, a)) => (n.trim(), a),
        None => (spec, ""),
    };
    let mut kv: Vec<(String, f64)> = Vec::new();
    if !args.trim().is_empty() {
        for piece in args.split(',') {
            let (k, v) = piece
                .split_once('=')
                .ok_or_else(|| parse_err(spec, format!("expected key=value, got `{piece}`")))?;
            let val: f64 = v
                .trim()
                .parse()
                .map_err(|_| parse_err(spec, format!("cannot parse number `{v}`")))?;
            kv.push((k.trim().to_string(), val));
        }
    }
    let mut get = |key: &str, default: Option<f64>| -> Result<f64> {
        if let Some(pos) = kv.iter().position(|(k, _)| k == key) {
            Ok(kv.remove(pos).1)
        } else {
            default.ok_or_else(|| parse_err(spec, format!("missing required parameter `{key}`")))
        }
    };
    let family = match name {
        "gaussian" | "normal" => Family::Gaussian {
            mu: get("mu", Some(0.0))?,
            sigma2: get("sigma2", Some(1.0))?,
        },
        "laplace" => Family::Laplace {
            scale: get("scale", Some(1.0))?,
        },
        "logistic" => Family::Logistic {
            scale: get("scale", Some(1.0))?,
        },
        "gamma" => Family::Gamma {
            shape: get("shape", None)?,
            scale: get("scale", Some(1.0))?,
        },
        "weibull" => Family::Weibull {
            shape: get("shape", None)?,
            scale: get("scale", Some(1.0))?,
        },
        "beta" => Family::Beta {
            a: get("a", None)?,
            b: get("b", None)?,
        },
        "gumbel" => Family::Gumbel {
            scale: get("scale", Some(1.0))?,
        },
        "exponential" | "exp" => Family::Exponential {
            rate: get("rate", Some(1.0))?,
        },
        other => return Err(Error::UnknownFamily(other.to_string())),
    };
    if let Some((k, _)) = kv.first() {
        return Err(parse_err(spec, format!("unknown parameter `{k}` for {name}")));
    }
    family.validate()?;
    Ok(family)
}

fn parse_mixture(spec: &str, body: &str, params: &Params) -> Result<Density1D> {
    let mut weights = Vec::new();
    let mut components = Vec::new();
    for piece in split_plus(body) {
        let (w, rest) = piece
            .split_once('*')
            .ok_or_else(|| parse_err(spec, format!("mixture term `{piece}` must be w*spec")))?;
        let weight: f64 = w
            .trim()
            .parse()
            .map_err(|_| parse_err(spec, format!("cannot parse weight `{w}`")))?;
        weights.push(weight);
        components.push(parse_density_1d(rest, params)?);
    }
    Ok(Density1D::Grid(mixture(
        &components,
        &weights,
        params.m,
        params.tail_eps,
    )?))
}

/// Split mixture terms on '+', but not inside exponents like `1e+3`.
fn split_plus(s: &str) -> Vec<String> {
    let bytes = s.as_bytes();
    let mut parts = Vec::new();
    let mut start = 0;
    for i in 0..bytes.len() {
        if bytes[i] == b'+' {
            let prev = if i > 0 { bytes[i - 1] } else { 0 };
            if prev != b'e' && prev != b'E' {
                parts.push(s[start..i].to_string());
                start = i + 1;
            }
        }
    }
    parts.push(s[start..].to_string());
    parts
}

/// Load a grid density from a two-column CSV `x,logf`. A header row is
/// required; uniform node spacing is enforced within 1e-9 relative.
pub fn load_grid_csv(path: &Path) -> Result<GridDensity> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::GridFile(format!("{}: empty file", path.display())))?;
    let hl = header.to_ascii_lowercase();
    if !(hl.contains('x') && hl.contains("logf")) {
        return Err(Error::GridFile(format!(
            "{}: header row `x,logf` required, got `{header}`",
            path.display()
        )));
    }
    let mut xs = Vec::new();
    let mut logf = Vec::new();
    for (idx, line) in lines.enumerate() {
        let mut cols = line.split(',');
        let x: f64 = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| Error::GridFile(format!("{}: bad x on data row {idx}", path.display())))?;
        let v: f64 = cols
            .next()
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| {
                Error::GridFile(format!("{}: bad logf on data row {idx}", path.display()))
            })?;
        if !v.is_finite() {
            return Err(Error::GridFile(format!(
                "{}: non-finite logf on data row {idx}",
                path.display()
            )));
        }
        xs.push(x);
        logf.push(v);
    }
    if xs.len() < 16 {
        return Err(Error::GridFile(format!(
            "{}: need at least 16 rows, got {}",
            path.display(),
            xs.len()
        )));
    }
    let h = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
    if !(h > 0.0) {
        return Err(Error::GridFile(format!(
            "{}: x column must be strictly increasing",
            path.display()
        )));
    }
    for (i, &x) in xs.iter().enumerate() {
        let expect = xs[0] + i as f64 * h;
        if (x - expect).abs() > 1e-9 * (xs[xs.len() - 1] - xs[0]).abs() {
            return Err(Error::GridFile(format!(
                "{}: non-uniform spacing at row {i} (x={x}, expected {expect})",
                path.display()
            )));
        }
    }
    GridDensity::new(xs[0], xs[xs.len() - 1], logf, false)
}

/// Write a grid density as the two-column CSV accepted by `grid:file=`.
pub fn write_grid_csv(g: &GridDensity, path: &Path) -> Result<()> {
    use std::io::Write;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "x,logf")?;
    for i in 0..g.m() {
        writeln!(
            out,
            "{},{}",
            crate::numerics::fmt_f64(g.node(i)),
            crate::numerics::fmt_f64(g.logf()[i])
        )?;
    }
    Ok(())
}
