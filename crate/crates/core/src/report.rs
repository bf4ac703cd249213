//! Configuration, sweep orchestration, verification driving and
//! persistence of records and reports (CSV for curves, JSON for
//! structured reports). All float output uses 17 significant digits so
//! identical configs produce byte-identical files.

use std::io::Write;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::density::parse::parse_density;
use crate::density::{Density, Density1D};
use crate::error::{Error, Result};
use crate::functionals::{Flow, FunctionalRecord};
use crate::inequalities::{
    check_blachman_stam, check_costa, check_dem, check_epi, check_fisher_concavity,
    check_ine_k, check_ine_m, check_iso_family, check_sharp2, check_third_derivative,
    CheckName, InequalityReport, Verdict,
};
use crate::numerics::{fmt_f64, fnv1a_hex};
use crate::Params;

/// Evolution time used to smooth non-smooth bases before checks that need
/// J or I of the unevolved input (pair checks and the convolution bound).
const SMOOTHING_T: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    pub t_start: f64,
    pub t_end: f64,
    pub points: usize,
    pub spacing: Spacing,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputSpec {
    pub format: OutputFormat,
    pub path: String,
}

/// Full configuration of a sweep or verification run; JSON-serializable
/// for `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub density_specs: Vec<String>,
    pub t_lattice: LatticeSpec,
    #[serde(default = "default_h")]
    pub h: f64,
    #[serde(default = "default_m")]
    pub m: usize,
    #[serde(default = "default_tail_eps")]
    pub tail_eps: f64,
    #[serde(default = "all_check_names")]
    pub checks: Vec<String>,
    #[serde(default)]
    pub explore: bool,
    pub output: OutputSpec,
}

fn default_h() -> f64 {
    Params::default().h
}

fn default_m() -> usize {
    Params::default().m
}

fn default_tail_eps() -> f64 {
    Params::default().tail_eps
}

fn all_check_names() -> Vec<String> {
    CheckName::all().iter().map(|c| c.as_str().to_string()).collect()
}

/// The five-family suite plus the non-log-concave mixture probe.
pub fn default_verify_config() -> SweepConfig {
    SweepConfig {
        density_specs: vec![
            "gaussian:mu=0,sigma2=1".into(),
            "logistic:scale=1".into(),
            "gumbel:scale=1".into(),
            "gamma:shape=2,scale=1".into(),
            "weibull:shape=2,scale=1".into(),
            "mix:0.5*gaussian:mu=-3,sigma2=1+0.5*gaussian:mu=3,sigma2=1".into(),
        ],
        t_lattice: LatticeSpec {
            t_start: 0.1,
            t_end: 2.0,
            points: 20,
            spacing: Spacing::Linear,
        },
        h: default_h(),
        m: default_m(),
        tail_eps: default_tail_eps(),
        checks: all_check_names(),
        explore: false,
        output: OutputSpec {
            format: OutputFormat::Json,
            path: "out".into(),
        },
    }
}

impl SweepConfig {
    pub fn params(&self) -> Params {
        Params {
            m: self.m,
            tail_eps: self.tail_eps,
            h: self.h,
            ..Params::default()
        }
    }

    pub fn lattice(&self) -> Result<Vec<f64>> {
        let l = &self.t_lattice;
        if l.points < 2 {
            return Err(Error::Config(format!("lattice needs >= 2 points, got {}", l.points)));
        }
        if !(l.t_end > l.t_start) {
            return Err(Error::Config(format!(
                "t_end {} must exceed t_start {}",
                l.t_end, l.t_start
            )));
        }
        match l.spacing {
            Spacing::Linear => {
                if l.t_start < 0.0 {
                    return Err(Error::Config("t_start must be >= 0".into()));
                }
                let step = (l.t_end - l.t_start) / (l.points - 1) as f64;
                Ok((0..l.points).map(|i| l.t_start + i as f64 * step).collect())
            }
            Spacing::Log => {
                if l.t_start <= 0.0 {
                    return Err(Error::Config("log spacing requires t_start > 0".into()));
                }
                let r = (l.t_end / l.t_start).ln() / (l.points - 1) as f64;
                Ok((0..l.points)
                    .map(|i| l.t_start * (r * i as f64).exp())
                    .collect())
            }
        }
    }

    pub fn check_names(&self) -> Result<Vec<CheckName>> {
        if self.checks.is_empty() {
            return Err(Error::Config("checks list must be nonempty".into()));
        }
        self.checks.iter().map(|s| CheckName::parse(s)).collect()
    }

    pub fn config_hash(&self) -> String {
        fnv1a_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: CheckName,
    pub density: String,
    pub verdict: Verdict,
    pub min_slack: f64,
    pub argmin_t: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    pub timestamp: String,
    pub per_check_summaries: Vec<CheckSummary>,
}

impl RunManifest {
    fn new(config: &SweepConfig, summaries: Vec<CheckSummary>) -> RunManifest {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            config_hash: config.config_hash(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: format!("unix:{secs}"),
            per_check_summaries: summaries,
        }
    }
}

/// One sweep row: the record plus the closed-form flow derivatives.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub t: f64,
    pub entropy: f64,
    pub entropy_power: f64,
    pub fisher: f64,
    pub fisher_reciprocal: f64,
    pub j: f64,
    pub k: Option<f64>,
    pub p: f64,
    pub d_n1: f64,
    pub d_n2: f64,
    pub d_n3: Option<f64>,
    pub d_i1: f64,
    pub d_i2: Option<f64>,
}

impl SweepRow {
    fn from_record(rec: &FunctionalRecord) -> SweepRow {
        SweepRow {
            t: rec.t,
            entropy: rec.entropy,
            entropy_power: rec.entropy_power,
            fisher: rec.fisher,
            fisher_reciprocal: rec.fisher_reciprocal,
            j: rec.j,
            k: rec.k,
            p: rec.p(),
            d_n1: rec.n_d1(),
            d_n2: rec.n_d2(),
            d_n3: rec.n_d3(),
            d_i1: rec.itilde_d1(),
            d_i2: rec.itilde_d2(),
        }
    }
}

pub const SWEEP_HEADER: &str = "t,H,N,I,I_tilde,J,K,p,dN1,dN2,dN3,dI1,dI2";

fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn sweep_row_csv(row: &SweepRow) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(row.t),
        fmt_f64(row.entropy),
        fmt_f64(row.entropy_power),
        fmt_f64(row.fisher),
        fmt_f64(row.fisher_reciprocal),
        fmt_f64(row.j),
        opt(row.k),
        fmt_f64(row.p),
        fmt_f64(row.d_n1),
        fmt_f64(row.d_n2),
        opt(row.d_n3),
        fmt_f64(row.d_i1),
        opt(row.d_i2),
    )
}

/// Filesystem-safe slug for a density spec.
fn slug(spec: &str) -> String {
    let mut s: String = spec
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    s.truncate(48);
    s
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub files: Vec<PathBuf>,
    pub manifest_path: PathBuf,
    pub failed_rows: usize,
}

/// Config invariant: a lattice starting below t_min is only valid when
/// every configured density is smooth at t=0.
fn validate_t_start(config: &SweepConfig, params: &Params) -> Result<()> {
    if config.t_lattice.t_start >= params.t_min {
        return Ok(());
    }
    for spec in &config.density_specs {
        if parse_density(spec, params)?.kinked() {
            return Err(Error::Config(format!(
                "t_start {} is below t_min {} but `{spec}` is non-smooth at t=0",
                config.t_lattice.t_start, params.t_min
            )));
        }
    }
    Ok(())
}

/// Evaluate every (density, t) pair and write one curve file per density
/// plus a manifest. Failed rows are flushed with empty value cells and
/// reported on stderr; any failure makes the outcome nonzero.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepOutcome> {
    let params = config.params();
    let lattice = config.lattice()?;
    validate_t_start(config, &params)?;
    let out_dir = PathBuf::from(&config.output.path);
    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    let mut failed = 0usize;
    let mut summaries = Vec::new();
    for (idx, spec) in config.density_specs.iter().enumerate() {
        let density = parse_density(spec, &params)?;
        let flow = Flow::new(&density, params);
        let mut rows: Vec<(f64, Option<SweepRow>)> = Vec::new();
        for &t in &lattice {
            match flow.record(t, config.h) {
                Ok(rec) => rows.push((t, Some(SweepRow::from_record(&rec)))),
                Err(e) => {
                    eprintln!("sweep: {spec} at t={t}: {e}");
                    failed += 1;
                    rows.push((t, None));
                }
            }
        }
        let path = match config.output.format {
            OutputFormat::Csv => {
                let path = out_dir.join(format!("sweep_{idx:02}_{}.csv", slug(spec)));
                let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
                writeln!(out, "{SWEEP_HEADER}")?;
                for (t, row) in &rows {
                    match row {
                        Some(r) => writeln!(out, "{}", sweep_row_csv(r))?,
                        None => writeln!(out, "{},,,,,,,,,,,,", fmt_f64(*t))?,
                    }
                }
                path
            }
            OutputFormat::Json => {
                let path = out_dir.join(format!("sweep_{idx:02}_{}.json", slug(spec)));
                let body: Vec<serde_json::Value> = rows
                    .iter()
                    .map(|(t, row)| match row {
                        Some(r) => serde_json::to_value(r).expect("row serializes"),
                        None => serde_json::json!({ "t": t, "error": true }),
                    })
                    .collect();
                std::fs::write(&path, serde_json::to_string_pretty(&body)? + "\n")?;
                path
            }
        };
        files.push(path);
        summaries.push(CheckSummary {
            name: CheckName::DemP,
            density: spec.clone(),
            verdict: if rows.iter().all(|(_, r)| r.is_some()) {
                Verdict::Holds
            } else {
                Verdict::Inconclusive
            },
            min_slack: f64::NAN,
            argmin_t: f64::NAN,
        });
    }
    let manifest = RunManifest::new(config, summaries);
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(SweepOutcome {
        files,
        manifest_path,
        failed_rows: failed,
    })
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Equality => "equality",
            Verdict::Violated => "violated",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

/// Pre-evolve a non-smooth density so derivative functionals at t=0 exist.
fn smoothed_if_kinked(d: &Density, params: &Params) -> Result<(Density, bool)> {
    if !d.kinked() {
        return Ok((d.clone(), false));
    }
    let factors = d
        .factors()
        .iter()
        .map(|f| crate::heatflow::evolve(f, SMOOTHING_T, params).map(Density1D::Grid))
        .collect::<Result<Vec<_>>>()?;
    Ok((Density::new(factors)?, true))
}

fn annotate_smoothing(report: &mut InequalityReport, spec: &str, smoothed: bool) {
    report.density_spec = spec.to_string();
    if smoothed {
        report
            .notes
            .push(format!("input pre-evolved by t={SMOOTHING_T} (non-smooth at t=0)"));
    }
}

/// Producer groups: each runs one evaluation and yields 1-3 named reports.
fn producers_for(checks: &[CheckName]) -> Vec<&'static str> {
    let mut groups = Vec::new();
    let mut want = |names: &[CheckName], tag: &'static str| {
        if names.iter().any(|n| checks.contains(n)) {
            groups.push(tag);
        }
    };
    want(&[CheckName::Epi], "epi");
    want(&[CheckName::BlachmanStam], "blachman_stam");
    want(&[CheckName::Sharp2], "sharp2");
    want(&[CheckName::CostaChord, CheckName::CostaConcavity], "costa");
    want(&[CheckName::FisherChord, CheckName::FisherConcavity], "fisher");
    want(&[CheckName::ThirdDerivative], "third");
    want(&[CheckName::IneMain, CheckName::IneMLambda], "ine_m");
    want(&[CheckName::IneK, CheckName::IneW], "ine_k");
    want(&[CheckName::DemP], "dem");
    want(&[CheckName::Iso, CheckName::IsoF, CheckName::IsoK], "iso");
    groups
}

fn run_producer(
    tag: &str,
    density: &Density,
    spec: &str,
    lattice: &[f64],
    params: &Params,
    h: f64,
) -> Result<Vec<InequalityReport>> {
    let gaussian_partner = Density::scalar(Density1D::Analytic(
        crate::density::Family::Gaussian { mu: 0.0, sigma2: 1.0 },
    ));
    let reports = match tag {
        "epi" => {
            let mut out = Vec::new();
            let mut r1 = check_epi(density, density, params)?;
            annotate_smoothing(&mut r1, &format!("f={spec};g={spec}"), false);
            out.push(r1);
            if density.spec_string() != gaussian_partner.spec_string() {
                let mut r2 = check_epi(density, &gaussian_partner, params)?;
                annotate_smoothing(&mut r2, &format!("f={spec};g=gaussian:mu=0,sigma2=1"), false);
                out.push(r2);
            }
            out
        }
        "blachman_stam" | "sharp2" => {
            let (sm, was) = smoothed_if_kinked(density, params)?;
            let run = |a: &Density, b: &Density| -> Result<InequalityReport> {
                if tag == "blachman_stam" {
                    check_blachman_stam(a, b, params)
                } else {
                    check_sharp2(a, b, params)
                }
            };
            let mut out = Vec::new();
            let mut r1 = run(&sm, &sm)?;
            annotate_smoothing(&mut r1, &format!("f={spec};g={spec}"), was);
            out.push(r1);
            if density.spec_string() != gaussian_partner.spec_string() {
                let mut r2 = run(&sm, &gaussian_partner)?;
                annotate_smoothing(&mut r2, &format!("f={spec};g=gaussian:mu=0,sigma2=1"), was);
                out.push(r2);
            }
            out
        }
        "costa" => {
            let (chord, conc) = check_costa(density, lattice, h, params)?;
            vec![chord, conc]
        }
        "fisher" => {
            let (chord, conc) = check_fisher_concavity(density, lattice, h, params)?;
            vec![chord, conc]
        }
        "third" => vec![check_third_derivative(density, lattice, h, params)?],
        "ine_m" => {
            let (sm, was) = smoothed_if_kinked(density, params)?;
            let (mut main, mut lambda) = check_ine_m(&sm, lattice, 101, params)?;
            annotate_smoothing(&mut main, spec, was);
            annotate_smoothing(&mut lambda, spec, was);
            vec![main, lambda]
        }
        "ine_k" => {
            let (strong, weak) = check_ine_k(density, lattice, h, params)?;
            vec![strong, weak]
        }
        "dem" => vec![check_dem(density, lattice, h, params)?],
        "iso" => {
            let (a, b, c) = check_iso_family(density, lattice, h, params)?;
            vec![a, b, c]
        }
        other => return Err(Error::Config(format!("unknown producer `{other}`"))),
    };
    Ok(reports)
}

#[derive(Debug)]
pub struct VerifyOutcome {
    pub reports: Vec<InequalityReport>,
    pub manifest_path: PathBuf,
    pub report_path: PathBuf,
    pub exit_code: i32,
}

/// Exit-code contract: 0 if every counted verdict is holds/equality, 1 if
/// any is violated, 4 if any is inconclusive and none violated. In explore
/// mode, log-concave-only checks on non-log-concave input are recorded as
/// data and not counted.
pub fn exit_code_for(reports: &[InequalityReport], explore: bool) -> i32 {
    let counted = reports
        .iter()
        .filter(|r| !(explore && r.log_concave_required && r.not_log_concave_input));
    let mut any_inconclusive = false;
    for r in counted {
        match r.verdict {
            Verdict::Violated => return 1,
            Verdict::Inconclusive => any_inconclusive = true,
            _ => {}
        }
    }
    if any_inconclusive {
        4
    } else {
        0
    }
}

/// Run every configured (check, density) pair, rerunning any violation at
/// m*2 and h/2 before reporting it, and persist reports plus manifest.
pub fn run_verify(config: &SweepConfig) -> Result<VerifyOutcome> {
    let params = config.params();
    let lattice = config.lattice()?;
    validate_t_start(config, &params)?;
    let checks = config.check_names()?;
    let producers = producers_for(&checks);
    let mut reports: Vec<InequalityReport> = Vec::new();

    for spec in &config.density_specs {
        let density = parse_density(spec, &params)?;
        let log_concave = density.is_log_concave(1e-6).verdict;
        for tag in &producers {
            let produced = run_producer(tag, &density, spec, &lattice, &params, config.h)?;
            // Outside explore mode, log-concave-only checks are not run on
            // non-log-concave input (their pass/fail semantics need the
            // hypothesis).
            let mut produced: Vec<InequalityReport> = produced
                .into_iter()
                .filter(|r| checks.contains(&r.name))
                .filter(|r| config.explore || log_concave || !r.name.requires_log_concave())
                .collect();
            // A violation triggers one refinement rerun before being reported.
            if produced.iter().any(|r| r.verdict == Verdict::Violated) {
                let refined_params = Params {
                    m: params.m * 2,
                    ..params
                };
                let refined = run_producer(
                    tag,
                    &density,
                    spec,
                    &lattice,
                    &refined_params,
                    config.h / 2.0,
                )?;
                for r in &mut produced {
                    if r.verdict != Verdict::Violated {
                        continue;
                    }
                    if let Some(fixed) = refined.iter().find(|f| f.name == r.name) {
                        let mut fixed = fixed.clone();
                        fixed.notes.push(format!(
                            "refined rerun at m={}, h={} after violation at m={}, h={}",
                            refined_params.m,
                            config.h / 2.0,
                            params.m,
                            config.h
                        ));
                        *r = fixed;
                    }
                }
            }
            for mut r in produced {
                // Flow reports carry the configured spec string (mixtures
                // would otherwise print as anonymous grids). Pair and
                // convolution-bound reports were labeled at creation.
                if !r.name.is_pair_check()
                    && !matches!(r.name, CheckName::IneMain | CheckName::IneMLambda)
                {
                    r.density_spec = spec.clone();
                }
                reports.push(r);
            }
        }
    }

    // Deterministic order: check name, then density spec.
    reports.sort_by(|a, b| {
        a.name
            .as_str()
            .cmp(b.name.as_str())
            .then_with(|| a.density_spec.cmp(&b.density_spec))
            .then_with(|| a.argmin_t.total_cmp(&b.argmin_t))
    });

    let out_dir = PathBuf::from(&config.output.path);
    std::fs::create_dir_all(&out_dir)?;
    let report_path = match config.output.format {
        OutputFormat::Json => {
            let path = out_dir.join("reports.json");
            std::fs::write(&path, serde_json::to_string_pretty(&reports)? + "\n")?;
            path
        }
        OutputFormat::Csv => {
            let path = out_dir.join("reports.csv");
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path)?);
            writeln!(out, "check,density_spec,verdict,min_slack,argmin_t,err_gate")?;
            for r in &reports {
                writeln!(
                    out,
                    "{},\"{}\",{},{},{},{}",
                    r.name.as_str(),
                    r.density_spec,
                    r.verdict,
                    fmt_f64(r.min_slack),
                    fmt_f64(r.argmin_t),
                    fmt_f64(r.err_gate)
                )?;
            }
            path
        }
    };
    let summaries: Vec<CheckSummary> = reports
        .iter()
        .map(|r| CheckSummary {
            name: r.name,
            density: r.density_spec.clone(),
            verdict: r.verdict,
            min_slack: r.min_slack,
            argmin_t: r.argmin_t,
        })
        .collect();
    let manifest = RunManifest::new(config, summaries);
    let manifest_path = out_dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    let exit_code = exit_code_for(&reports, config.explore);
    Ok(VerifyOutcome {
        reports,
        manifest_path,
        report_path,
        exit_code,
    })
}

/// The family catalog listing for `families`.
pub fn catalog_listing() -> String {
    let rows = [
        ("gaussian", "mu (any), sigma2 > 0", "smooth"),
        ("laplace", "scale > 0", "kinked at 0: t_min required for I, J, K"),
        ("logistic", "scale > 0", "smooth"),
        ("gamma", "shape >= 1, scale > 0", "support boundary: t_min required"),
        ("weibull", "shape >= 1, scale > 0", "support boundary: t_min required"),
        ("beta", "a >= 1, b >= 1", "support boundary: t_min required"),
        ("gumbel", "scale > 0", "smooth"),
        ("exponential", "rate > 0", "support boundary: t_min required"),
    ];
    let mut out = String::from("log-concave analytic catalog:\n");
    for (name, constraint, flag) in rows {
        out.push_str(&format!("  {name:<12} {constraint:<28} {flag}\n"));
    }
    out.push_str("\ncombinators:\n");
    out.push_str("  product:spec1|spec2|...        independent product density\n");
    out.push_str("  mix:w1*spec1+w2*spec2          weighted mixture (grid, explore probes)\n");
    out.push_str("  grid:file=PATH                 two-column CSV x,logf (header required)\n");
    out
}
