//! Every inequality evaluated as a signed slack (LHS - RHS oriented so
//! slack >= 0 means the inequality holds), with equality-case detection on
//! Gaussian input and an error gate separating numerical noise from
//! genuine violation.

use serde::{Deserialize, Serialize};

use crate::density::{Density, Density1D, GridDensity};
use crate::error::{Error, Result};
use crate::flowcalc::n_derivatives;
use crate::functionals::{fisher, j_functional, Flow};
use crate::numerics::{golden_section_min, next_pow2, trapezoid};
use crate::Params;

/// The named checks, in stable report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckName {
    Epi,
    BlachmanStam,
    CostaChord,
    CostaConcavity,
    FisherChord,
    FisherConcavity,
    ThirdDerivative,
    IneMain,
    IneMLambda,
    Sharp2,
    IneK,
    IneW,
    DemP,
    Iso,
    IsoF,
    IsoK,
}

impl CheckName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CheckName::Epi => "epi",
            CheckName::BlachmanStam => "blachman_stam",
            CheckName::CostaChord => "costa_chord",
            CheckName::CostaConcavity => "costa_concavity",
            CheckName::FisherChord => "fisher_chord",
            CheckName::FisherConcavity => "fisher_concavity",
            CheckName::ThirdDerivative => "third_derivative",
            CheckName::IneMain => "ine_main",
            CheckName::IneMLambda => "ine_m_lambda",
            CheckName::Sharp2 => "sharp2",
            CheckName::IneK => "ineK",
            CheckName::IneW => "ine_w",
            CheckName::DemP => "dem_p",
            CheckName::Iso => "iso",
            CheckName::IsoF => "isoF",
            CheckName::IsoK => "isoK",
        }
    }

    pub fn parse(s: &str) -> Result<CheckName> {
        Self::all()
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown check `{s}`")))
    }

    pub fn all() -> &'static [CheckName] {
        &[
            CheckName::Epi,
            CheckName::BlachmanStam,
            CheckName::CostaChord,
            CheckName::CostaConcavity,
            CheckName::FisherChord,
            CheckName::FisherConcavity,
            CheckName::ThirdDerivative,
            CheckName::IneMain,
            CheckName::IneMLambda,
            CheckName::Sharp2,
            CheckName::IneK,
            CheckName::IneW,
            CheckName::DemP,
            CheckName::Iso,
            CheckName::IsoF,
            CheckName::IsoK,
        ]
    }

    /// Checks whose proof (and therefore whose pass/fail semantics) is
    /// restricted to log-concave input.
    pub fn requires_log_concave(&self) -> bool {
        matches!(
            self,
            CheckName::FisherChord
                | CheckName::FisherConcavity
                | CheckName::ThirdDerivative
                | CheckName::IneMain
                | CheckName::IneMLambda
                | CheckName::Sharp2
                | CheckName::IneK
                | CheckName::IneW
                | CheckName::IsoK
        )
    }

    /// Checks evaluated on a pair (f, g) rather than along a flow.
    pub fn is_pair_check(&self) -> bool {
        matches!(
            self,
            CheckName::Epi | CheckName::BlachmanStam | CheckName::Sharp2
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Holds,
    Equality,
    Violated,
    Inconclusive,
}

/// One evaluated inequality: the slack curve over the lattice, the worst
/// slack, the error gate and the verdict.
#[derive(Debug, Clone, Serialize)]
pub struct InequalityReport {
    pub name: CheckName,
    pub density_spec: String,
    pub t_lattice: Vec<f64>,
    pub slacks: Vec<f64>,
    pub min_slack: f64,
    pub argmin_t: f64,
    pub err_gate: f64,
    pub verdict: Verdict,
    /// True when the input is Gaussian (equality cases are asserted there).
    pub gaussian_input: bool,
    pub log_concave_required: bool,
    pub not_log_concave_input: bool,
    /// p = nJ/I^2 along the lattice, where the check computes it.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_series: Option<Vec<f64>>,
    /// Sign certificate 2p^2 - 3p + 1 along the lattice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_series: Option<Vec<f64>>,
    pub notes: Vec<String>,
}

fn verdict_for(min_slack: f64, err_gate: f64, gaussian: bool) -> Verdict {
    if min_slack < -3.0 * err_gate {
        Verdict::Violated
    } else if min_slack < -err_gate {
        Verdict::Inconclusive
    } else if gaussian && min_slack.abs() <= err_gate {
        Verdict::Equality
    } else {
        Verdict::Holds
    }
}

/// err_gate = 3 * (propagated Richardson error + quadrature m^-2 term).
fn gate(richardson: f64, scale: f64, m: usize) -> f64 {
    let mf = m as f64;
    3.0 * (richardson + scale.abs() / (mf * mf))
}

struct ReportBuilder {
    name: CheckName,
    spec: String,
    gaussian: bool,
    lattice: Vec<f64>,
    slacks: Vec<f64>,
    /// Per-point Richardson error and magnitude scale for the gate.
    errs: Vec<f64>,
    scales: Vec<f64>,
    p_series: Option<Vec<f64>>,
    certificate_series: Option<Vec<f64>>,
    notes: Vec<String>,
}

impl ReportBuilder {
    fn new(name: CheckName, d: &Density) -> ReportBuilder {
        ReportBuilder {
            name,
            spec: d.spec_string(),
            gaussian: d.is_gaussian(),
            lattice: Vec::new(),
            slacks: Vec::new(),
            errs: Vec::new(),
            scales: Vec::new(),
            p_series: None,
            certificate_series: None,
            notes: Vec::new(),
        }
    }

    fn pair(name: CheckName, f: &Density, g: &Density) -> ReportBuilder {
        let mut b = ReportBuilder::new(name, f);
        b.spec = format!("f={};g={}", f.spec_string(), g.spec_string());
        b.gaussian = f.is_gaussian() && g.is_gaussian();
        b
    }

    fn push(&mut self, t: f64, slack: f64, richardson: f64, scale: f64) {
        self.lattice.push(t);
        self.slacks.push(slack);
        self.errs.push(richardson);
        self.scales.push(scale);
    }

    fn finish(self, params: &Params, not_log_concave: bool) -> InequalityReport {
        let (mut min_slack, mut argmin, mut idx) = (f64::INFINITY, f64::NAN, 0);
        for (i, (&s, &t)) in self.slacks.iter().zip(&self.lattice).enumerate() {
            if s < min_slack {
                min_slack = s;
                argmin = t;
                idx = i;
            }
        }
        let err_gate = if self.slacks.is_empty() {
            0.0
        } else {
            gate(self.errs[idx], self.scales[idx], params.m)
        };
        let verdict = verdict_for(min_slack, err_gate, self.gaussian);
        InequalityReport {
            name: self.name,
            density_spec: self.spec,
            t_lattice: self.lattice,
            slacks: self.slacks,
            min_slack,
            argmin_t: argmin,
            err_gate,
            verdict,
            gaussian_input: self.gaussian,
            log_concave_required: self.name.requires_log_concave(),
            not_log_concave_input: not_log_concave,
            p_series: self.p_series,
            certificate_series: self.certificate_series,
            notes: self.notes,
        }
    }
}

/// Convolution of two densities of equal dimension, factor by factor:
/// discrete linear convolution on a common grid via zero-padded FFT.
pub fn convolve(f: &Density, g: &Density, params: &Params) -> Result<Density> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(f.dim(), g.dim()));
    }
    let factors = f
        .factors()
        .iter()
        .zip(g.factors())
        .map(|(a, b)| convolve_1d(a, b, params).map(Density1D::Grid))
        .collect::<Result<Vec<_>>>()?;
    Density::new(factors)
}

fn convolve_1d(a: &Density1D, b: &Density1D, params: &Params) -> Result<GridDensity> {
    use rustfft::{num_complex::Complex, FftPlanner};
    let ga = a.discretize(params.m, params.tail_eps)?;
    let gb = b.discretize(params.m, params.tail_eps)?;
    // Common step: the finer of the two grids, floored at 1/64 of the
    // coarser step. A near-point-mass factor must not drag the shared
    // lattice to millions of nodes; the floor still leaves the narrow
    // factor's whole support covered by the full node budget.
    let h = ga
        .step()
        .min(gb.step())
        .max(ga.step().max(gb.step()) / 64.0);
    let sample = |d: &Density1D, g: &GridDensity| -> Vec<f64> {
        let n = ((g.hi() - g.lo()) / h).round() as usize + 1;
        (0..n)
            .map(|i| {
                let x = g.lo() + i as f64 * h;
                match d {
                    Density1D::Analytic(fam) => fam.log_pdf(x).exp(),
                    Density1D::Grid(_) => g.log_pdf(x).exp(),
                }
            })
            .collect()
    };
    let mut fa = sample(a, &ga);
    let mut fb = sample(b, &gb);
    // Unit mass in the convolution's own (rectangle-sum) metric, so the
    // mass check below only reacts to unresolved kernels, not to the
    // O(h^2) boundary bias of kinked-support factors. The output is
    // normalized at the end either way.
    for f in [&mut fa, &mut fb] {
        let mass: f64 = f.iter().sum::<f64>() * h;
        for v in f.iter_mut() {
            *v /= mass;
        }
    }
    let n_out = fa.len() + fb.len() - 1;
    let p = next_pow2(n_out);
    let mut ba: Vec<Complex<f64>> = vec![Complex::new(0.0, 0.0); p];
    let mut bb = ba.clone();
    for (i, &v) in fa.iter().enumerate() {
        ba[i] = Complex::new(v, 0.0);
    }
    for (i, &v) in fb.iter().enumerate() {
        bb[i] = Complex::new(v, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(p);
    fft.process(&mut ba);
    fft.process(&mut bb);
    for (x, y) in ba.iter_mut().zip(&bb) {
        *x *= y * h;
    }
    planner.plan_fft_inverse(p).process(&mut ba);
    let scale = 1.0 / p as f64;
    let vals: Vec<f64> = ba[..n_out].iter().map(|c| c.re * scale).collect();
    let peak = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::DegenerateMass { mass: 0.0 });
    }
    // Pure-FFT path: below the roundoff floor the values are noise, so
    // clamp them out of the integrals (contributions there are O(1e-10)
    // of any functional).
    let floor = 1e-10 * peak;
    let logf: Vec<f64> = vals
        .iter()
        .map(|&v| if v > floor { v.ln() } else { f64::NEG_INFINITY })
        .collect();
    let mass = trapezoid(&vals.iter().map(|&v| v.max(0.0)).collect::<Vec<_>>(), h);
    if (mass - 1.0).abs() > 1e-6 {
        return Err(Error::GridTooCoarse(format!(
            "pair convolution mass {mass} drifted from 1"
        )));
    }
    // The output nodes sit at lo_f + lo_g + k*h; the resampled spans need
    // not divide h exactly, so the window comes from the node lattice.
    let lo_out = ga.lo() + gb.lo();
    let hi_out = lo_out + (n_out - 1) as f64 * h;
    GridDensity::new(lo_out, hi_out, logf, false)
}

/// Entropy power inequality N(X+Y) >= N(X) + N(Y).
pub fn check_epi(f: &Density, g: &Density, params: &Params) -> Result<InequalityReport> {
    let fg = convolve(f, g, params)?;
    let n_fg = crate::functionals::entropy_power(&fg, params)?;
    let n_f = crate::functionals::entropy_power(f, params)?;
    let n_g = crate::functionals::entropy_power(g, params)?;
    let mut b = ReportBuilder::pair(CheckName::Epi, f, g);
    b.push(0.0, n_fg - n_f - n_g, 0.0, n_fg + n_f + n_g);
    let nlc = !f.is_log_concave(1e-6).verdict || !g.is_log_concave(1e-6).verdict;
    Ok(b.finish(params, nlc))
}

/// Blachman-Stam in reciprocal form: n/I(X+Y) >= n/I(X) + n/I(Y).
pub fn check_blachman_stam(f: &Density, g: &Density, params: &Params) -> Result<InequalityReport> {
    let fg = convolve(f, g, params)?;
    let n = f.dim() as f64;
    let it_fg = n / fisher(&fg, params)?;
    let it_f = n / fisher(f, params)?;
    let it_g = n / fisher(g, params)?;
    let mut b = ReportBuilder::pair(CheckName::BlachmanStam, f, g);
    b.push(0.0, it_fg - it_f - it_g, 0.0, it_fg + it_f + it_g);
    let nlc = !f.is_log_concave(1e-6).verdict || !g.is_log_concave(1e-6).verdict;
    Ok(b.finish(params, nlc))
}

/// Blachman-Stam type inequality for 1/sqrt(J).
pub fn check_sharp2(f: &Density, g: &Density, params: &Params) -> Result<InequalityReport> {
    let fg = convolve(f, g, params)?;
    let j_fg = j_functional(&fg, params)?;
    let j_f = j_functional(f, params)?;
    let j_g = j_functional(g, params)?;
    let (r_fg, r_f, r_g) = (j_fg.powf(-0.5), j_f.powf(-0.5), j_g.powf(-0.5));
    let mut b = ReportBuilder::pair(CheckName::Sharp2, f, g);
    b.push(0.0, r_fg - r_f - r_g, 0.0, r_fg + r_f + r_g);
    let nlc = !f.is_log_concave(1e-6).verdict || !g.is_log_concave(1e-6).verdict;
    Ok(b.finish(params, nlc))
}

/// Record plus flow context shared by the lattice checks.
struct LatticeEval {
    t: f64,
    rec: crate::functionals::FunctionalRecord,
}

fn lattice_records(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
    need_k: bool,
) -> Result<Vec<LatticeEval>> {
    let flow = Flow::new(f, *params);
    lattice
        .iter()
        .map(|&t| {
            let rec = flow.record(t, h)?;
            if need_k && rec.k.is_none() {
                return Err(Error::StepTooLarge { t, h });
            }
            Ok(LatticeEval { t, rec })
        })
        .collect()
}

/// Costa's EPI: the chord bound (endpoint t_min standing in for 0 on
/// non-smooth bases) and concavity of N(X+Z_t) via the closed-form second
/// derivative.
pub fn check_costa(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
) -> Result<(InequalityReport, InequalityReport)> {
    let flow = Flow::new(f, *params);
    let t0 = if f.kinked() { params.t_min } else { 0.0 };
    let n_t0 = flow.entropy_power_at(t0, t0)?;
    let n_1 = flow.entropy_power_at(1.0, 1.0)?;

    let mut chord = ReportBuilder::new(CheckName::CostaChord, f);
    if t0 > 0.0 {
        chord
            .notes
            .push(format!("chord endpoint t=0 replaced by t_min={t0} (non-smooth base)"));
    }
    for &t in lattice.iter().filter(|&&t| t >= t0 && t <= 1.0) {
        let lam = (t - t0) / (1.0 - t0);
        let n_t = flow.entropy_power_at(t, t)?;
        let rhs = (1.0 - lam) * n_t0 + lam * n_1;
        chord.push(t, n_t - rhs, 0.0, n_t + rhs);
    }

    let mut conc = ReportBuilder::new(CheckName::CostaConcavity, f);
    for ev in lattice_records(f, lattice, h, params, false)? {
        let slack = -ev.rec.n_d2();
        let n = ev.rec.n as f64;
        let scale = ev.rec.entropy_power / n
            * (ev.rec.fisher * ev.rec.fisher / n + ev.rec.j);
        conc.push(ev.t, slack, 0.0, scale);
    }
    let nlc = !f.is_log_concave(1e-6).verdict;
    let mut conc = conc.finish(params, nlc);
    cross_validate_second_derivative(f, h, params, &mut conc)?;
    Ok((chord.finish(params, nlc), conc))
}

/// Guard against false violation reports: when a closed-form derivative
/// check lands below the gate, difference the curve directly and demand the
/// two paths agree within the claimed slack before calling it violated.
fn cross_validate_second_derivative(
    f: &Density,
    h: f64,
    params: &Params,
    report: &mut InequalityReport,
) -> Result<()> {
    if report.verdict != Verdict::Violated {
        return Ok(());
    }
    let t = report.argmin_t;
    let pairs = n_derivatives(f, t, h, params)?;
    let closed = -pairs[1].closed;
    let direct = -pairs[1].direct;
    if (closed - direct).abs() > report.min_slack.abs() {
        report.verdict = Verdict::Inconclusive;
        report.notes.push(format!(
            "violation not confirmed: closed-form d2 {closed:e} vs differenced {direct:e} disagree beyond the slack"
        ));
    }
    Ok(())
}

/// Concavity of the reciprocal of Fisher information: the chord bound on
/// n/I(X+Z_t) and the closed-form second derivative (which rearranges to
/// (n/I^2)(K - 2J^2/I) >= 0).
pub fn check_fisher_concavity(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
) -> Result<(InequalityReport, InequalityReport)> {
    let flow = Flow::new(f, *params);
    let t0 = if f.kinked() { params.t_min } else { 0.0 };
    let it_t0 = flow.fisher_reciprocal_at(t0, t0)?;
    let it_1 = flow.fisher_reciprocal_at(1.0, 1.0)?;
    let nlc = !f.is_log_concave(1e-6).verdict;

    let mut chord = ReportBuilder::new(CheckName::FisherChord, f);
    if nlc {
        chord.notes.push("NotLogConcave input".into());
    }
    for &t in lattice.iter().filter(|&&t| t >= t0 && t <= 1.0) {
        let lam = (t - t0) / (1.0 - t0);
        let it_t = flow.fisher_reciprocal_at(t, t)?;
        let rhs = (1.0 - lam) * it_t0 + lam * it_1;
        chord.push(t, it_t - rhs, 0.0, it_t + rhs);
    }

    let mut conc = ReportBuilder::new(CheckName::FisherConcavity, f);
    if nlc {
        conc.notes.push("NotLogConcave input".into());
    }
    let mut p_series = Vec::new();
    for ev in lattice_records(f, lattice, h, params, true)? {
        let slack = -ev.rec.itilde_d2().expect("K present by construction");
        let n = ev.rec.n as f64;
        let i2 = ev.rec.fisher * ev.rec.fisher;
        let richardson = n / i2 * ev.rec.k_err.unwrap_or(0.0);
        let scale = n / i2
            * (ev.rec.k.unwrap().abs() + 2.0 * ev.rec.j * ev.rec.j / ev.rec.fisher);
        p_series.push(ev.rec.p());
        conc.push(ev.t, slack, richardson, scale);
    }
    conc.p_series = Some(p_series);
    let mut conc = conc.finish(params, nlc);
    // Verdict soundness: confirm any violation on the direct path.
    if conc.verdict == Verdict::Violated {
        let t = conc.argmin_t;
        let pairs = crate::flowcalc::itilde_derivatives(f, t, h, params)?;
        if (pairs[1].closed - pairs[1].direct).abs() > conc.min_slack.abs() {
            conc.verdict = Verdict::Inconclusive;
            conc.notes.push(format!(
                "violation not confirmed: closed-form d2 {:e} vs differenced {:e} disagree beyond the slack",
                pairs[1].closed, pairs[1].direct
            ));
        }
    }
    Ok((chord.finish(params, nlc), conc))
}

/// Nonnegative third derivative of the entropy power, with the sign
/// certificate 2p^2 - 3p + 1 (p = nJ/I^2) emitted per lattice point.
pub fn check_third_derivative(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
) -> Result<InequalityReport> {
    let nlc = !f.is_log_concave(1e-6).verdict;
    let mut b = ReportBuilder::new(CheckName::ThirdDerivative, f);
    if nlc {
        b.notes.push("NotLogConcave input".into());
    }
    let mut p_series = Vec::new();
    let mut cert_series = Vec::new();
    for ev in lattice_records(f, lattice, h, params, true)? {
        let slack = ev.rec.n_d3().expect("K present by construction");
        let n = ev.rec.n as f64;
        let richardson = ev.rec.entropy_power / n * ev.rec.k_err.unwrap_or(0.0);
        let scale = ev.rec.entropy_power / n
            * (ev.rec.k.unwrap().abs()
                + ev.rec.fisher.powi(3) / (n * n)
                + 3.0 * ev.rec.fisher * ev.rec.j / n);
        p_series.push(ev.rec.p());
        cert_series.push(ev.rec.certificate());
        b.push(ev.t, slack, richardson, scale);
    }
    b.p_series = Some(p_series);
    b.certificate_series = Some(cert_series);
    let mut report = b.finish(params, nlc);
    if report.verdict == Verdict::Violated {
        let t = report.argmin_t;
        let pairs = n_derivatives(f, t, h, params)?;
        if (pairs[2].closed - pairs[2].direct).abs() > report.min_slack.abs() {
            report.verdict = Verdict::Inconclusive;
            report.notes.push(format!(
                "violation not confirmed: closed-form d3 {:e} vs differenced {:e} disagree beyond the slack",
                pairs[2].closed, pairs[2].direct
            ));
        }
    }
    Ok(report)
}

/// K >= 2J^2/I (the engine of the concavity theorem) and the weaker
/// K >= 2 J^{3/2} / sqrt(n), plus the dominance of the strong bound.
pub fn check_ine_k(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
) -> Result<(InequalityReport, InequalityReport)> {
    let nlc = !f.is_log_concave(1e-6).verdict;
    let mut strong = ReportBuilder::new(CheckName::IneK, f);
    let mut weak = ReportBuilder::new(CheckName::IneW, f);
    let mut p_series = Vec::new();
    let mut dominance_ok = true;
    for ev in lattice_records(f, lattice, h, params, true)? {
        let k = ev.rec.k.unwrap();
        let k_err = ev.rec.k_err.unwrap_or(0.0);
        let n = ev.rec.n as f64;
        let rhs_strong = 2.0 * ev.rec.j * ev.rec.j / ev.rec.fisher;
        let rhs_weak = 2.0 * ev.rec.j.powf(1.5) / n.sqrt();
        strong.push(ev.t, k - rhs_strong, k_err, k.abs() + rhs_strong);
        weak.push(ev.t, k - rhs_weak, k_err, k.abs() + rhs_weak);
        let dom_gate = gate(0.0, rhs_strong + rhs_weak, params.m);
        if rhs_strong < rhs_weak - dom_gate {
            dominance_ok = false;
        }
        p_series.push(ev.rec.p());
    }
    strong.p_series = Some(p_series);
    if !dominance_ok {
        strong
            .notes
            .push("dominance 2J^2/I >= 2J^(3/2)/sqrt(n) failed beyond gate".into());
    }
    Ok((strong.finish(params, nlc), weak.finish(params, nlc)))
}

/// p - 1 = nJ/I^2 - 1 >= 0 along the lattice (no K needed).
pub fn check_dem(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
) -> Result<InequalityReport> {
    let mut b = ReportBuilder::new(CheckName::DemP, f);
    for ev in lattice_records(f, lattice, h, params, false)? {
        b.push(ev.t, ev.rec.p() - 1.0, 0.0, ev.rec.p() + 1.0);
    }
    let nlc = !f.is_log_concave(1e-6).verdict;
    Ok(b.finish(params, nlc))
}

/// The isoperimetric family: N I / n >= 1, n J / I^2 >= 1, K >= 2J^2/I,
/// with the monotonicity diagnostic on nJ/I^2 recorded on the isoF report.
pub fn check_iso_family(
    f: &Density,
    lattice: &[f64],
    h: f64,
    params: &Params,
) -> Result<(InequalityReport, InequalityReport, InequalityReport)> {
    let nlc = !f.is_log_concave(1e-6).verdict;
    let mut iso = ReportBuilder::new(CheckName::Iso, f);
    let mut iso_f = ReportBuilder::new(CheckName::IsoF, f);
    let mut iso_k = ReportBuilder::new(CheckName::IsoK, f);
    let mut p_series = Vec::new();
    for ev in lattice_records(f, lattice, h, params, true)? {
        let n = ev.rec.n as f64;
        let ni = ev.rec.entropy_power * ev.rec.fisher / n;
        iso.push(ev.t, ni - 1.0, 0.0, ni + 1.0);
        let p = ev.rec.p();
        p_series.push(p);
        iso_f.push(ev.t, p - 1.0, 0.0, p + 1.0);
        let k = ev.rec.k.unwrap();
        let rhs = 2.0 * ev.rec.j * ev.rec.j / ev.rec.fisher;
        iso_k.push(ev.t, k - rhs, ev.rec.k_err.unwrap_or(0.0), k.abs() + rhs);
    }
    // Monotone non-increasing diagnostic for p(t) on log-concave input.
    let mono_gate = gate(0.0, p_series.iter().copied().fold(0.0, f64::max), params.m);
    let mono = p_series.windows(2).all(|w| w[1] <= w[0] + mono_gate);
    iso_f.p_series = Some(p_series);
    iso_f.notes.push(format!(
        "nJ/I^2 non-increasing along t: {}",
        if mono { "yes" } else { "no" }
    ));
    Ok((
        iso.finish(params, nlc),
        iso_f.finish(params, nlc),
        iso_k.finish(params, nlc),
    ))
}

/// Lambda(alpha) = a^4 J(X) + (1-a)^4 n/t^2 + 2 a^2 (1-a)^2 I(X)/t,
/// the right-hand side of the convolution bound with Y = Z_t.
pub fn lambda_from(j_x: f64, i_x: f64, n: usize, t: f64, alpha: f64) -> f64 {
    let a = alpha;
    let b = 1.0 - alpha;
    a.powi(4) * j_x + b.powi(4) * n as f64 / (t * t) + 2.0 * a * a * b * b * i_x / t
}

/// Lambda evaluated for a density (J(X), I(X) at t = 0; smooth input).
pub fn lambda_of_alpha(f: &Density, t: f64, alpha: f64, params: &Params) -> Result<f64> {
    let j_x = j_functional(f, params)?;
    let i_x = fisher(f, params)?;
    Ok(lambda_from(j_x, i_x, f.dim(), t, alpha))
}

/// J(X+Z_t) <= Lambda(alpha) over an alpha grid at each lattice time, and
/// convexity of Lambda on [0,1] via second differences.
pub fn check_ine_m(
    f: &Density,
    lattice: &[f64],
    alpha_points: usize,
    params: &Params,
) -> Result<(InequalityReport, InequalityReport)> {
    let j_x = j_functional(f, params)?;
    let i_x = fisher(f, params)?;
    let n = f.dim();
    let flow = Flow::new(f, *params);
    let nlc = !f.is_log_concave(1e-6).verdict;
    let mut main = ReportBuilder::new(CheckName::IneMain, f);
    let mut convexity = ReportBuilder::new(CheckName::IneMLambda, f);
    if nlc {
        main.notes.push("NotLogConcave input".into());
    }
    for &t in lattice {
        let j_t = flow.j_at(t, t)?;
        let da = 1.0 / (alpha_points - 1) as f64;
        let lam: Vec<f64> = (0..alpha_points)
            .map(|i| lambda_from(j_x, i_x, n, t, i as f64 * da))
            .collect();
        let lam_min = lam.iter().copied().fold(f64::INFINITY, f64::min);
        let min_slack = lam_min - j_t;
        // Gate on the magnitudes near the minimizer, not on the huge
        // (1-a)^4 n/t^2 endpoint.
        main.push(t, min_slack, 0.0, j_t + lam_min);
        // Raw second differences of Lambda, normalized by Lambda(1/2).
        let mid = lambda_from(j_x, i_x, n, t, 0.5);
        let worst = lam
            .windows(3)
            .map(|w| w[2] - 2.0 * w[1] + w[0])
            .fold(f64::INFINITY, f64::min);
        convexity.push(t, worst / mid, 0.0, 0.0);
    }
    let main = main.finish(params, nlc);
    let mut convexity = convexity.finish(params, nlc);
    // Convexity is checked against the pinned normalized gate 1e-8.
    convexity.err_gate = 1e-8;
    convexity.verdict = verdict_for(convexity.min_slack, convexity.err_gate, convexity.gaussian_input);
    Ok((main, convexity))
}

/// Minimizer of Lambda on [0,1] by golden-section search, and the gap to
/// its first-order small-t expansion 1 - (J(X)/I(X)) t.
pub fn optimal_alpha(f: &Density, t: f64, params: &Params) -> Result<(f64, f64)> {
    let j_x = j_functional(f, params)?;
    let i_x = fisher(f, params)?;
    let n = f.dim();
    let (alpha_bar, _) = golden_section_min(
        |a| lambda_from(j_x, i_x, n, t, a),
        0.0,
        1.0,
        1e-10,
    );
    let expansion = 1.0 - j_x / i_x * t;
    Ok((alpha_bar, (alpha_bar - expansion).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{Density1D, Family};

    fn p() -> Params {
        Params::default()
    }

    fn gaussian(sigma2: f64) -> Density {
        Density::scalar(Density1D::Analytic(Family::Gaussian { mu: 0.0, sigma2 }))
    }

    fn scalar(f: Family) -> Density {
        Density::scalar(Density1D::Analytic(f))
    }

    /// Evolve a non-smooth base before pair checks that need derivatives.
    fn smoothed(f: Family, t: f64) -> Density {
        let g = crate::heatflow::evolve(&Density1D::Analytic(f), t, &p()).unwrap();
        Density::scalar(Density1D::Grid(g))
    }

    #[test]
    fn epi_gaussian_pairs_are_equality() {
        let r = check_epi(&gaussian(1.0), &gaussian(1.0), &p()).unwrap();
        assert!(r.min_slack.abs() < 1e-6, "slack {:e}", r.min_slack);
        assert_eq!(r.verdict, Verdict::Equality);
        let r = check_epi(&gaussian(1.0), &gaussian(2.0), &p()).unwrap();
        assert!(r.min_slack.abs() < 1e-6, "slack {:e}", r.min_slack);
        assert_eq!(r.verdict, Verdict::Equality);
    }

    #[test]
    fn epi_strict_for_logistic_pair() {
        let d = scalar(Family::Logistic { scale: 1.0 });
        let r = check_epi(&d, &d, &p()).unwrap();
        assert!(r.min_slack > r.err_gate, "slack {:e}", r.min_slack);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn blachman_stam_gaussian_additive() {
        let r = check_blachman_stam(&gaussian(1.0), &gaussian(2.0), &p()).unwrap();
        assert!(r.min_slack.abs() < 1e-6, "slack {:e}", r.min_slack);
        assert_eq!(r.verdict, Verdict::Equality);
    }

    #[test]
    fn blachman_stam_positive_for_smoothed_gumbel() {
        let d = smoothed(Family::Gumbel { scale: 1.0 }, 0.05);
        let r = check_blachman_stam(&d, &d, &p()).unwrap();
        assert!(r.min_slack > 0.0, "slack {:e}", r.min_slack);
    }

    #[test]
    fn blachman_stam_degenerate_limit() {
        // Near-point-mass surrogate: I_tilde(f) ~ 0, so the slack closes.
        let r = check_blachman_stam(&gaussian(1e-4), &gaussian(1.0), &p()).unwrap();
        assert!(r.min_slack.abs() < 1e-3, "slack {:e}", r.min_slack);
    }

    #[test]
    fn sharp2_gaussians_exact() {
        // 1/sqrt(J(Z_v)) = v, additive under convolution: 3 - 1 - 2 = 0.
        let r = check_sharp2(&gaussian(1.0), &gaussian(2.0), &p()).unwrap();
        assert!(r.min_slack.abs() <= r.err_gate, "slack {:e}", r.min_slack);
        assert_eq!(r.verdict, Verdict::Equality);
    }

    #[test]
    fn sharp2_positive_for_smoothed_gamma_pair() {
        let d = smoothed(Family::Gamma { shape: 3.0, scale: 1.0 }, 0.05);
        let r = check_sharp2(&d, &d, &p()).unwrap();
        assert!(r.min_slack >= -r.err_gate, "slack {:e}", r.min_slack);
    }

    #[test]
    fn costa_gaussian_equality() {
        let lattice: Vec<f64> = (1..=6).map(|i| 0.15 * i as f64).collect();
        let (chord, conc) = check_costa(&gaussian(1.0), &lattice, 1e-3, &p()).unwrap();
        assert!(chord.min_slack.abs() < 1e-6, "chord {:e}", chord.min_slack);
        assert!(conc.min_slack.abs() < conc.err_gate, "conc {:e}", conc.min_slack);
        assert_eq!(conc.verdict, Verdict::Equality);
    }

    #[test]
    fn costa_holds_for_gamma() {
        let lattice = [0.2, 0.5, 0.8];
        let (chord, conc) =
            check_costa(&scalar(Family::Gamma { shape: 3.0, scale: 1.0 }), &lattice, 1e-3, &p())
                .unwrap();
        assert!(chord.min_slack >= -chord.err_gate, "chord {:e}", chord.min_slack);
        assert!(conc.min_slack >= -conc.err_gate, "conc {:e}", conc.min_slack);
    }

    #[test]
    fn costa_holds_for_bimodal_mixture() {
        // Costa is not restricted to log-concave densities.
        let params = p();
        let mix = crate::density::parse::parse_density(
            "mix:0.5*gaussian:mu=-3,sigma2=1+0.5*gaussian:mu=3,sigma2=1",
            &params,
        )
        .unwrap();
        let lattice = [0.2, 0.5, 1.0];
        let (_, conc) = check_costa(&mix, &lattice, 1e-3, &params).unwrap();
        assert!(conc.min_slack >= -conc.err_gate, "conc {:e}", conc.min_slack);
        assert!(conc.not_log_concave_input);
    }

    #[test]
    fn fisher_concavity_gaussian_equality() {
        let lattice = [0.2, 0.5, 1.0];
        let (chord, conc) =
            check_fisher_concavity(&gaussian(1.0), &lattice, 1e-3, &p()).unwrap();
        assert!(chord.min_slack.abs() < 1e-6);
        assert_eq!(conc.verdict, Verdict::Equality, "min slack {:e} gate {:e}", conc.min_slack, conc.err_gate);
    }

    #[test]
    fn fisher_concavity_beta_smoothed() {
        let d = smoothed(Family::Beta { a: 2.0, b: 2.0 }, 0.05);
        let lattice = [0.2, 0.5];
        let (_, conc) = check_fisher_concavity(&d, &lattice, 1e-3, &p()).unwrap();
        assert!(
            conc.min_slack >= -conc.err_gate,
            "conc slack {:e} gate {:e}",
            conc.min_slack,
            conc.err_gate
        );
    }

    #[test]
    fn third_derivative_gaussian_equality_and_certificate() {
        let lattice = [0.3, 0.7];
        let r = check_third_derivative(&gaussian(1.0), &lattice, 1e-3, &p()).unwrap();
        assert_eq!(r.verdict, Verdict::Equality);
        let ps = r.p_series.as_ref().unwrap();
        let cs = r.certificate_series.as_ref().unwrap();
        for (&p_val, &c) in ps.iter().zip(cs) {
            assert!((p_val - 1.0).abs() < 1e-6);
            assert!(c.abs() < 1e-5);
        }
    }

    #[test]
    fn third_derivative_weibull_nonnegative() {
        let lattice = [0.2, 0.5, 1.0];
        let r = check_third_derivative(
            &scalar(Family::Weibull { shape: 2.0, scale: 1.0 }),
            &lattice,
            1e-3,
            &p(),
        )
        .unwrap();
        assert!(r.min_slack >= -r.err_gate, "slack {:e}", r.min_slack);
        for &c in r.certificate_series.as_ref().unwrap() {
            assert!(c >= -1e-6, "certificate {c:e}");
        }
    }

    #[test]
    fn certificate_polynomial_arithmetic() {
        // p = 2 by hand: 2*4 - 6 + 1 = 3.
        let c = 2.0 * 4.0 - 3.0 * 2.0 + 1.0;
        assert_eq!(c, 3.0);
    }

    #[test]
    fn ine_k_gaussian_equality_and_dominance() {
        let lattice = [0.3, 0.6];
        let (strong, weak) = check_ine_k(&gaussian(1.0), &lattice, 1e-3, &p()).unwrap();
        assert_eq!(strong.verdict, Verdict::Equality, "strong slack {:e}", strong.min_slack);
        // With n = 1 the weak bound coincides at the Gaussian too.
        assert!(weak.min_slack >= -weak.err_gate);
        assert!(strong.notes.is_empty(), "dominance must hold: {:?}", strong.notes);
    }

    #[test]
    fn ine_k_gamma_holds() {
        let lattice = [0.2, 0.5, 1.0];
        let (strong, _) = check_ine_k(
            &scalar(Family::Gamma { shape: 2.0, scale: 1.0 }),
            &lattice,
            1e-3,
            &p(),
        )
        .unwrap();
        assert!(strong.min_slack >= -strong.err_gate, "slack {:e}", strong.min_slack);
    }

    #[test]
    fn lambda_endpoints() {
        // alpha = 0: J(Z_t) = n/t^2; alpha = 1: J(X).
        let t = 0.7;
        assert_eq!(lambda_from(3.0, 2.0, 1, t, 0.0), 1.0 / (t * t));
        assert_eq!(lambda_from(3.0, 2.0, 1, t, 1.0), 3.0);
    }

    #[test]
    fn lambda_gaussian_midpoint() {
        // J = I = n = 1, t = 1, alpha = 1/2: 1/16 + 1/16 + 2/16 = 1/4,
        // which equals J(X+Z_1) (the Gaussian optimum).
        let v = lambda_from(1.0, 1.0, 1, 1.0, 0.5);
        assert!((v - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ine_m_gaussian_touches_equality() {
        let (main, convexity) =
            check_ine_m(&gaussian(1.0), &[1.0], 101, &p()).unwrap();
        assert!(main.min_slack.abs() < 1e-4, "min slack {:e}", main.min_slack);
        assert!(main.min_slack >= -main.err_gate);
        assert!(convexity.min_slack >= -1e-8, "convexity {:e}", convexity.min_slack);
    }

    #[test]
    fn ine_m_holds_for_smoothed_logistic() {
        let d = smoothed(Family::Logistic { scale: 1.0 }, 0.05);
        let (main, convexity) = check_ine_m(&d, &[0.5], 101, &p()).unwrap();
        assert!(main.min_slack >= -main.err_gate, "slack {:e}", main.min_slack);
        assert!(convexity.min_slack >= -1e-8);
    }

    #[test]
    fn optimal_alpha_gaussian() {
        // For X = Z_1, Lambda is minimized at alpha = 1/(1+t).
        let (a, _) = optimal_alpha(&gaussian(1.0), 0.5, &p()).unwrap();
        assert!((a - 1.0 / 1.5).abs() < 1e-6, "alpha {a}");
        assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn optimal_alpha_expansion_gap_quadratic() {
        // gap(t) ~ c t^2: halving t divides the gap by ~4.
        let d = gaussian(1.0);
        let (_, g1) = optimal_alpha(&d, 1e-2, &p()).unwrap();
        let (_, g2) = optimal_alpha(&d, 5e-3, &p()).unwrap();
        let ratio = g1 / g2;
        assert!((2.5..=5.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn iso_family_gaussian_equalities() {
        let lattice = [0.3, 0.8];
        let (iso, iso_f, iso_k) =
            check_iso_family(&gaussian(1.0), &lattice, 1e-3, &p()).unwrap();
        assert_eq!(iso.verdict, Verdict::Equality, "iso {:e}", iso.min_slack);
        assert_eq!(iso_f.verdict, Verdict::Equality, "isoF {:e}", iso_f.min_slack);
        assert_eq!(iso_k.verdict, Verdict::Equality, "isoK {:e}", iso_k.min_slack);
    }

    #[test]
    fn iso_family_logistic_holds_and_monotone() {
        let lattice: Vec<f64> = (1..=10).map(|i| 0.1 * i as f64).collect();
        let (iso, iso_f, iso_k) = check_iso_family(
            &scalar(Family::Logistic { scale: 1.0 }),
            &lattice,
            1e-3,
            &p(),
        )
        .unwrap();
        assert!(iso.min_slack >= -iso.err_gate);
        assert!(iso_f.min_slack >= -iso_f.err_gate);
        assert!(iso_k.min_slack >= -iso_k.err_gate);
        assert!(iso_f.notes.iter().any(|n| n.contains("non-increasing along t: yes")));
    }

    #[test]
    fn chain_consistency_ine_k_vs_fisher_concavity() {
        // The two slacks are the same inequality in two algebraic forms:
        // fisher_concavity slack = (n/I^2) * ineK slack.
        let lattice = [0.4];
        let d = scalar(Family::Logistic { scale: 1.0 });
        let (_, conc) = check_fisher_concavity(&d, &lattice, 1e-3, &p()).unwrap();
        let (strong, _) = check_ine_k(&d, &lattice, 1e-3, &p()).unwrap();
        let rec = Flow::new(&d, p()).record(0.4, 1e-3).unwrap();
        let factor = rec.n as f64 / (rec.fisher * rec.fisher);
        let lhs = conc.slacks[0];
        let rhs = factor * strong.slacks[0];
        assert!(
            (lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()).max(1e-12),
            "{lhs:e} vs {rhs:e}"
        );
    }

    #[test]
    fn verdict_mapping() {
        assert_eq!(verdict_for(0.5, 0.01, false), Verdict::Holds);
        assert_eq!(verdict_for(0.005, 0.01, true), Verdict::Equality);
        assert_eq!(verdict_for(0.005, 0.01, false), Verdict::Holds);
        assert_eq!(verdict_for(-0.02, 0.01, false), Verdict::Inconclusive);
        assert_eq!(verdict_for(-0.05, 0.01, false), Verdict::Violated);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = gaussian(1.0);
        let g = Density::new(vec![
            Density1D::Analytic(Family::Gaussian { mu: 0.0, sigma2: 1.0 }),
            Density1D::Analytic(Family::Gaussian { mu: 0.0, sigma2: 1.0 }),
        ])
        .unwrap();
        assert!(matches!(
            check_epi(&f, &g, &p()),
            Err(Error::DimensionMismatch(1, 2))
        ));
    }
}
