//! Repeated-trial sweeps, error aggregation, slope fits and CSV/SVG output.
//!
//! Each trial draws from its own stream addressed by
//! `(seed, series, shots, a, M, repetition)`, so a sweep gives identical rows
//! whatever the worker count or execution order.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::amplified_model::{make_schedule, sample_counts, Amplitude, ScheduleKind};
use crate::conventional::{conventional_error_with, QueryConvention};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::mle::{ml_estimate, MLConfig};
use crate::montecarlo::{
    ancilla_probabilities, estimate_from_probabilities, exact_sum, IntegralProblem,
};
use crate::rng::derive_seed;
use crate::statistics::{fit_error_exponent, BoundReport};

pub const CSV_HEADER: &str =
    "kind,a_target,M,n_queries,rmse,bias,percentile_error,crb,classical_bound,gamma_fit,delta_fit";

/// Default fit window on `N_q`.
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e3, 1e5);

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub a_targets: Vec<f64>,
    pub kind: ScheduleKind,
    /// Values of `M` (schedule length minus one), strictly increasing.
    pub m_values: Vec<u32>,
    pub shots: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub percentile: f64,
    pub fit_window: (f64, f64),
    pub ml: MLConfig,
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            a_targets: vec![1.0 / 48.0],
            kind: ScheduleKind::Eis,
            m_values: (0..=10).collect(),
            shots: 100,
            repetitions: 1000,
            seed: 0,
            percentile: 81.0,
            fit_window: DEFAULT_FIT_WINDOW,
            ml: MLConfig::default(),
            execution: Execution::default(),
        }
    }
}

fn check_common(repetitions: usize, percentile: f64, m_values: &[u32]) -> Result<()> {
    if repetitions == 0 {
        return Err(Error::usage("repetitions must be at least 1"));
    }
    if !(percentile > 0.0 && percentile < 100.0) {
        return Err(Error::usage(format!(
            "percentile {percentile} outside (0, 100)"
        )));
    }
    if m_values.is_empty() {
        return Err(Error::usage("no M values to sweep"));
    }
    if m_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::usage("M values must be strictly increasing"));
    }
    Ok(())
}

fn check_target(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!("target a = {a} outside (0, 1)")));
    }
    Ok(())
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        check_common(self.repetitions, self.percentile, &self.m_values)?;
        if self.a_targets.is_empty() {
            return Err(Error::usage("no target amplitudes"));
        }
        self.a_targets.iter().try_for_each(|&a| check_target(a))?;
        if self.shots == 0 {
            return Err(Error::usage("shots must be positive"));
        }
        if self.kind == ScheduleKind::Custom {
            return Err(Error::usage("sweeps need a generated schedule kind"));
        }
        self.ml.validate()
    }
}

/// One row of an error curve. Statistics that do not apply to a series are
/// `None` and written as empty CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub kind: String,
    pub a_target: f64,
    pub m: u32,
    pub n_queries: u64,
    pub rmse: Option<f64>,
    pub bias: Option<f64>,
    pub percentile_error: f64,
    pub crb: Option<f64>,
    pub classical_bound: f64,
    pub gamma_fit: Option<f64>,
    pub delta_fit: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorCurve {
    pub rows: Vec<ErrorRow>,
}

impl ErrorCurve {
    /// Rows of one series, in sweep order.
    pub fn series<'a>(&'a self, kind: &'a str, a: f64) -> impl Iterator<Item = &'a ErrorRow> + 'a {
        self.rows
            .iter()
            .filter(move |r| r.kind == kind && r.a_target == a)
    }

    /// Distinct `(kind, a)` series in first-appearance order.
    pub fn series_keys(&self) -> Vec<(String, f64)> {
        let mut keys: Vec<(String, f64)> = Vec::new();
        for r in &self.rows {
            if !keys.iter().any(|(k, a)| *k == r.kind && *a == r.a_target) {
                keys.push((r.kind.clone(), r.a_target));
            }
        }
        keys
    }

    pub fn targets(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.a_target) {
                out.push(r.a_target);
            }
        }
        out
    }

    pub fn extend(&mut self, other: ErrorCurve) {
        self.rows.extend(other.rows);
    }

    /// Attach a slope fit of `metric` against `N_q` to every row of each series.
    fn fit_series<F>(&mut self, window: (f64, f64), metric: F)
    where
        F: Fn(&ErrorRow) -> Option<f64>,
    {
        for (kind, a) in self.series_keys() {
            let pts: Vec<(f64, f64)> = self
                .series(&kind, a)
                .filter_map(|r| metric(r).map(|e| (r.n_queries as f64, e)))
                .collect();
            let fit = fit_error_exponent(&pts, window).ok();
            for r in self
                .rows
                .iter_mut()
                .filter(|r| r.kind == kind && r.a_target == a)
            {
                r.gamma_fit = fit.map(|f| f.gamma);
                r.delta_fit = fit.map(|f| f.delta);
            }
        }
    }
}

/// Nearest-rank percentile: the `ceil(p/100 * n)`-th smallest value.
pub fn nearest_rank_percentile(values: &[f64], percentile: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::usage("percentile of an empty sample"));
    }
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::usage(format!(
            "percentile {percentile} outside (0, 100]"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((percentile / 100.0) * sorted.len() as f64).ceil() as usize;
    Ok(sorted[rank.clamp(1, sorted.len()) - 1])
}

/// Error statistics of `a_hat - a` over repeated trials.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub rmse: f64,
    pub bias: f64,
    pub percentile_error: f64,
}

pub fn summarize(errors: &[f64], percentile: f64) -> Result<TrialSummary> {
    let n = errors.len() as f64;
    let bias = errors.iter().sum::<f64>() / n;
    let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let abs: Vec<f64> = errors.iter().map(|e| e.abs()).collect();
    Ok(TrialSummary {
        rmse,
        bias,
        percentile_error: nearest_rank_percentile(&abs, percentile)?,
    })
}

fn kind_code(kind: ScheduleKind) -> u64 {
    match kind {
        ScheduleKind::Classical => 1,
        ScheduleKind::Lis => 2,
        ScheduleKind::Eis => 3,
        ScheduleKind::Custom => 4,
    }
}

// Series code for the Monte Carlo integration runs, disjoint from kind_code.
const MC_SERIES: u64 = 0x4d43;

/// Seed of one trial.
pub fn trial_seed(seed: u64, series: u64, shots: u64, a: f64, m: u32, repetition: usize) -> u64 {
    derive_seed(
        seed,
        &[series, shots, a.to_bits(), m as u64, repetition as u64],
    )
}

/// Errors `a_hat - a` of `repetitions` independent simulated trials.
#[allow(clippy::too_many_arguments)]
pub fn simulate_errors(
    kind: ScheduleKind,
    a: f64,
    m: u32,
    shots: u64,
    repetitions: usize,
    seed: u64,
    ml: &MLConfig,
    exec: Execution,
) -> Result<Vec<f64>> {
    let schedule = make_schedule(kind, m, shots)?;
    let amp = Amplitude::from_probability(a)?;
    // the trials are the parallel axis; each estimate runs serially
    let inner = MLConfig {
        execution: Execution::Serial,
        ..*ml
    };
    exec.map_range(repetitions, |rep| {
        let s = trial_seed(seed, kind_code(kind), shots, a, m, rep);
        let data = sample_counts(&schedule, amp, s);
        ml_estimate(&data, &schedule, &inner).map(|r| r.a_hat - a)
    })
    .into_iter()
    .collect()
}

/// Simulate every `(a, M)` of `config` and fit the RMSE exponent per target.
pub fn run_sweep(config: &SweepConfig) -> Result<ErrorCurve> {
    config.validate()?;
    let mut curve = ErrorCurve::default();
    for &a in &config.a_targets {
        for &m in &config.m_values {
            let errors = simulate_errors(
                config.kind,
                a,
                m,
                config.shots,
                config.repetitions,
                config.seed,
                &config.ml,
                config.execution,
            )?;
            let summary = summarize(&errors, config.percentile)?;
            let schedule = make_schedule(config.kind, m, config.shots)?;
            let bounds = BoundReport::new(&schedule, a)?;
            curve.rows.push(ErrorRow {
                kind: config.kind.as_str().to_string(),
                a_target: a,
                m,
                n_queries: bounds.n_queries,
                rmse: Some(summary.rmse),
                bias: Some(summary.bias),
                percentile_error: summary.percentile_error,
                crb: Some(bounds.crb_error),
                classical_bound: bounds.classical_bound,
                gamma_fit: None,
                delta_fit: None,
            });
        }
    }
    curve.fit_series(config.fit_window, |r| r.rmse);
    Ok(curve)
}

/// Conventional amplitude estimation against EIS at several shot counts and
/// classical sampling, all scored by the same error percentile.
#[derive(Debug, Clone, PartialEq)]
pub struct AppendixConfig {
    pub a: f64,
    /// Phase-register widths of the conventional curve.
    pub conventional_m: Vec<u32>,
    pub convention: QueryConvention,
    pub eis_shots: Vec<u64>,
    pub eis_m: Vec<u32>,
    pub classical_shots: u64,
    pub classical_m: Vec<u32>,
    pub repetitions: usize,
    pub seed: u64,
    pub percentile: f64,
    pub fit_window: (f64, f64),
    pub ml: MLConfig,
    pub execution: Execution,
}

impl Default for AppendixConfig {
    fn default() -> Self {
        Self {
            a: 1.0 / 48.0,
            conventional_m: (3..=17).collect(),
            convention: QueryConvention::default(),
            eis_shots: vec![30, 100],
            eis_m: (0..=12).collect(),
            classical_shots: 100,
            classical_m: vec![0, 1, 3, 9, 19, 49, 99, 199, 499, 999],
            repetitions: 1000,
            seed: 0,
            percentile: 81.0,
            fit_window: DEFAULT_FIT_WINDOW,
            ml: MLConfig::default(),
            execution: Execution::default(),
        }
    }
}

pub fn eis_label(shots: u64) -> String {
    format!("eis_shots{shots}")
}

pub const CONVENTIONAL_LABEL: &str = "conventional";

/// The four-series comparison. Every series is fitted on its percentile error.
pub fn run_appendix_comparison(config: &AppendixConfig) -> Result<ErrorCurve> {
    check_target(config.a)?;
    check_common(config.repetitions, config.percentile, &config.eis_m)?;
    check_common(config.repetitions, config.percentile, &config.classical_m)?;
    check_common(
        config.repetitions,
        config.percentile,
        &config.conventional_m,
    )?;
    let a = config.a;
    let spread = (a * (1.0 - a)).sqrt();
    let mut curve = ErrorCurve::default();

    for &m in &config.conventional_m {
        let p = conventional_error_with(a, m, config.convention)?;
        curve.rows.push(ErrorRow {
            kind: CONVENTIONAL_LABEL.to_string(),
            a_target: a,
            m,
            n_queries: p.n_queries,
            rmse: None,
            bias: None,
            percentile_error: p.worst_error,
            crb: None,
            classical_bound: spread / (p.n_queries as f64).sqrt(),
            gamma_fit: None,
            delta_fit: None,
        });
    }

    let simulated = config
        .eis_shots
        .iter()
        .map(|&s| (ScheduleKind::Eis, s, &config.eis_m, eis_label(s)))
        .chain(std::iter::once((
            ScheduleKind::Classical,
            config.classical_shots,
            &config.classical_m,
            ScheduleKind::Classical.as_str().to_string(),
        )));
    for (kind, shots, ms, label) in simulated {
        for &m in ms {
            let errors = simulate_errors(
                kind,
                a,
                m,
                shots,
                config.repetitions,
                config.seed,
                &config.ml,
                config.execution,
            )?;
            let summary = summarize(&errors, config.percentile)?;
            let bounds = BoundReport::new(&make_schedule(kind, m, shots)?, a)?;
            curve.rows.push(ErrorRow {
                kind: label.clone(),
                a_target: a,
                m,
                n_queries: bounds.n_queries,
                rmse: Some(summary.rmse),
                bias: Some(summary.bias),
                percentile_error: summary.percentile_error,
                crb: Some(bounds.crb_error),
                classical_bound: bounds.classical_bound,
                gamma_fit: None,
                delta_fit: None,
            });
        }
    }
    curve.fit_series(config.fit_window, |r| Some(r.percentile_error));
    Ok(curve)
}

/// Seeded trials of the statevector Monte Carlo integration.
#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub n: usize,
    pub b_max: f64,
    pub kind: ScheduleKind,
    pub m_values: Vec<u32>,
    pub shots: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub percentile: f64,
    pub fit_window: (f64, f64),
    pub ml: MLConfig,
    pub execution: Execution,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n: 2,
            b_max: std::f64::consts::FRAC_PI_4,
            kind: ScheduleKind::Eis,
            m_values: (0..=8).collect(),
            shots: 100,
            repetitions: 100,
            seed: 0,
            percentile: 81.0,
            fit_window: DEFAULT_FIT_WINDOW,
            ml: MLConfig::default(),
            execution: Execution::default(),
        }
    }
}

pub fn mc_label(kind: ScheduleKind) -> String {
    format!("mc_{kind}")
}

/// Error curve of the integral estimate; `a_target` is the exact sum.
pub fn run_mc_integration(config: &McConfig) -> Result<ErrorCurve> {
    check_common(config.repetitions, config.percentile, &config.m_values)?;
    if config.kind == ScheduleKind::Custom {
        return Err(Error::usage(
            "Monte Carlo runs need a generated schedule kind",
        ));
    }
    let problem = IntegralProblem::new(config.n, config.b_max)?;
    let exact = exact_sum(&problem);
    let inner = MLConfig {
        execution: Execution::Serial,
        ..config.ml
    };
    let mut curve = ErrorCurve::default();
    for &m in &config.m_values {
        let schedule = make_schedule(config.kind, m, config.shots)?;
        let probs = ancilla_probabilities(&problem, &schedule)?;
        let errors: Vec<f64> = config
            .execution
            .map_range(config.repetitions, |rep| {
                let s = trial_seed(config.seed, MC_SERIES, config.shots, exact, m, rep);
                estimate_from_probabilities(&problem, &schedule, &probs, &inner, s)
                    .map(|e| e.s_hat - exact)
            })
            .into_iter()
            .collect::<Result<_>>()?;
        let summary = summarize(&errors, config.percentile)?;
        let bounds = BoundReport::new(&schedule, exact)?;
        curve.rows.push(ErrorRow {
            kind: mc_label(config.kind),
            a_target: exact,
            m,
            n_queries: bounds.n_queries,
            rmse: Some(summary.rmse),
            bias: Some(summary.bias),
            percentile_error: summary.percentile_error,
            crb: Some(bounds.crb_error),
            classical_bound: bounds.classical_bound,
            gamma_fit: None,
            delta_fit: None,
        });
    }
    curve.fit_series(config.fit_window, |r| r.rmse);
    Ok(curve)
}

/// `printf("%.12g")`.
pub fn format_g12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..DIGITS).contains(&exp) {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(format_g12).unwrap_or_default()
}

/// CSV text of `curve`: header plus one LF-terminated line per row.
pub fn to_csv(curve: &ErrorCurve) -> String {
    let mut out = String::with_capacity(64 * (curve.rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &curve.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.kind,
            format_g12(r.a_target),
            r.m,
            r.n_queries,
            opt(r.rmse),
            opt(r.bias),
            format_g12(r.percentile_error),
            opt(r.crb),
            format_g12(r.classical_bound),
            opt(r.gamma_fit),
            opt(r.delta_fit),
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    CsvSvg,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "csv+svg" => Ok(OutputFormat::CsvSvg),
            _ => Err(Error::usage(format!("unknown output format `{s}`"))),
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Write `<dir>/<stem>.csv` and, for [`OutputFormat::CsvSvg`], one
/// `<dir>/<stem>_a<i>.svg` chart per target. Returns the paths written.
pub fn emit_outputs(
    curve: &ErrorCurve,
    dir: &Path,
    stem: &str,
    format: OutputFormat,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_file(&csv_path, &to_csv(curve))?;
    let mut written = vec![csv_path];
    if format == OutputFormat::CsvSvg {
        for (i, a) in curve.targets().into_iter().enumerate() {
            let path = dir.join(format!("{stem}_a{i}.svg"));
            write_file(&path, &render_svg(curve, a))?;
            written.push(path);
        }
    }
    Ok(written)
}

/// Label, measured points and bound points of one chart line.
type ChartSeries = (String, Vec<(f64, f64)>, Vec<(f64, f64)>);

const PALETTE: [&str; 6] = [
    "#000000", "#d62728", "#1f77b4", "#2ca02c", "#9467bd", "#ff7f0e",
];

/// Log-log chart of one target: the measured error of each series as a solid
/// polyline (RMSE when present, else the percentile error) and its Cramér–Rao
/// bound dashed.
pub fn render_svg(curve: &ErrorCurve, a: f64) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 60.0;
    let series: Vec<ChartSeries> = curve
        .series_keys()
        .into_iter()
        .filter(|(_, sa)| *sa == a)
        .map(|(kind, _)| {
            let rows: Vec<&ErrorRow> = curve.series(&kind, a).collect();
            let measured = rows
                .iter()
                .map(|r| (r.n_queries as f64, r.rmse.unwrap_or(r.percentile_error)))
                .filter(|&(x, y)| x > 0.0 && y > 0.0)
                .collect();
            let bound = rows
                .iter()
                .filter_map(|r| r.crb.map(|c| (r.n_queries as f64, c)))
                .collect();
            (kind, measured, bound)
        })
        .collect();

    let all = series
        .iter()
        .flat_map(|(_, m, b)| m.iter().chain(b.iter()))
        .map(|&(x, y)| (x.log10(), y.log10()));
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x0 > x1 {
        (x0, x1, y0, y1) = (0.0, 1.0, -1.0, 0.0);
    }
    let (x0, x1, y0, y1) = (
        x0.floor(),
        x1.ceil().max(x0.floor() + 1.0),
        y0.floor(),
        y1.ceil().max(y0.floor() + 1.0),
    );
    let px = |x: f64| PAD + (x.log10() - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y.log10() - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" text-anchor="middle">a = {}</text>"#,
        W / 2.0,
        format_g12(a)
    );
    for d in (x0 as i32)..=(x1 as i32) {
        let x = px(10f64.powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"##,
            PAD,
            H - PAD,
            H - PAD + 18.0
        );
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = py(10f64.powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"##,
            PAD,
            W - PAD,
            PAD - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">number of queries</text><text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">estimation error</text>"#,
        W / 2.0,
        H - 16.0,
        H / 2.0,
        H / 2.0
    );
    let points = |pts: &[(f64, f64)]| {
        pts.iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for (i, (kind, measured, bound)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if !measured.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                points(measured)
            );
            for &(x, y) in measured {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                    px(x),
                    py(y)
                );
            }
        }
        if !bound.is_empty() {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-dasharray="4 3" points="{}"/>"#,
                points(bound)
            );
        }
        let ly = PAD + 16.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/><text x="{:.2}" y="{:.2}">{kind}</text>"#,
            W - PAD - 120.0,
            ly,
            W - PAD - 104.0,
            ly + 9.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g12_formatting() {
        assert_eq!(format_g12(1.0 / 48.0), "0.0208333333333");
        assert_eq!(format_g12(0.5), "0.5");
        assert_eq!(format_g12(100.0), "100");
        assert_eq!(format_g12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_g12(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_g12(1.5e-5), "1.5e-05");
        assert_eq!(format_g12(-0.000123456789012345), "-0.000123456789012");
        assert_eq!(format_g12(1e12), "1e+12");
        assert_eq!(format_g12(123456789012.0), "123456789012");
        assert_eq!(format_g12(0.0), "0");
        assert_eq!(format_g12(-2.5), "-2.5");
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64).collect();
        assert_eq!(nearest_rank_percentile(&v, 81.0).unwrap(), 81.0);
        assert_eq!(nearest_rank_percentile(&v, 80.5).unwrap(), 81.0);
        assert_eq!(
            nearest_rank_percentile(&[3.0, 1.0, 2.0], 50.0).unwrap(),
            2.0
        );
        assert_eq!(nearest_rank_percentile(&[7.0], 1.0).unwrap(), 7.0);
        assert!(nearest_rank_percentile(&[], 50.0).is_err());
    }

    #[test]
    fn summary_rmse_dominates_bias() {
        let errs = [0.1, -0.05, 0.2, 0.0, 0.03];
        let s = summarize(&errs, 81.0).unwrap();
        assert!(s.rmse >= s.bias.abs());
        assert!((s.bias - 0.056).abs() < 1e-15, "{}", s.bias);
        // |e| sorted: 0, .03, .05, .1, .2; rank ceil(0.81 * 5) = 5
        assert_eq!(s.percentile_error, 0.2);
    }

    #[test]
    fn empty_curve_is_header_only() {
        assert_eq!(to_csv(&ErrorCurve::default()), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn single_row_in_schema_order() {
        let curve = ErrorCurve {
            rows: vec![ErrorRow {
                kind: "eis".into(),
                a_target: 0.25,
                m: 3,
                n_queries: 1800,
                rmse: Some(0.001),
                bias: Some(-2e-5),
                percentile_error: 0.0012,
                crb: Some(0.0009),
                classical_bound: 0.0102,
                gamma_fit: None,
                delta_fit: None,
            }],
        };
        let csv = to_csv(&curve);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(
            lines[1],
            "eis,0.25,3,1800,0.001,-2e-05,0.0012,0.0009,0.0102,,"
        );
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn config_validation() {
        let ok = SweepConfig {
            repetitions: 1,
            m_values: vec![1, 2],
            ..Default::default()
        };
        assert!(ok.validate().is_ok());
        let bad = [
            SweepConfig {
                repetitions: 0,
                ..ok.clone()
            },
            SweepConfig {
                percentile: 100.0,
                ..ok.clone()
            },
            SweepConfig {
                percentile: 0.0,
                ..ok.clone()
            },
            SweepConfig {
                a_targets: vec![1.0],
                ..ok.clone()
            },
            SweepConfig {
                a_targets: vec![],
                ..ok.clone()
            },
            SweepConfig {
                m_values: vec![2, 2],
                ..ok.clone()
            },
            SweepConfig {
                kind: ScheduleKind::Custom,
                ..ok.clone()
            },
            SweepConfig {
                shots: 0,
                ..ok.clone()
            },
        ];
        for cfg in bad {
            assert!(run_sweep(&cfg).is_err(), "{cfg:?}");
        }
    }

    #[test]
    fn sweep_rows_and_determinism() {
        let cfg = SweepConfig {
            a_targets: vec![1.0 / 6.0, 1.0 / 3.0],
            m_values: vec![0, 1, 2, 3],
            repetitions: 20,
            seed: 9,
            ..Default::default()
        };
        let curve = run_sweep(&cfg).unwrap();
        assert_eq!(curve.rows.len(), 8);
        for (kind, a) in curve.series_keys() {
            let nq: Vec<u64> = curve.series(&kind, a).map(|r| r.n_queries).collect();
            assert!(nq.windows(2).all(|w| w[0] < w[1]));
        }
        for r in &curve.rows {
            assert!(r.rmse.unwrap() >= r.bias.unwrap().abs());
        }
        let serial = run_sweep(&SweepConfig {
            execution: Execution::Serial,
            ..cfg.clone()
        })
        .unwrap();
        assert_eq!(to_csv(&curve), to_csv(&serial));
    }

    #[test]
    fn unwritable_output_reports_path() {
        let dir = std::env::temp_dir().join(format!("mlae-emit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let blocker = dir.join("file");
        fs::write(&blocker, "x").unwrap();
        let err =
            emit_outputs(&ErrorCurve::default(), &blocker, "out", OutputFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("file"));
        fs::remove_dir_all(&dir).unwrap();
    }
}
