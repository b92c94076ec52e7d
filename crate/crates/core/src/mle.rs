//! Combined likelihood of amplified measurements and its global maximum.
//!
//! The log-likelihood over the angle is
//!
//! ```text
//! ln L(theta) = sum_k h_k ln p_k + (N_k - h_k) ln (1 - p_k),   p_k = sin^2((2 m_k + 1) theta)
//! ```
//!
//! with both probabilities clamped into `[eps, 1 - eps]`.
//!
//! [`ml_estimate`] finds the maximum with a staged grid search. Stage 0 scans
//! `[0, pi/2]` densely using the first factor only. Each later stage adds the
//! factors of the next amplification depth `m` and rescans a window of
//! half-width `pi / (2 (2m + 1))` around the previous maximiser: that is half a
//! period of the new factor, so the new factor has exactly one peak per window.
//! Consecutive entries at the same depth share a stage. A fixed number of local
//! grid-shrinking rounds finishes the search. Ties go to the smaller angle.
//!
//! "Search the vicinity of the previous maximum" admits other readings; this is
//! the one implemented here.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::amplified_model::{MeasurementData, Schedule};
use crate::error::{Error, Result};
use crate::exec::Execution;

pub const DEFAULT_PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLConfig {
    /// Grid points per search stage (stage 0 covers `[0, pi/2]`).
    pub grid_points: usize,
    pub refine_rounds: u32,
    /// Spacing reduction per refinement round.
    pub refine_factor: f64,
    pub prob_clamp: f64,
    pub execution: Execution,
}

impl Default for MLConfig {
    fn default() -> Self {
        Self {
            grid_points: 10_000,
            refine_rounds: 20,
            refine_factor: 2.0,
            prob_clamp: DEFAULT_PROB_CLAMP,
            execution: Execution::default(),
        }
    }
}

impl MLConfig {
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 2 {
            return Err(Error::usage("grid_points must be at least 2"));
        }
        if !(self.refine_factor > 1.0 && self.refine_factor.is_finite()) {
            return Err(Error::usage("refine_factor must be a finite number > 1"));
        }
        if !(self.prob_clamp > 0.0 && self.prob_clamp <= 1e-6) {
            return Err(Error::usage("prob_clamp must lie in (0, 1e-6]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MLResult {
    pub theta_hat: f64,
    pub a_hat: f64,
    pub log_likelihood_at_max: f64,
    /// Number of log-likelihood evaluations spent.
    pub evaluations: u64,
    /// Spacing of the last grid scanned; the maximiser is resolved to about this.
    pub final_spacing: f64,
}

impl MLResult {
    fn at(theta: f64, log_likelihood: f64, evaluations: u64, final_spacing: f64) -> Self {
        Self {
            theta_hat: theta,
            a_hat: theta.sin().powi(2),
            log_likelihood_at_max: log_likelihood,
            evaluations,
            final_spacing,
        }
    }
}

fn check_aligned(data: &MeasurementData, schedule: &Schedule) -> Result<()> {
    if data.hits.len() != schedule.len() {
        return Err(Error::usage(format!(
            "{} hit counts for a {}-entry schedule",
            data.hits.len(),
            schedule.len()
        )));
    }
    if data.hits.iter().zip(schedule.shots()).any(|(&h, n)| h > n) {
        return Err(Error::usage("hit count exceeds shot count"));
    }
    Ok(())
}

#[inline]
fn clamped_ln(p: f64, eps: f64) -> f64 {
    p.clamp(eps, 1.0 - eps).ln()
}

/// Log-likelihood of `data` at `theta`, with the default clamp.
pub fn log_likelihood(data: &MeasurementData, schedule: &Schedule, theta: f64) -> Result<f64> {
    log_likelihood_with_clamp(data, schedule, theta, DEFAULT_PROB_CLAMP)
}

pub fn log_likelihood_with_clamp(
    data: &MeasurementData,
    schedule: &Schedule,
    theta: f64,
    prob_clamp: f64,
) -> Result<f64> {
    check_aligned(data, schedule)?;
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::domain(format!("angle {theta} outside [0, pi/2]")));
    }
    Ok(schedule
        .entries()
        .iter()
        .zip(&data.hits)
        .map(|(e, &h)| {
            let (s, c) = ((2 * e.depth + 1) as f64 * theta).sin_cos();
            h as f64 * clamped_ln(s * s, prob_clamp)
                + (e.shots - h) as f64 * clamped_ln(c * c, prob_clamp)
        })
        .sum())
}

/// Sufficient statistics of all entries at one depth.
#[derive(Debug, Clone, Copy)]
struct Term {
    multiplier: f64,
    hits: f64,
    misses: f64,
}

#[derive(Debug)]
struct Stage {
    depth: u64,
    terms: Vec<Term>,
}

impl Stage {
    fn eval(&self, theta: f64, eps: f64) -> f64 {
        let mut total = 0.0;
        for t in &self.terms {
            let (s, c) = (t.multiplier * theta).sin_cos();
            if t.hits > 0.0 {
                total += t.hits * clamped_ln(s * s, eps);
            }
            if t.misses > 0.0 {
                total += t.misses * clamped_ln(c * c, eps);
            }
        }
        total
    }
}

// Stage k holds the grouped likelihood of every entry up to the end of the
// k-th run of equal consecutive depths.
fn build_stages(data: &MeasurementData, schedule: &Schedule) -> Vec<Stage> {
    let mut acc: BTreeMap<u64, (u64, u64)> = BTreeMap::new();
    let mut stages: Vec<Stage> = Vec::new();
    let entries = schedule.entries();
    for (k, (e, &h)) in entries.iter().zip(&data.hits).enumerate() {
        let slot = acc.entry(e.depth).or_default();
        slot.0 += h;
        slot.1 += e.shots - h;
        let run_ends = entries.get(k + 1).is_none_or(|next| next.depth != e.depth);
        if run_ends {
            stages.push(Stage {
                depth: e.depth,
                terms: acc
                    .iter()
                    .map(|(&m, &(hits, misses))| Term {
                        multiplier: (2 * m + 1) as f64,
                        hits: hits as f64,
                        misses: misses as f64,
                    })
                    .collect(),
            });
        }
    }
    stages
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Uniform grid over `[lo, hi]` with `points` points, scanned for the maximum.
/// Returns (theta, value).
fn scan(stage: &Stage, lo: f64, hi: f64, points: usize, eps: f64, exec: Execution) -> (f64, f64) {
    let step = (hi - lo) / (points - 1) as f64;
    let at = |i: usize| {
        if i + 1 == points {
            hi
        } else {
            lo + step * i as f64
        }
    };
    let (i, v) = exec
        .argmax(points, |i| stage.eval(at(i), eps))
        .expect("non-empty grid");
    (at(i), v)
}

/// Maximum-likelihood estimate of the angle from `data`.
pub fn ml_estimate(
    data: &MeasurementData,
    schedule: &Schedule,
    config: &MLConfig,
) -> Result<MLResult> {
    config.validate()?;
    check_aligned(data, schedule)?;
    let eps = config.prob_clamp;
    let exec = config.execution;

    // Degenerate data: the maximisers are known exactly.
    if data.hits.iter().all(|&h| h == 0) {
        let ll = log_likelihood_with_clamp(data, schedule, 0.0, eps)?;
        return Ok(MLResult::at(0.0, ll, 1, 0.0));
    }
    if data.hits.iter().zip(schedule.shots()).all(|(&h, n)| h == n) {
        // sin^2((2m+1) theta) = 1 for all k first happens at pi / (2 gcd(2m+1))
        let g = schedule.depths().fold(0, |g, m| gcd(g, 2 * m + 1));
        let theta = FRAC_PI_2 / g as f64;
        let ll = log_likelihood_with_clamp(data, schedule, theta, eps)?;
        return Ok(MLResult::at(theta, ll, 1, 0.0));
    }

    let stages = build_stages(data, schedule);
    let points = config.grid_points;
    let mut evaluations = 0u64;

    let mut spacing = FRAC_PI_2 / (points - 1) as f64;
    let (mut theta, mut best) = scan(&stages[0], 0.0, FRAC_PI_2, points, eps, exec);
    evaluations += points as u64;

    for stage in &stages[1..] {
        let half_width = PI / (2.0 * (2 * stage.depth + 1) as f64);
        let lo = (theta - half_width).max(0.0);
        let hi = (theta + half_width).min(FRAC_PI_2);
        spacing = (hi - lo) / (points - 1) as f64;
        (theta, best) = scan(stage, lo, hi, points, eps, exec);
        evaluations += points as u64;
    }

    let last = stages.last().expect("at least one stage");
    for _ in 0..config.refine_rounds {
        let lo = (theta - spacing).max(0.0);
        let hi = (theta + spacing).min(FRAC_PI_2);
        let target = spacing / config.refine_factor;
        let intervals = ((hi - lo) / target).ceil().max(2.0) as usize;
        let (t, v) = scan(last, lo, hi, intervals + 1, eps, Execution::Serial);
        evaluations += intervals as u64 + 1;
        if v > best || (v == best && t < theta) {
            theta = t;
            best = v;
        }
        spacing = (hi - lo) / intervals as f64;
    }

    Ok(MLResult::at(theta, best, evaluations, spacing))
}

/// Maximiser of the log-likelihood on a uniform `points`-point grid over
/// `[0, pi/2]`, evaluating the full ungrouped likelihood at every point.
///
/// This is the brute-force reference for [`ml_estimate`]; it is slow for large
/// grids. Ties go to the smaller angle.
pub fn exhaustive_argmax(
    data: &MeasurementData,
    schedule: &Schedule,
    points: usize,
    prob_clamp: f64,
    exec: Execution,
) -> Result<(f64, f64)> {
    check_aligned(data, schedule)?;
    if points < 2 {
        return Err(Error::usage("exhaustive grid needs at least 2 points"));
    }
    let step = FRAC_PI_2 / (points - 1) as f64;
    let at = |i: usize| (step * i as f64).min(FRAC_PI_2);
    let (i, v) = exec
        .argmax(points, |i| {
            log_likelihood_with_clamp(data, schedule, at(i), prob_clamp).expect("validated above")
        })
        .expect("non-empty grid");
    Ok((at(i), v))
}
