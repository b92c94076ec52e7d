//! Fisher information, query counts, Cramér–Rao bounds and slope fits.

use crate::amplified_model::Schedule;
use crate::error::{Error, Result};
use crate::exec::{compensated_sum, Execution};

/// Largest outcome space [`fisher_oracle`] will enumerate.
pub const ORACLE_MAX_OUTCOMES: u64 = 1_000_000;

fn check_open_unit(a: f64) -> Result<()> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!(
            "Fisher information diverges at a = {a}; need 0 < a < 1"
        )));
    }
    Ok(())
}

/// Closed-form Fisher information about `a`:
/// `sum_k N_k (2 m_k + 1)^2 / (a (1 - a))`.
pub fn fisher_information(schedule: &Schedule, a: f64) -> Result<f64> {
    check_open_unit(a)?;
    let weight: f64 = schedule
        .entries()
        .iter()
        .map(|e| e.shots as f64 * ((2 * e.depth + 1) as f64).powi(2))
        .sum();
    Ok(weight / (a * (1.0 - a)))
}

/// Total queries to the state-preparation oracle, `sum_k N_k (2 m_k + 1)`.
///
/// Each amplification round calls the oracle and its inverse once; the extra
/// query per shot prepares the initial state.
pub fn query_count(schedule: &Schedule) -> u64 {
    schedule.query_count()
}

/// Asymptotic RMSE of the ML estimate, `I(a)^{-1/2}`.
pub fn cramer_rao_error(schedule: &Schedule, a: f64) -> Result<f64> {
    Ok(fisher_information(schedule, a)?.powf(-0.5))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub fisher: f64,
    pub n_queries: u64,
    /// Cramér–Rao lower bound on the RMSE.
    pub crb_error: f64,
    /// `sqrt(a (1 - a) / N_q)`, the best classical-sampling error at this budget.
    pub classical_bound: f64,
    /// `sqrt(a (1 - a)) / N_q`, the Heisenberg-limited floor under `crb_error`.
    pub heisenberg_bound: f64,
}

impl BoundReport {
    pub fn new(schedule: &Schedule, a: f64) -> Result<Self> {
        let fisher = fisher_information(schedule, a)?;
        let n_queries = query_count(schedule);
        let spread = (a * (1.0 - a)).sqrt();
        Ok(Self {
            fisher,
            n_queries,
            crb_error: fisher.powf(-0.5),
            classical_bound: spread / (n_queries as f64).sqrt(),
            heisenberg_bound: spread / n_queries as f64,
        })
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    let k = k.min(n - k);
    (1..=k)
        .map(|i| (((n - k + i) as f64) / i as f64).ln())
        .sum()
}

// Per-entry outcome tables: probability of each h and d/dtheta of ln L_k.
struct OutcomeTable {
    prob: Vec<f64>,
    score: Vec<f64>,
}

fn outcome_table<S>(shots: u64, depth: u64, theta: f64, score: S) -> OutcomeTable
where
    S: Fn(u64) -> f64,
{
    let phi = (2 * depth + 1) as f64 * theta;
    let (s, c) = phi.sin_cos();
    // cos^2 is taken directly, not as 1 - sin^2, to keep it accurate near p = 1
    let (p, q) = (s * s, c * c);
    let ln_term = |count: u64, x: f64| {
        if count == 0 {
            0.0
        } else {
            count as f64 * x.ln()
        }
    };
    let prob = (0..=shots)
        .map(|h| (ln_choose(shots, h) + ln_term(h, p) + ln_term(shots - h, q)).exp())
        .collect::<Vec<_>>();
    let score = (0..=shots)
        .map(|h| {
            if prob[h as usize] > 0.0 {
                score(h)
            } else {
                0.0
            }
        })
        .collect();
    OutcomeTable { prob, score }
}

fn outcome_space(schedule: &Schedule) -> Result<u64> {
    schedule
        .shots()
        .try_fold(1u64, |acc, n| acc.checked_mul(n + 1))
        .filter(|&total| total <= ORACLE_MAX_OUTCOMES)
        .ok_or_else(|| {
            Error::usage(format!(
                "outcome space exceeds {ORACLE_MAX_OUTCOMES} combinations"
            ))
        })
}

// E[score^2] by enumerating every outcome vector in mixed radix.
fn enumerate_expectation(tables: &[OutcomeTable], total: u64, exec: Execution) -> f64 {
    const BLOCK: u64 = 4096;
    let blocks = total.div_ceil(BLOCK) as usize;
    let radices: Vec<u64> = tables.iter().map(|t| t.prob.len() as u64).collect();
    let partials = exec.map_range(blocks, |b| {
        let start = b as u64 * BLOCK;
        let end = (start + BLOCK).min(total);
        compensated_sum((start..end).map(|mut idx| {
            let mut prob = 1.0;
            let mut score = 0.0;
            for (t, &r) in tables.iter().zip(&radices) {
                let h = (idx % r) as usize;
                idx /= r;
                prob *= t.prob[h];
                score += t.score[h];
            }
            if prob == 0.0 {
                0.0
            } else {
                prob * score * score
            }
        }))
    });
    compensated_sum(partials)
}

/// Fisher information by brute force: the expectation of the squared score
/// over every possible outcome vector `h`, each weighted by its exact joint
/// binomial probability. The score is differentiated analytically through
/// `theta(a) = asin(sqrt(a))`.
///
/// Only for small schedules: at most [`ORACLE_MAX_OUTCOMES`] outcome vectors.
pub fn fisher_oracle(schedule: &Schedule, a: f64, exec: Execution) -> Result<f64> {
    check_open_unit(a)?;
    let total = outcome_space(schedule)?;
    let theta = a.sqrt().asin();
    let dtheta_da = 1.0 / (2.0 * (a * (1.0 - a)).sqrt());
    let tables: Vec<OutcomeTable> = schedule
        .entries()
        .iter()
        .map(|e| {
            let o = (2 * e.depth + 1) as f64;
            let (s, c) = (o * theta).sin_cos();
            outcome_table(e.shots, e.depth, theta, |h| {
                // d/dtheta [h ln sin^2(o theta) + (N - h) ln cos^2(o theta)]
                let dl = 2.0 * o * (h as f64 * c / s - (e.shots - h) as f64 * s / c);
                dl * dtheta_da
            })
        })
        .collect();
    Ok(enumerate_expectation(&tables, total, exec))
}

/// Same enumeration as [`fisher_oracle`] with the score taken as a central
/// finite difference of `ln L` in `a` with step `step`.
pub fn fisher_oracle_finite_difference(
    schedule: &Schedule,
    a: f64,
    step: f64,
    exec: Execution,
) -> Result<f64> {
    check_open_unit(a)?;
    if !(step > 0.0 && a - step > 0.0 && a + step < 1.0) {
        return Err(Error::usage("finite-difference step leaves (0, 1)"));
    }
    let total = outcome_space(schedule)?;
    let theta = a.sqrt().asin();
    let (th_lo, th_hi) = ((a - step).sqrt().asin(), (a + step).sqrt().asin());
    let tables: Vec<OutcomeTable> = schedule
        .entries()
        .iter()
        .map(|e| {
            let o = (2 * e.depth + 1) as f64;
            let ln_l = |th: f64, h: u64| {
                let (s, c) = (o * th).sin_cos();
                h as f64 * (s * s).ln() + (e.shots - h) as f64 * (c * c).ln()
            };
            outcome_table(e.shots, e.depth, theta, |h| {
                (ln_l(th_hi, h) - ln_l(th_lo, h)) / (2.0 * step)
            })
        })
        .collect();
    Ok(enumerate_expectation(&tables, total, exec))
}

/// Least-squares fit of `log10 err = gamma log10 N_q + delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub gamma: f64,
    pub delta: f64,
    pub r_squared: f64,
    /// Inclusive `N_q` window the fit was restricted to.
    pub range: (f64, f64),
    pub points_used: usize,
}

/// Fit the error exponent over the `(N_q, error)` points whose `N_q` falls in
/// `range` (inclusive). Unweighted OLS on base-10 logs.
pub fn fit_error_exponent(points: &[(f64, f64)], range: (f64, f64)) -> Result<SlopeFit> {
    let inside: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(nq, _)| nq >= range.0 && nq <= range.1)
        .collect();
    if inside.len() < 3 {
        return Err(Error::usage(format!(
            "need at least 3 points with N_q in [{}, {}], got {}",
            range.0,
            range.1,
            inside.len()
        )));
    }
    // negated comparisons also reject NaN
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let invalid = inside.iter().any(|&(nq, err)| !(err > 0.0) || !(nq > 0.0));
    if invalid {
        return Err(Error::domain("log-log fit needs positive N_q and errors"));
    }
    let xs: Vec<f64> = inside.iter().map(|p| p.0.log10()).collect();
    let ys: Vec<f64> = inside.iter().map(|p| p.1.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::usage("all fit points share one N_q"));
    }
    let gamma = sxy / sxx;
    let delta = my - gamma * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(SlopeFit {
        gamma,
        delta,
        r_squared,
        range,
        points_used: inside.len(),
    })
}
