//! Probability model of amplified measurements.
//!
//! After `m` applications of the amplification operator the good state is
//! observed with probability `sin^2((2m + 1) theta)`. A [`Schedule`] lists the
//! depths `m_k` and shot counts `N_k` to measure at, and [`sample_counts`]
//! simulates the resulting hit counts `h_k`.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::rng;

/// Shot counts at or above this are drawn from a binomial sampler instead of
/// as individual Bernoulli trials.
pub const BERNOULLI_LIMIT: u64 = 1024;

/// An amplitude `a = sin^2(theta)` with `theta` in `[0, pi/2]`.
///
/// The angle is stored; `a` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Amplitude {
    theta: f64,
}

impl Amplitude {
    pub fn from_probability(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::domain(format!("probability {a} outside [0, 1]")));
        }
        Ok(Self {
            theta: a.sqrt().asin(),
        })
    }

    pub fn from_theta(theta: f64) -> Result<Self> {
        check_theta(theta)?;
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn a(&self) -> f64 {
        self.theta.sin().powi(2)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::domain(format!("angle {theta} outside [0, pi/2]")));
    }
    Ok(())
}

/// Probability of measuring the good state after `m` amplification rounds.
pub fn good_probability(theta: f64, m: u64) -> Result<f64> {
    check_theta(theta)?;
    Ok(amplified_probability(theta, m))
}

// Unchecked form used in hot loops.
#[inline]
pub(crate) fn amplified_probability(theta: f64, m: u64) -> f64 {
    ((2 * m + 1) as f64 * theta).sin().powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScheduleKind {
    /// `m_k = 0` for every k.
    Classical,
    /// Linearly incremental: `m_k = k`.
    Lis,
    /// Exponentially incremental: `m_0 = 0`, `m_k = 2^(k-1)`.
    Eis,
    Custom,
}

impl ScheduleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ScheduleKind::Classical => "classical",
            ScheduleKind::Lis => "lis",
            ScheduleKind::Eis => "eis",
            ScheduleKind::Custom => "custom",
        }
    }

    /// Depth of the k-th entry for the generated kinds.
    fn depth(&self, k: u32) -> Option<u64> {
        match self {
            ScheduleKind::Classical => Some(0),
            ScheduleKind::Lis => Some(k as u64),
            ScheduleKind::Eis if k == 0 => Some(0),
            ScheduleKind::Eis => 1u64.checked_shl(k - 1),
            ScheduleKind::Custom => None,
        }
    }
}

impl fmt::Display for ScheduleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "classical" => Ok(ScheduleKind::Classical),
            "lis" => Ok(ScheduleKind::Lis),
            "eis" => Ok(ScheduleKind::Eis),
            "custom" => Ok(ScheduleKind::Custom),
            _ => Err(Error::usage(format!("unknown schedule kind `{s}`"))),
        }
    }
}

/// One measurement setting: `shots` measurements after `depth` rounds of
/// amplification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub depth: u64,
    pub shots: u64,
}

/// Ordered list of amplification depths and shot counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    entries: Vec<Entry>,
    kind: ScheduleKind,
}

impl Schedule {
    /// Arbitrary schedule from `(m_k, N_k)` pairs.
    pub fn custom(entries: impl IntoIterator<Item = (u64, u64)>) -> Result<Self> {
        let entries: Vec<Entry> = entries
            .into_iter()
            .map(|(depth, shots)| Entry { depth, shots })
            .collect();
        if entries.is_empty() {
            return Err(Error::usage("schedule must have at least one entry"));
        }
        if entries.iter().any(|e| e.shots == 0) {
            return Err(Error::usage("every schedule entry needs at least one shot"));
        }
        Ok(Self {
            entries,
            kind: ScheduleKind::Custom,
        })
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn depths(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.depth)
    }

    pub fn shots(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.shots)
    }

    /// Total oracle queries `sum N_k (2 m_k + 1)`.
    pub fn query_count(&self) -> u64 {
        self.entries
            .iter()
            .map(|e| e.shots * (2 * e.depth + 1))
            .sum()
    }

    /// Prefix of the first `len` entries, keeping the kind.
    pub fn truncated(&self, len: usize) -> Result<Self> {
        if len == 0 || len > self.entries.len() {
            return Err(Error::usage(format!(
                "cannot truncate a {}-entry schedule to {len}",
                self.entries.len()
            )));
        }
        Ok(Self {
            entries: self.entries[..len].to_vec(),
            kind: self.kind,
        })
    }
}

/// Schedule of `max_m + 1` entries of `shots` each with depths given by `kind`.
pub fn make_schedule(kind: ScheduleKind, max_m: u32, shots: u64) -> Result<Schedule> {
    if shots == 0 {
        return Err(Error::usage("shot count must be positive"));
    }
    if kind == ScheduleKind::Custom {
        return Err(Error::usage(
            "custom schedules are built with Schedule::custom, not generated",
        ));
    }
    let entries = (0..=max_m)
        .map(|k| {
            kind.depth(k)
                .map(|depth| Entry { depth, shots })
                .ok_or_else(|| Error::usage(format!("depth overflow at k = {k}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Schedule { entries, kind })
}

/// Good-state hit counts, one per schedule entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MeasurementData {
    pub hits: Vec<u64>,
    pub seed: u64,
}

impl MeasurementData {
    /// Counts supplied from elsewhere (hardware, another simulator).
    pub fn new(schedule: &Schedule, hits: Vec<u64>, seed: u64) -> Result<Self> {
        if hits.len() != schedule.len() {
            return Err(Error::usage(format!(
                "{} hit counts for a {}-entry schedule",
                hits.len(),
                schedule.len()
            )));
        }
        if let Some((k, _)) = hits
            .iter()
            .zip(schedule.shots())
            .enumerate()
            .find(|(_, (&h, n))| h > *n)
        {
            return Err(Error::usage(format!("h_{k} exceeds N_{k}")));
        }
        Ok(Self { hits, seed })
    }
}

/// Simulated measurement of `schedule` on a state with the given amplitude.
///
/// Entry k draws from its own stream `(seed, k)`, so the output is a pure
/// function of the arguments.
pub fn sample_counts(schedule: &Schedule, amplitude: Amplitude, seed: u64) -> MeasurementData {
    let theta = amplitude.theta();
    sample_with_probabilities(
        schedule,
        schedule.depths().map(|m| amplified_probability(theta, m)),
        seed,
    )
}

/// Like [`sample_counts`] but with the good-state probability of each entry
/// supplied directly.
pub fn sample_with_probabilities(
    schedule: &Schedule,
    probabilities: impl IntoIterator<Item = f64>,
    seed: u64,
) -> MeasurementData {
    let hits = schedule
        .entries()
        .iter()
        .zip(probabilities)
        .enumerate()
        .map(|(k, (entry, p))| {
            let mut rng = rng::stream(seed, &[k as u64]);
            draw_binomial(entry.shots, p.clamp(0.0, 1.0), &mut rng)
        })
        .collect();
    MeasurementData { hits, seed }
}

/// Number of successes in `n` Bernoulli(`p`) trials.
pub fn draw_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n < BERNOULLI_LIMIT {
        (0..n).filter(|_| rng.random_bool(p)).count() as u64
    } else {
        // p is already clamped into [0, 1]
        Binomial::new(n, p).expect("valid binomial").sample(rng)
    }
}
