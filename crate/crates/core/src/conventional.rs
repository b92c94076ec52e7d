//! Deterministic error model of phase-estimation based amplitude estimation.
//!
//! With an `m`-qubit phase register (`M = 2^m`) the conventional algorithm
//! returns, with probability at least `8/pi^2`, one of the integers nearest to
//! `theta M / pi` or `M - theta M / pi`, and reports `sin^2(pi y / M)`. The
//! error recorded here is the worst over those four candidates.

use crate::error::{Error, Result};

/// How oracle queries of the conventional circuit are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QueryConvention {
    /// `2 (2^m - 1) + 1`: each of the `2^m - 1` controlled-`Q` applications
    /// costs two queries and state preparation one, as for the ML schedules.
    #[default]
    Symmetric,
    /// `2^m - 1`: one query per controlled-`Q` application.
    ControlledQ,
}

impl QueryConvention {
    pub fn queries(&self, m: u32) -> u64 {
        let applications = (1u64 << m) - 1;
        match self {
            QueryConvention::Symmetric => 2 * applications + 1,
            QueryConvention::ControlledQ => applications,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConventionalPoint {
    /// Width of the phase register.
    pub m: u32,
    /// `2^m`.
    pub grid_size: u64,
    pub n_queries: u64,
    pub worst_error: f64,
}

/// The two integers bracketing `target`. For an integral target these are the
/// target itself and its successor.
fn nearest_pair(target: f64) -> [f64; 2] {
    let lo = target.floor();
    [lo, lo + 1.0]
}

pub fn conventional_error(a: f64, m: u32) -> Result<ConventionalPoint> {
    conventional_error_with(a, m, QueryConvention::default())
}

pub fn conventional_error_with(
    a: f64,
    m: u32,
    convention: QueryConvention,
) -> Result<ConventionalPoint> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::domain(format!("a = {a} outside (0, 1)")));
    }
    if !(1..=52).contains(&m) {
        return Err(Error::usage(format!(
            "register width m = {m} outside 1..=52"
        )));
    }
    let grid = (1u64 << m) as f64;
    let theta = a.sqrt().asin();
    let target = theta * grid / std::f64::consts::PI;
    let worst_error = nearest_pair(target)
        .into_iter()
        .chain(nearest_pair(grid - target))
        .map(|y| ((std::f64::consts::PI * y / grid).sin().powi(2) - a).abs())
        .fold(0.0, f64::max);
    Ok(ConventionalPoint {
        m,
        grid_size: 1u64 << m,
        n_queries: convention.queries(m),
        worst_error,
    })
}
