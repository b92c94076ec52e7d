//! Dense statevector realisation of Monte Carlo integration as amplitude
//! estimation, for the sine-squared sum
//!
//! ```text
//! S = 2^-n sum_{x=0}^{2^n - 1} sin^2((x + 1/2) b_max / 2^n)
//! ```
//!
//! The register holds `n` domain qubits and one ancilla. Basis index
//! `i = (x << 1) | ancilla`: the ancilla is the least significant bit and domain
//! qubit `j` is bit `j + 1`.
//!
//! - `P` is a Hadamard on every domain qubit.
//! - `R` rotates the ancilla of `|x>|0>` to `sin(t_x)|1> + cos(t_x)|0>` with
//!   `t_x = (x + 1/2) b_max / 2^n`. It is built from Y-rotations
//!   `Ry(phi) = exp(-i phi Y / 2)`: one unconditional `Ry(b_max / 2^n)` and, for
//!   each domain qubit `j`, an `Ry(b_max 2^j / 2^(n-1))` controlled by that qubit.
//!   The rotation angles add up to `2 t_x`.
//! - `Q = U_psi U_0` with `U_0 = I - 2 (I_n (x) |0><0|)` (sign flip on ancilla-0
//!   components) and `U_psi = A (I - 2|0><0|) A^dagger`, `A = R (P (x) I)`. This
//!   equals `-A S_0 A^-1 S_chi` including the global sign.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::amplified_model::{sample_with_probabilities, Schedule};
use crate::error::{Error, Result};
use crate::exec::compensated_sum;
use crate::mle::{ml_estimate, MLConfig, MLResult};
use crate::statistics::BoundReport;

/// Widest domain register the simulator accepts.
pub const MAX_DOMAIN_QUBITS: usize = 20;

const PRECONDITION_TOL: f64 = 1e-12;

/// A function `f: {0..2^n} -> [0, 1]` whose uniform average is the integral.
///
/// [`IntegralProblem`] is the shipped instance; other integrands can be loaded
/// with [`apply_rotation_table`].
pub trait Integrand {
    fn domain_qubits(&self) -> usize;
    fn value(&self, x: usize) -> f64;

    /// `2^-n sum_x f(x)`.
    fn mean(&self) -> f64 {
        let size = 1usize << self.domain_qubits();
        compensated_sum((0..size).map(|x| self.value(x))) / size as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralProblem {
    n: usize,
    b_max: f64,
}

impl IntegralProblem {
    pub fn new(n: usize, b_max: f64) -> Result<Self> {
        if n == 0 || n > MAX_DOMAIN_QUBITS {
            return Err(Error::usage(format!(
                "domain register width {n} outside 1..={MAX_DOMAIN_QUBITS}"
            )));
        }
        if !(b_max > 0.0 && b_max <= PI) {
            return Err(Error::domain(format!("b_max = {b_max} outside (0, pi]")));
        }
        Ok(Self { n, b_max })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b_max(&self) -> f64 {
        self.b_max
    }

    /// Ancilla rotation angle `t_x = (x + 1/2) b_max / 2^n`.
    pub fn angle(&self, x: usize) -> f64 {
        (x as f64 + 0.5) * self.b_max / (1u64 << self.n) as f64
    }
}

impl Integrand for IntegralProblem {
    fn domain_qubits(&self) -> usize {
        self.n
    }

    fn value(&self, x: usize) -> f64 {
        self.angle(x).sin().powi(2)
    }
}

/// The target sum `S`, by direct summation.
pub fn exact_sum(problem: &IntegralProblem) -> f64 {
    problem.mean()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
    n: usize,
}

impl StateVector {
    /// `|0>_n |0>`.
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_DOMAIN_QUBITS {
            return Err(Error::usage(format!(
                "domain register width {n} outside 1..={MAX_DOMAIN_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << (n + 1)];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes, n })
    }

    /// Basis state `|index>` over `n` domain qubits plus the ancilla.
    pub fn basis(n: usize, index: usize) -> Result<Self> {
        let mut s = Self::zero(n)?;
        if index >= s.amplitudes.len() {
            return Err(Error::usage(format!("basis index {index} out of range")));
        }
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        compensated_sum(self.amplitudes.iter().map(|c| c.norm_sqr()))
    }

    /// Probability that measuring the ancilla yields 1 (the good state).
    pub fn ancilla_one_probability(&self) -> f64 {
        compensated_sum(
            self.amplitudes
                .iter()
                .skip(1)
                .step_by(2)
                .map(|c| c.norm_sqr()),
        )
    }

    fn is_zero_state(&self) -> bool {
        (self.amplitudes[0] - Complex64::new(1.0, 0.0)).norm() < PRECONDITION_TOL
            && self.amplitudes[1..]
                .iter()
                .all(|c| c.norm() < PRECONDITION_TOL)
    }

    fn ancilla_is_zero(&self) -> bool {
        self.amplitudes
            .iter()
            .skip(1)
            .step_by(2)
            .all(|c| c.norm() < PRECONDITION_TOL)
    }

    fn hadamard_domain(&mut self, j: usize) {
        let bit = 1usize << (j + 1);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i | bit]);
                self.amplitudes[i] = (a0 + a1) * h;
                self.amplitudes[i | bit] = (a0 - a1) * h;
            }
        }
    }

    /// `Ry(angle)` on the ancilla, applied where every bit of `control_mask`
    /// is set.
    fn ry_ancilla(&mut self, angle: f64, control_mask: usize) {
        let (s, c) = (angle / 2.0).sin_cos();
        for i in (0..self.amplitudes.len()).step_by(2) {
            if i & control_mask == control_mask {
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[i + 1]);
                self.amplitudes[i] = a0 * c - a1 * s;
                self.amplitudes[i + 1] = a0 * s + a1 * c;
            }
        }
    }

    fn p_layer(&mut self) {
        for j in 0..self.n {
            self.hadamard_domain(j);
        }
    }

    fn r_gates(&mut self, problem: &IntegralProblem, inverse: bool) {
        let n = self.n;
        let sign = if inverse { -1.0 } else { 1.0 };
        let offset = problem.b_max / (1u64 << n) as f64;
        let controlled = |j: usize| problem.b_max * (1u64 << j) as f64 / (1u64 << (n - 1)) as f64;
        // all rotations share the Y axis and commute, order is immaterial
        self.ry_ancilla(sign * offset, 0);
        for j in 0..n {
            self.ry_ancilla(sign * controlled(j), 1 << (j + 1));
        }
    }

    fn a_forward(&mut self, problem: &IntegralProblem) {
        self.p_layer();
        self.r_gates(problem, false);
    }

    fn a_inverse(&mut self, problem: &IntegralProblem) {
        self.r_gates(problem, true);
        self.p_layer();
    }

    fn check_width(&self, problem: &IntegralProblem) -> Result<()> {
        if self.n != problem.n {
            return Err(Error::usage(format!(
                "state has {} domain qubits, problem has {}",
                self.n, problem.n
            )));
        }
        Ok(())
    }
}

/// `P (x) I`: uniform superposition over the domain register. The state must
/// be `|0>`.
pub fn apply_p(state: &mut StateVector) -> Result<()> {
    if !state.is_zero_state() {
        return Err(Error::usage("P expects the all-zero state"));
    }
    state.p_layer();
    Ok(())
}

/// `R`: loads `sin((x + 1/2) b_max / 2^n)` into the ancilla amplitude of every
/// `|x>`. Every component must have its ancilla in `|0>`.
pub fn apply_r(state: &mut StateVector, problem: &IntegralProblem) -> Result<()> {
    state.check_width(problem)?;
    if !state.ancilla_is_zero() {
        return Err(Error::usage(
            "R expects the ancilla in |0> on every component",
        ));
    }
    state.r_gates(problem, false);
    Ok(())
}

/// Per-`x` ancilla rotation for an arbitrary integrand: `|x>|0>` goes to
/// `sqrt(f(x))|1> + sqrt(1 - f(x))|0>`.
pub fn apply_rotation_table<F: Integrand>(state: &mut StateVector, f: &F) -> Result<()> {
    if f.domain_qubits() != state.n {
        return Err(Error::usage("integrand width does not match the state"));
    }
    if !state.ancilla_is_zero() {
        return Err(Error::usage(
            "rotation expects the ancilla in |0> on every component",
        ));
    }
    for x in 0..1usize << state.n {
        let v = f.value(x);
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!("f({x}) = {v} outside [0, 1]")));
        }
        let i = x << 1;
        let a0 = state.amplitudes[i];
        state.amplitudes[i] = a0 * (1.0 - v).sqrt();
        state.amplitudes[i + 1] = a0 * v.sqrt();
    }
    Ok(())
}

/// `A|0> = R (P (x) I) |0>`.
pub fn prepare(problem: &IntegralProblem) -> Result<StateVector> {
    let mut s = StateVector::zero(problem.n)?;
    apply_p(&mut s)?;
    apply_r(&mut s, problem)?;
    Ok(s)
}

/// Apply `Q = U_psi U_0` `times` times.
pub fn apply_q(state: &mut StateVector, problem: &IntegralProblem, times: u64) -> Result<()> {
    state.check_width(problem)?;
    for _ in 0..times {
        // U_0: negate the ancilla-0 components
        for amp in state.amplitudes.iter_mut().step_by(2) {
            *amp = -*amp;
        }
        // U_psi = A (I - 2|0><0|) A^dagger
        state.a_inverse(problem);
        state.amplitudes[0] = -state.amplitudes[0];
        state.a_forward(problem);
    }
    Ok(())
}

/// Good-state probability of `Q^m A|0>`.
pub fn amplified_ancilla_probability(problem: &IntegralProblem, m: u64) -> Result<f64> {
    let mut s = prepare(problem)?;
    apply_q(&mut s, problem, m)?;
    Ok(s.ancilla_one_probability())
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralEstimate {
    pub s_hat: f64,
    pub ml: MLResult,
    pub hits: Vec<u64>,
    /// Bounds evaluated at the exact sum.
    pub bounds: BoundReport,
}

/// Estimate `S` by measuring the ancilla of `Q^{m_k} A|0>` `N_k` times for
/// each schedule entry and maximising the combined likelihood.
pub fn estimate_integral(
    problem: &IntegralProblem,
    schedule: &Schedule,
    config: &MLConfig,
    seed: u64,
) -> Result<IntegralEstimate> {
    let probabilities = ancilla_probabilities(problem, schedule)?;
    estimate_from_probabilities(problem, schedule, &probabilities, config, seed)
}

/// Ancilla-1 probability for every schedule entry, from the statevector.
pub fn ancilla_probabilities(problem: &IntegralProblem, schedule: &Schedule) -> Result<Vec<f64>> {
    // depths are usually non-decreasing; walk the state forward when they are
    let mut state = prepare(problem)?;
    let mut current = 0u64;
    schedule
        .depths()
        .map(|m| {
            if m < current {
                state = prepare(problem)?;
                current = 0;
            }
            apply_q(&mut state, problem, m - current)?;
            current = m;
            Ok(state.ancilla_one_probability())
        })
        .collect()
}

/// [`estimate_integral`] with the per-entry probabilities precomputed by
/// [`ancilla_probabilities`], for repeated seeded trials.
pub fn estimate_from_probabilities(
    problem: &IntegralProblem,
    schedule: &Schedule,
    probabilities: &[f64],
    config: &MLConfig,
    seed: u64,
) -> Result<IntegralEstimate> {
    if probabilities.len() != schedule.len() {
        return Err(Error::usage("one probability per schedule entry required"));
    }
    let data = sample_with_probabilities(schedule, probabilities.iter().copied(), seed);
    let ml = ml_estimate(&data, schedule, config)?;
    let bounds = BoundReport::new(schedule, exact_sum(problem))?;
    Ok(IntegralEstimate {
        s_hat: ml.a_hat,
        ml,
        hits: data.hits,
        bounds,
    })
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let lhs = self[(i, k)];
                if lhs == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.data[i * d + j] += lhs * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|c| c * factor).collect(),
        }
    }

    /// Largest elementwise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

/// Matrix of [`apply_q`] (one application), column by column.
pub fn q_matrix_from_circuit(problem: &IntegralProblem) -> Result<DenseMatrix> {
    let dim = 1usize << (problem.n + 1);
    let mut m = DenseMatrix::zeros(dim);
    for col in 0..dim {
        let mut s = StateVector::basis(problem.n, col)?;
        apply_q(&mut s, problem, 1)?;
        for (row, amp) in s.amplitudes.iter().enumerate() {
            m[(row, col)] = *amp;
        }
    }
    Ok(m)
}

/// `Q = -A S_0 A^-1 S_chi` assembled from explicit matrices: `P` as the
/// Walsh–Hadamard matrix, `R` as the block-diagonal rotation by `t_x`,
/// `S_0 = I - 2|0><0|` and `S_chi` negating the ancilla-1 components.
pub fn q_matrix_literal(problem: &IntegralProblem) -> DenseMatrix {
    let n = problem.n;
    let dim = 1usize << (n + 1);
    let norm = ((1u64 << n) as f64).sqrt().recip();

    let mut p = DenseMatrix::zeros(dim);
    for y in 0..1usize << n {
        for x in 0..1usize << n {
            let sign = if (x & y).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            for anc in 0..2 {
                p[((y << 1) | anc, (x << 1) | anc)] = Complex64::new(sign * norm, 0.0);
            }
        }
    }

    let mut r = DenseMatrix::zeros(dim);
    for x in 0..1usize << n {
        let (s, c) = problem.angle(x).sin_cos();
        let (i0, i1) = (x << 1, (x << 1) | 1);
        r[(i0, i0)] = Complex64::new(c, 0.0);
        r[(i0, i1)] = Complex64::new(-s, 0.0);
        r[(i1, i0)] = Complex64::new(s, 0.0);
        r[(i1, i1)] = Complex64::new(c, 0.0);
    }

    let a = r.mul(&p);
    let mut s0 = DenseMatrix::identity(dim);
    s0[(0, 0)] = Complex64::new(-1.0, 0.0);
    let mut s_chi = DenseMatrix::identity(dim);
    for i in (1..dim).step_by(2) {
        s_chi[(i, i)] = Complex64::new(-1.0, 0.0);
    }
    a.mul(&s0).mul(&a.adjoint()).mul(&s_chi).scale(-1.0)
}
