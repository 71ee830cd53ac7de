//! Coherent-amplitude generators `ℒ^(αβ)`, their contraction semigroups, and
//! matrix elements of the cocycle `U_t` between exponential vectors of simple
//! functions.
//!
//! `U_t` itself lives on `ℋ ⊗ ℱ` and is never formed. For `ψ_i = u_i ⊗ e(f_i)`
//! with piecewise-constant `f_i`, the cocycle property reduces
//! `⟨ψ₁, U_t ψ₂⟩` to an ordered product of finite-dimensional semigroups,
//! one per interval of the common refinement.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::QsdeCoefficients;
use crate::operator::{matrix_exponential, CVector, Operator, C64};

/// Test amplitudes `α, β ∈ ℂⁿ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldAmplitudes {
    alpha: Vec<C64>,
    beta: Vec<C64>,
}

impl FieldAmplitudes {
    pub fn new(alpha: Vec<C64>, beta: Vec<C64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("amplitudes need at least one channel".into()));
        }
        if alpha.len() != beta.len() {
            return Err(Error::ChannelMismatch { expected: alpha.len(), found: beta.len() });
        }
        if !alpha.iter().chain(&beta).all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { alpha, beta })
    }

    pub fn vacuum(n: usize) -> Self {
        Self { alpha: vec![C64::new(0.0, 0.0); n], beta: vec![C64::new(0.0, 0.0); n] }
    }

    /// The same pair `(α, β)` on every channel.
    pub fn uniform(n: usize, alpha: C64, beta: C64) -> Self {
        Self { alpha: vec![alpha; n], beta: vec![beta; n] }
    }

    pub fn alpha(&self) -> &[C64] {
        &self.alpha
    }

    pub fn beta(&self) -> &[C64] {
        &self.beta
    }

    pub fn channels(&self) -> usize {
        self.alpha.len()
    }

    /// `(|α|² + |β|²) / 2`.
    pub fn half_norm_sq(&self) -> f64 {
        let a: f64 = self.alpha.iter().map(|z| z.norm_sqr()).sum();
        let b: f64 = self.beta.iter().map(|z| z.norm_sqr()).sum();
        0.5 * (a + b)
    }

    pub(crate) fn check_channels(&self, n: usize) -> Result<()> {
        if self.channels() != n {
            return Err(Error::ChannelMismatch { expected: n, found: self.channels() });
        }
        Ok(())
    }
}

/// `ℒ^(αβ) = Σ α_i* N_ij β_j + Σ α_i* M_i + Σ L_i β_i + K - (|α|²+|β|²)/2`.
pub fn generator(c: &QsdeCoefficients, amp: &FieldAmplitudes) -> Result<Operator> {
    amp.check_channels(c.channels())?;
    let (alpha, beta) = (amp.alpha(), amp.beta());
    let mut gen = c.k_op.clone();
    for (i, row) in c.n_ops.iter().enumerate() {
        for (j, nij) in row.iter().enumerate() {
            gen += &nij.scale(alpha[i].conj() * beta[j]);
        }
    }
    for (i, (m, l)) in c.m_ops.iter().zip(&c.l_ops).enumerate() {
        gen += &m.scale(alpha[i].conj());
        gen += &l.scale(beta[i]);
    }
    gen += &Operator::identity(c.space()).scale_real(-amp.half_norm_sq());
    Ok(gen)
}

/// `T_t = exp(t ℒ^(αβ))`.
pub fn evolve(c: &QsdeCoefficients, amp: &FieldAmplitudes, t: f64) -> Result<Operator> {
    matrix_exponential(&generator(c, amp)?, t)
}

/// `grid_points` equally spaced times on `[0, t_max]`, both ends included.
pub fn time_grid(t_max: f64, grid_points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("horizon T = {t_max} must be positive")));
    }
    if grid_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "time grid needs at least 2 points, got {grid_points}"
        )));
    }
    let last = (grid_points - 1) as f64;
    Ok((0..grid_points)
        .map(|i| if i + 1 == grid_points { t_max } else { t_max * i as f64 / last })
        .collect())
}

/// `exp(t ℒ)` for every `t` in `times`, in order. Each point is an
/// independent exponential, so the result does not depend on how rayon
/// splits the work.
pub fn evolve_on_grid(gen: &Operator, times: &[f64]) -> Result<Vec<Operator>> {
    times.par_iter().map(|&t| matrix_exponential(gen, t)).collect()
}

/// A piecewise-constant `f: [0, t] → ℂⁿ`, equal to `values[j]` on
/// `[breakpoints[j], breakpoints[j+1])`.
#[derive(Clone, Debug, PartialEq)]
pub struct SimpleFunction {
    breakpoints: Vec<f64>,
    values: Vec<Vec<C64>>,
}

impl SimpleFunction {
    pub fn new(breakpoints: Vec<f64>, values: Vec<Vec<C64>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument("a simple function needs at least one interval".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::DomainMismatch(format!(
                "partition must start at 0, starts at {}",
                breakpoints[0]
            )));
        }
        if breakpoints.windows(2).any(|w| !(w[1] > w[0]) || !w[1].is_finite()) {
            return Err(Error::InvalidArgument("breakpoints must be strictly increasing".into()));
        }
        if values.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidArgument(format!(
                "{} intervals but {} values",
                breakpoints.len() - 1,
                values.len()
            )));
        }
        let n = values[0].len();
        if n == 0 || values.iter().any(|v| v.len() != n) {
            return Err(Error::InvalidArgument("all values must share one nonzero channel count".into()));
        }
        Ok(Self { breakpoints, values })
    }

    /// `f ≡ value` on `[0, t]`.
    pub fn constant(t: f64, value: Vec<C64>) -> Result<Self> {
        Self::new(vec![0.0, t], vec![value])
    }

    pub fn zero(t: f64, n: usize) -> Result<Self> {
        Self::constant(t, vec![C64::new(0.0, 0.0); n])
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Vec<C64>] {
        &self.values
    }

    pub fn end(&self) -> f64 {
        *self.breakpoints.last().expect("nonempty")
    }

    pub fn channels(&self) -> usize {
        self.values[0].len()
    }

    /// `∫ |f(s)|² ds`, exact for piecewise-constant `f`.
    pub fn norm_sq(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (w[1] - w[0]) * v.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// `‖e(f)‖ = exp(½ ∫|f|²)`.
    pub fn exponential_vector_norm(&self) -> f64 {
        (0.5 * self.norm_sq()).exp()
    }

    /// Value on the interval containing `s` (right-open intervals).
    pub fn value_at(&self, s: f64) -> &[C64] {
        let idx = self.breakpoints[1..self.breakpoints.len() - 1].partition_point(|&b| b <= s);
        &self.values[idx]
    }

    /// Splits the interval containing `s` at `s`; no-op on an existing
    /// breakpoint or outside `(0, end)`.
    pub fn refined_at(&self, s: f64) -> Self {
        if !(s > 0.0 && s < self.end()) || self.breakpoints.contains(&s) {
            return self.clone();
        }
        let pos = self.breakpoints.partition_point(|&b| b < s);
        let mut breakpoints = self.breakpoints.clone();
        let mut values = self.values.clone();
        breakpoints.insert(pos, s);
        values.insert(pos, values[pos - 1].clone());
        Self { breakpoints, values }
    }
}

/// `⟨u₁ ⊗ e(f₁), U_t u₂ ⊗ e(f₂)⟩`.
pub fn matrix_element_u(
    c: &QsdeCoefficients,
    u1: &CVector,
    u2: &CVector,
    f1: &SimpleFunction,
    f2: &SimpleFunction,
    t: f64,
) -> Result<C64> {
    if u1.len() != c.dim() || u2.len() != c.dim() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {} for a family of dimension {}",
            u1.len(),
            u2.len(),
            c.dim()
        )));
    }
    for f in [f1, f2] {
        if f.end() != t {
            return Err(Error::DomainMismatch(format!(
                "simple function ends at {}, expected {t}",
                f.end()
            )));
        }
        if f.channels() != c.channels() {
            return Err(Error::ChannelMismatch { expected: c.channels(), found: f.channels() });
        }
    }

    let mut cuts: Vec<f64> = f1.breakpoints().iter().chain(f2.breakpoints()).copied().collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    // ordered product T_{Δ0} T_{Δ1} ⋯ applied to u2, innermost (last interval) first
    let mut v = u2.clone();
    for w in cuts.windows(2).rev() {
        let amp = FieldAmplitudes::new(f1.value_at(w[0]).to_vec(), f2.value_at(w[0]).to_vec())?;
        v = evolve(c, &amp, w[1] - w[0])?.apply(&v);
    }
    let weight = f1.exponential_vector_norm() * f2.exponential_vector_norm();
    Ok(u1.dotc(&v) * weight)
}

/// `ℒ + ℒ† = -Σ_i V_i† V_i` with `V_i = L_i† - β_i + Σ_j N_ji† α_j`, the
/// sum-of-squares form that holds whenever the Hudson–Parthasarathy
/// relations do.
pub fn dissipation_sum_of_squares(c: &QsdeCoefficients, amp: &FieldAmplitudes) -> Result<Operator> {
    amp.check_channels(c.channels())?;
    let (alpha, beta) = (amp.alpha(), amp.beta());
    let id = Operator::identity(c.space());
    let mut total = Operator::zeros(c.space());
    for i in 0..c.channels() {
        let mut v = &c.l_ops[i].adjoint() - &id.scale(beta[i]);
        for (j, a) in alpha.iter().enumerate() {
            v += &c.n_ops[j][i].adjoint().scale(*a);
        }
        total += &(&v.adjoint() * &v);
    }
    Ok(-total)
}

/// Largest eigenvalue of `ℒ^(αβ) + ℒ^(αβ)†`: nonpositive exactly when the
/// semigroup is contractive. Returned signed so shifts of `K` show up
/// one-to-one.
pub fn dissipativity_check(c: &QsdeCoefficients, amp: &FieldAmplitudes) -> Result<f64> {
    let gen = generator(c, amp)?;
    Ok((&gen + &gen.adjoint()).max_hermitian_eigenvalue())
}
