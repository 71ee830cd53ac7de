//! Numerical witnesses for both directions of the Trotter–Kato equivalence:
//! generator residuals along corrected vectors `u + u₁/k + u₂/k²`, and
//! sup-over-time gaps between prelimit and limit semigroups. Also the
//! cutoff-truncation study for limit families with `N = I`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elimination::{eliminate_with_cond_limit, EliminationResult};
use crate::error::{Error, Result};
use crate::model::{assemble, structural_validate, QsdeCoefficients, ScaledFamily};
use crate::models::Fixture;
use crate::operator::{
    matrix_exponential, matrix_spectral_norm, max_hermitian_eigenvalue, restricted_inverse, CMatrix, CVector, HilbertSpace, Operator,
    SubspacePair, C64, DEFAULT_COND_LIMIT,
};
use crate::semigroup::{generator, time_grid, FieldAmplitudes};

/// Residuals and gaps below this are treated as exact zeros by [`rate_fit`].
pub const NUMERICAL_FLOOR: f64 = 1e-14;

/// Relative change above which a re-run flags the original report.
pub const ADEQUACY_TOLERANCE: f64 = 0.1;

/// Slope a generator study must reach.
pub const GENERATOR_SLOPE_BOUND: f64 = -0.85;

pub const DEFAULT_K_SCHEDULE: [f64; 6] = [2.0, 4.0, 8.0, 16.0, 32.0, 64.0];

/// `A^(αβ) = Σ F_iβ_i − Σ α_i* W_ij F_j† + A` and
/// `B^(αβ) = Σ α_i* W_ij β_j + Σ G_iβ_i − Σ α_i* W_ij G_j† + B − ½(|α|²+|β|²)`,
/// so that `ℒ^(k;αβ) = k²Y + kA^(αβ) + B^(αβ)`.
pub fn field_dressed_parts(fam: &ScaledFamily, amp: &FieldAmplitudes) -> Result<(Operator, Operator)> {
    let n = fam.channels();
    if amp.channels() != n {
        return Err(Error::ChannelMismatch { expected: n, found: amp.channels() });
    }
    let (alpha, beta) = (amp.alpha(), amp.beta());
    let mut a_op = fam.a.clone();
    let mut b_op = fam.b.clone();
    for i in 0..n {
        a_op += &fam.f_ops[i].scale(beta[i]);
        b_op += &fam.g_ops[i].scale(beta[i]);
        let ai = alpha[i].conj();
        for j in 0..n {
            let w = &fam.w_ops[i][j];
            a_op -= &(w * &fam.f_ops[j].adjoint()).scale(ai);
            b_op -= &(w * &fam.g_ops[j].adjoint()).scale(ai);
            b_op += &w.scale(ai * beta[j]);
        }
    }
    b_op -= &Operator::identity(fam.space()).scale_real(amp.half_norm_sq());
    Ok((a_op, b_op))
}

/// The corrected vector `u_k = u + u₁/k + u₂/k²`.
#[derive(Clone, Debug, PartialEq)]
pub struct KurtzCorrector {
    pub u: CVector,
    pub u1: CVector,
    pub u2: CVector,
}

impl KurtzCorrector {
    pub fn at(&self, k: f64) -> CVector {
        &self.u + &self.u1 / C64::new(k, 0.0) + &self.u2 / C64::new(k * k, 0.0)
    }
}

fn check_slow_vector(sub: &SubspacePair, u: &CVector, tol: f64) -> Result<()> {
    if u.len() != sub.space().total_dim() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} on {}",
            u.len(),
            sub.space()
        )));
    }
    let leak = (sub.p1().apply(u)).norm();
    if leak > tol * u.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!("u is not supported on the slow subspace (|P1 u| = {leak:e})")));
    }
    Ok(())
}

/// `u₁ = −ỸA^(αβ)u`, `u₂ = −ỸP₁(B^(αβ) − A^(αβ)ỸA^(αβ))u`.
pub fn kurtz_corrector(
    fam: &ScaledFamily,
    sub: &SubspacePair,
    amp: &FieldAmplitudes,
    u: &CVector,
    tol: f64,
) -> Result<KurtzCorrector> {
    let report = structural_validate(fam, sub, tol, DEFAULT_COND_LIMIT);
    if !report.overall {
        return Err(Error::PreconditionFailed(Box::new(report)));
    }
    let y_tilde = restricted_inverse(&fam.y, sub, tol, DEFAULT_COND_LIMIT)?;
    corrector_with_inverse(fam, sub, &y_tilde, amp, u, tol)
}

/// As [`kurtz_corrector`] with a precomputed `Ỹ`; structural validity is
/// the caller's responsibility.
pub fn corrector_with_inverse(
    fam: &ScaledFamily,
    sub: &SubspacePair,
    y_tilde: &Operator,
    amp: &FieldAmplitudes,
    u: &CVector,
    tol: f64,
) -> Result<KurtzCorrector> {
    check_slow_vector(sub, u, tol)?;
    let (a_op, b_op) = field_dressed_parts(fam, amp)?;
    let au = a_op.apply(u);
    let u1 = -y_tilde.apply(&au);
    let inner = b_op.apply(u) + a_op.apply(&u1);
    let u2 = -y_tilde.apply(&sub.p1().apply(&inner));
    Ok(KurtzCorrector { u: u.clone(), u1, u2 })
}

/// `(‖Yu‖, ‖Yu₁ + A^(αβ)u‖)`: the coefficients of `k²` and `k` in
/// `ℒ^(k;αβ)u_k`, both zero in exact arithmetic.
pub fn cancellation_residuals(fam: &ScaledFamily, amp: &FieldAmplitudes, corr: &KurtzCorrector) -> Result<(f64, f64)> {
    let (a_op, _) = field_dressed_parts(fam, amp)?;
    let k2 = fam.y.apply(&corr.u).norm();
    let k1 = (fam.y.apply(&corr.u1) + a_op.apply(&corr.u)).norm();
    Ok((k2, k1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correction {
    /// `u_k = u + u₁/k + u₂/k²`.
    Corrected,
    /// `u_k = u`.
    Bare,
}

/// `‖ℒ^(k;αβ)u_k − E ℒ^(αβ) E†u‖` with `E` the compression isometry of
/// `elim`.
pub fn generator_residual(
    fam: &ScaledFamily,
    elim: &EliminationResult,
    amp: &FieldAmplitudes,
    corr: &KurtzCorrector,
    k: f64,
    mode: Correction,
) -> Result<f64> {
    let prelimit = generator(&assemble(fam, k)?, amp)?;
    let uk = match mode {
        Correction::Corrected => corr.at(k),
        Correction::Bare => corr.u.clone(),
    };
    let lhs = prelimit.apply(&uk);
    Ok((lhs - limit_action(elim, amp, &corr.u)?).norm())
}

/// `E ℒ^(αβ) E† u`.
pub fn limit_action(elim: &EliminationResult, amp: &FieldAmplitudes, u: &CVector) -> Result<CVector> {
    let lim = generator(&elim.limit, amp)?;
    let slow = elim.compression.adjoint() * u;
    Ok(&elim.compression * lim.matrix() * slow)
}

/// Samples per unit of `‖ℒ‖ t` inside each grid interval.
const SAMPLES_PER_UNIT_PHASE: f64 = 4.0;

/// Upper bound on the total number of sampled times.
pub const MAX_TIME_SAMPLES: usize = 1 << 22;

/// One side of a propagator comparison: the time-dependent block
/// `left · exp(tℒ) · right`, with `None` standing for the identity.
struct Side<'a> {
    gen: &'a Operator,
    left: Option<&'a CMatrix>,
    right: Option<&'a CMatrix>,
}

impl Side<'_> {
    fn rows_at(&self, t: f64) -> Result<CMatrix> {
        let p = matrix_exponential(self.gen, t)?.into_matrix();
        Ok(match self.left {
            Some(l) => l * p,
            None => p,
        })
    }

    fn finish(&self, rows: &CMatrix) -> CMatrix {
        match self.right {
            Some(r) => rows * r,
            None => rows.clone(),
        }
    }
}

/// `‖D‖ = √λ_max(DD†)`, cheap for the short, wide blocks compared here.
fn wide_spectral_norm(d: &CMatrix) -> f64 {
    if d.nrows() > d.ncols() {
        return matrix_spectral_norm(d);
    }
    max_hermitian_eigenvalue(&(d * d.adjoint())).max(0.0).sqrt()
}

/// `max_t ‖a(t) − b(t)‖` over the grid points and, inside each grid
/// interval, over a uniform subdivision fine enough to resolve the faster
/// of the two generators. Inside an interval the blocks are advanced by
/// multiplication with the one-step exponential.
fn sampled_sup(a: &Side, b: &Side, times: &[f64]) -> Result<f64> {
    let rate = a.gen.spectral_norm().max(b.gen.spectral_norm());
    let substeps: Vec<usize> = times
        .windows(2)
        .map(|w| ((w[1] - w[0]) * rate * SAMPLES_PER_UNIT_PHASE).ceil().max(1.0) as usize)
        .collect();
    let total: usize = substeps.iter().sum();
    if total > MAX_TIME_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "resolving the generator scale {rate:e} needs {total} time samples (limit {MAX_TIME_SAMPLES})"
        )));
    }
    let gap = |xa: &CMatrix, xb: &CMatrix| wide_spectral_norm(&(a.finish(xa) - b.finish(xb)));
    let per_interval: Vec<f64> = (0..times.len() - 1)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let (t0, m) = (times[i], substeps[i]);
            let h = (times[i + 1] - t0) / m as f64;
            let step_a = matrix_exponential(a.gen, h)?.into_matrix();
            let step_b = matrix_exponential(b.gen, h)?.into_matrix();
            let mut xa = a.rows_at(t0)?;
            let mut xb = b.rows_at(t0)?;
            let mut best = gap(&xa, &xb);
            for _ in 1..m {
                xa = &xa * &step_a;
                xb = &xb * &step_b;
                best = best.max(gap(&xa, &xb));
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let t_end = *times.last().expect("grid has at least two points");
    let end = gap(&a.rows_at(t_end)?, &b.rows_at(t_end)?);
    Ok(per_interval.into_iter().fold(end, f64::max))
}

/// `sup_t ‖T^(k)_t† E − E T_t†‖` on `[0, T]`, sampled on a uniform grid of
/// `grid_points` times and refined inside each interval to the time scale
/// of the prelimit generator.
pub fn semigroup_gap(
    fam: &ScaledFamily,
    elim: &EliminationResult,
    amp: &FieldAmplitudes,
    t_max: f64,
    grid_points: usize,
    k: f64,
) -> Result<f64> {
    let times = time_grid(t_max, grid_points)?;
    let gen_k = generator(&assemble(fam, k)?, amp)?;
    let gen_lim = generator(&elim.limit, amp)?;
    // ‖T_k† E − E T†‖ = ‖E† T_k − T E†‖
    let e_dag = elim.compression.adjoint();
    sampled_sup(
        &Side { gen: &gen_k, left: Some(&e_dag), right: None },
        &Side { gen: &gen_lim, left: None, right: Some(&e_dag) },
        &times,
    )
}

/// Least-squares slope of `log(residual)` against `log(k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    /// Indices of points below [`NUMERICAL_FLOOR`], left out of the fit.
    pub excluded: Vec<usize>,
}

pub fn rate_fit(ks: &[f64], residuals: &[f64]) -> Result<RateFit> {
    if ks.len() != residuals.len() {
        return Err(Error::InvalidArgument(format!(
            "{} schedule points but {} residuals",
            ks.len(),
            residuals.len()
        )));
    }
    if ks.len() < 3 {
        return Err(Error::InsufficientData(format!("rate fit needs at least 3 points, got {}", ks.len())));
    }
    if let Some(k) = ks.iter().find(|k| !(**k > 0.0 && k.is_finite())) {
        return Err(Error::InvalidArgument(format!("schedule value {k} is not positive")));
    }
    if let Some(r) = residuals.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(Error::InvalidArgument(format!("residual {r} is negative or not finite")));
    }
    let mut excluded = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, (&k, &r)) in ks.iter().zip(residuals).enumerate() {
        if r < NUMERICAL_FLOOR {
            excluded.push(i);
        } else {
            xs.push(k.ln());
            ys.push(r.ln());
        }
    }
    if xs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "only {} points above the numerical floor {NUMERICAL_FLOOR:e}",
            xs.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("schedule values are all equal".into()));
    }
    Ok(RateFit { slope: sxy / sxx, excluded })
}

/// Compresses a limit family to the first `cutoff + 1` states of its last
/// tensor factor: `K → PKP`, `L_i → PL_iP`, `M_i = −L_i†`, `N = I`.
pub fn truncate_family(c: &QsdeCoefficients, cutoff: usize, tol: f64) -> Result<QsdeCoefficients> {
    let p = last_factor_window(c.space(), cutoff + 1)?;
    check_identity_scattering(c, tol)?;
    let k = &(&p * &c.k_op) * &p;
    let l: Vec<Operator> = c.l_ops.iter().map(|l| &(&p * l) * &p).collect();
    let n = c.n_ops.clone();
    QsdeCoefficients::with_derived_m(k, l, n)
}

fn check_identity_scattering(c: &QsdeCoefficients, tol: f64) -> Result<()> {
    let id = Operator::identity(c.space());
    let mut dev: f64 = 0.0;
    for (i, row) in c.n_ops.iter().enumerate() {
        for (j, nij) in row.iter().enumerate() {
            let d = if i == j { (nij - &id).spectral_norm() } else { nij.spectral_norm() };
            dev = dev.max(d);
        }
    }
    if dev > tol {
        return Err(Error::NonIdentityScattering(dev));
    }
    Ok(())
}

/// `I ⊗ … ⊗ Π` with `Π` the projection onto the first `states` basis
/// vectors of the last factor.
pub fn last_factor_window(space: &HilbertSpace, states: usize) -> Result<Operator> {
    let dims = space.factor_dims();
    let last = *dims.last().expect("nonempty space");
    if states == 0 || states > last {
        return Err(Error::InvalidArgument(format!(
            "window of {states} states does not fit a last factor of dimension {last}"
        )));
    }
    let diag: Vec<C64> = (0..space.total_dim())
        .map(|i| if i % last < states { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        .collect();
    Operator::from_diagonal(space, &diag)
}

fn window_isometry(space: &HilbertSpace, states: usize) -> Result<CMatrix> {
    let p = last_factor_window(space, states)?;
    let cols: Vec<usize> = (0..space.total_dim()).filter(|&i| p.matrix()[(i, i)].re == 1.0).collect();
    let mut e = CMatrix::zeros(space.total_dim(), cols.len());
    for (c, &i) in cols.iter().enumerate() {
        e[(i, c)] = C64::new(1.0, 0.0);
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StudyKind {
    Generator,
    Semigroup,
    Truncation,
}

impl StudyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            StudyKind::Generator => "generator",
            StudyKind::Semigroup => "semigroup",
            StudyKind::Truncation => "truncation",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converging,
    NotConverging,
    CutoffSuspect,
    GridSuspect,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Converging)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub fixture: String,
    pub kind: StudyKind,
    /// `k` values, or for truncation studies the larger cutoff of each
    /// compared pair.
    pub schedule: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_rate: Option<f64>,
    pub excluded: Vec<usize>,
    pub t_max: Option<f64>,
    pub grid_points: Option<usize>,
    pub alpha: Vec<C64>,
    pub beta: Vec<C64>,
    pub tol: f64,
    pub decay_ok: bool,
    pub cutoff_suspect: bool,
    pub grid_suspect: bool,
    pub verdict: Verdict,
}

impl ConvergenceReport {
    fn finish(&mut self) {
        self.verdict = if !self.decay_ok {
            Verdict::NotConverging
        } else if self.cutoff_suspect {
            Verdict::CutoffSuspect
        } else if self.grid_suspect {
            Verdict::GridSuspect
        } else {
            Verdict::Converging
        };
    }
}

/// Whether two runs agree to within [`ADEQUACY_TOLERANCE`] pointwise.
pub fn runs_agree(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len()
        && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= ADEQUACY_TOLERANCE * x.abs().max(y.abs()) + 1e-12)
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub k_schedule: Vec<f64>,
    pub t_max: f64,
    pub grid_points: usize,
    pub amp: FieldAmplitudes,
    pub tol: f64,
    pub cond_limit: f64,
    /// Re-run at doubled grid resolution and flag disagreement.
    pub check_grid: bool,
}

impl StudyConfig {
    pub fn new(amp: FieldAmplitudes) -> Self {
        Self {
            k_schedule: DEFAULT_K_SCHEDULE.to_vec(),
            t_max: 2.0,
            grid_points: 64,
            amp,
            tol: 1e-9,
            cond_limit: DEFAULT_COND_LIMIT,
            check_grid: false,
        }
    }

    fn check_schedule(&self) -> Result<()> {
        if self.k_schedule.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "schedule needs at least 3 values, got {}",
                self.k_schedule.len()
            )));
        }
        if self.k_schedule.iter().any(|k| !(*k > 0.0 && k.is_finite()))
            || self.k_schedule.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidArgument("schedule must be increasing and positive".into()));
        }
        Ok(())
    }

    fn report(&self, fixture: &str, kind: StudyKind, schedule: Vec<f64>, values: Vec<f64>) -> ConvergenceReport {
        let timed = kind != StudyKind::Generator;
        ConvergenceReport {
            fixture: fixture.to_string(),
            kind,
            schedule,
            values,
            fitted_rate: None,
            excluded: Vec::new(),
            t_max: timed.then_some(self.t_max),
            grid_points: timed.then_some(self.grid_points),
            alpha: self.amp.alpha().to_vec(),
            beta: self.amp.beta().to_vec(),
            tol: self.tol,
            decay_ok: false,
            cutoff_suspect: false,
            grid_suspect: false,
            verdict: Verdict::NotConverging,
        }
    }
}

/// A fixed slow-space test vector: coordinates `(1 + i j)/‖·‖`, mapped
/// through the slow basis of `sub`.
pub fn default_slow_coordinates(rank: usize) -> CVector {
    let v = CVector::from_fn(rank, |j, _| C64::new(1.0, 0.5 * j as f64));
    let n = v.norm();
    v / C64::new(n, 0.0)
}

fn fit_into(report: &mut ConvergenceReport) -> Result<()> {
    match rate_fit(&report.schedule, &report.values) {
        Ok(fit) => {
            report.fitted_rate = Some(fit.slope);
            report.excluded = fit.excluded;
        }
        Err(Error::InsufficientData(_)) if report.values.len() >= 3 => {
            report.excluded = (0..report.values.len()).filter(|&i| report.values[i] < NUMERICAL_FLOOR).collect();
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn generator_values(fx: &Fixture, cfg: &StudyConfig, slow: &CVector) -> Result<Vec<f64>> {
    let elim = eliminate_with_cond_limit(&fx.family, &fx.sub, cfg.tol, cfg.cond_limit)?;
    let u = &elim.compression * slow;
    let corr = corrector_with_inverse(&fx.family, &fx.sub, &elim.y_tilde, &cfg.amp, &u, cfg.tol)?;
    cfg.k_schedule
        .par_iter()
        .map(|&k| generator_residual(&fx.family, &elim, &cfg.amp, &corr, k, Correction::Corrected))
        .collect()
}

/// Corrected generator residuals over the `k` schedule. Passes when the
/// fitted slope is at most [`GENERATOR_SLOPE_BOUND`] or every residual is
/// below the numerical floor. `bumped`, when given, is the same fixture at
/// a larger cutoff; disagreement flags the report.
pub fn generator_study(fx: &Fixture, cfg: &StudyConfig, bumped: Option<&Fixture>) -> Result<ConvergenceReport> {
    cfg.check_schedule()?;
    let slow = default_slow_coordinates(fx.sub.rank());
    let values = generator_values(fx, cfg, &slow)?;
    let mut report = cfg.report(&fx.name, StudyKind::Generator, cfg.k_schedule.clone(), values);
    fit_into(&mut report)?;
    let all_floor = report.values.iter().all(|v| *v < NUMERICAL_FLOOR);
    report.decay_ok = all_floor || report.fitted_rate.is_some_and(|s| s <= GENERATOR_SLOPE_BOUND);
    if let Some(b) = bumped {
        let other = generator_values(b, cfg, &slow)?;
        report.cutoff_suspect = !runs_agree(&report.values, &other);
    }
    report.finish();
    Ok(report)
}

fn semigroup_values(fx: &Fixture, cfg: &StudyConfig, grid_points: usize) -> Result<Vec<f64>> {
    let elim = eliminate_with_cond_limit(&fx.family, &fx.sub, cfg.tol, cfg.cond_limit)?;
    cfg.k_schedule
        .iter()
        .map(|&k| semigroup_gap(&fx.family, &elim, &cfg.amp, cfg.t_max, grid_points, k))
        .collect()
}

fn nonincreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) || w[1] < NUMERICAL_FLOOR)
}

/// Semigroup gaps over the `k` schedule. Passes when the gaps never
/// increase and either decay with a negative fitted rate or all sit below
/// the numerical floor.
pub fn semigroup_study(fx: &Fixture, cfg: &StudyConfig, bumped: Option<&Fixture>) -> Result<ConvergenceReport> {
    cfg.check_schedule()?;
    let values = semigroup_values(fx, cfg, cfg.grid_points)?;
    let mut report = cfg.report(&fx.name, StudyKind::Semigroup, cfg.k_schedule.clone(), values);
    fit_into(&mut report)?;
    let all_floor = report.values.iter().all(|v| *v < NUMERICAL_FLOOR);
    report.decay_ok =
        all_floor || (nonincreasing(&report.values) && report.fitted_rate.is_some_and(|s| s < 0.0));
    if let Some(b) = bumped {
        report.cutoff_suspect = !runs_agree(&report.values, &semigroup_values(b, cfg, cfg.grid_points)?);
    }
    if cfg.check_grid {
        let fine = semigroup_values(fx, cfg, 2 * cfg.grid_points - 1)?;
        report.grid_suspect = !runs_agree(&report.values, &fine);
    }
    report.finish();
    Ok(report)
}

/// Adjoint-propagator gaps between successive truncations of `limit`
/// (given at its largest cutoff on the last tensor factor), measured on
/// the first `probe_states` states of that factor.
pub fn truncation_gaps(
    limit: &QsdeCoefficients,
    cutoffs: &[usize],
    amp: &FieldAmplitudes,
    t_max: f64,
    grid_points: usize,
    probe_states: usize,
    tol: f64,
) -> Result<Vec<f64>> {
    if cutoffs.len() < 2 || cutoffs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("need at least two increasing cutoffs".into()));
    }
    if probe_states == 0 || probe_states > cutoffs[0] + 1 {
        return Err(Error::InvalidArgument(format!(
            "probe of {probe_states} states must fit the smallest cutoff {}",
            cutoffs[0]
        )));
    }
    check_identity_scattering(limit, tol)?;
    let times = time_grid(t_max, grid_points)?;
    let probe = window_isometry(limit.space(), probe_states)?;
    let generators: Vec<Operator> = cutoffs
        .iter()
        .map(|&c| generator(&truncate_family(limit, c, tol)?, amp))
        .collect::<Result<_>>()?;
    let probe_dag = probe.adjoint();
    generators
        .windows(2)
        .map(|pair| {
            sampled_sup(
                &Side { gen: &pair[0], left: Some(&probe_dag), right: None },
                &Side { gen: &pair[1], left: Some(&probe_dag), right: None },
                &times,
            )
        })
        .collect()
}

/// Successive truncation gaps; passes when they strictly decrease (pairs
/// already below the numerical floor count as decreasing).
pub fn truncation_study(
    name: &str,
    limit: &QsdeCoefficients,
    cutoffs: &[usize],
    cfg: &StudyConfig,
    probe_states: usize,
) -> Result<ConvergenceReport> {
    let values = truncation_gaps(limit, cutoffs, &cfg.amp, cfg.t_max, cfg.grid_points, probe_states, cfg.tol)?;
    let schedule: Vec<f64> = cutoffs[1..].iter().map(|&c| c as f64).collect();
    let mut report = cfg.report(name, StudyKind::Truncation, schedule, values);
    if report.values.len() >= 3 {
        fit_into(&mut report)?;
    }
    report.decay_ok = report
        .values
        .windows(2)
        .all(|w| w[1] < w[0] || (w[0] < NUMERICAL_FLOOR && w[1] < NUMERICAL_FLOOR));
    if cfg.check_grid {
        let fine = truncation_gaps(limit, cutoffs, &cfg.amp, cfg.t_max, 2 * cfg.grid_points - 1, probe_states, cfg.tol)?;
        report.grid_suspect = !runs_agree(&report.values, &fine);
    }
    report.finish();
    Ok(report)
}

/// Default doubling cutoffs `4, 8, …` up to the family's largest cutoff.
pub fn doubling_cutoffs(limit: &QsdeCoefficients, smallest: usize) -> Vec<usize> {
    let largest = limit.space().factor_dims().last().copied().unwrap_or(1) - 1;
    let mut out = Vec::new();
    let mut c = smallest.max(1);
    while c <= largest {
        out.push(c);
        c *= 2;
    }
    if out.last() != Some(&largest) && largest >= smallest {
        out.push(largest);
    }
    out
}
