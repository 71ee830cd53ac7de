//! Hudson–Parthasarathy coefficient families, the singular scaling
//! `K(k) = k²Y + kA + B`, `L_i(k) = kF_i + G_i`, `N_ij(k) = W_ij`, and the
//! validators for the algebraic and structural conditions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    norm_scale, restricted_inverse, HilbertSpace, Operator, SubspacePair, C64,
};

/// The coefficient quadruple `(K, L_i, M_i, N_ij)` of a QSDE with `n`
/// channels.
#[derive(Clone, Debug, PartialEq)]
pub struct QsdeCoefficients {
    space: HilbertSpace,
    pub k_op: Operator,
    pub l_ops: Vec<Operator>,
    pub m_ops: Vec<Operator>,
    /// Row-major `n × n` grid, `n_ops[i][j] = N_ij`.
    pub n_ops: Vec<Vec<Operator>>,
}

fn check_grid(grid: &[Vec<Operator>], n: usize, what: &str) -> Result<()> {
    if grid.len() != n || grid.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument(format!("{what} must be an {n}x{n} grid")));
    }
    Ok(())
}

fn check_space<'a>(space: &HilbertSpace, ops: impl IntoIterator<Item = &'a Operator>) -> Result<()> {
    for op in ops {
        if op.space() != space {
            return Err(Error::DimensionMismatch(format!(
                "operator on {} in a family on {space}",
                op.space()
            )));
        }
    }
    Ok(())
}

impl QsdeCoefficients {
    pub fn new(
        k_op: Operator,
        l_ops: Vec<Operator>,
        m_ops: Vec<Operator>,
        n_ops: Vec<Vec<Operator>>,
    ) -> Result<Self> {
        let n = l_ops.len();
        if n == 0 {
            return Err(Error::InvalidArgument("at least one channel is required".into()));
        }
        if m_ops.len() != n {
            return Err(Error::ChannelMismatch { expected: n, found: m_ops.len() });
        }
        check_grid(&n_ops, n, "N")?;
        let space = k_op.space().clone();
        check_space(&space, l_ops.iter().chain(&m_ops).chain(n_ops.iter().flatten()))?;
        Ok(Self { space, k_op, l_ops, m_ops, n_ops })
    }

    /// Builds the family with `M_i = -Σ_j N_ij L_j†`.
    pub fn with_derived_m(k_op: Operator, l_ops: Vec<Operator>, n_ops: Vec<Vec<Operator>>) -> Result<Self> {
        let n = l_ops.len();
        check_grid(&n_ops, n, "N")?;
        let m_ops = derive_m(&l_ops, &n_ops);
        Self::new(k_op, l_ops, m_ops, n_ops)
    }

    pub fn channels(&self) -> usize {
        self.l_ops.len()
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.total_dim()
    }

    /// Relabels every operator onto `space` (same total dimension).
    pub fn retag(&self, space: &HilbertSpace) -> Result<Self> {
        let re = |x: &Operator| x.clone().retag(space.clone());
        Self::new(
            re(&self.k_op)?,
            self.l_ops.iter().map(re).collect::<Result<_>>()?,
            self.m_ops.iter().map(re).collect::<Result<_>>()?,
            self.n_ops
                .iter()
                .map(|row| row.iter().map(re).collect::<Result<_>>())
                .collect::<Result<_>>()?,
        )
    }

    /// Applies `f` to every operator, keeping the layout.
    pub fn map(&self, f: impl Fn(&Operator) -> Operator) -> Result<Self> {
        Self::new(
            f(&self.k_op),
            self.l_ops.iter().map(&f).collect(),
            self.m_ops.iter().map(&f).collect(),
            self.n_ops.iter().map(|row| row.iter().map(&f).collect()).collect(),
        )
    }
}

/// `M_i = -Σ_j N_ij L_j†`.
pub fn derive_m(l_ops: &[Operator], n_ops: &[Vec<Operator>]) -> Vec<Operator> {
    n_ops
        .iter()
        .map(|row| {
            let mut acc = Operator::zeros(l_ops[0].space());
            for (nij, lj) in row.iter().zip(l_ops) {
                acc += &(nij * &lj.adjoint());
            }
            -acc
        })
        .collect()
}

/// Singular scaling decomposition `(Y, A, B, F_i, G_i, W_ij)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledFamily {
    space: HilbertSpace,
    pub y: Operator,
    pub a: Operator,
    pub b: Operator,
    pub f_ops: Vec<Operator>,
    pub g_ops: Vec<Operator>,
    pub w_ops: Vec<Vec<Operator>>,
}

impl ScaledFamily {
    pub fn new(
        y: Operator,
        a: Operator,
        b: Operator,
        f_ops: Vec<Operator>,
        g_ops: Vec<Operator>,
        w_ops: Vec<Vec<Operator>>,
    ) -> Result<Self> {
        let n = f_ops.len();
        if n == 0 {
            return Err(Error::InvalidArgument("at least one channel is required".into()));
        }
        if g_ops.len() != n {
            return Err(Error::ChannelMismatch { expected: n, found: g_ops.len() });
        }
        check_grid(&w_ops, n, "W")?;
        let space = y.space().clone();
        check_space(
            &space,
            [&a, &b].into_iter().chain(&f_ops).chain(&g_ops).chain(w_ops.iter().flatten()),
        )?;
        Ok(Self { space, y, a, b, f_ops, g_ops, w_ops })
    }

    pub fn channels(&self) -> usize {
        self.f_ops.len()
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    fn all_ops(&self) -> impl Iterator<Item = &Operator> {
        [&self.y, &self.a, &self.b]
            .into_iter()
            .chain(&self.f_ops)
            .chain(&self.g_ops)
            .chain(self.w_ops.iter().flatten())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_violation: f64,
    /// Effective threshold: the absolute tolerance times the norm scale of
    /// the operators entering this check.
    pub tolerance: f64,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl ValidationReport {
    pub fn from_checks(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.passed);
        Self { checks, overall }
    }

    pub fn merge(mut self, other: ValidationReport) -> Self {
        self.checks.extend(other.checks);
        Self::from_checks(self.checks)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing_names(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

fn measured(name: &str, violation: f64, tol: f64, scale: f64) -> Check {
    let tolerance = tol * scale;
    Check {
        name: name.to_string(),
        max_violation: violation,
        tolerance,
        passed: violation <= tolerance,
        detail: None,
    }
}

fn failed(name: &str, tol: f64, detail: String) -> Check {
    Check {
        name: name.to_string(),
        max_violation: 1.0,
        tolerance: tol,
        passed: false,
        detail: Some(detail),
    }
}

fn sum_ops(space: &HilbertSpace, terms: impl IntoIterator<Item = Operator>) -> Operator {
    terms.into_iter().fold(Operator::zeros(space), |acc, t| acc + t)
}

/// Max violation of `Σ_j X_mj X_ℓj† = Σ_j X_jm† X_jℓ = δ_mℓ` over all
/// `(m, ℓ)`, and the norm scale of the grid.
fn unitarity_defect(grid: &[Vec<Operator>]) -> (f64, f64) {
    let n = grid.len();
    let space = grid[0][0].space();
    let id = Operator::identity(space);
    let mut worst: f64 = 0.0;
    for m in 0..n {
        for l in 0..n {
            let co = sum_ops(space, (0..n).map(|j| &grid[m][j] * &grid[l][j].adjoint()));
            let iso = sum_ops(space, (0..n).map(|j| &grid[j][m].adjoint() * &grid[j][l]));
            let (co, iso) = if m == l { (&co - &id, &iso - &id) } else { (co, iso) };
            worst = worst.max(co.spectral_norm()).max(iso.spectral_norm());
        }
    }
    let scale = grid
        .iter()
        .flatten()
        .map(|x| x.spectral_norm().powi(2) * n as f64)
        .fold(1.0, f64::max);
    (worst, scale)
}

/// Assembles `K = k²Y + kA + B`, `L_i = kF_i + G_i`, `N_ij = W_ij` and
/// `M_i = -Σ_j W_ij (kF_j + G_j)†`.
pub fn assemble(fam: &ScaledFamily, k: f64) -> Result<QsdeCoefficients> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::InvalidArgument(format!("scaling parameter k = {k} must be positive")));
    }
    let k2 = C64::new(k * k, 0.0);
    let k1 = C64::new(k, 0.0);
    let k_op = fam.y.scale(k2) + fam.a.scale(k1) + fam.b.clone();
    let l_ops: Vec<Operator> = fam
        .f_ops
        .iter()
        .zip(&fam.g_ops)
        .map(|(f, g)| f.scale(k1) + g.clone())
        .collect();
    QsdeCoefficients::with_derived_m(k_op, l_ops, fam.w_ops.clone())
}

/// Checks the Hudson–Parthasarathy relations
/// `K + K† = -Σ L_i L_i†`, `M_i = -Σ_j N_ij L_j†` and unitarity of the
/// `N` grid. Checks are `hp.k`, `hp.m`, `hp.n`.
pub fn hp_validate(c: &QsdeCoefficients, tol: f64) -> ValidationReport {
    let space = c.space();

    let lsq = sum_ops(space, c.l_ops.iter().map(|l| l * &l.adjoint()));
    let k_defect = &(&c.k_op + &c.k_op.adjoint()) + &lsq;
    let k_scale = norm_scale([&c.k_op, &lsq]);
    let k_check = measured("hp.k", k_defect.spectral_norm(), tol, k_scale);

    let derived = derive_m(&c.l_ops, &c.n_ops);
    let m_violation = c
        .m_ops
        .iter()
        .zip(&derived)
        .map(|(m, d)| (m - d).spectral_norm())
        .fold(0.0, f64::max);
    let m_scale = norm_scale(c.m_ops.iter().chain(&derived));
    let m_check = measured("hp.m", m_violation, tol, m_scale);

    let (n_violation, n_scale) = unitarity_defect(&c.n_ops);
    let n_check = measured("hp.n", n_violation, tol, n_scale);

    ValidationReport::from_checks(vec![k_check, m_check, n_check])
}

/// Order-by-order relations that make every `assemble(fam, k)` satisfy the
/// Hudson–Parthasarathy conditions: `scaled.y`, `scaled.a`, `scaled.b`,
/// `scaled.w`.
pub fn scaled_hp_validate(fam: &ScaledFamily, tol: f64) -> ValidationReport {
    let space = fam.space();
    let pairs = || fam.f_ops.iter().zip(&fam.g_ops);

    let ff = sum_ops(space, fam.f_ops.iter().map(|f| f * &f.adjoint()));
    let y_defect = &(&fam.y + &fam.y.adjoint()) + &ff;
    let y_check = measured("scaled.y", y_defect.spectral_norm(), tol, norm_scale([&fam.y, &ff]));

    let cross = sum_ops(space, pairs().map(|(f, g)| &(f * &g.adjoint()) + &(g * &f.adjoint())));
    let a_defect = &(&fam.a + &fam.a.adjoint()) + &cross;
    let a_check = measured("scaled.a", a_defect.spectral_norm(), tol, norm_scale([&fam.a, &cross]));

    let gg = sum_ops(space, fam.g_ops.iter().map(|g| g * &g.adjoint()));
    let b_defect = &(&fam.b + &fam.b.adjoint()) + &gg;
    let b_check = measured("scaled.b", b_defect.spectral_norm(), tol, norm_scale([&fam.b, &gg]));

    let (w_violation, w_scale) = unitarity_defect(&fam.w_ops);
    let w_check = measured("scaled.w", w_violation, tol, w_scale);

    ValidationReport::from_checks(vec![y_check, a_check, b_check, w_check])
}

/// Structural requirements on the slow subspace:
///
/// * `structural.b`: `Y P0 = 0`
/// * `structural.c`: `Ỹ` exists (see [`restricted_inverse`])
/// * `structural.d`: `F_j† P0 = 0`
/// * `structural.e`: `P0 A P0 = 0`
/// * `structural.g_side`: `P0 (G_i - A Ỹ F_i) P1 = 0`
/// * `structural.w_side`: `Σ_ℓ P0 W_iℓ (F_ℓ† Ỹ F_j + δ_ℓj) P1 = 0` and the
///   same with `P0`, `P1` exchanged
pub fn structural_validate(
    fam: &ScaledFamily,
    sub: &SubspacePair,
    tol: f64,
    cond_limit: f64,
) -> ValidationReport {
    if fam.space() != sub.space() {
        return ValidationReport::from_checks(vec![failed(
            "structural.space",
            tol,
            format!("family on {}, projection on {}", fam.space(), sub.space()),
        )]);
    }
    let p0 = sub.p0();
    let p1 = sub.p1();
    let scale = norm_scale(fam.all_ops());
    let mut checks = Vec::with_capacity(6);

    checks.push(measured("structural.b", (&fam.y * p0).spectral_norm(), tol, scale));

    let y_tilde = restricted_inverse(&fam.y, sub, tol, cond_limit);
    match &y_tilde {
        Ok(yt) => {
            let v = (&(yt * &fam.y) - p1)
                .spectral_norm()
                .max((&(&fam.y * yt) - p1).spectral_norm());
            checks.push(measured("structural.c", v, tol, scale * norm_scale([yt])));
        }
        Err(e) => checks.push(failed("structural.c", tol * scale, e.to_string())),
    }

    let d = fam
        .f_ops
        .iter()
        .map(|f| (&f.adjoint() * p0).spectral_norm())
        .fold(0.0, f64::max);
    checks.push(measured("structural.d", d, tol, scale));

    checks.push(measured("structural.e", (&(p0 * &fam.a) * p0).spectral_norm(), tol, scale));

    match &y_tilde {
        Ok(yt) => {
            let side_scale = scale * scale * norm_scale([yt]);
            let g = fam
                .f_ops
                .iter()
                .zip(&fam.g_ops)
                .map(|(f, g)| {
                    let inner = g - &(&(&fam.a * yt) * f);
                    (&(p0 * &inner) * p1).spectral_norm()
                })
                .fold(0.0, f64::max);
            checks.push(measured("structural.g_side", g, tol, side_scale));

            let scattering = limit_scattering_blocks(fam, yt);
            let mut w: f64 = 0.0;
            for row in &scattering {
                for x in row {
                    w = w
                        .max((&(p0 * x) * p1).spectral_norm())
                        .max((&(p1 * x) * p0).spectral_norm());
                }
            }
            checks.push(measured("structural.w_side", w, tol, side_scale));
        }
        Err(_) => {
            let why = "requires the partial inverse (structural.c failed)".to_string();
            checks.push(failed("structural.g_side", tol * scale, why.clone()));
            checks.push(failed("structural.w_side", tol * scale, why));
        }
    }

    ValidationReport::from_checks(checks)
}

/// Uncompressed `Σ_ℓ W_iℓ (F_ℓ† Ỹ F_j + δ_ℓj)` on the full space.
pub(crate) fn limit_scattering_blocks(fam: &ScaledFamily, y_tilde: &Operator) -> Vec<Vec<Operator>> {
    let n = fam.channels();
    let space = fam.space();
    let inner: Vec<Vec<Operator>> = (0..n)
        .map(|l| {
            (0..n)
                .map(|j| {
                    let mut x = &(&fam.f_ops[l].adjoint() * y_tilde) * &fam.f_ops[j];
                    if l == j {
                        x += &Operator::identity(space);
                    }
                    x
                })
                .collect()
        })
        .collect();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| sum_ops(space, (0..n).map(|l| &fam.w_ops[i][l] * &inner[l][j])))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{CMatrix, DEFAULT_COND_LIMIT, ONE, ZERO};

    fn space(d: usize) -> HilbertSpace {
        HilbertSpace::single(d).unwrap()
    }

    fn herm(d: usize, seed: f64) -> Operator {
        let m = CMatrix::from_fn(d, d, |i, j| {
            C64::new(((i * 7 + j * 3) as f64 * seed).sin(), ((i * 5 + j) as f64 * seed).cos())
        });
        Operator::new(space(d), &m + m.adjoint()).unwrap()
    }

    fn generic(d: usize, seed: f64) -> Operator {
        let m = CMatrix::from_fn(d, d, |i, j| {
            C64::new(((i * 3 + j * 11) as f64 * seed).cos(), ((i + 2 * j) as f64 * seed).sin())
        });
        Operator::new(space(d), m).unwrap()
    }

    #[test]
    fn rejects_zero_channels() {
        let s = space(2);
        let z = Operator::zeros(&s);
        assert!(QsdeCoefficients::new(z.clone(), vec![], vec![], vec![]).is_err());
        assert!(ScaledFamily::new(z.clone(), z.clone(), z, vec![], vec![], vec![]).is_err());
    }

    #[test]
    fn rejects_mixed_spaces() {
        let z2 = Operator::zeros(&space(2));
        let z3 = Operator::zeros(&space(3));
        let id2 = Operator::identity(&space(2));
        assert!(QsdeCoefficients::new(z2.clone(), vec![z3], vec![z2.clone()], vec![vec![id2]]).is_err());
    }

    #[test]
    fn hamiltonian_only_passes() {
        let h = herm(4, 0.7);
        let s = space(4);
        let c = QsdeCoefficients::new(
            h.scale(crate::operator::I),
            vec![Operator::zeros(&s)],
            vec![Operator::zeros(&s)],
            vec![vec![Operator::identity(&s)]],
        )
        .unwrap();
        let rep = hp_validate(&c, 1e-12);
        assert!(rep.overall);
        assert!(rep.checks.iter().all(|ch| ch.max_violation <= 1e-14));
    }

    #[test]
    fn k_defect_is_measured_exactly() {
        let s = space(3);
        let l = generic(3, 0.3);
        let k = herm(3, 0.2).scale(crate::operator::I) - (&l * &l.adjoint()).scale_real(0.5);
        let good = QsdeCoefficients::with_derived_m(k.clone(), vec![l.clone()], vec![vec![Operator::identity(&s)]])
            .unwrap();
        assert!(hp_validate(&good, 1e-9).overall);
        let bumped = QsdeCoefficients::with_derived_m(
            k + Operator::identity(&s).scale_real(1e-3),
            vec![l],
            vec![vec![Operator::identity(&s)]],
        )
        .unwrap();
        let rep = hp_validate(&bumped, 1e-9);
        assert!(!rep.overall);
        let kc = rep.check("hp.k").unwrap();
        assert!((kc.max_violation - 2e-3).abs() < 1e-12);
        assert_eq!(rep.failing_names(), vec!["hp.k"]);
    }

    #[test]
    fn assemble_degenerate_and_forced_m() {
        let s = space(3);
        let z = Operator::zeros(&s);
        let b = generic(3, 0.4);
        let g = generic(3, 0.9);
        let fam = ScaledFamily::new(
            z.clone(),
            z.clone(),
            b.clone(),
            vec![z.clone()],
            vec![g.clone()],
            vec![vec![Operator::identity(&s)]],
        )
        .unwrap();
        let c = assemble(&fam, 1.0).unwrap();
        assert_eq!(c.k_op, b);
        assert_eq!(c.l_ops[0], g);
        assert_eq!(c.m_ops[0], -g.adjoint());
        assert!(assemble(&fam, 0.0).is_err());
        assert!(assemble(&fam, -1.0).is_err());
    }

    #[test]
    fn structural_trivial_family_passes() {
        let s = space(2);
        let z = Operator::zeros(&s);
        let fam = ScaledFamily::new(
            z.clone(),
            z.clone(),
            herm(2, 0.1).scale(crate::operator::I),
            vec![z.clone()],
            vec![z.clone()],
            vec![vec![Operator::identity(&s)]],
        )
        .unwrap();
        let sub = SubspacePair::new(Operator::identity(&s), 1e-12).unwrap();
        let rep = structural_validate(&fam, &sub, 1e-10, DEFAULT_COND_LIMIT);
        assert!(rep.overall, "{rep:?}");
    }

    #[test]
    fn structural_reports_missing_inverse() {
        let s = space(2);
        let z = Operator::zeros(&s);
        let fam = ScaledFamily::new(
            z.clone(),
            z.clone(),
            z.clone(),
            vec![z.clone()],
            vec![z.clone()],
            vec![vec![Operator::identity(&s)]],
        )
        .unwrap();
        let p0 = Operator::from_diagonal(&s, &[ONE, ZERO]).unwrap();
        let sub = SubspacePair::new(p0, 1e-12).unwrap();
        let rep = structural_validate(&fam, &sub, 1e-10, DEFAULT_COND_LIMIT);
        assert!(!rep.overall);
        let names = rep.failing_names();
        assert!(names.contains(&"structural.c"));
        assert!(names.contains(&"structural.g_side"));
        assert!(rep.check("structural.c").unwrap().detail.is_some());
    }
}
