//! Adiabatic elimination: the `k → ∞` limit coefficients on the slow
//! subspace.
//!
//! With `Ỹ` the partial inverse of the fast generator,
//!
//! ```text
//! K    = P0 (B - A Ỹ A) P0
//! L_i  = P0 (G_i - A Ỹ F_i) P0
//! M_i  = -Σ_j P0 W_ij (G_j† - F_j† Ỹ A) P0
//! N_ij = Σ_ℓ P0 W_iℓ (F_ℓ† Ỹ F_j + δ_ℓj) P0
//! ```
//!
//! The limit lives on `ℋ₀`; coefficients are returned in the orthonormal
//! basis held in [`EliminationResult::compression`].

use crate::error::{Error, Result};
use crate::model::{
    limit_scattering_blocks, scaled_hp_validate, structural_validate, QsdeCoefficients,
    ScaledFamily,
};
use crate::operator::{
    norm_scale, restricted_inverse, CMatrix, HilbertSpace, Operator, SubspacePair,
    DEFAULT_COND_LIMIT,
};

#[derive(Clone, Debug)]
pub struct EliminationResult {
    /// Limit coefficients in `ℋ₀` coordinates.
    pub limit: QsdeCoefficients,
    /// The partial inverse used, on the full space.
    pub y_tilde: Operator,
    /// `dim ℋ × dim ℋ₀` isometry whose columns span `ℋ₀`.
    pub compression: CMatrix,
}

impl EliminationResult {
    /// `E X E†`: a slow-space operator as an operator on the full space.
    pub fn embed(&self, x: &Operator) -> CMatrix {
        &self.compression * x.matrix() * self.compression.adjoint()
    }
}

/// Compresses a full-space operator to `ℋ₀` coordinates, `E† X E`.
pub fn compress(x: &Operator, compression: &CMatrix, target: &HilbertSpace) -> Result<Operator> {
    Operator::new(target.clone(), compression.adjoint() * x.matrix() * compression)
}

pub fn eliminate(fam: &ScaledFamily, sub: &SubspacePair, tol: f64) -> Result<EliminationResult> {
    eliminate_with_cond_limit(fam, sub, tol, DEFAULT_COND_LIMIT)
}

pub fn eliminate_with_cond_limit(
    fam: &ScaledFamily,
    sub: &SubspacePair,
    tol: f64,
    cond_limit: f64,
) -> Result<EliminationResult> {
    let scaled = scaled_hp_validate(fam, tol);
    if !scaled.overall {
        return Err(Error::PreconditionFailed(Box::new(scaled)));
    }
    if fam.space() != sub.space() {
        return Err(Error::DimensionMismatch(format!(
            "family on {}, projection on {}",
            fam.space(),
            sub.space()
        )));
    }
    let y_tilde = restricted_inverse(&fam.y, sub, tol, cond_limit)?;
    let structural = structural_validate(fam, sub, tol, cond_limit);
    if !structural.overall {
        return Err(Error::PreconditionFailed(Box::new(scaled.merge(structural))));
    }

    let compression = sub.slow_basis();
    let slow = HilbertSpace::single(compression.ncols())?;
    let squeeze = |x: &Operator| compress(x, &compression, &slow);
    let n = fam.channels();
    let a_yt = &fam.a * &y_tilde;

    let k_op = squeeze(&(&fam.b - &(&a_yt * &fam.a)))?;
    let l_ops = fam
        .f_ops
        .iter()
        .zip(&fam.g_ops)
        .map(|(f, g)| squeeze(&(g - &(&a_yt * f))))
        .collect::<Result<Vec<_>>>()?;

    let m_inner: Vec<Operator> = fam
        .f_ops
        .iter()
        .zip(&fam.g_ops)
        .map(|(f, g)| &g.adjoint() - &(&(&f.adjoint() * &y_tilde) * &fam.a))
        .collect();
    let m_ops = (0..n)
        .map(|i| {
            let mut acc = Operator::zeros(fam.space());
            for (w, inner) in fam.w_ops[i].iter().zip(&m_inner) {
                acc += &(w * inner);
            }
            squeeze(&-acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let n_ops = limit_scattering_blocks(fam, &y_tilde)
        .iter()
        .map(|row| row.iter().map(&squeeze).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let limit = QsdeCoefficients::new(k_op, l_ops, m_ops, n_ops)?;
    Ok(EliminationResult { limit, y_tilde, compression })
}

/// Closed-form cavity elimination on `ℋ'`:
/// `K = E00 - E01 E11⁻¹ E10`, `L_i = G_i - E01 E11⁻¹ F_i`,
/// `N_ij = Σ_ℓ S_iℓ (F_ℓ† E11⁻¹ F_j + δ_ℓj)` and `M_i = -Σ_j N_ij L_j†`.
///
/// `e11_inv` is checked against `e11` before use.
#[allow(clippy::too_many_arguments)]
pub fn cavity_closed_form(
    e00: &Operator,
    e01: &Operator,
    e10: &Operator,
    e11: &Operator,
    e11_inv: &Operator,
    f: &[Operator],
    g: &[Operator],
    s: &[Vec<Operator>],
    tol: f64,
) -> Result<QsdeCoefficients> {
    let space = e00.space();
    let id = Operator::identity(space);
    let residual = (&(e11 * e11_inv) - &id).spectral_norm();
    if residual > tol * norm_scale([e11, e11_inv]) {
        return Err(Error::InverseMismatch { residual });
    }
    if f.len() != g.len() {
        return Err(Error::ChannelMismatch { expected: f.len(), found: g.len() });
    }
    let n = f.len();
    let k_op = e00 - &(&(e01 * e11_inv) * e10);
    let l_ops: Vec<Operator> = f
        .iter()
        .zip(g)
        .map(|(fi, gi)| gi - &(&(e01 * e11_inv) * fi))
        .collect();
    if s.len() != n || s.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidArgument(format!("S must be an {n}x{n} grid")));
    }
    let n_ops: Vec<Vec<Operator>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut acc = Operator::zeros(space);
                    for l in 0..n {
                        let mut inner = &(&f[l].adjoint() * e11_inv) * &f[j];
                        if l == j {
                            inner += &id;
                        }
                        acc += &(&s[i][l] * &inner);
                    }
                    acc
                })
                .collect()
        })
        .collect();
    QsdeCoefficients::with_derived_m(k_op, l_ops, n_ops)
}
