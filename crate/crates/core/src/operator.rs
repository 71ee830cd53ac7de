//! Dense complex operators on truncated tensor-product Hilbert spaces.
//!
//! Everything in this crate is stored densely. The intended dimension budget
//! is a few hundred at most (a three-level atom with a cavity cutoff of 60 is
//! already 183); beyond that the cubic cost of `matrix_exponential` and the
//! SVD-based norms dominates every study.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Absolute tolerance for "equals zero" checks, before scaling by the norms
/// of the participating operators.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest admissible condition number of the compressed fast generator.
pub const DEFAULT_COND_LIMIT: f64 = 1e12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Ordered list of tensor factor dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct HilbertSpace {
    factor_dims: Vec<usize>,
}

impl HilbertSpace {
    pub fn new(factor_dims: Vec<usize>) -> Result<Self> {
        if factor_dims.is_empty() {
            return Err(Error::InvalidArgument("a space needs at least one factor".into()));
        }
        if let Some(pos) = factor_dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("factor {pos} has dimension 0")));
        }
        Ok(Self { factor_dims })
    }

    /// A space with a single factor of dimension `dim` (`dim >= 1`).
    pub fn single(dim: usize) -> Result<Self> {
        Self::new(vec![dim])
    }

    pub fn factor_dims(&self) -> &[usize] {
        &self.factor_dims
    }

    pub fn total_dim(&self) -> usize {
        self.factor_dims.iter().product()
    }

    pub fn num_factors(&self) -> usize {
        self.factor_dims.len()
    }

    /// The single-factor space at `index`.
    pub fn factor(&self, index: usize) -> Option<HilbertSpace> {
        self.factor_dims
            .get(index)
            .map(|&d| HilbertSpace { factor_dims: vec![d] })
    }

    /// Tensor product `self ⊗ other`.
    pub fn tensor(&self, other: &HilbertSpace) -> HilbertSpace {
        let mut factor_dims = self.factor_dims.clone();
        factor_dims.extend_from_slice(&other.factor_dims);
        HilbertSpace { factor_dims }
    }
}

impl TryFrom<Vec<usize>> for HilbertSpace {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<HilbertSpace> for Vec<usize> {
    fn from(space: HilbertSpace) -> Self {
        space.factor_dims
    }
}

impl fmt::Display for HilbertSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.factor_dims.iter().map(|d| d.to_string()).collect();
        write!(f, "[{}]", parts.join("x"))
    }
}

/// A square complex matrix acting on a [`HilbertSpace`].
///
/// Arithmetic between operators panics when the spaces differ, the same way
/// nalgebra panics on shape mismatches; fallible construction goes through
/// [`Operator::new`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: HilbertSpace,
    mat: CMatrix,
}

impl Operator {
    pub fn new(space: HilbertSpace, mat: CMatrix) -> Result<Self> {
        let d = space.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, space {} has dimension {d}",
                mat.nrows(),
                mat.ncols(),
                space
            )));
        }
        if !mat.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { space, mat })
    }

    pub fn zeros(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), mat: CMatrix::zeros(d, d) }
    }

    pub fn identity(space: &HilbertSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), mat: CMatrix::identity(d, d) }
    }

    pub fn from_diagonal(space: &HilbertSpace, diag: &[C64]) -> Result<Self> {
        Self::new(space.clone(), CMatrix::from_diagonal(&CVector::from_column_slice(diag)))
    }

    /// Operator on a single-factor space of matching dimension.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let space = HilbertSpace::single(mat.nrows().max(1))?;
        Self::new(space, mat)
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    /// Same matrix, relabelled onto a space of equal total dimension.
    pub fn retag(self, space: HilbertSpace) -> Result<Self> {
        Self::new(space, self.mat)
    }

    fn same_space(&self, mat: CMatrix) -> Self {
        Self { space: self.space.clone(), mat }
    }

    pub fn adjoint(&self) -> Self {
        self.same_space(self.mat.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.same_space(&self.mat * c)
    }

    pub fn scale_real(&self, c: f64) -> Self {
        self.scale(C64::new(c, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.mat * v
    }

    /// `(X + X†) / 2`.
    pub fn hermitian_part(&self) -> Self {
        self.same_space((&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0))
    }

    /// Kronecker product with the factor lists concatenated.
    pub fn kron(&self, other: &Operator) -> Self {
        Self { space: self.space.tensor(&other.space), mat: self.mat.kronecker(&other.mat) }
    }

    pub fn spectral_norm(&self) -> f64 {
        matrix_spectral_norm(&self.mat)
    }

    /// Max column sum of moduli.
    pub fn norm_1(&self) -> f64 {
        norm_1(&self.mat)
    }

    /// Largest eigenvalue of the Hermitian part.
    pub fn max_hermitian_eigenvalue(&self) -> f64 {
        max_hermitian_eigenvalue(&self.mat)
    }

    fn assert_same_space(&self, other: &Operator, what: &str) {
        assert!(
            self.space == other.space,
            "{what}: operator spaces differ ({} vs {})",
            self.space,
            other.space
        );
    }
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn add(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs, "add");
        self.same_space(&self.mat + &rhs.mat)
    }
}

impl Add<Operator> for Operator {
    type Output = Operator;

    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl<'a> AddAssign<&'a Operator> for Operator {
    fn add_assign(&mut self, rhs: &'a Operator) {
        self.assert_same_space(rhs, "add_assign");
        self.mat += &rhs.mat;
    }
}

impl<'a> SubAssign<&'a Operator> for Operator {
    fn sub_assign(&mut self, rhs: &'a Operator) {
        self.assert_same_space(rhs, "sub_assign");
        self.mat -= &rhs.mat;
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn sub(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs, "sub");
        self.same_space(&self.mat - &rhs.mat)
    }
}

impl Sub<Operator> for Operator {
    type Output = Operator;

    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;

    fn mul(self, rhs: &'a Operator) -> Operator {
        self.assert_same_space(rhs, "mul");
        self.same_space(&self.mat * &rhs.mat)
    }
}

impl Mul<Operator> for Operator {
    type Output = Operator;

    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Neg for &Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        self.same_space(-&self.mat)
    }
}

impl Neg for Operator {
    type Output = Operator;

    fn neg(self) -> Operator {
        -&self
    }
}

/// Conjugate transpose.
pub fn adjoint(x: &Operator) -> Operator {
    x.adjoint()
}

/// Ampliation `I ⊗ … ⊗ x ⊗ … ⊗ I` of a single-factor operator into
/// `target`, with `x` placed at `factor_index` (0-based).
pub fn tensor_embed(x: &Operator, factor_index: usize, target: &HilbertSpace) -> Result<Operator> {
    let factor = target.factor(factor_index).ok_or_else(|| {
        Error::DimensionMismatch(format!(
            "factor index {factor_index} out of range for {target}"
        ))
    })?;
    if x.space() != &factor {
        return Err(Error::DimensionMismatch(format!(
            "operator on {} cannot act as factor {factor_index} ({factor}) of {target}",
            x.space()
        )));
    }
    let dims = target.factor_dims();
    let left: usize = dims[..factor_index].iter().product();
    let right: usize = dims[factor_index + 1..].iter().product();
    let mut mat = x.matrix().clone();
    if left > 1 {
        mat = CMatrix::identity(left, left).kronecker(&mat);
    }
    if right > 1 {
        mat = mat.kronecker(&CMatrix::identity(right, right));
    }
    Operator::new(target.clone(), mat)
}

pub fn spectral_norm(x: &Operator) -> f64 {
    x.spectral_norm()
}

/// `exp(t·x)` for `t >= 0`.
pub fn matrix_exponential(x: &Operator, t: f64) -> Result<Operator> {
    if !t.is_finite() {
        return Err(Error::InvalidArgument(format!("time {t} is not finite")));
    }
    if t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    let mat = expm::expm(x.matrix(), t)?;
    Operator::new(x.space().clone(), mat)
}

/// Largest singular value of an arbitrary (possibly rectangular) matrix.
pub fn matrix_spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn norm_1(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest eigenvalue of `(m + m†)/2`.
pub fn max_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return f64::NEG_INFINITY;
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().max()
}

/// `f(h)` for Hermitian `h`, by eigendecomposition of `(h + h†)/2`.
pub fn hermitian_function(h: &Operator, f: impl Fn(f64) -> C64) -> Operator {
    let sym = h.hermitian_part();
    let eig = sym.matrix().clone().symmetric_eigen();
    let vals = eig.eigenvalues.map(&f);
    let v = &eig.eigenvectors;
    let mat = v * CMatrix::from_diagonal(&vals) * v.adjoint();
    Operator { space: h.space.clone(), mat }
}

/// `max(1, ‖x_1‖, ‖x_2‖, …)`: the factor multiplying absolute tolerances.
pub fn norm_scale<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> f64 {
    ops.into_iter().map(Operator::spectral_norm).fold(1.0, f64::max)
}

/// Orthogonal decomposition `ℋ = ℋ₀ ⊕ ℋ₀^⊥` given by a projection `p0`.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspacePair {
    p0: Operator,
    p1: Operator,
}

impl SubspacePair {
    /// Checks `p0 = p0†`, `p0² = p0` within `tol` and `rank(p0) >= 1`.
    pub fn new(p0: Operator, tol: f64) -> Result<Self> {
        let herm = (&p0 - &p0.adjoint()).spectral_norm();
        if herm > tol {
            return Err(Error::InvalidArgument(format!(
                "p0 is not Hermitian (defect {herm:e})"
            )));
        }
        let idem = (&(&p0 * &p0) - &p0).spectral_norm();
        if idem > tol {
            return Err(Error::InvalidArgument(format!(
                "p0 is not idempotent (defect {idem:e})"
            )));
        }
        if p0.trace().re < 0.5 {
            return Err(Error::InvalidArgument("p0 has rank 0".into()));
        }
        let p1 = &Operator::identity(p0.space()) - &p0;
        Ok(Self { p0, p1 })
    }

    /// Projection onto the span of the given standard basis vectors.
    pub fn from_basis_indices(space: &HilbertSpace, indices: &[usize]) -> Result<Self> {
        let d = space.total_dim();
        let mut diag = vec![ZERO; d];
        for &i in indices {
            if i >= d {
                return Err(Error::DimensionMismatch(format!(
                    "basis index {i} out of range for dimension {d}"
                )));
            }
            diag[i] = ONE;
        }
        Self::new(Operator::from_diagonal(space, &diag)?, DEFAULT_TOL)
    }

    pub fn p0(&self) -> &Operator {
        &self.p0
    }

    pub fn p1(&self) -> &Operator {
        &self.p1
    }

    pub fn space(&self) -> &HilbertSpace {
        self.p0.space()
    }

    pub fn rank(&self) -> usize {
        self.p0.trace().re.round() as usize
    }

    /// Orthonormal basis of `range(p0)` as the columns of a `dim × rank`
    /// isometry. For a diagonal 0/1 projection these are exactly the
    /// selected unit vectors, in index order.
    pub fn slow_basis(&self) -> CMatrix {
        pivoted_range_basis(self.p0.matrix(), self.rank())
    }

    /// Orthonormal basis of `range(p1)`.
    pub fn fast_basis(&self) -> CMatrix {
        let rank = self.dim() - self.rank();
        pivoted_range_basis(self.p1.matrix(), rank)
    }

    fn dim(&self) -> usize {
        self.p0.dim()
    }
}

/// Greedy column-pivoted Gram–Schmidt: picks `rank` columns of `m` in order
/// of largest residual norm (lowest index on ties), orthonormalizing as it
/// goes.
fn pivoted_range_basis(m: &CMatrix, rank: usize) -> CMatrix {
    let n = m.nrows();
    let mut resid = m.clone();
    let mut q = CMatrix::zeros(n, rank);
    for k in 0..rank {
        let mut best = 0;
        let mut best_norm = -1.0;
        for (j, col) in resid.column_iter().enumerate() {
            let nrm = col.norm();
            if nrm > best_norm {
                best = j;
                best_norm = nrm;
            }
        }
        let mut v = resid.column(best).into_owned();
        // second pass against drift
        for prev in 0..k {
            let qp = q.column(prev);
            let proj = qp.dotc(&v);
            v -= qp * proj;
        }
        let nrm = v.norm();
        if nrm == 0.0 {
            break;
        }
        v /= C64::new(nrm, 0.0);
        for mut col in resid.column_iter_mut() {
            let proj = v.dotc(&col);
            col -= &v * proj;
        }
        q.set_column(k, &v);
    }
    q
}

/// Partial inverse `Ỹ` of `y` on `range(p1)`: `Ỹ p0 = 0` and
/// `Ỹ y = y Ỹ = p1`.
///
/// The compression of `y` to `range(p1)` is inverted through its SVD, which
/// also supplies the condition number checked against `cond_limit`.
pub fn restricted_inverse(
    y: &Operator,
    sub: &SubspacePair,
    tol: f64,
    cond_limit: f64,
) -> Result<Operator> {
    if y.space() != sub.space() {
        return Err(Error::DimensionMismatch(format!(
            "Y lives on {}, projection on {}",
            y.space(),
            sub.space()
        )));
    }
    let scale = norm_scale([y]);
    let leak = (y * sub.p0()).spectral_norm();
    if leak > tol * scale {
        return Err(Error::StructuralViolation(format!(
            "Y P0 != 0 (norm {leak:e})"
        )));
    }
    let q1 = sub.fast_basis();
    if q1.ncols() == 0 {
        return Ok(Operator::zeros(y.space()));
    }
    let block = q1.adjoint() * y.matrix() * &q1;
    let svd = block.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= cond_limit) {
        return Err(Error::SingularFastDynamics { condition, limit: cond_limit });
    }
    let u = svd.u.as_ref().expect("requested U");
    let v_t = svd.v_t.as_ref().expect("requested V^T");
    let inv_sigma = CMatrix::from_diagonal(&svd.singular_values.map(|s| C64::new(1.0 / s, 0.0)));
    let mut inv = v_t.adjoint() * inv_sigma * u.adjoint();
    // one step of iterative refinement
    let d1 = block.nrows();
    let resid = CMatrix::identity(d1, d1) - &block * &inv;
    inv += &inv * resid;

    let y_tilde = Operator::new(y.space().clone(), &q1 * inv * q1.adjoint())?;

    let check_scale = scale * norm_scale([&y_tilde]);
    let left = (&(&y_tilde * y) - sub.p1()).spectral_norm();
    let right = (&(y * &y_tilde) - sub.p1()).spectral_norm();
    if left.max(right) > tol * check_scale {
        return Err(Error::StructuralViolation(format!(
            "no two-sided inverse on range(P1): |~Y Y - P1| = {left:e}, |Y ~Y - P1| = {right:e} (P0 Y P1 must vanish)"
        )));
    }
    Ok(y_tilde)
}
