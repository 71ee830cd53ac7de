//! Three-level atom in a damped cavity, with one leg resonantly coupled to
//! the cavity and a coherent drive `α` on the other. The cavity and the
//! excited level are eliminated together, leaving the ground doublet
//! `{|+⟩, |−⟩}` (with the cavity in vacuum) as the slow subspace.
//!
//! Atomic basis order is `(|e⟩, |+⟩, |−⟩)`.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{QsdeCoefficients, ScaledFamily};
use crate::models::fock::fock_toolbox;
use crate::models::{Fixture, ParamValue};
use crate::operator::{CMatrix, HilbertSpace, Operator, SubspacePair, C64};

pub const EXCITED: usize = 0;
pub const PLUS: usize = 1;
pub const MINUS: usize = 2;

fn atom_space() -> HilbertSpace {
    HilbertSpace::single(3).expect("nonzero")
}

/// `|row⟩⟨col|` on the atom.
pub fn atom_basis_matrix(row: usize, col: usize) -> Operator {
    let mut m = CMatrix::zeros(3, 3);
    m[(row, col)] = C64::new(1.0, 0.0);
    Operator::new(atom_space(), m).expect("3x3")
}

/// `σ₊^(+) = |e⟩⟨+|`.
pub fn sigma_plus_plus() -> Operator {
    atom_basis_matrix(EXCITED, PLUS)
}

/// `σ₊^(−) = |e⟩⟨−|`.
pub fn sigma_plus_minus() -> Operator {
    atom_basis_matrix(EXCITED, MINUS)
}

/// Flat index of `|atom⟩ ⊗ φ_photons` for a cavity cutoff.
pub fn state_index(atom: usize, photons: usize, cutoff: usize) -> usize {
    atom * (cutoff + 1) + photons
}

pub fn duan_kimble_fixture(gamma: f64, g: f64, drive: C64, cutoff: usize) -> Result<Fixture> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("gamma = {gamma} must be positive")));
    }
    if g == 0.0 || !g.is_finite() {
        return Err(Error::InvalidArgument(format!("coupling g = {g} must be nonzero")));
    }
    if cutoff < 2 {
        return Err(Error::InvalidArgument("cavity cutoff must be at least 2".into()));
    }
    let fock = fock_toolbox(cutoff)?;
    let atom_id = Operator::identity(&atom_space());
    let spp = sigma_plus_plus();
    let spm = sigma_plus_minus();
    let smp = spp.adjoint();
    let smm = spm.adjoint();

    let y = atom_id.kron(&fock.number).scale_real(-gamma / 2.0)
        + (smp.kron(&fock.b_dag) - spp.kron(&fock.b)).scale_real(g);
    let a = (smm.scale(drive.conj()) - spm.scale(drive)).kron(&fock.identity());
    let space = y.space().clone();
    let b = Operator::zeros(&space);
    let f = atom_id.kron(&fock.b_dag).scale_real(gamma.sqrt());
    let g_op = Operator::zeros(&space);
    let w = Operator::identity(&space);
    let family = ScaledFamily::new(y, a, b, vec![f], vec![g_op], vec![vec![w]])?;

    let sub = SubspacePair::from_basis_indices(
        &space,
        &[state_index(PLUS, 0, cutoff), state_index(MINUS, 0, cutoff)],
    )?;

    let mut params = BTreeMap::new();
    params.insert("gamma".to_string(), ParamValue::Real(gamma));
    params.insert("g".to_string(), ParamValue::Real(g));
    params.insert("alpha".to_string(), ParamValue::Complex(drive));
    params.insert("cutoff".to_string(), ParamValue::Integer(cutoff));

    Ok(Fixture {
        name: "duan-kimble".to_string(),
        family,
        sub,
        expected_limit: Some(expected_limit(gamma, g, drive)?),
        params,
        cutoff: Some(cutoff),
    })
}

/// Closed-form limit on `span{|+⟩⊗φ₀, |−⟩⊗φ₀}` (in that order):
/// `K = -(|α|²γ/2g²) P₋`, `L₁ = -(α*√γ/g) |−⟩⟨+|`, `N₁₁ = I - 2P₋`.
pub fn expected_limit(gamma: f64, g: f64, drive: C64) -> Result<QsdeCoefficients> {
    let slow = HilbertSpace::single(2)?;
    let zero = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let p_minus = Operator::from_diagonal(&slow, &[zero, one])?;
    let k = p_minus.scale_real(-drive.norm_sqr() * gamma / (2.0 * g * g));
    let mut lm = CMatrix::zeros(2, 2);
    lm[(1, 0)] = -drive.conj() * gamma.sqrt() / g;
    let l = Operator::new(slow.clone(), lm)?;
    let n = Operator::identity(&slow) - p_minus.scale_real(2.0);
    QsdeCoefficients::with_derived_m(k, vec![l], vec![vec![n]])
}

/// The inverse of `Y` on `ℋ_j = span{|+⟩⊗φ_j, |−⟩⊗φ_j, |e⟩⊗φ_{j−1}}`, in that
/// basis order:
///
/// ```text
/// -1/d_j · [[γ(j−1)/2, 0, g√j], [0, 2d_j/(γj), 0], [−g√j, 0, γj/2]],
/// d_j = γ²j(j−1)/4 + g²j.
/// ```
pub fn y_tilde_block(gamma: f64, g: f64, j: usize) -> CMatrix {
    let jf = j as f64;
    let d = gamma * gamma * jf * (jf - 1.0) / 4.0 + g * g * jf;
    let s = g * jf.sqrt();
    let r = |x: f64| C64::new(-x / d, 0.0);
    let mut m = CMatrix::zeros(3, 3);
    m[(0, 0)] = r(gamma * (jf - 1.0) / 2.0);
    m[(0, 2)] = r(s);
    m[(1, 1)] = r(2.0 * d / (gamma * jf));
    m[(2, 0)] = r(-s);
    m[(2, 2)] = r(gamma * jf / 2.0);
    m
}

/// Flat indices of the `ℋ_j` basis `(|+⟩⊗φ_j, |−⟩⊗φ_j, |e⟩⊗φ_{j−1})`.
pub fn block_indices(j: usize, cutoff: usize) -> [usize; 3] {
    [
        state_index(PLUS, j, cutoff),
        state_index(MINUS, j, cutoff),
        state_index(EXCITED, j - 1, cutoff),
    ]
}

/// The default parameter set: `γ = 1`, `g = 2`, `α = 0.3 + 0.4i`, cutoff 4.
pub fn default_fixture() -> Result<Fixture> {
    duan_kimble_fixture(1.0, 2.0, C64::new(0.3, 0.4), 4)
}
