//! Cavity with an oscillating end mirror. The mirror position modulates the
//! cavity detuning; eliminating the strongly damped cavity leaves a
//! position-dependent phase on the reflected field.
//!
//! `K(k) = k²[iϑ(B+B†) − γ/2] b†b + iΩB†B`, `L₁(k) = k√γ b†`, `N₁₁ = I`,
//! with `B` the mirror lowering operator and `b` the cavity mode.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{QsdeCoefficients, ScaledFamily};
use crate::models::fock::fock_toolbox;
use crate::models::{Fixture, ParamValue};
use crate::operator::{hermitian_function, Operator, SubspacePair, C64, DEFAULT_TOL};

pub fn mirror_fixture(
    gamma: f64,
    theta: f64,
    omega: f64,
    mirror_cutoff: usize,
    cavity_cutoff: usize,
) -> Result<Fixture> {
    for (name, v) in [("gamma", gamma), ("theta", theta), ("omega", omega)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidArgument(format!("{name} = {v} must be positive")));
        }
    }
    if mirror_cutoff < 2 || cavity_cutoff < 2 {
        return Err(Error::InvalidArgument("mirror and cavity cutoffs must be at least 2".into()));
    }
    let mirror = fock_toolbox(mirror_cutoff)?;
    let cavity = fock_toolbox(cavity_cutoff)?;
    let position = &mirror.b + &mirror.b_dag;
    let id_m = mirror.identity();
    let id_c = cavity.identity();

    let fast_rate = &position.scale(C64::new(0.0, theta)) - &id_m.scale_real(gamma / 2.0);
    let y = fast_rate.kron(&cavity.number);
    let space = y.space().clone();
    let a = Operator::zeros(&space);
    let b = mirror.number.scale(C64::new(0.0, omega)).kron(&id_c);
    let f = id_m.kron(&cavity.b_dag).scale_real(gamma.sqrt());
    let g = Operator::zeros(&space);
    let w = Operator::identity(&space);
    let family = ScaledFamily::new(y, a, b, vec![f], vec![g], vec![vec![w]])?;

    let p0 = id_m.kron(&cavity.basis_matrix(0, 0));
    let sub = SubspacePair::new(p0, DEFAULT_TOL)?;

    let mut params = BTreeMap::new();
    params.insert("gamma".to_string(), ParamValue::Real(gamma));
    params.insert("theta".to_string(), ParamValue::Real(theta));
    params.insert("omega".to_string(), ParamValue::Real(omega));
    params.insert("mirror_cutoff".to_string(), ParamValue::Integer(mirror_cutoff));
    params.insert("cutoff".to_string(), ParamValue::Integer(cavity_cutoff));

    Ok(Fixture {
        name: "mirror".to_string(),
        family,
        sub,
        expected_limit: Some(expected_limit(gamma, theta, omega, mirror_cutoff)?),
        params,
        cutoff: Some(cavity_cutoff),
    })
}

/// `N₁₁ = (iϑx + γ/2)(iϑx − γ/2)⁻¹` at `x = B+B†`, `L₁ = 0`, `K = iΩB†B`,
/// on the truncated mirror space.
pub fn expected_limit(gamma: f64, theta: f64, omega: f64, mirror_cutoff: usize) -> Result<QsdeCoefficients> {
    let mirror = fock_toolbox(mirror_cutoff)?;
    let position = &mirror.b + &mirror.b_dag;
    let n = hermitian_function(&position, |x| {
        let z = C64::new(0.0, theta * x);
        (z + gamma / 2.0) / (z - gamma / 2.0)
    });
    let k = mirror.number.scale(C64::new(0.0, omega));
    let l = Operator::zeros(&mirror.space);
    QsdeCoefficients::with_derived_m(k, vec![l], vec![vec![n]])
}

/// `γ = 1`, `ϑ = 0.5`, `Ω = 1`, mirror cutoff 8, cavity cutoff 3.
pub fn default_fixture() -> Result<Fixture> {
    mirror_fixture(1.0, 0.5, 1.0, 8, 3)
}
