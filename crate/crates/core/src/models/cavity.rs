//! Auxiliary system `ℋ'` coupled to a single cavity mode that is damped
//! ever more strongly:
//! `K(k) = k²E₁₁ b†b + kE₁₀ b† + kE₀₁ b + E₀₀`, `L_i(k) = kF_i b† + G_i`,
//! `N_ij = S_ij`. In the limit the cavity is slaved to its vacuum.

use std::collections::BTreeMap;

use crate::elimination::cavity_closed_form;
use crate::error::{Error, Result};
use crate::model::{scaled_hp_validate, ScaledFamily};
use crate::models::fock::fock_toolbox;
use crate::models::{Fixture, ParamValue};
use crate::operator::{CMatrix, HilbertSpace, Operator, SubspacePair, C64, DEFAULT_TOL};

/// Operators on `ℋ'` defining a cavity model.
#[derive(Clone, Debug)]
pub struct CavityParams {
    pub s: Vec<Vec<Operator>>,
    pub f: Vec<Operator>,
    pub g: Vec<Operator>,
    pub e00: Operator,
    pub e01: Operator,
    pub e10: Operator,
    pub e11: Operator,
}

impl CavityParams {
    pub fn space(&self) -> &HilbertSpace {
        self.e00.space()
    }

    pub fn e11_inverse(&self) -> Result<Operator> {
        let inv = self
            .e11
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidArgument("E11 is singular".into()))?;
        Operator::new(self.space().clone(), inv)
    }
}

pub fn cavity_fixture(params: &CavityParams, cutoff: usize) -> Result<Fixture> {
    let fock = fock_toolbox(cutoff)?;
    let id_cav = fock.identity();
    let y = params.e11.kron(&fock.number);
    let a = params.e10.kron(&fock.b_dag) + params.e01.kron(&fock.b);
    let b = params.e00.kron(&id_cav);
    let f: Vec<Operator> = params.f.iter().map(|x| x.kron(&fock.b_dag)).collect();
    let g: Vec<Operator> = params.g.iter().map(|x| x.kron(&id_cav)).collect();
    let w: Vec<Vec<Operator>> = params
        .s
        .iter()
        .map(|row| row.iter().map(|x| x.kron(&id_cav)).collect())
        .collect();
    let family = ScaledFamily::new(y, a, b, f, g, w)?;
    let report = scaled_hp_validate(&family, DEFAULT_TOL);
    if !report.overall {
        return Err(Error::PreconditionFailed(Box::new(report)));
    }

    let p0 = Operator::identity(params.space()).kron(&fock.basis_matrix(0, 0));
    let sub = SubspacePair::new(p0, DEFAULT_TOL)?;

    let e11_inv = params.e11_inverse()?;
    let closed = cavity_closed_form(
        &params.e00,
        &params.e01,
        &params.e10,
        &params.e11,
        &e11_inv,
        &params.f,
        &params.g,
        &params.s,
        DEFAULT_TOL,
    )?;
    let slow = HilbertSpace::single(params.space().total_dim())?;

    let mut p = BTreeMap::new();
    p.insert("hprime_dim".to_string(), ParamValue::Integer(params.space().total_dim()));
    p.insert("channels".to_string(), ParamValue::Integer(params.f.len()));
    p.insert("cutoff".to_string(), ParamValue::Integer(cutoff));

    Ok(Fixture {
        name: "cavity".to_string(),
        family,
        sub,
        expected_limit: Some(closed.retag(&slow)?),
        params: p,
        cutoff: Some(cutoff),
    })
}

/// Two-level atom (basis `|e⟩, |g⟩`) in a cavity of linewidth `kappa` with
/// Jaynes–Cummings coupling `g` and atomic detuning `delta`. The limit is
/// Purcell decay at rate `4g²/κ` with a phase flip on reflection.
pub fn jaynes_cummings_params(kappa: f64, g: f64, delta: f64) -> Result<CavityParams> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be positive")));
    }
    let space = HilbertSpace::single(2)?;
    let mut lower = CMatrix::zeros(2, 2);
    lower[(1, 0)] = C64::new(1.0, 0.0);
    let sigma_minus = Operator::new(space.clone(), lower)?;
    let excited = Operator::from_diagonal(&space, &[C64::new(1.0, 0.0), C64::new(0.0, 0.0)])?;
    let id = Operator::identity(&space);
    Ok(CavityParams {
        s: vec![vec![id.clone()]],
        f: vec![id.scale_real(kappa.sqrt())],
        g: vec![Operator::zeros(&space)],
        e00: excited.scale(C64::new(0.0, -delta)),
        e01: sigma_minus.adjoint().scale_real(-g),
        e10: sigma_minus.scale_real(g),
        e11: id.scale_real(-kappa / 2.0),
    })
}

/// `κ = 2`, `g = 1`, `Δ = 0.5`, cavity cutoff 4.
pub fn default_fixture() -> Result<Fixture> {
    cavity_fixture(&jaynes_cummings_params(2.0, 1.0, 0.5)?, 4)
}
