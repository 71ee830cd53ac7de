//! Worked example fixtures and the truncated Fock-space operators they are
//! built from.

pub mod cavity;
pub mod duan_kimble;
pub mod fock;
pub mod mirror;
pub mod oscillator;
pub mod random;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{scaled_hp_validate, structural_validate, QsdeCoefficients, ScaledFamily, ValidationReport};
use crate::operator::{Operator, SubspacePair, C64, DEFAULT_TOL};

pub use fock::{fock_toolbox, FockToolbox};

/// Names accepted by [`builtin`].
pub const BUILTIN_NAMES: [&str; 4] = ["cavity", "duan-kimble", "mirror", "truncation-demo"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Integer(usize),
    Real(f64),
    Complex(C64),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match *self {
            ParamValue::Integer(i) => Some(i as f64),
            ParamValue::Real(x) => Some(x),
            ParamValue::Complex(z) if z.im == 0.0 => Some(z.re),
            ParamValue::Complex(_) => None,
        }
    }
}

/// A scaled family with its slow subspace and, where known, the closed-form
/// limit in slow-space coordinates.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: String,
    pub family: ScaledFamily,
    pub sub: SubspacePair,
    pub expected_limit: Option<QsdeCoefficients>,
    pub params: BTreeMap<String, ParamValue>,
    /// Fock cutoff of the eliminated (or truncated) mode, if any.
    pub cutoff: Option<usize>,
}

impl Fixture {
    pub fn new(name: impl Into<String>, family: ScaledFamily, sub: SubspacePair) -> Result<Self> {
        if family.space() != sub.space() {
            return Err(Error::DimensionMismatch(format!(
                "family on {} but projection on {}",
                family.space(),
                sub.space()
            )));
        }
        Ok(Self {
            name: name.into(),
            family,
            sub,
            expected_limit: None,
            params: BTreeMap::new(),
            cutoff: None,
        })
    }

    /// A family with nothing to eliminate: `Y = A = F = 0`, `B = K`,
    /// `G = L`, `W = N`, `P₀ = I`. Its limit is the input itself.
    pub fn unscaled(name: impl Into<String>, c: &QsdeCoefficients) -> Result<Self> {
        let space = c.space();
        let z = Operator::zeros(space);
        let n = c.channels();
        let family = ScaledFamily::new(
            z.clone(),
            z.clone(),
            c.k_op.clone(),
            vec![z; n],
            c.l_ops.clone(),
            c.n_ops.clone(),
        )?;
        let sub = SubspacePair::new(Operator::identity(space), DEFAULT_TOL)?;
        let mut fx = Self::new(name, family, sub)?;
        fx.expected_limit = Some(c.clone());
        Ok(fx)
    }

    pub fn validate(&self, tol: f64, cond_limit: f64) -> ValidationReport {
        scaled_hp_validate(&self.family, tol).merge(structural_validate(&self.family, &self.sub, tol, cond_limit))
    }
}

/// Builds a shipped fixture with its default parameters.
pub fn builtin(name: &str) -> Result<Fixture> {
    builtin_with_cutoff(name, None)
}

/// Builds a shipped fixture, optionally overriding the Fock cutoff of the
/// eliminated (or truncated) mode.
pub fn builtin_with_cutoff(name: &str, cutoff: Option<usize>) -> Result<Fixture> {
    match name {
        "cavity" => cavity::cavity_fixture(&cavity::jaynes_cummings_params(2.0, 1.0, 0.5)?, cutoff.unwrap_or(4)),
        "duan-kimble" => duan_kimble::duan_kimble_fixture(1.0, 2.0, C64::new(0.3, 0.4), cutoff.unwrap_or(4)),
        "mirror" => mirror::mirror_fixture(1.0, 0.5, 1.0, 8, cutoff.unwrap_or(3)),
        "truncation-demo" => {
            let c = cutoff.unwrap_or(12);
            let mut fx = Fixture::unscaled("truncation-demo", &oscillator::driven_oscillator(1.0, 0.5, 1.0, c)?)?;
            fx.params.insert("omega".to_string(), ParamValue::Real(1.0));
            fx.params.insert("drive".to_string(), ParamValue::Real(0.5));
            fx.params.insert("kappa".to_string(), ParamValue::Real(1.0));
            fx.params.insert("cutoff".to_string(), ParamValue::Integer(c));
            fx.cutoff = Some(c);
            Ok(fx)
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown fixture '{other}'; expected one of {}",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}
