//! Damped oscillators used as limit families for truncation studies. Both
//! have `N = I` and `K = -iH - ½LL†`.

use crate::error::{Error, Result};
use crate::model::QsdeCoefficients;
use crate::models::fock::fock_toolbox;
use crate::operator::C64;

fn check_rates(omega: f64, drive: f64, kappa: f64) -> Result<()> {
    if !(omega.is_finite() && drive.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(kappa >= 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be nonnegative")));
    }
    Ok(())
}

/// `H = ΩN + ε(b + b†)`, `L = √κ b†`.
pub fn driven_oscillator(omega: f64, drive: f64, kappa: f64, cutoff: usize) -> Result<QsdeCoefficients> {
    check_rates(omega, drive, kappa)?;
    let fock = fock_toolbox(cutoff)?;
    let h = &fock.number.scale_real(omega) + &(&fock.b + &fock.b_dag).scale_real(drive);
    let l = fock.b_dag.scale_real(kappa.sqrt());
    let k = &h.scale(C64::new(0.0, -1.0)) - &(&l * &l.adjoint()).scale_real(0.5);
    QsdeCoefficients::with_derived_m(k, vec![l], vec![vec![fock.identity()]])
}

/// `H = ΩN + εΠ(b + b†)Π`, `L = √κ Πb†Π` with `Π` the projection onto the
/// first `window` states, so `K` and `L` leave that window invariant.
pub fn windowed_oscillator(
    omega: f64,
    drive: f64,
    kappa: f64,
    window: usize,
    cutoff: usize,
) -> Result<QsdeCoefficients> {
    check_rates(omega, drive, kappa)?;
    if window == 0 || window > cutoff + 1 {
        return Err(Error::InvalidArgument(format!(
            "window of {window} states does not fit cutoff {cutoff}"
        )));
    }
    let fock = fock_toolbox(cutoff)?;
    let pi = fock.window(window);
    let h = &(&pi * &fock.number.scale_real(omega)) + &(&(&pi * &(&fock.b + &fock.b_dag)) * &pi).scale_real(drive);
    let l = (&(&pi * &fock.b_dag) * &pi).scale_real(kappa.sqrt());
    let k = &h.scale(C64::new(0.0, -1.0)) - &(&l * &l.adjoint()).scale_real(0.5);
    QsdeCoefficients::with_derived_m(k, vec![l], vec![vec![fock.identity()]])
}
