//! Scaling-and-squaring matrix exponential with diagonal Padé approximants
//! (degrees 3, 5, 7, 9, 13), following Higham's 2005 backward-error bounds.

use crate::error::{Error, Result};
use crate::operator::{norm_1, CMatrix, C64};

// Largest 1-norm for which the [m/m] approximant meets unit roundoff.
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

/// Coefficients of the numerator of the [m/m] Padé approximant to `e^x`,
/// normalized so the constant term is 1.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut c = vec![1.0; m + 1];
    for j in 0..m {
        c[j + 1] = c[j] * (m - j) as f64 / ((j + 1) * (2 * m - j)) as f64;
    }
    c
}

fn scaled_identity(n: usize, s: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, C64::new(s, 0.0))
}

fn real(s: f64) -> C64 {
    C64::new(s, 0.0)
}

/// Returns `(U, V)` with `r_m(A) = (V - U)^{-1} (V + U)`.
fn pade_low(a: &CMatrix, m: usize) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let c = pade_coefficients(m);
    let a2 = a * a;
    let mut even_pow = CMatrix::identity(n, n);
    let mut u_inner = scaled_identity(n, c[1]);
    let mut v = scaled_identity(n, c[0]);
    for j in (2..=m).step_by(2) {
        even_pow = &even_pow * &a2;
        v += &even_pow * real(c[j]);
        if j < m {
            u_inner += &even_pow * real(c[j + 1]);
        }
    }
    (a * u_inner, v)
}

fn pade_13(a: &CMatrix) -> (CMatrix, CMatrix) {
    let n = a.nrows();
    let c = pade_coefficients(13);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_hi = &a6 * real(c[13]) + &a4 * real(c[11]) + &a2 * real(c[9]);
    let u_inner = &a6 * u_hi
        + &a6 * real(c[7])
        + &a4 * real(c[5])
        + &a2 * real(c[3])
        + scaled_identity(n, c[1]);
    let u = a * u_inner;
    let v_hi = &a6 * real(c[12]) + &a4 * real(c[10]) + &a2 * real(c[8]);
    let v = &a6 * v_hi
        + &a6 * real(c[6])
        + &a4 * real(c[4])
        + &a2 * real(c[2])
        + scaled_identity(n, c[0]);
    (u, v)
}

fn solve_pade(u: CMatrix, v: CMatrix) -> Result<CMatrix> {
    let denom = &v - &u;
    let numer = v + u;
    denom
        .lu()
        .solve(&numer)
        .ok_or_else(|| Error::InvalidArgument("singular Padé denominator".into()))
}

/// `exp(t·x)`. `t = 0` returns the identity exactly.
pub(crate) fn expm(x: &CMatrix, t: f64) -> Result<CMatrix> {
    if !x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = x.nrows();
    if t == 0.0 || n == 0 {
        return Ok(CMatrix::identity(n, n));
    }
    let a = x * real(t);
    let nrm = norm_1(&a);
    for &(m, theta) in &THETA {
        if nrm <= theta {
            let (u, v) = pade_low(&a, m);
            return solve_pade(u, v);
        }
    }
    let s = if nrm > THETA_13 { (nrm / THETA_13).log2().ceil() as i32 } else { 0 };
    let scaled = &a * real(0.5f64.powi(s));
    let (u, v) = pade_13(&scaled);
    let mut r = solve_pade(u, v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !r.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pade_13_coefficients_match_table() {
        // Higham's table, normalized by b_0 = 64764752532480000
        let table = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        let c = pade_coefficients(13);
        for (j, b) in table.iter().enumerate() {
            let want = b / table[0];
            assert!((c[j] - want).abs() <= 1e-15 * want, "j={j}");
        }
    }

    #[test]
    fn scalar_exponentials_across_branches() {
        for &z in &[1e-3, 0.2, 0.9, 2.0, 5.0, 40.0, -40.0] {
            let m = CMatrix::from_element(1, 1, C64::new(z, 0.3 * z));
            let e = expm(&m, 1.0).unwrap()[(0, 0)];
            let want = C64::new(z, 0.3 * z).exp();
            // exp is |z|-conditioned at the scalar level
            let tol = 1e-14 * z.abs().max(1.0) * 10.0;
            assert!((e - want).norm() <= tol * want.norm(), "z={z}: {e} vs {want}");
        }
    }

    #[test]
    fn nilpotent_is_exact_polynomial() {
        let mut m = CMatrix::zeros(3, 3);
        m[(0, 1)] = real(1.0);
        m[(1, 2)] = real(1.0);
        let e = expm(&m, 2.0).unwrap();
        assert!((e[(0, 1)] - real(2.0)).norm() < 1e-14);
        assert!((e[(0, 2)] - real(2.0)).norm() < 1e-14);
        assert!((e[(1, 2)] - real(2.0)).norm() < 1e-14);
    }
}
