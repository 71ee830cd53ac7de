//! Independent reference computations for the integration tests. Nothing
//! here calls into the numerical kernels under test.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type M = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn max_abs(m: &M) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Solves `X' = G X`, `X(0) = I` on `[0, t]` with adaptive Dormand–Prince
/// steps and returns `X(t)`.
pub fn ode_propagator(g: &M, t: f64, rtol: f64, atol: f64) -> M {
    let n = g.nrows();
    let mut x = M::identity(n, n);
    if t == 0.0 {
        return x;
    }
    let f = |y: &M| g * y;
    let r = |s: f64| c(s, 0.0);
    let mut s = 0.0;
    let mut h = (t / 100.0).min(0.1 / max_abs(g).max(1e-12));
    let mut k1 = f(&x);
    let mut steps = 0usize;
    while s < t {
        if s + h > t {
            h = t - s;
        }
        let k2 = f(&(&x + &k1 * r(h * A21)));
        let k3 = f(&(&x + &k1 * r(h * A31) + &k2 * r(h * A32)));
        let k4 = f(&(&x + &k1 * r(h * A41) + &k2 * r(h * A42) + &k3 * r(h * A43)));
        let k5 = f(&(&x + &k1 * r(h * A51) + &k2 * r(h * A52) + &k3 * r(h * A53) + &k4 * r(h * A54)));
        let k6 = f(&(&x
            + &k1 * r(h * A61)
            + &k2 * r(h * A62)
            + &k3 * r(h * A63)
            + &k4 * r(h * A64)
            + &k5 * r(h * A65)));
        let y5 = &x + &k1 * r(h * B1) + &k3 * r(h * B3) + &k4 * r(h * B4) + &k5 * r(h * B5) + &k6 * r(h * B6);
        let k7 = f(&y5);
        let err = &k1 * r(h * E1) + &k3 * r(h * E3) + &k4 * r(h * E4) + &k5 * r(h * E5) + &k6 * r(h * E6) + &k7 * r(h * E7);
        let mut e = 0.0f64;
        for (ei, (yi, xi)) in err.iter().zip(y5.iter().zip(x.iter())) {
            let sc = atol + rtol * yi.norm().max(xi.norm());
            e = e.max(ei.norm() / sc);
        }
        if e <= 1.0 {
            s += h;
            x = y5;
            k1 = k7;
        }
        let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        steps += 1;
        assert!(steps < 10_000_000, "ODE oracle failed to converge");
    }
    x
}

/// Spectral norm via the largest eigenvalue of `A†A` from power iteration
/// on a Hermitian positive matrix, refined by the Rayleigh quotient.
pub fn spectral_norm_oracle(a: &M) -> f64 {
    let h = a.adjoint() * a;
    let n = h.nrows();
    let mut v = nalgebra::DVector::from_fn(n, |i, _| c(1.0 + 0.1 * i as f64, 0.05 * i as f64));
    let mut lambda = 0.0;
    for _ in 0..2000 {
        let w = &h * &v;
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dotc(&w).re / v.norm_squared();
        v = w / c(nw, 0.0);
        if (next - lambda).abs() <= 1e-15 * next.abs() {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// Ordinary least squares slope by the textbook normal equations.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// `ℒ^(αβ)` written entry by entry from its defining sum.
pub fn generator_oracle(k: &M, l: &[M], m: &[M], n: &[Vec<M>], alpha: &[C64], beta: &[C64]) -> M {
    let d = k.nrows();
    let half: f64 = 0.5 * alpha.iter().chain(beta).map(|z| z.norm_sqr()).sum::<f64>();
    M::from_fn(d, d, |r, col| {
        let mut v = k[(r, col)];
        for i in 0..alpha.len() {
            v += alpha[i].conj() * m[i][(r, col)] + beta[i] * l[i][(r, col)];
            for j in 0..beta.len() {
                v += alpha[i].conj() * beta[j] * n[i][j][(r, col)];
            }
        }
        if r == col {
            v -= c(half, 0.0);
        }
        v
    })
}

/// Dense matrix of `b` on `span{φ₀…φ_cutoff}` from its action on basis vectors.
pub fn annihilator(cutoff: usize) -> M {
    let d = cutoff + 1;
    M::from_fn(d, d, |r, col| if col == r + 1 { c((col as f64).sqrt(), 0.0) } else { c(0.0, 0.0) })
}

pub fn kron(a: &M, b: &M) -> M {
    a.kronecker(b)
}
