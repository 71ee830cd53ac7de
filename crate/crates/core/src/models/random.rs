//! Seeded random operators and coefficient families satisfying the
//! Hudson–Parthasarathy relations by construction.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{QsdeCoefficients, ScaledFamily};
use crate::models::cavity::CavityParams;
use crate::models::fock::fock_toolbox;
use crate::models::{Fixture, ParamValue};
use crate::operator::{CMatrix, HilbertSpace, Operator, SubspacePair, C64, DEFAULT_TOL, I};

pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Entries i.i.d. standard complex Gaussian, times `scale`.
pub fn random_operator<R: Rng + ?Sized>(rng: &mut R, space: &HilbertSpace, scale: f64) -> Operator {
    let d = space.total_dim();
    let m = CMatrix::from_fn(d, d, |_, _| gaussian(rng) * scale);
    Operator::new(space.clone(), m).expect("finite entries")
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, space: &HilbertSpace, scale: f64) -> Operator {
    random_operator(rng, space, scale).hermitian_part()
}

/// Haar-distributed unitary: QR of a Gaussian matrix with the phases of
/// `diag(R)` divided out.
pub fn random_unitary_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Splits an `(n·d) × (n·d)` matrix into an `n × n` grid of operators on `space`.
pub fn operator_blocks(m: &CMatrix, space: &HilbertSpace, n: usize) -> Vec<Vec<Operator>> {
    let d = space.total_dim();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    Operator::new(space.clone(), m.view((i * d, j * d), (d, d)).into_owned())
                        .expect("block shape")
                })
                .collect()
        })
        .collect()
}

pub fn random_unitary_grid<R: Rng + ?Sized>(rng: &mut R, space: &HilbertSpace, n: usize) -> Vec<Vec<Operator>> {
    let u = random_unitary_matrix(rng, n * space.total_dim());
    operator_blocks(&u, space, n)
}

/// `K = -iH - ½ΣLL†`, random `L_i`, Haar `N`, `M` derived.
pub fn random_hp_coefficients<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    channels: usize,
) -> Result<QsdeCoefficients> {
    if channels == 0 {
        return Err(Error::InvalidArgument("at least one channel is required".into()));
    }
    let space = HilbertSpace::single(dim)?;
    let l_ops: Vec<Operator> = (0..channels).map(|_| random_operator(rng, &space, 1.0)).collect();
    let h = random_hermitian(rng, &space, 1.0);
    let mut k = h.scale(-I);
    for l in &l_ops {
        k = &k - &(l * &l.adjoint()).scale_real(0.5);
    }
    let n_ops = random_unitary_grid(rng, &space, channels);
    QsdeCoefficients::with_derived_m(k, l_ops, n_ops)
}

/// Cavity parameters obeying the scaled relations:
/// `E₁₁ = -½ΣFF† + iH₁`, `E₁₀ = -½ΣFG† + iC`, `E₀₁ = -½ΣGF† + iC†`,
/// `E₀₀ = -½ΣGG† + iH₃`, `S` Haar. `F₁` carries an identity shift so
/// `E₁₁` stays well conditioned.
pub fn random_cavity_params<R: Rng + ?Sized>(
    rng: &mut R,
    hprime_dim: usize,
    channels: usize,
) -> Result<CavityParams> {
    if channels == 0 {
        return Err(Error::InvalidArgument("at least one channel is required".into()));
    }
    let space = HilbertSpace::single(hprime_dim)?;
    let id = Operator::identity(&space);
    let f: Vec<Operator> = (0..channels)
        .map(|i| {
            let r = random_operator(rng, &space, 0.5);
            if i == 0 { &r + &id } else { r }
        })
        .collect();
    let g: Vec<Operator> = (0..channels).map(|_| random_operator(rng, &space, 1.0)).collect();
    let h1 = random_hermitian(rng, &space, 1.0);
    let h3 = random_hermitian(rng, &space, 1.0);
    let c = random_operator(rng, &space, 1.0);
    let mut ff = Operator::zeros(&space);
    let mut fg = Operator::zeros(&space);
    let mut gg = Operator::zeros(&space);
    for (fi, gi) in f.iter().zip(&g) {
        ff += &(fi * &fi.adjoint());
        fg += &(fi * &gi.adjoint());
        gg += &(gi * &gi.adjoint());
    }
    let e11 = &h1.scale(I) - &ff.scale_real(0.5);
    let e10 = &c.scale(I) - &fg.scale_real(0.5);
    let e01 = &c.adjoint().scale(I) - &fg.adjoint().scale_real(0.5);
    let e00 = &h3.scale(I) - &gg.scale_real(0.5);
    let s = random_unitary_grid(rng, &space, channels);
    Ok(CavityParams { s, f, g, e00, e01, e10, e11 })
}

/// A cavity-like family with extra structure the closed cavity formula
/// does not cover: `Y = E₁₁⊗N + iHₓ⊗N²`, `A = E₁₀⊗b† + E₀₁⊗b + iD⊗Π₊`,
/// `B = E₀₀⊗I + iH₄⊗N`, `W_ij = S_ij⊗|φ₀⟩⟨φ₀| + S'_ij⊗Π₊`, with `Π₊` the
/// projection onto photon-excited states. Slow subspace `ℋ'⊗ℂφ₀`.
pub fn random_structured_family<R: Rng + ?Sized>(
    rng: &mut R,
    hprime_dim: usize,
    channels: usize,
    cutoff: usize,
) -> Result<Fixture> {
    let p = random_cavity_params(rng, hprime_dim, channels)?;
    let space = p.space().clone();
    let fock = fock_toolbox(cutoff)?;
    let id_c = fock.identity();
    let vac = fock.basis_matrix(0, 0);
    let excited = &id_c - &vac;
    let n_sq = &fock.number * &fock.number;
    let hx = random_hermitian(rng, &space, 0.5);
    let d = random_hermitian(rng, &space, 1.0);
    let h4 = random_hermitian(rng, &space, 1.0);
    let s_exc = random_unitary_grid(rng, &space, channels);

    let y = &p.e11.kron(&fock.number) + &hx.scale(I).kron(&n_sq);
    let a = &(&p.e10.kron(&fock.b_dag) + &p.e01.kron(&fock.b)) + &d.scale(I).kron(&excited);
    let b = &p.e00.kron(&id_c) + &h4.scale(I).kron(&fock.number);
    let f: Vec<Operator> = p.f.iter().map(|x| x.kron(&fock.b_dag)).collect();
    let g: Vec<Operator> = p.g.iter().map(|x| x.kron(&id_c)).collect();
    let w: Vec<Vec<Operator>> = p
        .s
        .iter()
        .zip(&s_exc)
        .map(|(row, row_exc)| {
            row.iter()
                .zip(row_exc)
                .map(|(s0, s1)| &s0.kron(&vac) + &s1.kron(&excited))
                .collect()
        })
        .collect();
    let family = ScaledFamily::new(y, a, b, f, g, w)?;
    let p0 = Operator::identity(&space).kron(&vac);
    let sub = SubspacePair::new(p0, DEFAULT_TOL)?;

    let mut params = BTreeMap::new();
    params.insert("hprime_dim".to_string(), ParamValue::Integer(hprime_dim));
    params.insert("channels".to_string(), ParamValue::Integer(channels));
    params.insert("cutoff".to_string(), ParamValue::Integer(cutoff));
    Ok(Fixture {
        name: "random-structured".to_string(),
        family,
        sub,
        expected_limit: None,
        params,
        cutoff: Some(cutoff),
    })
}
