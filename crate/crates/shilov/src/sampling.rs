//! Seeded random generators for boundary elements, group elements, torus
//! points, Lagrangians, and the rank-one pseudo-unitary moves; used by the
//! selftest suites and the property tests. All functions are deterministic
//! given the RNG state.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::jts::Flavor;
use crate::lagrangian::LagrangianSubspace;
use crate::linalg::C64;
use crate::models::{BoundaryMatrix, MoebiusElement};
use crate::polydisc::{TorusPoint, Turn};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn ginibre(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// Haar-like random unitary via QR of a complex Gaussian-ish matrix, with
/// the phase ambiguity fixed by positive R diagonal.
pub fn random_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let qr = ginibre(n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 1e-12 { d / d.norm() } else { c(1.0, 0.0) };
        let col = q.column(j) * phase.conj();
        q.set_column(j, &col);
    }
    q
}

/// Random symmetric unitary w·wᵀ for unitary w.
pub fn random_symmetric_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let w = random_unitary(n, rng);
    &w * w.transpose()
}

pub fn random_boundary(flavor: Flavor, n: usize, rng: &mut ChaCha8Rng) -> Result<BoundaryMatrix> {
    let m = match flavor {
        Flavor::Symmetric => random_symmetric_unitary(n, rng),
        _ => random_unitary(n, rng),
    };
    BoundaryMatrix::new(flavor, m, 1e-8)
}

fn random_real_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0f64..1.0));
    m.qr().q()
}

/// Random invertible dilation factor with singular values in [0.8, 1.25];
/// real for the SYMMETRIC flavor.
fn random_dilation(flavor: Flavor, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let d = DVector::from_fn(n, |_, _| rng.gen_range(0.8f64..1.25));
    match flavor {
        Flavor::Symmetric => {
            let q1 = random_real_orthogonal(n, rng);
            let q2 = random_real_orthogonal(n, rng);
            (q1 * DMatrix::from_diagonal(&d) * q2).map(|x| c(x, 0.0))
        }
        _ => {
            let q1 = random_unitary(n, rng);
            let q2 = random_unitary(n, rng);
            q1 * DMatrix::from_diagonal(&d.map(|x| c(x, 0.0))) * q2
        }
    }
}

/// Random group element: linear part · Cayley-conjugated tube translation
/// and dilation · linear part. Kept moderately conditioned so that rank
/// decisions on conjugated configurations stay far from the thresholds.
pub fn random_moebius(flavor: Flavor, n: usize, rng: &mut ChaCha8Rng) -> Result<MoebiusElement> {
    let id = DMatrix::<C64>::identity(n, n);
    let zero = DMatrix::<C64>::zeros(n, n);
    let block2 = |a: &DMatrix<C64>, b: &DMatrix<C64>, cc: &DMatrix<C64>, d: &DMatrix<C64>| {
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (n, n)).copy_from(a);
        m.view_mut((0, n), (n, n)).copy_from(b);
        m.view_mut((n, 0), (n, n)).copy_from(cc);
        m.view_mut((n, n), (n, n)).copy_from(d);
        m
    };
    let lin = |rng: &mut ChaCha8Rng| -> DMatrix<C64> {
        match flavor {
            Flavor::Symmetric => {
                let a = random_unitary(n, rng);
                block2(&a, &zero, &zero, &a.conjugate())
            }
            _ => {
                let a = random_unitary(n, rng);
                let d = random_unitary(n, rng);
                block2(&a, &zero, &zero, &d)
            }
        }
    };
    // tube translation: v skew-hermitian (and symmetric for SYMMETRIC)
    let v = match flavor {
        Flavor::Symmetric => {
            let s = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.4f64..0.4));
            ((&s + s.transpose()) * 0.5).map(|x| c(0.0, x))
        }
        _ => {
            let h = ginibre(n, rng) * c(0.4, 0.0);
            (&h + h.adjoint()) * c(0.0, 0.5)
        }
    };
    let a_dil = random_dilation(flavor, n, rng);
    let a_dil_star_inv = a_dil.adjoint().try_inverse().expect("dilation is invertible");
    let cayley = block2(&id, &id, &(-&id), &id);
    let cayley_inv = block2(&id, &(-&id), &id, &id);
    let translation = block2(&id, &v, &zero, &id);
    let dilation = block2(&a_dil, &zero, &zero, &a_dil_star_inv);
    let raw = lin(rng) * cayley_inv * dilation * translation * cayley * lin(rng);
    MoebiusElement::from_matrix(flavor, raw)
}

/// Random torus point with denominators up to `max_den`.
pub fn random_torus_point(r: usize, max_den: i64, rng: &mut ChaCha8Rng) -> TorusPoint {
    TorusPoint::new(
        (0..r)
            .map(|_| {
                let den = rng.gen_range(1..=max_den);
                let num = rng.gen_range(0..den.max(1));
                Turn::new(num, den).expect("nonzero denominator")
            })
            .collect(),
    )
}

/// Random real symplectic matrix from the standard generator factorization
/// [[A,0],[0,(Aᵀ)⁻¹]]·[[I,B],[0,I]]·[[I,0],[C,I]] with B, C symmetric.
pub fn random_symplectic(r: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let sym = |rng: &mut ChaCha8Rng| {
        let m = DMatrix::from_fn(r, r, |_, _| rng.gen_range(-0.5f64..0.5));
        (&m + m.transpose()) * 0.5
    };
    let a = {
        let d = DVector::from_fn(r, |_, _| rng.gen_range(0.8f64..1.25));
        random_real_orthogonal(r, rng) * DMatrix::from_diagonal(&d) * random_real_orthogonal(r, rng)
    };
    let a_t_inv = a.transpose().try_inverse().expect("invertible by construction");
    let mut g = DMatrix::zeros(2 * r, 2 * r);
    g.view_mut((0, 0), (r, r)).copy_from(&a);
    g.view_mut((r, r), (r, r)).copy_from(&a_t_inv);
    let b = sym(rng);
    let mut shear_b = DMatrix::identity(2 * r, 2 * r);
    shear_b.view_mut((0, r), (r, r)).copy_from(&b);
    let cm = sym(rng);
    let mut shear_c = DMatrix::identity(2 * r, 2 * r);
    shear_c.view_mut((r, 0), (r, r)).copy_from(&cm);
    g * shear_b * shear_c
}

pub fn random_lagrangian(r: usize, rng: &mut ChaCha8Rng) -> Result<LagrangianSubspace> {
    let u = random_symmetric_unitary(r, rng);
    crate::lagrangian::unitary_to_lagrangian(&u)
}

/// Random isotropic vector for the form of signature (n,1) on ℂ^{n+1}
/// (last coordinate negative): random first block, last coordinate of
/// matching modulus and random phase.
pub fn random_isotropic(n: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let mut v = DVector::<C64>::zeros(n + 1);
    loop {
        for i in 0..n {
            let rad = rng.gen_range(0.3f64..2.0);
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            v[i] = c(rad * th.cos(), rad * th.sin());
        }
        let norm2: f64 = (0..n).map(|i| v[i].norm_sqr()).sum();
        if norm2 > 0.1 {
            let th = rng.gen_range(0.0..std::f64::consts::TAU);
            v[n] = c(norm2.sqrt() * th.cos(), norm2.sqrt() * th.sin());
            return v;
        }
    }
}

/// Random element of U(n,1): a block unitary times a hyperbolic boost in the
/// plane of the first and last coordinates.
pub fn random_pseudo_unitary(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
    let mut block = DMatrix::<C64>::identity(n + 1, n + 1);
    block.view_mut((0, 0), (n, n)).copy_from(&random_unitary(n, rng));
    let phase = rng.gen_range(0.0..std::f64::consts::TAU);
    block[(n, n)] = c(phase.cos(), phase.sin());
    let t: f64 = rng.gen_range(-1.0..1.0);
    let mut boost = DMatrix::<C64>::identity(n + 1, n + 1);
    boost[(0, 0)] = c(t.cosh(), 0.0);
    boost[(0, n)] = c(t.sinh(), 0.0);
    boost[(n, 0)] = c(t.sinh(), 0.0);
    boost[(n, n)] = c(t.cosh(), 0.0);
    block * boost
}
