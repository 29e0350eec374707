//! The symplectic picture: real Lagrangian subspaces of (ℝ^{2r}, ω), the
//! Kashiwara signature index of a Lagrangian triple, the bijection with
//! symmetric unitaries, and the joint normal form of three Lagrangians.

use nalgebra::{DMatrix, DVector};
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jts::Flavor;
use crate::linalg::{self, C64};
use crate::models::{reduce_to_torus, BoundaryMatrix, MoebiusElement};
use crate::{EPS_RANK, EPS_VAL};

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// The standard symplectic ℝ^{2r} with ω((ξ,η),(ξ',η')) = ξᵀη' − ηᵀξ'.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymplecticSpace {
    r: usize,
}

impl SymplecticSpace {
    pub fn new(r: usize) -> Self {
        SymplecticSpace { r }
    }

    pub fn r(&self) -> usize {
        self.r
    }

    /// Matrix of ω: J = [[0, I],[−I, 0]].
    pub fn j_matrix(&self) -> DMatrix<f64> {
        let r = self.r;
        let mut j = DMatrix::zeros(2 * r, 2 * r);
        for k in 0..r {
            j[(k, r + k)] = 1.0;
            j[(r + k, k)] = -1.0;
        }
        j
    }

    pub fn omega(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        (v.transpose() * self.j_matrix() * w)[(0, 0)]
    }
}

/// An r-dimensional ω-isotropic subspace of ℝ^{2r}, stored via an
/// orthonormal spanning basis (columns).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LagrangianRepr", into = "LagrangianRepr")]
pub struct LagrangianSubspace {
    basis: DMatrix<f64>,
}

#[derive(Serialize, Deserialize)]
struct LagrangianRepr {
    basis: Vec<Vec<f64>>,
}

impl TryFrom<LagrangianRepr> for LagrangianSubspace {
    type Error = Error;
    fn try_from(r: LagrangianRepr) -> Result<Self> {
        let cols = r.basis.len();
        if cols == 0 || r.basis.iter().any(|col| col.len() != 2 * cols) {
            return Err(Error::Parse("Lagrangian basis must hold r columns of length 2r".into()));
        }
        let m = DMatrix::from_fn(2 * cols, cols, |i, j| r.basis[j][i]);
        LagrangianSubspace::new(m)
    }
}

impl From<LagrangianSubspace> for LagrangianRepr {
    fn from(l: LagrangianSubspace) -> Self {
        let basis = (0..l.basis.ncols())
            .map(|j| (0..l.basis.nrows()).map(|i| l.basis[(i, j)]).collect())
            .collect();
        LagrangianRepr { basis }
    }
}

impl LagrangianSubspace {
    /// Validates full rank and isotropy, then stores an orthonormalized basis
    /// of the same span.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let r = basis.ncols();
        if basis.nrows() != 2 * r || r == 0 {
            return Err(Error::DimensionMismatch(format!(
                "Lagrangian basis must be 2r x r, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        let sv = linalg::real_singular_values(&basis);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        if smin <= EPS_RANK * smax.max(1.0) {
            let got = sv.iter().filter(|&&s| s > EPS_RANK * smax.max(1.0)).count();
            return Err(Error::ExtractionRankFailure { expected: r, got });
        }
        let j = SymplecticSpace::new(r).j_matrix();
        let iso = (basis.transpose() * &j * &basis).norm();
        if iso > EPS_VAL * smax.powi(2).max(1.0) * (r as f64) {
            return Err(Error::NotBoundary(format!("subspace is not isotropic (residual {:.3e})", iso)));
        }
        // orthonormalize without leaving the span
        let ortho = linalg::real_range_basis(&basis, EPS_RANK);
        debug_assert_eq!(ortho.ncols(), r);
        Ok(LagrangianSubspace { basis: ortho })
    }

    pub fn r(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn intersection_dim(&self, other: &LagrangianSubspace) -> Result<usize> {
        let r = self.r();
        if other.r() != r {
            return Err(Error::RankMismatch { expected: r, got: other.r() });
        }
        let mut stacked = DMatrix::zeros(2 * r, 2 * r);
        stacked.view_mut((0, 0), (2 * r, r)).copy_from(&self.basis);
        stacked.view_mut((0, r), (2 * r, r)).copy_from(&other.basis);
        let sv = linalg::real_singular_values(&stacked);
        let cut = EPS_RANK * sv.first().copied().unwrap_or(0.0).max(1.0);
        let rank = sv.iter().filter(|&&s| s > cut).count();
        Ok(2 * r - rank)
    }

    /// Image under an invertible linear map (re-validated).
    pub fn transform(&self, g: &DMatrix<f64>) -> Result<LagrangianSubspace> {
        LagrangianSubspace::new(g * &self.basis)
    }
}

/// Eigen-signature of a real symmetric matrix with a zero band at
/// eps·scale and a one-decade guard band that refuses to guess.
fn stable_signature(s: &DMatrix<f64>, eps: f64) -> Result<i64> {
    let (vals, _) = linalg::real_sym_eigen_sorted(s);
    let scale = vals.iter().fold(0.0f64, |m, &v| m.max(v.abs())).max(1.0);
    let zero = eps * scale;
    let guard = 10.0 * zero;
    let mut sig = 0i64;
    for &v in &vals {
        let a = v.abs();
        if a <= zero {
            continue;
        }
        if a <= guard {
            return Err(Error::SignatureUnstable { value: v, lo: zero, hi: guard });
        }
        sig += if v > 0.0 { 1 } else { -1 };
    }
    Ok(sig)
}

fn kashiwara_form(l1: &LagrangianSubspace, l2: &LagrangianSubspace, l3: &LagrangianSubspace) -> DMatrix<f64> {
    let r = l1.r();
    let j = SymplecticSpace::new(r).j_matrix();
    let m12 = l1.basis().transpose() * &j * l2.basis();
    let m23 = l2.basis().transpose() * &j * l3.basis();
    let m31 = l3.basis().transpose() * &j * l1.basis();
    let mut s = DMatrix::zeros(3 * r, 3 * r);
    s.view_mut((0, r), (r, r)).copy_from(&(&m12 * 0.5));
    s.view_mut((r, 0), (r, r)).copy_from(&(m12.transpose() * 0.5));
    s.view_mut((r, 2 * r), (r, r)).copy_from(&(&m23 * 0.5));
    s.view_mut((2 * r, r), (r, r)).copy_from(&(m23.transpose() * 0.5));
    s.view_mut((2 * r, 0), (r, r)).copy_from(&(&m31 * 0.5));
    s.view_mut((0, 2 * r), (r, r)).copy_from(&(m31.transpose() * 0.5));
    s
}

/// Calibration sign fixed once so that the image of the circle triple
/// (1, −1, −i) scores +1, independent of the ω sign convention.
static CALIBRATION: Lazy<i64> = Lazy::new(|| {
    let x_axis = LagrangianSubspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).expect("axis");
    let y_axis = LagrangianSubspace::new(DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).expect("axis");
    let diag = LagrangianSubspace::new(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).expect("diagonal");
    let raw = stable_signature(&kashiwara_form(&x_axis, &y_axis, &diag), EPS_RANK).expect("calibration signature");
    assert!(raw == 1 || raw == -1, "calibration triple must be nondegenerate");
    raw
});

/// Signature index of a Lagrangian triple: the signature of the form
/// ω(a,b) + ω(b,c) + ω(c,a) on l1 ⊕ l2 ⊕ l3, calibrated so the circle triple
/// (1, −1, −i) maps to +1.
pub fn kashiwara_index(l1: &LagrangianSubspace, l2: &LagrangianSubspace, l3: &LagrangianSubspace) -> Result<i64> {
    let r = l1.r();
    if l2.r() != r || l3.r() != r {
        return Err(Error::DimensionMismatch(format!("Lagrangian ranks {}, {}, {}", l1.r(), l2.r(), l3.r())));
    }
    let raw = stable_signature(&kashiwara_form(l1, l2, l3), EPS_RANK)?;
    Ok(*CALIBRATION * raw)
}

/// Raw signature before calibration (used by the oracle examples).
pub fn kashiwara_raw_signature(
    l1: &LagrangianSubspace,
    l2: &LagrangianSubspace,
    l3: &LagrangianSubspace,
) -> Result<i64> {
    stable_signature(&kashiwara_form(l1, l2, l3), EPS_RANK)
}

/// The real Lagrangian corresponding to a symmetric unitary u: pull the
/// graph {(ξ, uξ)} back through C(ξ,η) = ((ξ+iη)/√2, (ξ−iη)/√2) and extract
/// a real spanning set.
pub fn unitary_to_lagrangian(u: &DMatrix<C64>) -> Result<LagrangianSubspace> {
    let r = u.nrows();
    if u.ncols() != r || r == 0 {
        return Err(Error::DimensionMismatch(format!("square nonempty matrix expected, got {}x{}", r, u.ncols())));
    }
    let res = linalg::frob_norm(&(u * u.adjoint() - DMatrix::identity(r, r)))
        .max(linalg::frob_norm(&(u - u.transpose())));
    if res > EPS_VAL * (r as f64) {
        return Err(Error::NotSymmetricUnitary { residual: res });
    }
    // columns of the complex graph basis, mapped through C⁻¹
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut reals = DMatrix::<f64>::zeros(2 * r, 2 * r);
    for jcol in 0..r {
        let mut a = DVector::<C64>::zeros(r);
        a[jcol] = c(1.0, 0.0);
        let b = u.column(jcol).into_owned();
        // C⁻¹(a, b) = ((a+b)/√2, (a−b)/(i√2))
        let top = (&a + &b) * c(inv_sqrt2, 0.0);
        let bot = (&a - &b) * c(0.0, -inv_sqrt2);
        for i in 0..r {
            reals[(i, jcol)] = top[i].re;
            reals[(r + i, jcol)] = bot[i].re;
            reals[(i, r + jcol)] = top[i].im;
            reals[(r + i, r + jcol)] = bot[i].im;
        }
    }
    // the real and imaginary parts together span an r-dimensional real space
    let span = linalg::real_range_basis(&reals, EPS_RANK);
    if span.ncols() != r {
        return Err(Error::ExtractionRankFailure { expected: r, got: span.ncols() });
    }
    LagrangianSubspace::new(span)
}

/// Inverse of [`unitary_to_lagrangian`]: complexify the basis through C and
/// read the graph slope u = B A⁻¹.
pub fn lagrangian_to_unitary(l: &LagrangianSubspace) -> Result<DMatrix<C64>> {
    let r = l.r();
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut a_blk = DMatrix::<C64>::zeros(r, r);
    let mut b_blk = DMatrix::<C64>::zeros(r, r);
    for jcol in 0..r {
        for i in 0..r {
            let xi = l.basis()[(i, jcol)];
            let eta = l.basis()[(r + i, jcol)];
            a_blk[(i, jcol)] = c(xi * inv_sqrt2, eta * inv_sqrt2);
            b_blk[(i, jcol)] = c(xi * inv_sqrt2, -eta * inv_sqrt2);
        }
    }
    let sv = linalg::singular_values(&a_blk);
    if sv.last().copied().unwrap_or(0.0) <= EPS_RANK * sv.first().copied().unwrap_or(0.0).max(1.0) {
        return Err(Error::DegenerateFrame("complexified basis has a singular graph block".into()));
    }
    let a_inv = a_blk.try_inverse().ok_or_else(|| Error::DegenerateFrame("graph block not invertible".into()))?;
    let u = b_blk * a_inv;
    let u = (&u + u.transpose()) * c(0.5, 0.0);
    let res = linalg::frob_norm(&(&u * u.adjoint() - DMatrix::identity(r, r)));
    if res > 1e-7 * (r as f64) {
        return Err(Error::DegenerateFrame(format!("recovered matrix is not unitary ({:.3e})", res)));
    }
    Ok(u)
}

/// The complex change of coordinates realizing C on ℂ^{2r}.
fn c_map(r: usize) -> DMatrix<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = DMatrix::zeros(2 * r, 2 * r);
    for i in 0..r {
        m[(i, i)] = c(s, 0.0);
        m[(i, r + i)] = c(0.0, s);
        m[(r + i, i)] = c(s, 0.0);
        m[(r + i, r + i)] = c(0.0, -s);
    }
    m
}

/// Transport of a Moebius witness to the real symplectic side: the linear
/// map S with L_{g(u)} = S·L_u.
fn transport_witness(g: &MoebiusElement) -> Result<DMatrix<f64>> {
    let r = g.n();
    let (a, b, cc, d) = g.blocks();
    // the graph (ξ, uξ) transforms by [[d, c],[b, a]]
    let m = {
        let mut m = DMatrix::zeros(2 * r, 2 * r);
        m.view_mut((0, 0), (r, r)).copy_from(&d);
        m.view_mut((0, r), (r, r)).copy_from(&cc);
        m.view_mut((r, 0), (r, r)).copy_from(&b);
        m.view_mut((r, r), (r, r)).copy_from(&a);
        m
    };
    let cm = c_map(r);
    let cm_inv = cm.adjoint(); // C is unitary
    let s = cm_inv * m * cm;
    let imag = s.iter().map(|v| v.im * v.im).sum::<f64>().sqrt();
    if imag > 1e-7 * (2 * r) as f64 {
        return Err(Error::NoConvergence(format!("transported witness is not real ({:.3e})", imag)));
    }
    Ok(s.map(|v| v.re))
}

/// Simultaneous normal form of three Lagrangians: a symplectic g such that
/// g⁻¹·lκ is spanned by {cos θ_j e_j + sin θ_j f_j}, with the three angle
/// sequences in [0, π).
pub fn joint_normal_form(
    l1: &LagrangianSubspace,
    l2: &LagrangianSubspace,
    l3: &LagrangianSubspace,
    tol: f64,
) -> Result<(DMatrix<f64>, [Vec<f64>; 3])> {
    let r = l1.r();
    if l2.r() != r || l3.r() != r {
        return Err(Error::DimensionMismatch("three Lagrangians of equal rank expected".into()));
    }
    let us: Vec<BoundaryMatrix> = [l1, l2, l3]
        .iter()
        .map(|l| BoundaryMatrix::new(Flavor::Symmetric, lagrangian_to_unitary(l)?, 1e-6))
        .collect::<Result<Vec<_>>>()?;
    let (gm, pts) = reduce_to_torus(Flavor::Symmetric, &us[0], &us[1], &us[2], tol)?;
    let s = transport_witness(&gm)?;
    let g = s
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::NoConvergence("transported witness not invertible".into()))?;
    // postcondition: symplectic to the validation tolerance
    let j = SymplecticSpace::new(r).j_matrix();
    let res = (g.transpose() * &j * &g - &j).norm();
    if res > 1e-7 * (2 * r) as f64 {
        return Err(Error::NoConvergence(format!("witness lost symplecticity ({:.3e})", res)));
    }
    let angles: Vec<Vec<f64>> = pts
        .iter()
        .map(|p| {
            p.turns()
                .iter()
                .map(|t| (-std::f64::consts::PI * t.to_f64()).rem_euclid(std::f64::consts::PI))
                .collect()
        })
        .collect();
    let angles: [Vec<f64>; 3] = angles.try_into().expect("three sequences");
    Ok((g, angles))
}
