//! Dense complex/real helpers shared by the model modules: rank decisions via
//! singular values, kernel bases, Takagi-type factorization of complex
//! symmetric matrices, joint diagonalization of commuting self-adjoint pairs,
//! and continued-fraction rounding of angles to rational turns.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_rational::Ratio;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub fn frob_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

pub fn spec_norm(m: &DMatrix<C64>) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Hermitian embedding [[0, A],[A*, 0]] whose eigenvalues are ±σ(A). All
/// singular-value machinery goes through this and the symmetric eigensolver:
/// the bidiagonal SVD iteration loses accuracy on (nearly) repeated singular
/// values, and repeated values are the norm here (differences and products
/// of unitaries), while the tridiagonal eigensolver stays backward stable.
fn jw_embed(m: &DMatrix<C64>) -> DMatrix<C64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut h = DMatrix::zeros(rows + cols, rows + cols);
    h.view_mut((0, rows), (rows, cols)).copy_from(m);
    h.view_mut((rows, 0), (cols, rows)).copy_from(&m.adjoint());
    h
}

/// Singular values in weakly decreasing order.
pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Vec::new();
    }
    let (vals, _) = hermitian_eigen_sorted(&jw_embed(m));
    vals[..k].iter().map(|&v| v.max(0.0)).collect()
}

/// Orthonormal basis of the column space (columns with sigma above the
/// rank cut), from the embedding eigenvectors.
pub fn range_basis(m: &DMatrix<C64>, eps: f64) -> DMatrix<C64> {
    let rows = m.nrows();
    if rows == 0 || m.ncols() == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let (vals, vecs) = hermitian_eigen_sorted(&jw_embed(m));
    let cut = zero_cut(&[vals.first().copied().unwrap_or(0.0).max(0.0)], eps);
    let mut cols = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v <= cut {
            break;
        }
        let top = vecs.view((0, i), (rows, 1)).into_owned();
        let norm = top.norm();
        debug_assert!(norm > 0.5); // the top block carries weight 1/sqrt(2)
        cols.push(DVector::from_column_slice(top.as_slice()) / C64::new(norm, 0.0));
    }
    if cols.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Full factorization A = U diag(s) V* of a square matrix, again through the
/// embedding; the null parts of U and V are completed independently.
pub fn svd_square(m: &DMatrix<C64>, eps: f64) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    debug_assert_eq!(n, m.ncols());
    let (vals, vecs) = hermitian_eigen_sorted(&jw_embed(m));
    let cut = zero_cut(&[vals.first().copied().unwrap_or(0.0).max(0.0)], eps);
    let mut us = Vec::new();
    let mut vs = Vec::new();
    let mut svals = vec![0.0f64; n];
    for (i, &v) in vals.iter().enumerate() {
        if v <= cut {
            break;
        }
        let top = vecs.view((0, i), (n, 1)).into_owned();
        let bot = vecs.view((n, i), (n, 1)).into_owned();
        svals[i] = v;
        us.push(DVector::from_column_slice(top.as_slice()) / C64::new(top.norm(), 0.0));
        vs.push(DVector::from_column_slice(bot.as_slice()) / C64::new(bot.norm(), 0.0));
    }
    let pack = |cols: &[DVector<C64>]| {
        if cols.is_empty() {
            DMatrix::zeros(n, 0)
        } else {
            DMatrix::from_columns(cols)
        }
    };
    let u = orthonormal_completion(&pack(&us));
    let v = orthonormal_completion(&pack(&vs));
    (u, svals, v)
}

/// Real counterpart of [`singular_values`].
pub fn real_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    singular_values(&m.map(|x| C64::new(x, 0.0)))
}

/// Real counterpart of [`range_basis`]; the embedding is real symmetric, so
/// the basis comes out real.
pub fn real_range_basis(m: &DMatrix<f64>, eps: f64) -> DMatrix<f64> {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return DMatrix::zeros(rows, 0);
    }
    let mut h = DMatrix::zeros(rows + cols, rows + cols);
    h.view_mut((0, rows), (rows, cols)).copy_from(m);
    h.view_mut((rows, 0), (cols, rows)).copy_from(&m.transpose());
    let (vals, vecs) = real_sym_eigen_sorted(&h);
    let cut = zero_cut(&[vals.first().copied().unwrap_or(0.0).max(0.0)], eps);
    let mut out = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        if v <= cut {
            break;
        }
        let top = vecs.view((0, i), (rows, 1)).into_owned();
        let norm = top.norm();
        debug_assert!(norm > 0.5);
        out.push(DVector::from_column_slice(top.as_slice()) / norm);
    }
    if out.is_empty() {
        DMatrix::zeros(rows, 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Rank threshold: sigma counts as zero when sigma <= eps * max(sigma_max, 1).
/// The floor at 1 keeps the decision meaningful for near-zero matrices
/// (differences of unitaries are O(1)-scaled by construction).
fn zero_cut(svals: &[f64], eps: f64) -> f64 {
    let smax = svals.first().copied().unwrap_or(0.0);
    eps * smax.max(1.0)
}

pub fn kernel_dim(m: &DMatrix<C64>, eps: f64) -> usize {
    let sv = singular_values(m);
    let cut = zero_cut(&sv, eps);
    let rank = sv.iter().filter(|&&s| s > cut).count();
    m.ncols() - rank
}

pub fn rank(m: &DMatrix<C64>, eps: f64) -> usize {
    m.ncols() - kernel_dim(m, eps)
}

/// Orthonormal basis of the (numerical) kernel, as matrix columns: the
/// orthogonal complement of the row space.
pub fn kernel_basis(m: &DMatrix<C64>, eps: f64) -> DMatrix<C64> {
    let n = m.ncols();
    if m.nrows() == 0 || n == 0 {
        return DMatrix::identity(n, n);
    }
    let row_space = range_basis(&m.adjoint(), eps);
    let rank = row_space.ncols();
    let full = orthonormal_completion(&row_space);
    full.columns(rank, n - rank).into_owned()
}

/// Given a matrix with orthonormal columns, return a full unitary whose first
/// columns are the given ones. Deterministic Gram-Schmidt over the standard
/// basis.
pub fn orthonormal_completion(cols: &DMatrix<C64>) -> DMatrix<C64> {
    let n = cols.nrows();
    let mut basis: Vec<DVector<C64>> = (0..cols.ncols()).map(|j| cols.column(j).into_owned()).collect();
    for k in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = DVector::<C64>::zeros(n);
        v[k] = C64::new(1.0, 0.0);
        for b in &basis {
            let coef = b.dotc(&v);
            v -= b * coef;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            basis.push(v / C64::new(norm, 0.0));
        }
    }
    assert_eq!(basis.len(), n, "orthonormal completion failed");
    DMatrix::from_columns(&basis)
}

/// Modified Gram-Schmidt over the complex field; drops near-dependent vectors.
pub fn complex_gram_schmidt(vectors: &[DVector<C64>], drop_tol: f64) -> Vec<DVector<C64>> {
    let mut out: Vec<DVector<C64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &out {
            let coef = b.dotc(&w);
            w -= b * coef;
        }
        let norm = w.norm();
        if norm > drop_tol {
            out.push(w / C64::new(norm, 0.0));
        }
    }
    out
}

/// Eigendecomposition of a hermitian matrix with eigenpairs sorted by
/// decreasing eigenvalue. Input is symmetrized first. Decompositions are
/// delegated to faer: nalgebra's tridiagonal iteration can return grossly
/// inaccurate eigenvectors on (nearly) repeated eigenvalues, which are the
/// typical case here (spectra of unitary configurations).
pub fn hermitian_eigen_sorted(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let fm = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = fm.self_adjoint_eigen(faer::Side::Lower).expect("hermitian eigendecomposition");
    // faer sorts nondecreasing; flip to nonincreasing
    let vals: Vec<f64> = (0..n).map(|i| eig.S()[n - 1 - i].re).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.U()[(i, n - 1 - j)]);
    (vals, vecs)
}

pub fn real_sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let h = (m + m.transpose()) * 0.5;
    let fm = faer::Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)]);
    let eig = fm.self_adjoint_eigen(faer::Side::Lower).expect("symmetric eigendecomposition");
    let vals: Vec<f64> = (0..n).map(|i| eig.S()[n - 1 - i]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.U()[(i, n - 1 - j)]);
    (vals, vecs)
}

/// Takagi-type factorization of a complex symmetric matrix: z = q diag(s) qᵀ
/// with q unitary and s weakly decreasing nonnegative. The antilinear map
/// v ↦ z v̄ realifies to the real symmetric matrix [[R, M],[M, −R]] whose
/// positive-eigenvalue vectors give the factor columns.
pub fn takagi(z: &DMatrix<C64>, tol: f64) -> Result<(DMatrix<C64>, Vec<f64>)> {
    let n = z.nrows();
    if z.ncols() != n {
        return Err(Error::DimensionMismatch(format!("takagi needs square input, got {}x{}", n, z.ncols())));
    }
    let sym_res = frob_norm(&(z - z.transpose()));
    if sym_res > tol.max(1e-10) * frob_norm(z).max(1.0) {
        return Err(Error::NonSymmetricInput { residual: sym_res });
    }
    if n == 0 {
        return Ok((DMatrix::zeros(0, 0), Vec::new()));
    }
    let zs = (z + z.transpose()) * C64::new(0.5, 0.0);
    let re = zs.map(|c| c.re);
    let im = zs.map(|c| c.im);
    let mut k = DMatrix::<f64>::zeros(2 * n, 2 * n);
    k.view_mut((0, 0), (n, n)).copy_from(&re);
    k.view_mut((0, n), (n, n)).copy_from(&im);
    k.view_mut((n, 0), (n, n)).copy_from(&im);
    k.view_mut((n, n), (n, n)).copy_from(&(-&re));
    let (vals, vecs) = real_sym_eigen_sorted(&k);
    let scale = vals.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    let zero_band = 1e-12 * scale;

    // strictly positive eigenvalues -> Takagi vectors; the zero eigenspace
    // (real dimension twice the complex kernel) is re-orthonormalized over ℂ.
    let mut cols: Vec<DVector<C64>> = Vec::new();
    let mut sigmas: Vec<f64> = Vec::new();
    let mut kernel_reps: Vec<DVector<C64>> = Vec::new();
    for (i, &lam) in vals.iter().enumerate() {
        let x = vecs.column(i);
        let q = DVector::from_fn(n, |j, _| C64::new(x[j], x[n + j]));
        if lam > zero_band {
            cols.push(q);
            sigmas.push(lam);
        } else if lam.abs() <= zero_band {
            kernel_reps.push(q);
        }
    }
    // positive clusters may be nearly complex-dependent only through numerics;
    // re-orthonormalize without changing the span ordering.
    let mut qcols = complex_gram_schmidt(&cols, 1e-8);
    if qcols.len() != sigmas.len() {
        return Err(Error::DegenerateFrame("takagi positive eigenspace collapsed".into()));
    }
    let kernel_cols = complex_gram_schmidt(&kernel_reps, 1e-8);
    for c in kernel_cols {
        if qcols.len() < n {
            // keep only components orthogonal to the positive part
            let mut w = c;
            for b in &qcols {
                let coef = b.dotc(&w);
                w -= b * coef;
            }
            let norm = w.norm();
            if norm > 1e-8 {
                qcols.push(w / C64::new(norm, 0.0));
                sigmas.push(0.0);
            }
        }
    }
    if qcols.len() != n {
        return Err(Error::DegenerateFrame(format!("takagi produced {} of {} columns", qcols.len(), n)));
    }
    let q = DMatrix::from_columns(&qcols);
    let recon = &q * DMatrix::from_diagonal(&DVector::from_iterator(n, sigmas.iter().map(|&s| C64::new(s, 0.0)))) * q.transpose();
    let err = frob_norm(&(&recon - &zs));
    if err > 1e-7 * frob_norm(&zs).max(1.0) {
        return Err(Error::NoConvergence(format!("takagi reconstruction residual {:.3e}", err)));
    }
    Ok((q, sigmas))
}

fn cluster_ranges(vals: &[f64], gap: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=vals.len() {
        if i == vals.len() || (vals[i - 1] - vals[i]).abs() > gap {
            out.push((start, i));
            start = i;
        }
    }
    out
}

/// Unitary v with v* a v and v* b v both diagonal, for commuting hermitian
/// a, b. Diagonalizes a, then b restricted to each eigenvalue cluster of a.
pub fn joint_diag_hermitian(a: &DMatrix<C64>, b: &DMatrix<C64>, gap: f64) -> DMatrix<C64> {
    let (vals, mut v) = hermitian_eigen_sorted(a);
    let scale = vals.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    for (lo, hi) in cluster_ranges(&vals, gap * scale) {
        if hi - lo > 1 {
            let vc = v.columns(lo, hi - lo).into_owned();
            let b_sub = vc.adjoint() * b * &vc;
            let (_, w) = hermitian_eigen_sorted(&b_sub);
            let rotated = vc * w;
            v.view_mut((0, lo), (v.nrows(), hi - lo)).copy_from(&rotated);
        }
    }
    v
}

/// Real-orthogonal analogue of [`joint_diag_hermitian`] for commuting real
/// symmetric a, b.
pub fn joint_diag_real_symmetric(a: &DMatrix<f64>, b: &DMatrix<f64>, gap: f64) -> DMatrix<f64> {
    let (vals, mut v) = real_sym_eigen_sorted(a);
    let scale = vals.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
    for (lo, hi) in cluster_ranges(&vals, gap * scale) {
        if hi - lo > 1 {
            let vc = v.columns(lo, hi - lo).into_owned();
            let b_sub = vc.transpose() * b * &vc;
            let (_, w) = real_sym_eigen_sorted(&b_sub);
            let rotated = vc * w;
            v.view_mut((0, lo), (v.nrows(), hi - lo)).copy_from(&rotated);
        }
    }
    v
}

/// Best rational approximation of a turn value in [0,1) with bounded
/// denominator, via continued-fraction convergents and semiconvergents.
/// Fails when no admissible rational lies within `tol` (circle distance).
pub fn round_turn(t: f64, max_den: i64, tol: f64) -> Result<Ratio<i64>> {
    let tw = t.rem_euclid(1.0);
    let mut best: Option<(f64, Ratio<i64>)> = None;
    let mut consider = |p: i64, q: i64| {
        if q < 1 || q > max_den {
            return;
        }
        let cand = Ratio::new(p.rem_euclid(q), q);
        let mut d = (tw - cand.to_f64()).abs();
        d = d.min(1.0 - d); // circle distance
        if best.as_ref().map_or(true, |(bd, _)| d < *bd) {
            best = Some((d, cand));
        }
    };
    consider(0, 1);
    consider(1, 1);
    // continued fraction of tw
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut x = tw;
    for _ in 0..40 {
        let a = x.floor();
        if !(a.abs() < 1e15) {
            break;
        }
        let ai = a as i64;
        let (p2, q2) = (ai.saturating_mul(p1).saturating_add(p0), ai.saturating_mul(q1).saturating_add(q0));
        if q2 > max_den || q2 < 0 {
            // largest admissible semiconvergent
            if q1 > 0 {
                let k = (max_den - q0) / q1;
                if k > 0 {
                    consider(k * p1 + p0, k * q1 + q0);
                }
            }
            break;
        }
        consider(p2, q2);
        p0 = p1;
        q0 = q1;
        p1 = p2;
        q1 = q2;
        let frac = x - a;
        if frac < 1e-15 {
            break;
        }
        x = 1.0 / frac;
    }
    match best {
        Some((d, cand)) if d <= tol => Ok(cand),
        _ => Err(Error::TurnRounding { value: t, max_den, tol }),
    }
}

trait RatioF64 {
    fn to_f64(&self) -> f64;
}
impl RatioF64 for Ratio<i64> {
    fn to_f64(&self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<C64> {
        // deterministic pseudo-random entries without pulling in rand here
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        &a + a.transpose()
    }

    #[test]
    fn takagi_reconstructs() {
        for seed in 1..5u64 {
            let z = random_symmetric(4, seed);
            let (q, s) = takagi(&z, 1e-8).unwrap();
            let d = DMatrix::from_diagonal(&DVector::from_iterator(4, s.iter().map(|&x| C64::new(x, 0.0))));
            let back = &q * d * q.transpose();
            assert!(frob_norm(&(&back - &z)) < 1e-8 * frob_norm(&z).max(1.0));
            assert!(frob_norm(&(q.adjoint() * &q - DMatrix::identity(4, 4))) < 1e-8);
            assert!(s.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        }
    }

    #[test]
    fn takagi_identity_is_trivial() {
        let z = DMatrix::<C64>::identity(3, 3);
        let (_, s) = takagi(&z, 1e-8).unwrap();
        assert!(s.iter().all(|&x| (x - 1.0).abs() < 1e-10));
    }

    #[test]
    fn takagi_handles_rank_deficiency() {
        let mut z = DMatrix::<C64>::zeros(3, 3);
        z[(0, 0)] = C64::new(2.0, 1.0);
        let (q, s) = takagi(&z, 1e-8).unwrap();
        assert!(s[1].abs() < 1e-10 && s[2].abs() < 1e-10);
        assert!(frob_norm(&(q.adjoint() * &q - DMatrix::identity(3, 3))) < 1e-8);
    }

    #[test]
    fn kernel_of_unitary_difference() {
        let u = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(0.0, 1.0),
        ]));
        let id = DMatrix::<C64>::identity(3, 3);
        assert_eq!(kernel_dim(&(&u - &id), 1e-8), 1);
        assert_eq!(kernel_dim(&(&u + &id), 1e-8), 1);
        let kb = kernel_basis(&(&u - &id), 1e-8);
        assert_eq!(kb.ncols(), 1);
        assert!((kb[(0, 0)].norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn round_turn_snaps_and_rejects() {
        assert_eq!(round_turn(0.5000000001, 1_000_000, 1e-6).unwrap(), Ratio::new(1, 2));
        assert_eq!(round_turn(0.749999999, 1_000_000, 1e-6).unwrap(), Ratio::new(3, 4));
        assert_eq!(round_turn(0.9999999999, 1_000_000, 1e-6).unwrap(), Ratio::new(0, 1));
        assert_eq!(round_turn(1.0 / 3.0, 1_000_000, 1e-9).unwrap(), Ratio::new(1, 3));
        // sqrt(2)-1 is badly approximable: tiny tolerance with tiny cap fails
        assert!(round_turn(std::f64::consts::SQRT_2 - 1.0, 10, 1e-9).is_err());
    }

    #[test]
    fn joint_diag_commuting_pair() {
        let p = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, -1.0]));
        let q = DMatrix::<f64>::from_diagonal(&DVector::from_vec(vec![2.0, -2.0, 0.0]));
        // rotate into a non-diagonal commuting pair
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let rot = DMatrix::from_row_slice(3, 3, &[c, -c, 0.0, c, c, 0.0, 0.0, 0.0, 1.0]);
        let a = &rot * p * rot.transpose();
        let b = &rot * q * rot.transpose();
        let v = joint_diag_real_symmetric(&a, &b, 1e-8);
        let da = v.transpose() * &a * &v;
        let db = v.transpose() * &b * &v;
        for m in [&da, &db] {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        assert!(m[(i, j)].abs() < 1e-8, "off-diagonal {}", m[(i, j)]);
                    }
                }
            }
        }
    }
}
