//! Model-generic Jordan-triple operators. Elements are complex matrices
//! (column vectors for the polydisc); operators x□y, Q(x) and B(x,y) are
//! materialized as real matrices on the realified coordinate space so that
//! linear and antilinear maps share one representation.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Flavor {
    Polydisc,
    Symmetric,
    Hermitian,
}

impl std::fmt::Display for Flavor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Flavor::Polydisc => "POLYDISC",
            Flavor::Symmetric => "SYMMETRIC",
            Flavor::Hermitian => "HERMITIAN",
        };
        f.write_str(s)
    }
}

/// One concrete positive hermitian Jordan triple system:
/// - POLYDISC: ℂ^r with componentwise product,
/// - SYMMETRIC: complex symmetric n×n matrices,
/// - HERMITIAN: all complex n×n matrices,
/// the latter two with {x,y,z} = (x y* z + z y* x)/2.
#[derive(Clone, Debug)]
pub struct TripleModel {
    flavor: Flavor,
    rank: usize,
    rows: usize,
    cols: usize,
    basis: Vec<DMatrix<C64>>,
}

impl TripleModel {
    pub fn polydisc(r: usize) -> Self {
        let basis = (0..r)
            .map(|j| {
                let mut m = DMatrix::zeros(r, 1);
                m[(j, 0)] = C64::new(1.0, 0.0);
                m
            })
            .collect();
        TripleModel { flavor: Flavor::Polydisc, rank: r, rows: r, cols: 1, basis }
    }

    pub fn symmetric(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n * (n + 1) / 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..n {
            for j in i..n {
                let mut m = DMatrix::zeros(n, n);
                if i == j {
                    m[(i, i)] = C64::new(1.0, 0.0);
                } else {
                    m[(i, j)] = C64::new(s, 0.0);
                    m[(j, i)] = C64::new(s, 0.0);
                }
                basis.push(m);
            }
        }
        TripleModel { flavor: Flavor::Symmetric, rank: n, rows: n, cols: n, basis }
    }

    pub fn hermitian(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut m = DMatrix::zeros(n, n);
                m[(i, j)] = C64::new(1.0, 0.0);
                basis.push(m);
            }
        }
        TripleModel { flavor: Flavor::Hermitian, rank: n, rows: n, cols: n, basis }
    }

    pub fn for_flavor(flavor: Flavor, rank: usize) -> Self {
        match flavor {
            Flavor::Polydisc => Self::polydisc(rank),
            Flavor::Symmetric => Self::symmetric(rank),
            Flavor::Hermitian => Self::hermitian(rank),
        }
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Complex dimension N of the underlying vector space.
    pub fn ambient_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn element_shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn check_element(&self, x: &DMatrix<C64>) -> Result<()> {
        if x.nrows() != self.rows || x.ncols() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "{} model of rank {} expects {}x{} elements, got {}x{}",
                self.flavor,
                self.rank,
                self.rows,
                self.cols,
                x.nrows(),
                x.ncols()
            )));
        }
        if self.flavor == Flavor::Symmetric {
            let res = linalg::frob_norm(&(x - x.transpose()));
            if res > 1e-8 * linalg::frob_norm(x).max(1.0) {
                return Err(Error::NonSymmetricInput { residual: res });
            }
        }
        Ok(())
    }

    /// The hermitian triple product {x,y,z}.
    pub fn triple(&self, x: &DMatrix<C64>, y: &DMatrix<C64>, z: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        for m in [x, y, z] {
            self.check_element(m)?;
        }
        Ok(match self.flavor {
            Flavor::Polydisc => DMatrix::from_fn(self.rows, 1, |j, _| x[(j, 0)] * y[(j, 0)].conj() * z[(j, 0)]),
            Flavor::Symmetric | Flavor::Hermitian => {
                (x * y.adjoint() * z + z * y.adjoint() * x) * C64::new(0.5, 0.0)
            }
        })
    }

    /// Spectral norm of an element (operator norm; absolute sup for the
    /// polydisc). The open unit ball of this norm is the domain.
    pub fn spectral_norm(&self, x: &DMatrix<C64>) -> f64 {
        match self.flavor {
            Flavor::Polydisc => x.iter().map(|c| c.norm()).fold(0.0, f64::max),
            _ => linalg::spec_norm(x),
        }
    }

    /// Coordinates in the model basis, real parts stacked over imaginary
    /// parts (length 2N).
    pub fn to_real(&self, x: &DMatrix<C64>) -> DVector<f64> {
        let n = self.basis.len();
        let mut v = DVector::zeros(2 * n);
        for (k, b) in self.basis.iter().enumerate() {
            let c: C64 = b.iter().zip(x.iter()).map(|(bb, xx)| bb.conj() * xx).sum();
            v[k] = c.re;
            v[n + k] = c.im;
        }
        v
    }

    pub fn from_real(&self, v: &DVector<f64>) -> DMatrix<C64> {
        let n = self.basis.len();
        assert_eq!(v.len(), 2 * n, "realified coordinate length");
        let mut x = DMatrix::zeros(self.rows, self.cols);
        for (k, b) in self.basis.iter().enumerate() {
            x += b * C64::new(v[k], v[n + k]);
        }
        x
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub enum Linearity {
    Linear,
    Antilinear,
}

/// A real 2N×2N matrix acting on realified model coordinates, tagged with
/// whether it represents a complex-linear or conjugate-linear map.
#[derive(Clone, Debug)]
pub struct RealifiedOperator {
    pub matrix: DMatrix<f64>,
    pub linearity: Linearity,
}

impl RealifiedOperator {
    pub fn identity(n: usize) -> Self {
        RealifiedOperator { matrix: DMatrix::identity(2 * n, 2 * n), linearity: Linearity::Linear }
    }

    pub fn apply(&self, model: &TripleModel, x: &DMatrix<C64>) -> DMatrix<C64> {
        model.from_real(&(&self.matrix * model.to_real(x)))
    }

    pub fn compose(&self, other: &RealifiedOperator) -> Self {
        let linearity = if self.linearity == other.linearity { Linearity::Linear } else { Linearity::Antilinear };
        RealifiedOperator { matrix: &self.matrix * &other.matrix, linearity }
    }

    /// The realified multiplication-by-i matrix [[0,−I],[I,0]].
    pub fn i_matrix(n: usize) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            j[(k, n + k)] = -1.0;
            j[(n + k, k)] = 1.0;
        }
        j
    }

    /// Residual of the tag: a linear operator must commute with the
    /// realified i, an antilinear one must anticommute.
    pub fn linearity_residual(&self) -> f64 {
        let n = self.matrix.nrows() / 2;
        let j = Self::i_matrix(n);
        let comm = match self.linearity {
            Linearity::Linear => &self.matrix * &j - &j * &self.matrix,
            Linearity::Antilinear => &self.matrix * &j + &j * &self.matrix,
        };
        comm.norm()
    }

    pub fn singular_value_extremes(&self) -> (f64, f64) {
        let sv = crate::linalg::real_singular_values(&self.matrix);
        (sv.last().copied().unwrap_or(0.0), sv.first().copied().unwrap_or(0.0))
    }
}

fn assemble(model: &TripleModel, linearity: Linearity, f: impl Fn(&DMatrix<C64>) -> DMatrix<C64>) -> RealifiedOperator {
    let n = model.ambient_dim();
    let mut mat = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..2 * n {
        let mut e = DVector::zeros(2 * n);
        e[k] = 1.0;
        let col = model.to_real(&f(&model.from_real(&e)));
        mat.set_column(k, &col);
    }
    RealifiedOperator { matrix: mat, linearity }
}

/// The linear operator x□y : z ↦ {x,y,z}.
pub fn box_op(model: &TripleModel, x: &DMatrix<C64>, y: &DMatrix<C64>) -> Result<RealifiedOperator> {
    model.check_element(x)?;
    model.check_element(y)?;
    Ok(assemble(model, Linearity::Linear, |z| model.triple(x, y, z).expect("validated elements")))
}

/// The antilinear quadratic operator Q(x) : y ↦ {x,y,x}.
pub fn quadratic(model: &TripleModel, x: &DMatrix<C64>) -> Result<RealifiedOperator> {
    model.check_element(x)?;
    Ok(assemble(model, Linearity::Antilinear, |y| model.triple(x, y, x).expect("validated elements")))
}

/// The Bergman operator B(x,y) = 1 − 2 x□y + Q(x)Q(y).
pub fn bergman(model: &TripleModel, x: &DMatrix<C64>, y: &DMatrix<C64>) -> Result<RealifiedOperator> {
    let b = box_op(model, x, y)?;
    let qx = quadratic(model, x)?;
    let qy = quadratic(model, y)?;
    let n = model.ambient_dim();
    let mat = DMatrix::identity(2 * n, 2 * n) - &b.matrix * 2.0 + &qx.matrix * &qy.matrix;
    Ok(RealifiedOperator { matrix: mat, linearity: Linearity::Linear })
}

pub fn is_tripotent(model: &TripleModel, e: &DMatrix<C64>, tol: f64) -> Result<bool> {
    let t = model.triple(e, e, e)?;
    Ok(linalg::frob_norm(&(t - e)) <= tol)
}

/// Eigenspace projections of 2 e□e for a tripotent e, with the complex
/// dimensions of the 0-, 1- and 2-eigenspaces.
#[derive(Clone, Debug)]
pub struct PeirceDecomposition {
    pub tripotent: DMatrix<C64>,
    pub projections: [RealifiedOperator; 3],
    pub dims: [usize; 3],
}

pub fn peirce(model: &TripleModel, e: &DMatrix<C64>, tol: f64) -> Result<PeirceDecomposition> {
    if !is_tripotent(model, e, tol)? {
        let t = model.triple(e, e, e)?;
        return Err(Error::NotTripotent { residual: linalg::frob_norm(&(t - e)), tol });
    }
    let a = box_op(model, e, e)?;
    let two_box = &a.matrix * 2.0;
    let (vals, vecs) = linalg::real_sym_eigen_sorted(&two_box);
    let n2 = two_box.nrows();
    let mut members: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    let eig_tol = tol.max(1e-9) * 10.0;
    for (i, &lam) in vals.iter().enumerate() {
        let j = [0.0, 1.0, 2.0]
            .iter()
            .position(|&t| (lam - t).abs() <= eig_tol)
            .ok_or(Error::SpectrumOutOfRange { value: lam })?;
        members[j].push(i);
    }
    let mut projections = Vec::with_capacity(3);
    let mut dims = [0usize; 3];
    for (j, idx) in members.iter().enumerate() {
        if idx.len() % 2 != 0 {
            return Err(Error::DegenerateFrame(format!(
                "Peirce eigenspace {} has odd real dimension {}",
                j,
                idx.len()
            )));
        }
        dims[j] = idx.len() / 2;
        let mut p = DMatrix::zeros(n2, n2);
        for &i in idx {
            let v = vecs.column(i);
            p += &v * v.transpose();
        }
        projections.push(RealifiedOperator { matrix: p, linearity: Linearity::Linear });
    }
    let projections: [RealifiedOperator; 3] = projections.try_into().map_err(|_| Error::DegenerateFrame("projection count".into())).unwrap();
    Ok(PeirceDecomposition { tripotent: e.clone(), projections, dims })
}

/// Transversality (quasi-invertibility) of a pair: B(x,y) invertible,
/// decided by a singular-value threshold. The scale floor of 1 keeps the
/// decision meaningful when B is numerically ≈ 0 (coincident boundary pair),
/// where a purely relative gap would compare rounding noise to itself.
pub fn is_transversal(model: &TripleModel, x: &DMatrix<C64>, y: &DMatrix<C64>, tol: f64) -> Result<bool> {
    let b = bergman(model, x, y)?;
    let (smin, smax) = b.singular_value_extremes();
    Ok(smin > tol * smax.max(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_element(model: &TripleModel, rng: &mut ChaCha8Rng) -> DMatrix<C64> {
        let (rows, cols) = model.element_shape();
        let m = DMatrix::from_fn(rows, cols, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        if model.flavor() == Flavor::Symmetric {
            (&m + m.transpose()) * c(0.5, 0.0)
        } else {
            m
        }
    }

    #[test]
    fn box_examples() {
        let model = TripleModel::polydisc(2);
        let x = DMatrix::from_vec(2, 1, vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let op = box_op(&model, &x, &x).unwrap();
        let z = DMatrix::from_vec(2, 1, vec![c(0.3, -0.2), c(1.5, 0.7)]);
        let out = op.apply(&model, &z);
        assert!((out[(0, 0)] - z[(0, 0)]).norm() < 1e-12);
        assert!(out[(1, 0)].norm() < 1e-12);

        let zero = DMatrix::zeros(2, 1);
        let op0 = box_op(&model, &zero, &z).unwrap();
        assert!(op0.matrix.norm() < 1e-12);

        let m1 = TripleModel::hermitian(1);
        let one = DMatrix::from_vec(1, 1, vec![c(1.0, 0.0)]);
        let id = box_op(&m1, &one, &one).unwrap();
        assert!((&id.matrix - DMatrix::identity(2, 2)).norm() < 1e-12);
    }

    #[test]
    fn quadratic_examples() {
        let model = TripleModel::symmetric(2);
        let i2 = DMatrix::<C64>::identity(2, 2);
        let q = quadratic(&model, &i2).unwrap();
        let y = DMatrix::from_vec(2, 2, vec![c(0.1, 0.4), c(-0.2, 0.3), c(-0.2, 0.3), c(1.0, -1.0)]);
        let out = q.apply(&model, &y);
        assert!(linalg::frob_norm(&(out - y.map(|v| v.conj()))) < 1e-12);
        assert_eq!(q.linearity, Linearity::Antilinear);
        assert!(q.linearity_residual() < 1e-12);

        let p1 = TripleModel::polydisc(1);
        let xi = DMatrix::from_vec(1, 1, vec![c(0.0, 1.0)]);
        let q = quadratic(&p1, &xi).unwrap();
        let y = DMatrix::from_vec(1, 1, vec![c(0.3, 0.8)]);
        let out = q.apply(&p1, &y);
        assert!((out[(0, 0)] + y[(0, 0)].conj()).norm() < 1e-12);

        let zero = DMatrix::zeros(1, 1);
        assert!(quadratic(&p1, &zero).unwrap().matrix.norm() < 1e-12);
    }

    #[test]
    fn bergman_examples() {
        let model = TripleModel::hermitian(2);
        let i2 = DMatrix::<C64>::identity(2, 2);
        let b = bergman(&model, &i2, &(-&i2)).unwrap();
        let z = DMatrix::from_vec(2, 2, vec![c(0.5, 0.1), c(0.0, -0.3), c(1.0, 0.0), c(-0.2, 0.9)]);
        let out = b.apply(&model, &z);
        assert!(linalg::frob_norm(&(out - &z * c(4.0, 0.0))) < 1e-10);

        let x = DMatrix::from_vec(2, 2, vec![c(0.3, 0.1); 4]);
        let zero = DMatrix::zeros(2, 2);
        let b = bergman(&model, &x, &zero).unwrap();
        assert!((&b.matrix - DMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn bergman_peirce_eigenvalues() {
        // B(e, (1−λ)e) acts as λ^j on the j-th Peirce space
        let lam = 4.0;
        for model in [TripleModel::hermitian(2), TripleModel::symmetric(2)] {
            let mut e = DMatrix::<C64>::zeros(2, 2);
            e[(0, 0)] = c(1.0, 0.0);
            let pd = peirce(&model, &e, 1e-10).unwrap();
            let b = bergman(&model, &e, &(&e * c(1.0 - lam, 0.0))).unwrap();
            for (j, p) in pd.projections.iter().enumerate() {
                let lhs = &b.matrix * &p.matrix;
                let rhs = &p.matrix * lam.powi(j as i32);
                assert!((lhs - rhs).norm() < 1e-8, "flavor {:?} space {}", model.flavor(), j);
            }
        }
    }

    #[test]
    fn tripotent_examples() {
        let model = TripleModel::symmetric(2);
        let mut e = DMatrix::<C64>::zeros(2, 2);
        e[(0, 0)] = c(1.0, 0.0);
        assert!(is_tripotent(&model, &e, 1e-10).unwrap());
        assert!(is_tripotent(&model, &DMatrix::zeros(2, 2), 1e-10).unwrap());

        let p2 = TripleModel::polydisc(2);
        let x = DMatrix::from_vec(2, 1, vec![c(1.0, 0.0), c(0.5, 0.0)]);
        assert!(!is_tripotent(&p2, &x, 1e-10).unwrap());
    }

    #[test]
    fn peirce_examples() {
        let model = TripleModel::hermitian(2);
        let mut e = DMatrix::<C64>::zeros(2, 2);
        e[(0, 0)] = c(1.0, 0.0);
        let pd = peirce(&model, &e, 1e-10).unwrap();
        assert_eq!(pd.dims, [1, 2, 1]);

        let sym = TripleModel::symmetric(3);
        let pd = peirce(&sym, &DMatrix::identity(3, 3), 1e-10).unwrap();
        assert_eq!(pd.dims, [0, 0, 6]);

        let pd = peirce(&sym, &DMatrix::zeros(3, 3), 1e-10).unwrap();
        assert_eq!(pd.dims, [6, 0, 0]);
    }

    #[test]
    fn peirce_projection_algebra() {
        let model = TripleModel::symmetric(2);
        let mut e = DMatrix::<C64>::zeros(2, 2);
        e[(0, 0)] = c(1.0, 0.0);
        let pd = peirce(&model, &e, 1e-10).unwrap();
        let n2 = pd.projections[0].matrix.nrows();
        let sum = &pd.projections[0].matrix + &pd.projections[1].matrix + &pd.projections[2].matrix;
        assert!((sum - DMatrix::identity(n2, n2)).norm() < 1e-8);
        for i in 0..3 {
            for j in 0..3 {
                let prod = &pd.projections[i].matrix * &pd.projections[j].matrix;
                let expect = if i == j { pd.projections[i].matrix.clone() } else { DMatrix::zeros(n2, n2) };
                assert!((prod - expect).norm() < 1e-8);
            }
        }
        let a2 = box_op(&model, &e, &e).unwrap().matrix * 2.0;
        for (j, p) in pd.projections.iter().enumerate() {
            assert!((&a2 * &p.matrix - &p.matrix * j as f64).norm() < 1e-8);
        }
    }

    #[test]
    fn transversality_examples() {
        let model = TripleModel::symmetric(2);
        let i2 = DMatrix::<C64>::identity(2, 2);
        assert!(is_transversal(&model, &i2, &(-&i2), 1e-8).unwrap());
        assert!(!is_transversal(&model, &i2, &i2, 1e-8).unwrap());

        let p2 = TripleModel::polydisc(2);
        let x = DMatrix::from_vec(2, 1, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let y = DMatrix::from_vec(2, 1, vec![c(-1.0, 0.0), c(1.0, 0.0)]);
        assert!(!is_transversal(&p2, &x, &y, 1e-8).unwrap());
    }

    #[test]
    fn jt_identities_on_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for model in [TripleModel::polydisc(3), TripleModel::symmetric(2), TripleModel::hermitian(2)] {
            for _ in 0..20 {
                let a = random_element(&model, &mut rng);
                let b = random_element(&model, &mut rng);
                let x = random_element(&model, &mut rng);
                let y = random_element(&model, &mut rng);
                let z = random_element(&model, &mut rng);
                // JT1: symmetry in the outer arguments
                let t1 = model.triple(&x, &y, &z).unwrap();
                let t2 = model.triple(&z, &y, &x).unwrap();
                assert!(linalg::frob_norm(&(&t1 - &t2)) < 1e-10);
                // JT2: a□b acts as a derivation of the triple product
                let lhs = model.triple(&a, &b, &t1).unwrap();
                let r1 = model.triple(&model.triple(&a, &b, &x).unwrap(), &y, &z).unwrap();
                let r2 = model.triple(&x, &model.triple(&b, &a, &y).unwrap(), &z).unwrap();
                let r3 = model.triple(&x, &y, &model.triple(&a, &b, &z).unwrap()).unwrap();
                assert!(linalg::frob_norm(&(lhs - (r1 - r2 + r3))) < 1e-10);
            }
        }
    }

    #[test]
    fn linearity_tags_verified() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = TripleModel::hermitian(2);
        let x = random_element(&model, &mut rng);
        let y = random_element(&model, &mut rng);
        assert!(box_op(&model, &x, &y).unwrap().linearity_residual() < 1e-10);
        assert!(quadratic(&model, &x).unwrap().linearity_residual() < 1e-10);
        assert!(bergman(&model, &x, &y).unwrap().linearity_residual() < 1e-10);
    }

    #[test]
    fn transversality_symmetric_on_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let model = TripleModel::symmetric(2);
        for _ in 0..20 {
            let x = random_element(&model, &mut rng);
            let y = random_element(&model, &mut rng);
            assert_eq!(
                is_transversal(&model, &x, &y, 1e-8).unwrap(),
                is_transversal(&model, &y, &x, 1e-8).unwrap()
            );
        }
    }
}
