//! Orbit bookkeeping shared by every model: the five-integer invariant of a
//! boundary triple, its equivalent monotone 5-tuple, feasibility of candidate
//! tuples, orbit enumeration, the r+1 pair classes, and the rank-one Cartan
//! invariant that exhibits a continuum of orbits outside the tube-type world.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::polydisc::{MonotoneTuple, Turn, TorusPoint};

/// Complete orbit invariant of a boundary triple: pairwise face ranks n12,
/// n23, n31, the triple face rank n123, and the Maslov index iota.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct OrbitInvariant {
    pub r: usize,
    pub n12: usize,
    pub n23: usize,
    pub n31: usize,
    pub n123: usize,
    pub iota: i64,
}

impl OrbitInvariant {
    /// A tuple that fails this check cannot arise from a genuine boundary
    /// triple; it signals an upstream rank-threshold failure.
    pub fn validate(&self) -> Result<()> {
        if feasible(
            self.n123 as i64,
            self.n12 as i64,
            self.n23 as i64,
            self.n31 as i64,
            self.iota,
            self.r,
        ) {
            Ok(())
        } else {
            Err(Error::Infeasible(format!("{:?}", self)))
        }
    }
}

/// Feasibility of (r0, r1, r2, r3, d) at rank r:
/// 0 ≤ r0 ≤ r1, r2, r3 ≤ r; r1+r2+r3 ≤ r+2r0; |d| ≤ r+2r0−(r1+r2+r3);
/// d ≡ r+r1+r2+r3 (mod 2).
pub fn feasible(r0: i64, r1: i64, r2: i64, r3: i64, d: i64, r: usize) -> bool {
    let r = r as i64;
    let ordered = 0 <= r0 && r0 <= r1 && r0 <= r2 && r0 <= r3 && r1 <= r && r2 <= r && r3 <= r;
    let sum = r1 + r2 + r3;
    ordered && sum <= r + 2 * r0 && d.abs() <= r + 2 * r0 - sum && (d - (r + sum)).rem_euclid(2) == 0
}

/// Invert the five integers into the orbit tuple N:
/// n1 = n123, n2 = n12, n3 = n23+n12−n123, n4 = n31+n23+n12−2n123,
/// n5 = (iota + r + n4) / 2. Feasibility guarantees integrality and
/// monotonicity.
pub fn to_monotone_tuple(inv: &OrbitInvariant) -> Result<MonotoneTuple> {
    inv.validate()?;
    let n1 = inv.n123;
    let n2 = inv.n12;
    let n3 = inv.n23 + inv.n12 - inv.n123;
    let n4 = inv.n31 + inv.n23 + inv.n12 - 2 * inv.n123;
    let n5_twice = inv.iota + inv.r as i64 + n4 as i64;
    debug_assert!(n5_twice >= 0 && n5_twice % 2 == 0);
    let n5 = (n5_twice / 2) as usize;
    MonotoneTuple::new([n1, n2, n3, n4, n5])
}

/// Two boundary triples lie in the same orbit iff their five integers agree.
pub fn same_orbit(a: &OrbitInvariant, b: &OrbitInvariant) -> Result<bool> {
    if a.r != b.r {
        return Err(Error::RankMismatch { expected: a.r, got: b.r });
    }
    Ok(a.n12 == b.n12 && a.n23 == b.n23 && a.n31 == b.n31 && a.n123 == b.n123 && a.iota == b.iota)
}

/// All weakly increasing 5-tuples over {0..r}, lexicographically sorted;
/// there are C(r+5, 5) of them, one per triple orbit.
pub fn enumerate_orbits(r: usize) -> Vec<MonotoneTuple> {
    let mut out = Vec::new();
    for n1 in 0..=r {
        for n2 in n1..=r {
            for n3 in n2..=r {
                for n4 in n3..=r {
                    for n5 in n4..=r {
                        out.push(MonotoneTuple::new([n1, n2, n3, n4, n5]).unwrap());
                    }
                }
            }
        }
    }
    out
}

/// Descriptor of one of the r+1 pair orbits, indexed by the transversality
/// index mu = rank of the face generated by the pair.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct PairClass {
    pub mu: usize,
    pub r: usize,
    pub transversal: bool,
    /// canonical second point: mu coordinates at 1, the rest at −1
    pub representative: TorusPoint,
    pub label: String,
}

pub fn pair_class(mu: usize, r: usize) -> Result<PairClass> {
    if mu > r {
        return Err(Error::OutOfRange(format!("mu = {} exceeds rank {}", mu, r)));
    }
    let rep = TorusPoint::new((0..r).map(|j| if j < mu { Turn::ZERO } else { Turn::HALF }).collect());
    let label = if mu == 0 {
        "transversal: (e, -e)".to_string()
    } else if mu == r {
        "diagonal: (e, e)".to_string()
    } else {
        format!("(e, eps_{})", mu)
    };
    Ok(PairClass { mu, r, transversal: mu == 0, representative: rep, label })
}

fn h_form(v: &DVector<C64>, w: &DVector<C64>) -> C64 {
    let n = v.len() - 1;
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        acc += v[i] * w[i].conj();
    }
    acc - v[n] * w[n].conj()
}

/// Cross-ratio-type invariant of three isotropic lines for the hermitian form
/// of signature (n,1):
/// F = h(v1,v2) h(v2,v3) h(v3,v1) / (h(v2,v1) h(v3,v2) h(v1,v3)).
/// Scale-invariant in each argument and of modulus one; its continuum of
/// values witnesses infinitely many orbits in the rank-one non-tube family.
pub fn cartan_invariant(v1: &DVector<C64>, v2: &DVector<C64>, v3: &DVector<C64>, tol: f64) -> Result<C64> {
    let dim = v1.len();
    if dim < 2 || v2.len() != dim || v3.len() != dim {
        return Err(Error::DimensionMismatch(format!(
            "cartan invariant needs three vectors of equal length >= 2, got {}, {}, {}",
            v1.len(),
            v2.len(),
            v3.len()
        )));
    }
    for v in [v1, v2, v3] {
        let hv = h_form(v, v);
        if hv.norm() > tol * v.norm_squared().max(1e-300) {
            return Err(Error::NotIsotropic { value: hv.norm() });
        }
    }
    let h12 = h_form(v1, v2);
    let h23 = h_form(v2, v3);
    let h31 = h_form(v3, v1);
    let h21 = h_form(v2, v1);
    let h32 = h_form(v3, v2);
    let h13 = h_form(v1, v3);
    let pairs = [(h12, v1, v2), (h23, v2, v3), (h31, v3, v1)];
    for (h, a, b) in pairs {
        if h.norm() <= tol * (a.norm() * b.norm()).max(1e-300) {
            return Err(Error::DegeneratePair);
        }
    }
    Ok((h12 * h23 * h31) / (h21 * h32 * h13))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polydisc::{standard_triple, torus_invariants};

    #[test]
    fn feasibility_examples() {
        assert!(feasible(0, 0, 0, 0, 1, 1));
        assert!(!feasible(0, 0, 0, 0, 0, 1)); // parity
        assert!(!feasible(0, 2, 2, 2, 0, 2)); // sum bound
    }

    #[test]
    fn tuple_inversion_examples() {
        let inv = OrbitInvariant { r: 1, n12: 0, n23: 0, n31: 0, n123: 0, iota: 1 };
        assert_eq!(to_monotone_tuple(&inv).unwrap().entries(), [0, 0, 0, 0, 1]);

        for r in 1..=4 {
            let inv = OrbitInvariant { r, n12: r, n23: r, n31: r, n123: r, iota: 0 };
            assert_eq!(to_monotone_tuple(&inv).unwrap().entries(), [r; 5]);
        }

        let inv = OrbitInvariant { r: 3, n12: 1, n23: 1, n31: 1, n123: 0, iota: 0 };
        assert_eq!(to_monotone_tuple(&inv).unwrap().entries(), [0, 1, 2, 3, 3]);

        // (1,1,0,0,0) at r=3 fails parity and must be rejected
        let bad = OrbitInvariant { r: 3, n12: 1, n23: 1, n31: 0, n123: 0, iota: 0 };
        assert!(matches!(to_monotone_tuple(&bad), Err(Error::Infeasible(_))));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_orbits(1).len(), 6);
        assert_eq!(enumerate_orbits(2).len(), 21);
        assert_eq!(enumerate_orbits(3).len(), 56);
        assert_eq!(enumerate_orbits(4).len(), 126);
        let tuples = enumerate_orbits(2);
        let mut sorted = tuples.clone();
        sorted.sort();
        assert_eq!(tuples, sorted);
    }

    #[test]
    fn round_trip_is_identity() {
        for r in 1..=4 {
            for n in enumerate_orbits(r) {
                let (x1, x2, x3) = standard_triple(&n, r).unwrap();
                let inv = torus_invariants(&x1, &x2, &x3).unwrap();
                assert_eq!(to_monotone_tuple(&inv).unwrap(), n, "r={} N={}", r, n);
            }
        }
    }

    #[test]
    fn same_orbit_examples() {
        let a = TorusPoint::new(vec![Turn::ZERO]);
        let b = TorusPoint::new(vec![Turn::HALF]);
        let c = TorusPoint::new(vec![Turn::THREE_QUARTERS]);
        let inv = torus_invariants(&a, &b, &c).unwrap();
        let n = MonotoneTuple::new([0, 0, 0, 0, 1]).unwrap();
        let (x1, x2, x3) = standard_triple(&n, 1).unwrap();
        let std_inv = torus_invariants(&x1, &x2, &x3).unwrap();
        assert!(same_orbit(&inv, &std_inv).unwrap());

        let inv111 = torus_invariants(&a, &a, &a).unwrap();
        let inv11m = torus_invariants(&a, &a, &b).unwrap();
        assert!(!same_orbit(&inv111, &inv11m).unwrap());
        assert!(same_orbit(&inv111, &inv111).unwrap());
    }

    #[test]
    fn pair_classes() {
        let pc = pair_class(0, 3).unwrap();
        assert!(pc.transversal);
        assert_eq!(pc.representative.turns(), &[Turn::HALF; 3]);
        let pc = pair_class(3, 3).unwrap();
        assert_eq!(pc.representative.turns(), &[Turn::ZERO; 3]);
        assert!(pair_class(4, 3).is_err());
        assert_eq!((0..=3).filter_map(|mu| pair_class(mu, 3).ok()).count(), 4);
    }

    #[test]
    fn cartan_fixed_point() {
        let v1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let v2 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let v3 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let f = cartan_invariant(&v1, &v2, &v3, 1e-8).unwrap();
        assert!((f - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((f.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cartan_scale_invariance_and_degeneracy() {
        let v1 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]);
        let v2 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(-1.0, 0.0)]);
        let v3 = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
        let lam = C64::new(-0.3, 1.7);
        let f1 = cartan_invariant(&v1, &v2, &v3, 1e-8).unwrap();
        let f2 = cartan_invariant(&(&v1 * lam), &v2, &v3, 1e-8).unwrap();
        assert!((f1 - f2).norm() < 1e-12);
        // third line equal to the second: some h-product vanishes
        let r = cartan_invariant(&v1, &v2, &(&v2 * lam), 1e-8);
        assert!(matches!(r, Err(Error::DegeneratePair)));
        // non-isotropic input
        let bad = DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
        assert!(matches!(cartan_invariant(&bad, &v2, &v3, 1e-8), Err(Error::NotIsotropic { .. })));
    }

    #[test]
    fn orbit_invariant_json() {
        let inv = OrbitInvariant { r: 2, n12: 1, n23: 2, n31: 1, n123: 1, iota: 0 };
        let s = serde_json::to_string(&inv).unwrap();
        assert_eq!(s, r#"{"r":2,"n12":1,"n23":2,"n31":1,"n123":1,"iota":0}"#);
        let back: OrbitInvariant = serde_json::from_str(&s).unwrap();
        assert_eq!(back, inv);
    }
}
