//! Exact model of the r-polydisc torus boundary. Points carry rational
//! "turns" (fractions of a full revolution), so coincidence counts and the
//! orientation index are computed with integer arithmetic — this module is
//! the ground-truth oracle for the numerical matrix models.

use num_rational::Ratio;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invariants::OrbitInvariant;

/// A point on the unit circle, stored as an exact fraction of a full turn in
/// [0, 1). `Turn::new(3, 4)` is e^{2πi·3/4} = −i.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Turn(Ratio<i64>);

impl Turn {
    pub fn new(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::Parse("turn denominator is zero".into()));
        }
        Ok(Self::from_ratio(Ratio::new(num, den)))
    }

    /// Reduce modulo 1 into [0, 1).
    pub fn from_ratio(r: Ratio<i64>) -> Self {
        let one = Ratio::from_integer(1);
        let mut v = r - r.floor();
        if v < Ratio::zero() {
            v += one;
        }
        if v >= one {
            v -= one;
        }
        Turn(v)
    }

    pub const ZERO: Turn = Turn(Ratio::new_raw(0, 1));
    pub const HALF: Turn = Turn(Ratio::new_raw(1, 2));
    pub const QUARTER: Turn = Turn(Ratio::new_raw(1, 4));
    pub const THREE_QUARTERS: Turn = Turn(Ratio::new_raw(3, 4));

    pub fn ratio(&self) -> Ratio<i64> {
        self.0
    }

    pub fn numer(&self) -> i64 {
        *self.0.numer()
    }

    pub fn denom(&self) -> i64 {
        *self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        self.numer() as f64 / self.denom() as f64
    }

    /// The angle 2πt in radians.
    pub fn angle(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.to_f64()
    }

    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        let (num, den) = match s.split_once('/') {
            Some((p, q)) => (
                p.trim().parse::<i64>().map_err(|e| Error::Parse(format!("turn '{}': {}", s, e)))?,
                q.trim().parse::<i64>().map_err(|e| Error::Parse(format!("turn '{}': {}", s, e)))?,
            ),
            None => (s.parse::<i64>().map_err(|e| Error::Parse(format!("turn '{}': {}", s, e)))?, 1),
        };
        Turn::new(num, den)
    }
}

impl std::fmt::Display for Turn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.numer(), self.denom())
    }
}

/// Exact point of the r-torus; coordinate j is e^{2πi·turns[j]}.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(try_from = "TorusPointRepr", into = "TorusPointRepr")]
pub struct TorusPoint {
    turns: Vec<Turn>,
}

#[derive(Serialize, Deserialize)]
struct TorusPointRepr {
    turns: Vec<String>,
}

impl TryFrom<TorusPointRepr> for TorusPoint {
    type Error = Error;
    fn try_from(repr: TorusPointRepr) -> Result<Self> {
        let turns = repr.turns.iter().map(|s| Turn::parse(s)).collect::<Result<Vec<_>>>()?;
        Ok(TorusPoint { turns })
    }
}

impl From<TorusPoint> for TorusPointRepr {
    fn from(p: TorusPoint) -> Self {
        TorusPointRepr { turns: p.turns.iter().map(|t| t.to_string()).collect() }
    }
}

impl TorusPoint {
    pub fn new(turns: Vec<Turn>) -> Self {
        TorusPoint { turns }
    }

    pub fn rank(&self) -> usize {
        self.turns.len()
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    /// Concatenation corresponds to the direct product of polydiscs.
    pub fn concat(&self, other: &TorusPoint) -> TorusPoint {
        let mut turns = self.turns.clone();
        turns.extend_from_slice(&other.turns);
        TorusPoint { turns }
    }
}

/// The weakly increasing 5-tuple indexing a triple orbit.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(try_from = "MonotoneTupleRepr", into = "MonotoneTupleRepr")]
pub struct MonotoneTuple {
    n: [usize; 5],
}

#[derive(Serialize, Deserialize)]
struct MonotoneTupleRepr {
    #[serde(rename = "N")]
    n: [usize; 5],
}

impl TryFrom<MonotoneTupleRepr> for MonotoneTuple {
    type Error = Error;
    fn try_from(repr: MonotoneTupleRepr) -> Result<Self> {
        MonotoneTuple::new(repr.n)
    }
}

impl From<MonotoneTuple> for MonotoneTupleRepr {
    fn from(t: MonotoneTuple) -> Self {
        MonotoneTupleRepr { n: t.n }
    }
}

impl MonotoneTuple {
    pub fn new(n: [usize; 5]) -> Result<Self> {
        if n.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::NotMonotone(format!("{:?}", n)));
        }
        Ok(MonotoneTuple { n })
    }

    pub fn entries(&self) -> [usize; 5] {
        self.n
    }

    pub fn max_entry(&self) -> usize {
        self.n[4]
    }
}

impl std::fmt::Display for MonotoneTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{},{},{})", self.n[0], self.n[1], self.n[2], self.n[3], self.n[4])
    }
}

/// Orientation index of a triple on the circle: 0 when two arguments
/// coincide, otherwise ±1 by cyclic order, normalized so that
/// (1, −1, −i) = turns (0, 1/2, 3/4) gives +1.
///
/// A cyclic triple of distinct turns read in order has exactly one or two
/// descents; one descent means the points appear in increasing circular
/// position, which is the positive orientation here.
pub fn circle_maslov(a: Turn, b: Turn, c: Turn) -> i64 {
    if a == b || b == c || c == a {
        return 0;
    }
    let descents = [(a, b), (b, c), (c, a)].iter().filter(|(p, q)| q < p).count();
    if descents == 1 {
        1
    } else {
        -1
    }
}

/// The five exact orbit integers of a torus triple: pairwise and triple
/// coincidence counts plus the coordinatewise sum of circle orientations.
pub fn torus_invariants(t1: &TorusPoint, t2: &TorusPoint, t3: &TorusPoint) -> Result<OrbitInvariant> {
    let r = t1.rank();
    for t in [t2, t3] {
        if t.rank() != r {
            return Err(Error::RankMismatch { expected: r, got: t.rank() });
        }
    }
    let mut n12 = 0;
    let mut n23 = 0;
    let mut n31 = 0;
    let mut n123 = 0;
    let mut iota = 0i64;
    for j in 0..r {
        let (a, b, c) = (t1.turns[j], t2.turns[j], t3.turns[j]);
        if a == b {
            n12 += 1;
        }
        if b == c {
            n23 += 1;
        }
        if c == a {
            n31 += 1;
        }
        if a == b && b == c {
            n123 += 1;
        }
        iota += circle_maslov(a, b, c);
    }
    Ok(OrbitInvariant { r, n12, n23, n31, n123, iota })
}

/// The canonical representative triple of an orbit type N = (n1..n5):
/// x1 is all ones, x2 flips to −1 after coordinate n2, and x3 walks through
/// 1, −1, 1, −i, i blocks cut at n1 ≤ n3 ≤ n4 ≤ n5.
pub fn standard_triple(n: &MonotoneTuple, r: usize) -> Result<(TorusPoint, TorusPoint, TorusPoint)> {
    if n.max_entry() > r {
        return Err(Error::OutOfRange(format!("tuple {} exceeds rank {}", n, r)));
    }
    let [n1, n2, n3, n4, n5] = n.entries();
    let x1 = TorusPoint::new(vec![Turn::ZERO; r]);
    let x2 = TorusPoint::new((1..=r).map(|j| if j <= n2 { Turn::ZERO } else { Turn::HALF }).collect());
    let x3 = TorusPoint::new(
        (1..=r)
            .map(|j| {
                if j <= n1 {
                    Turn::ZERO
                } else if j <= n3 {
                    Turn::HALF
                } else if j <= n4 {
                    Turn::ZERO
                } else if j <= n5 {
                    Turn::THREE_QUARTERS
                } else {
                    Turn::QUARTER
                }
            })
            .collect(),
    );
    Ok((x1, x2, x3))
}

/// The six orbit representatives of circle triples:
/// (1,1,1), (1,1,−1), (1,−1,1), (1,−1,−1), (1,−1,−i), (1,−1,i).
pub fn circle_orbit_representatives() -> Vec<[Turn; 3]> {
    vec![
        [Turn::ZERO, Turn::ZERO, Turn::ZERO],
        [Turn::ZERO, Turn::ZERO, Turn::HALF],
        [Turn::ZERO, Turn::HALF, Turn::ZERO],
        [Turn::ZERO, Turn::HALF, Turn::HALF],
        [Turn::ZERO, Turn::HALF, Turn::THREE_QUARTERS],
        [Turn::ZERO, Turn::HALF, Turn::QUARTER],
    ]
}
