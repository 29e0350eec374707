use thiserror::Error;

/// Errors across the library. Each variant maps to a stable machine-readable
/// code (used by the CLI) and to an exit-code category.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("element is not a tripotent (residual {residual:.3e} > tol {tol:.3e})")]
    NotTripotent { residual: f64, tol: f64 },
    #[error("Peirce spectrum out of range: eigenvalue {value} not near 0, 1, 2")]
    SpectrumOutOfRange { value: f64 },
    #[error("pair is not transversal (relative gap {gap:.3e})")]
    NotTransversal { gap: f64 },
    #[error("matrix is outside the closed spectral-norm unit ball (norm {norm})")]
    NotInClosedBall { norm: f64 },
    #[error("matrix is not a Shilov boundary element: {0}")]
    NotBoundary(String),
    #[error("symmetric flavor requires a complex-symmetric matrix (residual {residual:.3e})")]
    NonSymmetricInput { residual: f64 },
    #[error("Moebius denominator cz+d is singular")]
    SingularDenominator,
    #[error("reduction did not converge: {0}")]
    NoConvergence(String),
    #[error("rank decision unstable: {0}")]
    RankUnstable(String),
    #[error("signature undecidable: eigenvalue {value:.3e} inside the guard band [{lo:.3e}, {hi:.3e}]")]
    SignatureUnstable { value: f64, lo: f64, hi: f64 },
    #[error("matrix is not symmetric unitary (residual {residual:.3e})")]
    NotSymmetricUnitary { residual: f64 },
    #[error("could not extract a real spanning set of rank {expected} (got {got})")]
    ExtractionRankFailure { expected: usize, got: usize },
    #[error("frame is degenerate: {0}")]
    DegenerateFrame(String),
    #[error("vector is not isotropic for the (n,1) form (|h(v,v)| = {value:.3e})")]
    NotIsotropic { value: f64 },
    #[error("degenerate pair: an h-product between distinct arguments vanishes")]
    DegeneratePair,
    #[error("invariant tuple is infeasible: {0}")]
    Infeasible(String),
    #[error("tuple is not weakly increasing or out of range: {0}")]
    NotMonotone(String),
    #[error("value out of range: {0}")]
    OutOfRange(String),
    #[error("turn {value} has no rational approximation with denominator <= {max_den} within {tol:.3e}")]
    TurnRounding { value: f64, max_den: i64, tol: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Stable machine-readable code for JSON error reports.
    pub fn code(&self) -> &'static str {
        use Error::*;
        match self {
            DimensionMismatch(_) => "dimension-mismatch",
            RankMismatch { .. } => "rank-mismatch",
            NotTripotent { .. } => "not-tripotent",
            SpectrumOutOfRange { .. } => "spectrum-out-of-range",
            NotTransversal { .. } => "not-transversal",
            NotInClosedBall { .. } => "not-in-closed-ball",
            NotBoundary(_) => "not-boundary",
            NonSymmetricInput { .. } => "non-symmetric-input",
            SingularDenominator => "singular-denominator",
            NoConvergence(_) => "no-convergence",
            RankUnstable(_) => "rank-unstable",
            SignatureUnstable { .. } => "signature-unstable",
            NotSymmetricUnitary { .. } => "not-symmetric-unitary",
            ExtractionRankFailure { .. } => "extraction-rank-failure",
            DegenerateFrame(_) => "degenerate-frame",
            NotIsotropic { .. } => "not-isotropic",
            DegeneratePair => "degenerate-pair",
            Infeasible(_) => "infeasible",
            NotMonotone(_) => "not-monotone",
            OutOfRange(_) => "out-of-range",
            TurnRounding { .. } => "turn-rounding",
            Parse(_) => "parse-error",
        }
    }

    /// Process exit-code category: 1 validation, 2 numerical instability, 3 parse.
    pub fn exit_code(&self) -> i32 {
        use Error::*;
        match self {
            NoConvergence(_) | RankUnstable(_) | SignatureUnstable { .. } | TurnRounding { .. } => 2,
            Parse(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
