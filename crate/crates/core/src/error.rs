use thiserror::Error;

/// Failure modes of the constructions and verifiers in this crate.
///
/// Numerical verdicts that are expected outcomes (a map that is not CP, a
/// pair of representations that are not equivalent) are reported through
/// return values instead; these variants are reserved for inputs that break
/// a precondition or a construction that could not be completed.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (residual {residual:.3e})")]
    NonHermitian { residual: f64 },
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,
    #[error("Gram matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("matrix shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("span is not closed under products and adjoints: {0}")]
    NotStarClosed(String),
    #[error("algebra does not contain the ambient identity")]
    NoUnit,
    #[error("numerical degeneracy in block decomposition: {0}")]
    NumericalDegeneracy(String),
    #[error("element is not in the algebra (residual {residual:.3e})")]
    NotInAlgebra { residual: f64 },
    #[error("algebras do not match: {0}")]
    AlgebraMismatch(String),

    #[error("module is not invariant under the {side} action (residual {residual:.3e})")]
    NotInvariant { side: &'static str, residual: f64 },
    #[error("{side} inner product is not full: {reason}")]
    NotFull { side: &'static str, reason: String },
    #[error("frame operator is numerically singular")]
    FrameFailure,
    #[error("frame does not reconstruct the module (residual {residual:.3e})")]
    FrameInvalid { residual: f64 },

    #[error("representation is not multiplicative (residual {residual:.3e})")]
    NotMultiplicative { residual: f64 },
    #[error("representation does not preserve adjoints (residual {residual:.3e})")]
    NotStar { residual: f64 },
    #[error("representation is not unital (residual {residual:.3e})")]
    NotUnital { residual: f64 },
    #[error("zero-dimensional representation space")]
    ZeroDimensional,
    #[error("representation is not faithful (kernel dimension {kernel_dim})")]
    NotFaithful { kernel_dim: usize },

    #[error("map is not completely positive (min Choi eigenvalue {min_eigenvalue:.3e})")]
    NotCp { min_eigenvalue: f64 },
    #[error("dilations belong to different maps (residual {residual:.3e})")]
    NotSameMap { residual: f64 },
    #[error("transported representation does not intertwine (residual {residual:.3e})")]
    IntertwinerMismatch { residual: f64 },
    #[error("strong Morita equivalence is undefined for the zero map")]
    ZeroMap,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("conditional expectation is not idempotent (residual {residual:.3e})")]
    NotIdempotent { residual: f64 },
    #[error("conditional expectation is not bimodular (residual {residual:.3e})")]
    NotBimodular { residual: f64 },
    #[error("conditional expectation is not unital (residual {residual:.3e})")]
    NotUnitalExpectation { residual: f64 },
    #[error("range of the conditional expectation leaves the subalgebra (residual {residual:.3e})")]
    RangeEscapesA { residual: f64 },
    #[error("expectation pair is structurally invalid: {0}")]
    StructureInvalid(String),
    #[error("stage {stage} failed (residual {residual:.3e})")]
    StageFailure { stage: &'static str, residual: f64 },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
}

pub type Result<T> = std::result::Result<T, Error>;
