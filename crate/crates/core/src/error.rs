use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed system document: {0}")]
    Malformed(String),

    #[error("system must contain at least one polynomial")]
    EmptySystem,

    #[error(
        "polynomial {poly}: monomial {monomial:?} has total degree {found}, expected {expected}"
    )]
    NotHomogeneous {
        poly: usize,
        monomial: Vec<i64>,
        found: i64,
        expected: u32,
    },

    #[error("polynomial {poly}: negative exponent in monomial {monomial:?}")]
    NegativeExponent { poly: usize, monomial: Vec<i64> },

    #[error("polynomial {poly}: duplicate monomial {monomial:?}")]
    DuplicateMonomial { poly: usize, monomial: Vec<u32> },

    #[error("polynomial {poly}: exponent vector has length {found}, expected {expected}")]
    ExponentArity {
        poly: usize,
        found: usize,
        expected: usize,
    },

    #[error("polynomial {poly}: non-finite coefficient")]
    NonFiniteCoefficient { poly: usize },

    #[error("system is identically zero in polynomial {0}")]
    ZeroPolynomial(usize),

    #[error("grid at level {k} has {points} points, above the cap of {cap}")]
    GridTooLarge { k: u32, points: u128, cap: u64 },

    #[error("grid level must be at least 1")]
    InvalidLevel,

    #[error("cannot project the zero vector")]
    ZeroVector,

    #[error("tangent vector is not orthogonal to the base point (inner product {0:e})")]
    NotTangent(f64),

    #[error("point does not lie on the unit sphere (norm {0})")]
    NotOnSphere(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("tangent Jacobian is singular")]
    SingularJacobian,

    #[error("division by zero")]
    DivisionByZero,

    #[error("square root of negative number {0}")]
    NegativeSqrt(f64),

    #[error("inverse cosine or sine argument {0} outside [-1, 1]")]
    ArccosDomain(f64),

    #[error("precision must have at least 2 significand bits, got {0}")]
    InvalidPrecision(u32),

    #[error("odd number of components ({0}) at halt")]
    OddComponentCount(usize),

    #[error("max_iterations must be at least 1")]
    InvalidIterationLimit,

    #[error("oracle: {0}")]
    Oracle(String),
}
