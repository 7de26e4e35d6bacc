//! Error type shared across the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    // -------- finite fields
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("extension degree must be >= 1")]
    BadDegree,
    #[error("modulus is not a monic irreducible of the requested degree")]
    ReducibleModulus,
    #[error("field size {0} exceeds the enumeration ceiling {1}")]
    SizeCeilingExceeded(u64, u64),
    #[error("elements belong to different fields ({0} vs {1})")]
    MixedFields(String, String),
    #[error("no embedding: {0} does not divide {1}")]
    NoEmbedding(u64, u64),

    // -------- parsing
    #[error("parse error: {0}")]
    Parse(String),

    // -------- cyclotomic / series
    #[error("cyclotomic arithmetic requires equal primes ({0} vs {1})")]
    MixedPrimes(u64, u64),
    #[error("ord is undefined for zero")]
    OrdOfZero,
    #[error("bad series constant term: {0}")]
    BadConstantTerm(String),
    #[error("polygon comparison needs equal lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    // -------- geometry
    #[error("support of f̄ does not span an n-dimensional cone (rank {rank} < {n})")]
    NotFullDimensional { rank: usize, n: usize },
    #[error("support of f̄ does not lie on a common hyperplane l_σ(x) = 1 off the origin")]
    NotQuasihomogeneous,
    #[error("l_σ(μ) = 1: the deformation is isobaric with f̄ and out of scope")]
    ExcludedCase,
    #[error("l_σ(μ) < 1 with μ inside Cone(f̄): lower-order deformation, not a valid μ")]
    MuInsideCone,
    #[error("l_σ(μ) > 1 but μ lies on the boundary facet {0} of Cone(f̄)")]
    MuOnFacet(usize),
    #[error("l_σ(μ) > 1 but μ lies outside Cone(f̄) (facet {0} separates)")]
    MuNotInterior(usize),
    #[error("point {0:?} lies outside the cone over Δ_∞(f̄, μ)")]
    OutsideCone(Vec<i64>),
    #[error("(r, v) = ({0}, {1:?}) is not in the extended monoid")]
    OutsideMonoid(String, Vec<i64>),
    #[error("lattice enumeration would visit {0} points, over the ceiling {1}")]
    EnumerationCeiling(u64, u64),
    #[error("deformation term {term} is not lower-order: {reason}")]
    NotLowerOrder { term: String, reason: String },

    // -------- hypotheses / theorems
    #[error("operation requires hypotheses to pass first: {0}")]
    PreconditionFailed(String),
    #[error("theorem violation: {0}")]
    TheoremViolation(String),
    #[error(
        "graded basis has {found} elements up to weight {cutoff}, expected N = {expected}"
    )]
    RankMismatch {
        found: usize,
        expected: usize,
        cutoff: String,
    },
    #[error("L-series tail does not vanish: coefficient {index} is {value}")]
    PolynomialityFailure { index: usize, value: String },
    #[error("Euler-product and moment computations disagree at T^{0}")]
    CrossCheckMismatch(usize),

    // -------- cache / io
    #[error("cache io: {0}")]
    CacheIo(String),
}
