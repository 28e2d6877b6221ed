//! Error types shared across the crate.
//!
//! Construction-time problems (parameter bounds, weight rules, dimension
//! mismatches) and evaluation-time problems (domain escapes, singular
//! matrices, quadrature stalls) are kept in a single enum so that callers —
//! in particular the CLI — can map any library failure onto a diagnostic
//! message and an exit code without digging through nested error chains.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum QamError {
    /// A constructor received a parameter outside its documented bound.
    /// The message names the violated bound.
    #[error("parameter out of bounds: {0}")]
    Parameter(String),

    /// A weight vector violates the rule imposed by the governing generator.
    #[error("invalid weights: {0}")]
    Weights(String),

    /// Evaluation of a generator outside its domain, where no extended-value
    /// convention applies.
    #[error("argument {value} outside the {which} domain [{lo}, {hi}] of generator {kind}")]
    GeneratorDomain {
        kind: &'static str,
        which: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// A composed child produced a value outside the generator's inverse
    /// domain; carries the offending child index and value.
    #[error("child {index} produced value {value} outside the generator's inverse domain")]
    ChildRange { index: usize, value: f64 },

    /// Mismatch between a partition and the children/lag dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A precondition of an operation is not met (e.g. a check that requires
    /// a completely monotone generator was handed one without the property).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A function evaluated to a non-finite value where a finite one is
    /// required (e.g. on a check grid).
    #[error("non-finite evaluation: f({at}) = {value}")]
    NonFinite { at: f64, value: f64 },

    /// Kernel evaluation failed while assembling a Gram matrix.
    #[error("kernel evaluation failed at point pair ({i}, {j}): {source}")]
    GramEntry {
        i: usize,
        j: usize,
        #[source]
        source: Box<QamError>,
    },

    /// Adaptive quadrature exhausted its refinement budget; carries the
    /// residual error estimate at the point of giving up.
    #[error("quadrature did not converge: residual estimate {residual:.3e} (target {target:.3e})")]
    QuadratureNonConvergence { residual: f64, target: f64 },

    /// Linear-algebra failure (singular matrix, factorization breakdown).
    #[error("numeric linear algebra failure: {0}")]
    Numeric(String),

    /// A kernel is degenerate for the requested operation
    /// (e.g. C(0,0) = 0 where a normalization by C(0,0) is required).
    #[error("degenerate kernel: {0}")]
    Degenerate(String),

    /// Special-function argument outside the supported range.
    #[error("special function domain: {0}")]
    SpecialFunction(String),

    /// Configuration / spec-file problem (CLI layer).
    #[error("config error: {0}")]
    Config(String),

    /// I/O failure (CLI layer).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, QamError>;
