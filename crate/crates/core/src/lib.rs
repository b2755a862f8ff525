//! Gradient descent as a discrete dynamical system.
//!
//! The crate evaluates cost functions symbolically (exact gradients and
//! Hessians), iterates the map `g(x) = x - alpha * grad f(x)` with
//! explicit termination verdicts, classifies critical points by their
//! Hessian spectrum, bounds admissible step sizes on box domains, certifies
//! forward invariance of boxes, and measures how often randomly initialised
//! gradient descent ends at a strict saddle.
//!
//! Module map:
//! - [`expr`]: expression language, parser, symbolic differentiation.
//! - [`linalg`]: vectors, packed symmetric matrices, cyclic Jacobi eigensolver.
//! - [`field`]: scalar fields with symbolic derivatives and the builtin catalog.
//! - [`dynamics`]: the gradient-descent map and trajectory iteration.
//! - [`analysis`]: classification, step-size planning, Lipschitz and
//!   diffeomorphism diagnostics, forward-invariance certification.
//! - [`experiment`]: seeded Monte Carlo basin statistics.
//! - [`shell`]: command-line front end and configuration files.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod expr;
pub mod field;
pub mod linalg;
pub(crate) mod rng;
pub mod selfcheck;
pub mod shell;

pub use analysis::BoxDomain;
pub use dynamics::{GdMap, Termination, Trajectory};
pub use error::{Error, Result};
pub use expr::{Expression, VariableOrder};
pub use field::{Builtin, ScalarField};
pub use linalg::{SymmetricMatrix, SymmetricSpectrum, Vector};

/// Version string stamped into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
