//! Critical-point classification, smoothness and step-size bounds,
//! diffeomorphism diagnostics and forward-invariance certification.

mod bounds;
mod classify;
mod diffeo;
mod domain;
mod invariance;

pub use bounds::{
    check_lipschitz, estimate_hessian_sup, min_hessian_norm, plan_stepsize, HessianSupEstimate, LipschitzReport,
    LipschitzViolation, StepSizePlan, MAX_REPORTED_VIOLATIONS,
};
pub use classify::{classify, refine_critical, ClassifyTolerances, CriticalClass, CriticalPointRecord, RefineOptions};
pub use diffeo::{check_diffeomorphism, DiffeoReport, EigenFailure};
pub use domain::BoxDomain;
pub use invariance::{check_forward_invariance, AxisBound, InvarianceMode, InvarianceVerdict};

pub(crate) use bounds::sample_in;
