use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{eigen_symmetric, Vector};

/// Thresholds for the second-order test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyTolerances {
    /// A point is critical when `|grad f| <= crit`.
    pub crit: f64,
    /// Eigenvalue threshold relative to `max(1, |hessian|)`.
    pub eig_rel: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            crit: 1e-8,
            eig_rel: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalClass {
    LocalMin,
    StrictSaddle,
    /// Critical, but the smallest eigenvalue is zero within tolerance.
    Degenerate,
    NotCritical,
}

impl CriticalClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            CriticalClass::LocalMin => "local_min",
            CriticalClass::StrictSaddle => "strict_saddle",
            CriticalClass::Degenerate => "degenerate",
            CriticalClass::NotCritical => "not_critical",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalPointRecord {
    pub location: Vector,
    pub grad_norm: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// The absolute eigenvalue threshold that was applied.
    pub eig_tolerance: f64,
    pub class: CriticalClass,
}

/// Second-order classification of `x`.
pub fn classify(field: &ScalarField, x: &[f64], tol: &ClassifyTolerances) -> Result<CriticalPointRecord> {
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFiniteValue);
    }
    let grad_norm = field.grad(x)?.norm();
    let spectrum = eigen_symmetric(&field.hessian(x)?)?;
    let eig_tolerance = tol.eig_rel * spectrum.radius().max(1.0);
    let lambda_min = spectrum.min();
    let class = if grad_norm > tol.crit {
        CriticalClass::NotCritical
    } else if lambda_min < -eig_tolerance {
        CriticalClass::StrictSaddle
    } else if lambda_min > eig_tolerance {
        CriticalClass::LocalMin
    } else {
        CriticalClass::Degenerate
    };
    Ok(CriticalPointRecord {
        location: Vector::from(x),
        grad_norm,
        lambda_min,
        lambda_max: spectrum.max(),
        eig_tolerance,
        class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    pub budget: usize,
    /// Success threshold on `|grad f|`.
    pub crit: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions { budget: 50, crit: 1e-8 }
    }
}

/// Relative cutoff below which a Hessian eigenvalue counts as zero.
const SINGULAR_REL: f64 = 1e-10;
const MAX_HALVINGS: usize = 40;

/// Damped Newton iteration on `grad f = 0`.
///
/// The step solves `H d = -g` through the Hessian spectrum. Eigenvalues
/// within `1e-10 * max(1, |H|)` of zero are dropped, which turns the step
/// into the minimum-norm Gauss-Newton step for `|grad f|^2 / 2`; if that
/// fails to reduce `|grad f|`, a backtracked steepest-descent step on
/// `|grad f|^2 / 2` is tried. Returns `None` unless the final point has
/// `|grad f| <= crit`.
pub fn refine_critical(field: &ScalarField, seed: &[f64], opts: &RefineOptions) -> Option<Vector> {
    let mut x = Vector::from(seed);
    let mut g = field.grad(&x).ok()?;
    let mut gn = g.norm();
    if gn == 0.0 {
        return Some(x);
    }
    for _ in 0..opts.budget {
        let h = field.hessian(&x).ok()?;
        let spec = eigen_symmetric(&h).ok()?;
        let cutoff = SINGULAR_REL * spec.radius().max(1.0);
        let n = x.dim();

        let mut newton = vec![0.0; n];
        for (k, &lam) in spec.values.iter().enumerate() {
            if lam.abs() > cutoff {
                let q = spec.vectors.column(k);
                let coef = -q.dot(&g) / lam;
                for (d, qi) in newton.iter_mut().zip(q.iter()) {
                    *d += coef * qi;
                }
            }
        }
        let mut accepted = backtrack(field, &x, &newton, 1.0, gn);
        if accepted.is_none() {
            let descent: Vec<f64> = h.mul_vec(&g).iter().map(|v| -v).collect();
            let t0 = 1.0 / spec.radius().max(1.0).powi(2);
            accepted = backtrack(field, &x, &descent, t0, gn);
        }
        let Some((y, gy)) = accepted else { break };
        let moved = y.distance(&x);
        x = y;
        g = gy;
        gn = g.norm();
        if gn == 0.0 || moved <= 1e-15 * (1.0 + x.norm()) {
            break;
        }
    }
    (gn <= opts.crit).then_some(x)
}

fn backtrack(field: &ScalarField, x: &Vector, dir: &[f64], t0: f64, gn: f64) -> Option<(Vector, Vector)> {
    if dir.iter().all(|&d| d == 0.0) {
        return None;
    }
    let mut t = t0;
    for _ in 0..MAX_HALVINGS {
        let y = x.add_scaled(t, dir);
        if let Ok(gy) = field.grad(&y) {
            if gy.norm() < gn {
                return Some((y, gy));
            }
        }
        t *= 0.5;
    }
    None
}
