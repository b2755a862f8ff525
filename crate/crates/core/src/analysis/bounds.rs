//! Smoothness constants and step-size bounds on boxes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::BoxDomain;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{norm, spectral_norm, Vector};
use crate::rng::Stream;

const MAX_GRID_POINTS: usize = 10_000_000;

/// Grid estimate of `sup |hessian f|` over the closed box.
///
/// The value is attained at `maximizer`, so it is a lower bound on the
/// true supremum, never an upper bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianSupEstimate {
    pub value: f64,
    pub maximizer: Vector,
    pub evaluations: usize,
    pub refine_rounds: usize,
    pub is_lower_bound: bool,
}

fn grid_max(field: &ScalarField, axes: &[(f64, f64)], counts: &[usize]) -> Result<(f64, Vector, usize)> {
    let total: usize = counts.iter().product();
    let mut idx = vec![0usize; counts.len()];
    let mut best = (f64::NEG_INFINITY, Vector::zeros(counts.len()));
    let mut x = vec![0.0; counts.len()];
    for _ in 0..total {
        for (d, &i) in idx.iter().enumerate() {
            let (lo, hi) = axes[d];
            x[d] = if i + 1 == counts[d] {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (counts[d] - 1) as f64
            };
        }
        let s = spectral_norm(&field.hessian(&x)?)?;
        if s > best.0 {
            best = (s, Vector::from(x.as_slice()));
        }
        for d in (0..idx.len()).rev() {
            idx[d] += 1;
            if idx[d] < counts[d] {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok((best.0, best.1, total))
}

/// Maximum of the Hessian spectral norm over a tensor grid that includes
/// the box faces, followed by `refine_rounds` rounds of re-gridding a
/// one-cell neighbourhood of the running maximizer.
pub fn estimate_hessian_sup(
    field: &ScalarField,
    domain: &BoxDomain,
    grid: &[usize],
    refine_rounds: usize,
) -> Result<HessianSupEstimate> {
    if grid.len() != domain.dim() || domain.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: grid.len().min(domain.dim()),
        });
    }
    if grid.iter().any(|&c| c < 2) {
        return Err(Error::config("grid", "need at least 2 points per axis"));
    }
    let total = grid.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c));
    if total.is_none_or(|t| t > MAX_GRID_POINTS) {
        return Err(Error::config("grid", "more than 10^7 grid points"));
    }

    let mut axes: Vec<(f64, f64)> = domain.intervals().to_vec();
    let (mut value, mut maximizer, mut evaluations) = grid_max(field, &axes, grid)?;
    for _ in 0..refine_rounds {
        axes = axes
            .iter()
            .enumerate()
            .map(|(d, &(lo, hi))| {
                let cell = (hi - lo) / (grid[d] - 1) as f64;
                let m = maximizer[d];
                ((m - cell).max(domain.lo(d)), (m + cell).min(domain.hi(d)))
            })
            .collect();
        let (v, p, e) = grid_max(field, &axes, grid)?;
        evaluations += e;
        if v > value {
            value = v;
            maximizer = p;
        }
    }
    Ok(HessianSupEstimate {
        value,
        maximizer,
        evaluations,
        refine_rounds,
        is_lower_bound: true,
    })
}

/// Step-size bounds: `alpha_sufficient = margin / L` for saddle avoidance,
/// and `alpha < 2 / gamma` as the necessary condition for generic
/// convergence to minima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSizePlan {
    pub l_estimate: f64,
    pub margin: f64,
    pub alpha_sufficient: f64,
    pub gamma: Option<f64>,
    pub alpha_necessary_sup: Option<f64>,
}

pub fn plan_stepsize(l: f64, margin: f64, gamma: Option<f64>) -> Result<StepSizePlan> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::InvalidBound(format!("L must be positive and finite, got {l}")));
    }
    if !(margin > 0.0 && margin < 1.0) {
        return Err(Error::InvalidBound(format!("margin must lie in (0, 1), got {margin}")));
    }
    if let Some(g) = gamma {
        if !(g > 0.0 && g.is_finite()) {
            return Err(Error::InvalidBound(format!(
                "gamma must be positive and finite, got {g}"
            )));
        }
    }
    Ok(StepSizePlan {
        l_estimate: l,
        margin,
        alpha_sufficient: margin / l,
        gamma,
        alpha_necessary_sup: gamma.map(|g| 2.0 / g),
    })
}

/// Smallest Hessian spectral norm over `points`, a candidate for gamma.
pub fn min_hessian_norm(field: &ScalarField, points: &[Vector]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidBound("no points to take the minimum over".into()));
    }
    points
        .iter()
        .try_fold(f64::INFINITY, |m, p| Ok(m.min(spectral_norm(&field.hessian(p)?)?)))
}

pub(crate) fn sample_in(domain: &BoxDomain, rng: &mut Stream) -> Vector {
    Vector::new(
        domain
            .intervals()
            .iter()
            .map(|&(lo, hi)| rng.open_interval(lo, hi))
            .collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzViolation {
    pub x: Vector,
    pub y: Vector,
    pub ratio: f64,
}

/// Reported violations are capped at this many entries.
pub const MAX_REPORTED_VIOLATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub l: f64,
    pub pairs_tested: usize,
    /// Pairs closer than `1e-12`, excluded from the ratio.
    pub pairs_skipped: usize,
    pub violation_count: usize,
    /// Largest `|grad f(x) - grad f(y)| / |x - y|` observed.
    pub worst_ratio: f64,
    pub worst_pair: Option<(Vector, Vector)>,
    pub violations: Vec<LipschitzViolation>,
}

impl LipschitzReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

/// Samples `pairs` uniform pairs in the box and tests
/// `|grad f(x) - grad f(y)| <= L |x - y| (1 + 1e-10)`.
pub fn check_lipschitz(
    field: &ScalarField,
    domain: &BoxDomain,
    l: f64,
    pairs: usize,
    seed: u64,
) -> Result<LipschitzReport> {
    if !(l > 0.0) {
        return Err(Error::InvalidBound(format!("L must be positive, got {l}")));
    }
    if domain.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: domain.dim(),
        });
    }
    let ratios: Vec<Option<(f64, Vector, Vector)>> = (0..pairs as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, i);
            let x = sample_in(domain, &mut rng);
            let y = sample_in(domain, &mut rng);
            let dist = x.distance(&y);
            if dist < 1e-12 {
                return Ok(None);
            }
            let gx = field.grad(&x)?;
            let gy = field.grad(&y)?;
            let diff: Vec<f64> = gx.iter().zip(gy.iter()).map(|(a, b)| a - b).collect();
            Ok(Some((norm(&diff) / dist, x, y)))
        })
        .collect::<Result<_>>()?;

    let mut report = LipschitzReport {
        l,
        pairs_tested: 0,
        pairs_skipped: 0,
        violation_count: 0,
        worst_ratio: 0.0,
        worst_pair: None,
        violations: Vec::new(),
    };
    for r in ratios {
        let Some((ratio, x, y)) = r else {
            report.pairs_skipped += 1;
            continue;
        };
        report.pairs_tested += 1;
        if ratio > report.worst_ratio || report.worst_pair.is_none() {
            report.worst_ratio = ratio;
            report.worst_pair = Some((x.clone(), y.clone()));
        }
        if ratio > l * (1.0 + 1e-10) {
            report.violation_count += 1;
            if report.violations.len() < MAX_REPORTED_VIOLATIONS {
                report.violations.push(LipschitzViolation { x, y, ratio });
            }
        }
    }
    Ok(report)
}
