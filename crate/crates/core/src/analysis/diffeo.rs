use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::sample_in;
use super::BoxDomain;
use crate::dynamics::GdMap;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::{eigen_symmetric, Vector};
use crate::rng::Stream;

/// Point where `alpha * hessian` has an eigenvalue of modulus >= 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenFailure {
    pub point: Vector,
    pub max_abs_scaled_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiffeoReport {
    pub alpha: f64,
    pub points_checked: usize,
    /// Points where `max |alpha * lambda| >= 1`.
    pub eigen_failures: usize,
    pub first_eigen_failure: Option<EigenFailure>,
    pub max_abs_scaled_eigenvalue: f64,
    /// Range of the Jacobian `I - alpha * hessian` spectrum over the samples.
    pub jacobian_spectrum: (f64, f64),
    pub pairs_checked: usize,
    pub collisions: usize,
    pub first_collision: Option<(Vector, Vector)>,
    /// Smallest `|g(x) - g(y)| / |x - y|` observed.
    pub min_separation_ratio: f64,
}

impl DiffeoReport {
    pub fn eigen_passed(&self) -> bool {
        self.eigen_failures == 0
    }

    pub fn injectivity_passed(&self) -> bool {
        self.collisions == 0
    }

    pub fn passed(&self) -> bool {
        self.eigen_passed() && self.injectivity_passed()
    }
}

/// Sampled diagnostics for `g = id - alpha * grad f` being a diffeomorphism
/// on the box: the Jacobian spectrum must lie in `(0, 2)` at every sampled
/// point, and sampled pairs of distinct points must have distinct images.
///
/// Point samples use streams `(seed, i)`; pair samples use
/// `(seed ^ PAIR_STREAM_SALT, i)` so the two checks draw independently.
pub fn check_diffeomorphism(
    field: &ScalarField,
    alpha: f64,
    domain: &BoxDomain,
    point_samples: usize,
    pair_samples: usize,
    seed: u64,
) -> Result<DiffeoReport> {
    let map = GdMap::new(field, alpha)?;
    if domain.dim() != field.dim() {
        return Err(Error::DimensionMismatch {
            expected: field.dim(),
            got: domain.dim(),
        });
    }

    let spectra: Vec<(Vector, f64, f64)> = (0..point_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, i);
            let x = sample_in(domain, &mut rng);
            let s = eigen_symmetric(&field.hessian(&x)?)?;
            Ok((x, alpha * s.min(), alpha * s.max()))
        })
        .collect::<Result<_>>()?;

    let mut report = DiffeoReport {
        alpha,
        points_checked: spectra.len(),
        eigen_failures: 0,
        first_eigen_failure: None,
        max_abs_scaled_eigenvalue: 0.0,
        jacobian_spectrum: (f64::INFINITY, f64::NEG_INFINITY),
        pairs_checked: 0,
        collisions: 0,
        first_collision: None,
        min_separation_ratio: f64::INFINITY,
    };
    for (x, lo, hi) in spectra {
        let m = lo.abs().max(hi.abs());
        report.max_abs_scaled_eigenvalue = report.max_abs_scaled_eigenvalue.max(m);
        report.jacobian_spectrum.0 = report.jacobian_spectrum.0.min(1.0 - hi);
        report.jacobian_spectrum.1 = report.jacobian_spectrum.1.max(1.0 - lo);
        if m >= 1.0 {
            report.eigen_failures += 1;
            if report.first_eigen_failure.is_none() {
                report.first_eigen_failure = Some(EigenFailure {
                    point: x,
                    max_abs_scaled_eigenvalue: m,
                });
            }
        }
    }

    let pairs: Vec<Option<(Vector, Vector, f64)>> = (0..pair_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed ^ PAIR_STREAM_SALT, i);
            let x = sample_in(domain, &mut rng);
            let y = sample_in(domain, &mut rng);
            let dist = x.distance(&y);
            if dist < 1e-12 {
                return Ok(None);
            }
            let gx = map.step(&x)?;
            let gy = map.step(&y)?;
            Ok(Some((x, y, gx.distance(&gy) / dist)))
        })
        .collect::<Result<_>>()?;
    for (x, y, ratio) in pairs.into_iter().flatten() {
        report.pairs_checked += 1;
        report.min_separation_ratio = report.min_separation_ratio.min(ratio);
        if ratio <= 1e-12 {
            report.collisions += 1;
            if report.first_collision.is_none() {
                report.first_collision = Some((x, y));
            }
        }
    }
    Ok(report)
}

/// Keeps pair streams disjoint from point streams.
const PAIR_STREAM_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
