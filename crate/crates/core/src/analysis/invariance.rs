//! Forward invariance `g(S) ⊆ S` of a box under the gradient-descent map.
//!
//! Boxes are tested as their closures. Sampling can only ever falsify;
//! certification is restricted to coordinate-separable maps, where each
//! component `g_i` is a function of `x_i` alone and its range over an
//! interval can be enclosed from a dense 1-D grid plus a derivative term.

use serde::{Deserialize, Serialize};

use super::BoxDomain;
use crate::dynamics::GdMap;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvarianceMode {
    /// `density` is the total number of sampled points.
    Sample,
    /// `density` is the number of grid nodes per axis.
    SeparableCertify,
}

/// Enclosure of one component map over its interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBound {
    pub axis: usize,
    pub interval: (f64, f64),
    /// Min and max of `g_i` over the grid nodes.
    pub grid_range: (f64, f64),
    /// Max of `|g_i'|` over the grid nodes.
    pub derivative_bound: f64,
    /// `derivative_bound * spacing / 2`.
    pub error_term: f64,
    /// `grid_range` widened by `error_term` on both sides.
    pub enclosure: (f64, f64),
    /// Distance from the enclosure to the nearest face; positive when inside.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum InvarianceVerdict {
    CertifiedInvariant {
        axes: Vec<AxisBound>,
    },
    FalsifiedAt {
        point: Vector,
        image: Vector,
    },
    Undetermined {
        samples: usize,
        /// Smallest distance of an image to the box faces.
        worst_margin: f64,
        worst_point: Option<Vector>,
        axes: Vec<AxisBound>,
    },
}

impl InvarianceVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            InvarianceVerdict::CertifiedInvariant { .. } => "certified_invariant",
            InvarianceVerdict::FalsifiedAt { .. } => "falsified_at",
            InvarianceVerdict::Undetermined { .. } => "undetermined",
        }
    }
}

/// Width of the boundary shell used for biased samples.
const SHELL: f64 = 1e-3;

pub fn check_forward_invariance(
    map: &GdMap<'_>,
    domain: &BoxDomain,
    mode: InvarianceMode,
    density: usize,
    seed: u64,
) -> Result<InvarianceVerdict> {
    if domain.dim() != map.field().dim() {
        return Err(Error::DimensionMismatch {
            expected: map.field().dim(),
            got: domain.dim(),
        });
    }
    match mode {
        InvarianceMode::Sample => sample(map, domain, density, seed),
        InvarianceMode::SeparableCertify => certify(map, domain, density),
    }
}

fn image_of(map: &GdMap<'_>, x: &[f64]) -> Vector {
    map.step(x)
        .unwrap_or_else(|_| Vector::new(vec![f64::INFINITY; x.len()]))
}

fn sample(map: &GdMap<'_>, domain: &BoxDomain, count: usize, seed: u64) -> Result<InvarianceVerdict> {
    if count == 0 {
        return Err(Error::config("density", "sample mode needs at least one sample"));
    }
    let n = domain.dim();
    let mut worst = (f64::INFINITY, None);
    for i in 0..count as u64 {
        let mut rng = Stream::new(seed, i);
        let mut x: Vec<f64> = domain
            .intervals()
            .iter()
            .map(|&(lo, hi)| rng.open_interval(lo, hi))
            .collect();
        // odd samples hug a random face
        if i % 2 == 1 {
            let axis = rng.below(n as u64) as usize;
            let (lo, hi) = domain.intervals()[axis];
            let depth = SHELL.min(0.5 * (hi - lo));
            x[axis] = if rng.below(2) == 0 {
                rng.open_interval(lo, lo + depth)
            } else {
                rng.open_interval(hi - depth, hi)
            };
        }
        let image = image_of(map, &x);
        if !domain.contains_closed(&image) {
            return Ok(InvarianceVerdict::FalsifiedAt {
                point: Vector::new(x),
                image,
            });
        }
        let m = domain.margin(&image);
        if m < worst.0 {
            worst = (m, Some(Vector::new(x)));
        }
    }
    Ok(InvarianceVerdict::Undetermined {
        samples: count,
        worst_margin: worst.0,
        worst_point: worst.1,
        axes: Vec::new(),
    })
}

fn certify(map: &GdMap<'_>, domain: &BoxDomain, density: usize) -> Result<InvarianceVerdict> {
    if density < 10 {
        return Err(Error::config(
            "density",
            "separable-certify needs at least 10 nodes per axis",
        ));
    }
    let field = map.field();
    let alpha = map.alpha();
    if alpha != 0.0 && !field.is_separable() {
        return Err(Error::ModeUnsupported(
            "separable-certify requires each gradient component to depend on its own coordinate only".into(),
        ));
    }
    if alpha == 0.0 {
        // identity map: g(S) = S exactly
        let axes = domain
            .intervals()
            .iter()
            .enumerate()
            .map(|(axis, &iv)| AxisBound {
                axis,
                interval: iv,
                grid_range: iv,
                derivative_bound: 1.0,
                error_term: 0.0,
                enclosure: iv,
                margin: 0.0,
            })
            .collect();
        return Ok(InvarianceVerdict::CertifiedInvariant { axes });
    }
    let mid = domain.midpoint();
    let mut axes = Vec::with_capacity(domain.dim());
    for (axis, &(lo, hi)) in domain.intervals().iter().enumerate() {
        let grad_i = field.gradient_expr(axis);
        let hess_ii = field.hessian_expr(axis, axis);
        let spacing = (hi - lo) / (density - 1) as f64;
        let mut p = mid.clone();
        let mut range = (f64::INFINITY, f64::NEG_INFINITY);
        let mut dmax = 0.0_f64;
        for k in 0..density {
            let t = if k + 1 == density { hi } else { lo + spacing * k as f64 };
            p[axis] = t;
            let g = t - alpha * grad_i.evaluate(&p)?;
            let dg = 1.0 - alpha * hess_ii.evaluate(&p)?;
            if !(g >= lo && g <= hi) {
                let point = Vector::new(p.clone());
                let image = image_of(map, &point);
                return Ok(InvarianceVerdict::FalsifiedAt { point, image });
            }
            range = (range.0.min(g), range.1.max(g));
            dmax = dmax.max(dg.abs());
        }
        let error_term = dmax * spacing / 2.0;
        let enclosure = (range.0 - error_term, range.1 + error_term);
        axes.push(AxisBound {
            axis,
            interval: (lo, hi),
            grid_range: range,
            derivative_bound: dmax,
            error_term,
            enclosure,
            margin: (enclosure.0 - lo).min(hi - enclosure.1),
        });
    }
    if axes.iter().all(|a| a.margin > 0.0) {
        Ok(InvarianceVerdict::CertifiedInvariant { axes })
    } else {
        let worst_margin = axes.iter().map(|a| a.margin).fold(f64::INFINITY, f64::min);
        Ok(InvarianceVerdict::Undetermined {
            samples: density * domain.dim(),
            worst_margin,
            worst_point: None,
            axes,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Builtin, ScalarField};
    use crate::VariableOrder;

    #[test]
    fn double_well_box_is_certified() {
        let b = Builtin::DoubleWell;
        let f = b.field();
        let m = GdMap::new(&f, 1.0 / 12.0).unwrap();
        let v =
            check_forward_invariance(&m, &b.reference_domain(), InvarianceMode::SeparableCertify, 20_001, 0).unwrap();
        let InvarianceVerdict::CertifiedInvariant { axes } = v else {
            panic!("expected certificate, got {v:?}")
        };
        assert!((axes[1].grid_range.1 - 1.5).abs() < 1e-12);
        assert!((axes[1].grid_range.0 + 1.5).abs() < 1e-12);
        assert!((axes[0].grid_range.1 - 11.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn identity_map_is_certified_even_when_not_separable() {
        let b = Builtin::LineOfSaddles;
        let f = b.field();
        let m = GdMap::new(&f, 0.0).unwrap();
        let v = check_forward_invariance(&m, &b.reference_domain(), InvarianceMode::SeparableCertify, 11, 0).unwrap();
        assert_eq!(v.kind(), "certified_invariant");
    }

    #[test]
    fn oversized_step_is_falsified_by_sampling() {
        let b = Builtin::DoubleWell;
        let f = b.field();
        let m = GdMap::new(&f, 2.0).unwrap();
        let v = check_forward_invariance(&m, &b.reference_domain(), InvarianceMode::Sample, 10_000, 3).unwrap();
        let InvarianceVerdict::FalsifiedAt { point, image } = v else {
            panic!("expected falsification")
        };
        assert!(b.reference_domain().contains_open(&point));
        assert!(!b.reference_domain().contains_closed(&image));
        // the worked value: y = 1.9 maps to 3*1.9 - 2*1.9^3
        let img = m.step(&[0.0, 1.9]).unwrap();
        assert!((img[1] - (-8.018)).abs() < 1e-12);
    }

    #[test]
    fn non_separable_certify_is_unsupported() {
        let b = Builtin::LineOfSaddles;
        let f = b.field();
        let m = GdMap::new(&f, 0.1).unwrap();
        let r = check_forward_invariance(&m, &b.reference_domain(), InvarianceMode::SeparableCertify, 100, 0);
        assert!(matches!(r, Err(Error::ModeUnsupported(_))));
    }

    #[test]
    fn sample_mode_never_certifies() {
        let b = Builtin::DoubleWell;
        let f = b.field();
        let m = GdMap::new(&f, 1.0 / 12.0).unwrap();
        let v = check_forward_invariance(&m, &b.reference_domain(), InvarianceMode::Sample, 1000, 3).unwrap();
        match v {
            InvarianceVerdict::Undetermined { worst_margin, .. } => assert!(worst_margin > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn thin_margin_is_undetermined_not_certified() {
        // g(x) = x - a*x^3 maps [-1, 1] onto [-(1-a), 1-a]; a margin of 1e-6
        // is far below the error term of a 10-node grid
        let f = ScalarField::build("x^4/4", VariableOrder::new(&["x"]).unwrap()).unwrap();
        let m = GdMap::new(&f, 1e-6).unwrap();
        let d = BoxDomain::new(vec![(-1.0, 1.0)]).unwrap();
        let v = check_forward_invariance(&m, &d, InvarianceMode::SeparableCertify, 10, 0).unwrap();
        assert_eq!(v.kind(), "undetermined");
    }
}
