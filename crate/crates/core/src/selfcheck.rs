//! Built-in oracle suites: symbolic derivatives against finite differences
//! and eigensolver invariants on random symmetric matrices.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::experiment::sample_uniform;
use crate::field::{fd_check, Builtin, CheckReport, FdCheckOptions};
use crate::linalg::{eigen_symmetric, SymmetricMatrix, SymmetricSpectrum, Vector};
use crate::rng::Stream;

/// Relative tolerance for the eigen invariants, scaled by `max(1, |A|_F)`.
pub const EIGEN_TOL: f64 = 1e-10;

/// Residuals of a computed spectrum against the defining identities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResiduals {
    /// `max |Q^T Q - I|`.
    pub orthogonality: f64,
    /// `max |Q diag(lambda) Q^T - A| / max(1, |A|_F)`.
    pub reconstruction: f64,
    /// `|sum lambda - tr A| / max(1, |A|_F)`.
    pub trace: f64,
    /// Eigenvalues out of ascending order.
    pub ordering_violations: usize,
}

impl SpectrumResiduals {
    pub fn passed(&self, tol: f64) -> bool {
        self.orthogonality <= tol && self.reconstruction <= tol && self.trace <= tol && self.ordering_violations == 0
    }

    fn max(self, o: SpectrumResiduals) -> Self {
        SpectrumResiduals {
            orthogonality: self.orthogonality.max(o.orthogonality),
            reconstruction: self.reconstruction.max(o.reconstruction),
            trace: self.trace.max(o.trace),
            ordering_violations: self.ordering_violations + o.ordering_violations,
        }
    }
}

pub fn spectrum_residuals(a: &SymmetricMatrix, s: &SymmetricSpectrum) -> SpectrumResiduals {
    let n = a.dim();
    let scale = a.frobenius_norm().max(1.0);
    let q = &s.vectors;
    let mut r = SpectrumResiduals::default();
    for i in 0..n {
        for j in 0..n {
            let mut qtq = 0.0;
            let mut rec = 0.0;
            for k in 0..n {
                qtq += q[(k, i)] * q[(k, j)];
                rec += q[(i, k)] * s.values[k] * q[(j, k)];
            }
            let id = if i == j { 1.0 } else { 0.0 };
            r.orthogonality = r.orthogonality.max((qtq - id).abs());
            r.reconstruction = r.reconstruction.max((rec - a.get(i, j)).abs() / scale);
        }
    }
    r.trace = (s.values.iter().sum::<f64>() - a.trace()).abs() / scale;
    r.ordering_violations = s.values.windows(2).filter(|w| w[0] > w[1]).count();
    r
}

/// Random symmetric matrix of size `1..=max_dim` with entries in (-10, 10).
pub fn random_symmetric(seed: u64, index: u64, max_dim: usize) -> SymmetricMatrix {
    let mut rng = Stream::new(seed, index);
    let n = 1 + rng.below(max_dim as u64) as usize;
    let mut a = SymmetricMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            a.set(i, j, rng.open_interval(-10.0, 10.0));
        }
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCheck {
    pub field: String,
    pub report: CheckReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenCheck {
    pub matrices: usize,
    pub max_dim: usize,
    pub tolerance: f64,
    pub worst: SpectrumResiduals,
    pub failures: usize,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfCheckReport {
    pub seed: u64,
    pub fields: Vec<FieldCheck>,
    pub eigen: EigenCheck,
    pub passed: bool,
}

/// Builtins covered by the finite-difference suite.
pub fn selfcheck_builtins() -> Vec<Builtin> {
    vec![
        Builtin::LineOfSaddles,
        Builtin::DoubleWell,
        Builtin::QuadraticBowl { dim: 1 },
        Builtin::QuadraticBowl { dim: 3 },
    ]
}

/// `fd_check` on every builtin at `points` uniform points of its reference
/// domain, plus the eigen invariants on `matrices` random matrices of size
/// at most 10.
pub fn run_selfcheck(seed: u64, points: usize, matrices: usize) -> Result<SelfCheckReport> {
    let mut fields = Vec::new();
    for b in selfcheck_builtins() {
        let domain = b.reference_domain();
        let pts: Vec<Vector> = (0..points as u64).map(|i| sample_uniform(&domain, i, seed)).collect();
        let report = fd_check(&b.field(), &pts, &FdCheckOptions::default())?;
        let label = match b {
            Builtin::QuadraticBowl { dim } => format!("{}[{dim}]", b.name()),
            _ => b.name().to_string(),
        };
        fields.push(FieldCheck { field: label, report });
    }

    let max_dim = 10;
    let mut worst = SpectrumResiduals::default();
    let mut failures = 0;
    for i in 0..matrices as u64 {
        let a = random_symmetric(seed, i, max_dim);
        let r = match eigen_symmetric(&a) {
            Ok(s) => spectrum_residuals(&a, &s),
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        if !r.passed(EIGEN_TOL) {
            failures += 1;
        }
        worst = worst.max(r);
    }
    let eigen = EigenCheck {
        matrices,
        max_dim,
        tolerance: EIGEN_TOL,
        worst,
        failures,
        passed: failures == 0,
    };
    let passed = eigen.passed && fields.iter().all(|f| f.report.passed);
    Ok(SelfCheckReport {
        seed,
        fields,
        eigen,
        passed,
    })
}
