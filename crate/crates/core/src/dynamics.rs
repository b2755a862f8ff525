//! The gradient-descent map `g(x) = x - alpha * grad f(x)` and its orbits.
//!
//! [`GdMap::iterate`] runs the map until one of five verdicts applies:
//! convergence (small gradient *and* small step), divergence, leaving a
//! box, period-2 cycling, or running out of budget.

use std::collections::VecDeque;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::BoxDomain;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::linalg::Vector;

/// Stopping thresholds for [`GdMap::iterate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Converged needs `|grad f(x_K)| <= grad` ...
    pub grad: f64,
    /// ... and `|x_K - x_{K-1}| <= step`.
    pub step: f64,
    /// Diverged when `|x| > divergence_radius` ...
    pub divergence_radius: f64,
    /// ... or `f(x) < divergence_value`.
    pub divergence_value: f64,
    /// Period-2 detection threshold.
    pub cycle: f64,
    /// Consecutive iterations the period-2 pattern must persist.
    pub cycle_window: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            grad: 1e-8,
            step: 1e-10,
            divergence_radius: 1e8,
            divergence_value: -1e12,
            cycle: 1e-9,
            cycle_window: 20,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("grad", self.grad),
            ("step", self.step),
            ("divergence_radius", self.divergence_radius),
            ("cycle", self.cycle),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(
                    format!("tolerances.{name}"),
                    "must be positive and finite",
                ));
            }
        }
        if self.divergence_value.is_nan() {
            return Err(Error::config("tolerances.divergence_value", "must not be NaN"));
        }
        if self.cycle_window < 2 {
            return Err(Error::config("tolerances.cycle_window", "must be at least 2"));
        }
        Ok(())
    }
}

pub const DEFAULT_BUDGET: usize = 100_000;

/// Recorded-state bound used to pick the default stride.
const RECORD_BUDGET: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateOptions {
    pub budget: usize,
    pub tolerances: Tolerances,
    /// Record every `stride`-th iterate. `None` picks 1 when
    /// `N * budget <= 10^6`, otherwise the smallest stride that keeps the
    /// record under that many coordinates.
    pub record_stride: Option<usize>,
    /// Skip recording entirely (only the verdict is needed).
    pub record: bool,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            budget: DEFAULT_BUDGET,
            tolerances: Tolerances::default(),
            record_stride: None,
            record: true,
        }
    }
}

impl IterateOptions {
    pub fn with_budget(budget: usize) -> Self {
        IterateOptions {
            budget,
            ..Self::default()
        }
    }

    fn stride(&self, dim: usize) -> usize {
        self.record_stride
            .unwrap_or_else(|| (dim * self.budget).div_ceil(RECORD_BUDGET).max(1))
            .max(1)
    }
}

/// Evidence that some coordinates are locked in a period-2 oscillation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleCertificate {
    /// Two consecutive iterates `(x_k, x_{k+1})` from the cycle.
    pub representative: (Vector, Vector),
    /// Coordinates exhibiting the pattern.
    pub coordinates: Vec<usize>,
    /// Whether every coordinate cycles (a genuine 2-cycle of the full state).
    pub full_state: bool,
}

/// How an orbit ended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Termination {
    Converged {
        limit: Vector,
    },
    /// `non_finite` marks evaluation overflow or NaN.
    Diverged {
        non_finite: bool,
    },
    ExitedDomain {
        step: usize,
    },
    Cycling {
        certificate: CycleCertificate,
    },
    /// `non_convergent` is set when step lengths stopped shrinking.
    BudgetExhausted {
        non_convergent: bool,
    },
}

impl Termination {
    pub fn kind(&self) -> &'static str {
        match self {
            Termination::Converged { .. } => "converged",
            Termination::Diverged { .. } => "diverged",
            Termination::ExitedDomain { .. } => "exited_domain",
            Termination::Cycling { .. } => "cycling",
            Termination::BudgetExhausted { .. } => "budget_exhausted",
        }
    }

    pub fn limit(&self) -> Option<&Vector> {
        match self {
            Termination::Converged { limit } => Some(limit),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub iter: usize,
    pub point: Vector,
    pub value: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub initial: Vector,
    pub alpha: f64,
    pub stride: usize,
    pub records: Vec<Record>,
    /// Number of map applications performed.
    pub iterations: usize,
    pub termination: Termination,
    pub final_grad_norm: f64,
    pub final_value: f64,
}

impl Trajectory {
    /// CSV with header `iter,x1,...,xN,f,gradnorm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.initial.dim();
        let mut header = String::from("iter");
        for i in 1..=n {
            header.push_str(&format!(",x{i}"));
        }
        header.push_str(",f,gradnorm");
        writeln!(w, "{header}")?;
        for r in &self.records {
            write!(w, "{}", r.iter)?;
            for v in r.point.iter() {
                write!(w, ",{v:e}")?;
            }
            writeln!(w, ",{:e},{:e}", r.value, r.grad_norm)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// JSON sidecar carrying the verdict and summary numbers.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": crate::shell::SCHEMA_VERSION,
            "initial": self.initial,
            "alpha": self.alpha,
            "iterations": self.iterations,
            "stride": self.stride,
            "termination": self.termination,
            "final_grad_norm": self.final_grad_norm,
            "final_value": self.final_value,
        })
    }
}

/// `g(x) = x - alpha * grad f(x)` for a fixed field and step size.
#[derive(Debug, Clone, Copy)]
pub struct GdMap<'f> {
    field: &'f ScalarField,
    alpha: f64,
}

impl<'f> GdMap<'f> {
    /// `alpha = 0` is accepted and gives the identity map.
    pub fn new(field: &'f ScalarField, alpha: f64) -> Result<Self> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidBound(format!(
                "step size must be finite and non-negative, got {alpha}"
            )));
        }
        Ok(GdMap { field, alpha })
    }

    pub fn field(&self) -> &'f ScalarField {
        self.field
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn apply(&self, x: &Vector, grad: &[f64]) -> Vector {
        x.add_scaled(-self.alpha, grad)
    }

    /// One application of the map.
    pub fn step(&self, x: &[f64]) -> Result<Vector> {
        let g = self.field.grad(x)?;
        let next = self.apply(&Vector::from(x), &g);
        if next.is_finite() {
            Ok(next)
        } else {
            Err(Error::NonFiniteValue)
        }
    }

    /// Runs the map from `x0`. Evaluation failures become
    /// `Diverged { non_finite: true }`; only malformed input is an error.
    pub fn iterate(&self, x0: &[f64], domain: Option<&BoxDomain>, opts: &IterateOptions) -> Result<Trajectory> {
        let n = self.field.dim();
        if x0.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x0.len(),
            });
        }
        if let Some(d) = domain {
            if d.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: d.dim(),
                });
            }
        }
        if opts.budget == 0 {
            return Err(Error::config("budget", "must be at least 1"));
        }
        let tol = &opts.tolerances;
        tol.validate()?;

        let stride = opts.stride(n);
        let window_len = tol.cycle_window + 2;
        let mut traj = Trajectory {
            initial: Vector::from(x0),
            alpha: self.alpha,
            stride,
            records: Vec::new(),
            iterations: 0,
            termination: Termination::BudgetExhausted { non_convergent: false },
            final_grad_norm: f64::NAN,
            final_value: f64::NAN,
        };

        let mut x = Vector::from(x0);
        let mut prev: Option<Record> = None;
        let mut window: VecDeque<Vector> = VecDeque::with_capacity(window_len);
        let mut steps: VecDeque<f64> = VecDeque::with_capacity(2 * tol.cycle_window);
        let mut k = 0;

        let termination = loop {
            let eval = self.field.value(&x).and_then(|v| Ok((v, self.field.grad(&x)?)));
            let (value, grad) = match eval {
                Ok(vg) => vg,
                Err(Error::NonFiniteValue) => break Termination::Diverged { non_finite: true },
                Err(e) => return Err(e),
            };
            let grad_norm = grad.norm();
            let rec = Record {
                iter: k,
                point: x.clone(),
                value,
                grad_norm,
            };
            traj.final_grad_norm = grad_norm;
            traj.final_value = value;
            let recorded = opts.record && k % stride == 0;
            if recorded {
                traj.records.push(rec.clone());
            }

            let last_step = prev.as_ref().map(|p| x.distance(&p.point));
            if let Some(s) = last_step {
                if grad_norm <= tol.grad && s <= tol.step {
                    close_record(&mut traj, opts, prev.take(), rec);
                    break Termination::Converged { limit: x };
                }
                if steps.len() == 2 * tol.cycle_window {
                    steps.pop_front();
                }
                steps.push_back(s);
            }
            if x.norm() > tol.divergence_radius || value < tol.divergence_value {
                close_record(&mut traj, opts, prev.take(), rec);
                break Termination::Diverged { non_finite: false };
            }
            if let Some(d) = domain {
                if !d.contains_closed(&x) {
                    close_record(&mut traj, opts, prev.take(), rec);
                    break Termination::ExitedDomain { step: k };
                }
            }
            if window.len() == window_len {
                window.pop_front();
            }
            window.push_back(x.clone());
            if window.len() == window_len {
                let w = window.make_contiguous();
                if let Some(cert) = detect_cycle(w, tol.cycle, tol.cycle_window) {
                    close_record(&mut traj, opts, prev.take(), rec);
                    break Termination::Cycling { certificate: cert };
                }
            }
            if k == opts.budget {
                close_record(&mut traj, opts, prev.take(), rec);
                break Termination::BudgetExhausted {
                    non_convergent: steps_stalled(&steps, tol.cycle_window),
                };
            }

            let next = self.apply(&x, &grad);
            k += 1;
            traj.iterations = k;
            if !next.is_finite() {
                break Termination::Diverged { non_finite: true };
            }
            prev = Some(rec);
            x = next;
        };
        traj.termination = termination;
        Ok(traj)
    }
}

/// Makes sure the last two iterates close the record.
fn close_record(traj: &mut Trajectory, opts: &IterateOptions, prev: Option<Record>, last: Record) {
    if !opts.record {
        return;
    }
    if traj.records.last().map(|r| r.iter) == Some(last.iter) {
        traj.records.pop();
    }
    if let Some(p) = prev {
        if traj.records.last().map(|r| r.iter) != Some(p.iter) {
            traj.records.push(p);
        }
    }
    traj.records.push(last);
}

/// True when the last `w` step lengths are not smaller than the `w` before,
/// or when any step in the window is longer than its predecessor.
fn steps_stalled(steps: &VecDeque<f64>, w: usize) -> bool {
    if steps.len() < 2 * w {
        return false;
    }
    let older = steps.iter().take(w).fold(0.0_f64, |m, &s| m.max(s));
    let recent = steps.iter().skip(w).fold(0.0_f64, |m, &s| m.max(s));
    // near a nondegenerate minimum step lengths shrink monotonically
    let growing = steps
        .iter()
        .zip(steps.iter().skip(1))
        .any(|(&a, &b)| b > a * (1.0 + 1e-9));
    recent >= older || growing
}

/// Period-2 test over a window of consecutive iterates.
///
/// Coordinate `i` is cycling when, for each of the last `persistence`
/// positions `k`, `|x_{k+2,i} - x_{k,i}| <= eps` while
/// `|x_{k+1,i} - x_{k,i}| > 10 eps`, and the oscillation amplitude has not
/// decayed by more than `eps` across the window. A slowly converging
/// oscillation therefore does not qualify.
pub fn detect_cycle(window: &[Vector], eps: f64, persistence: usize) -> Option<CycleCertificate> {
    if window.len() < 4 || persistence == 0 || window.len() < persistence + 2 {
        return None;
    }
    let n = window[0].dim();
    let start = window.len() - persistence - 2;
    let coords: Vec<usize> = (0..n)
        .filter(|&i| {
            let pattern = (start..start + persistence).all(|k| {
                let a = window[k][i];
                let b = window[k + 1][i];
                let c = window[k + 2][i];
                (c - a).abs() <= eps && (b - a).abs() > 10.0 * eps
            });
            if !pattern {
                return false;
            }
            let first = (window[start + 1][i] - window[start][i]).abs();
            let last = (window[window.len() - 1][i] - window[window.len() - 2][i]).abs();
            last >= first - eps
        })
        .collect();
    if coords.is_empty() {
        return None;
    }
    let m = window.len();
    Some(CycleCertificate {
        representative: (window[m - 2].clone(), window[m - 1].clone()),
        full_state: coords.len() == n,
        coordinates: coords,
    })
}
