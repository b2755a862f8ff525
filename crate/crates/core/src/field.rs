//! Scalar cost fields with exact symbolic derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::BoxDomain;
use crate::error::{Error, Result};
use crate::expr::{parse, Expression, VariableOrder};
use crate::linalg::{row_offset, SymmetricMatrix, Vector};

/// Twice-differentiable `f: R^N -> R` with precomputed symbolic gradient
/// and upper-triangular Hessian.
#[derive(Debug, Clone)]
pub struct ScalarField {
    vars: VariableOrder,
    value: Expression,
    gradient: Vec<Expression>,
    hessian: Vec<Expression>,
}

impl ScalarField {
    /// Differentiates `value` symbolically: N gradient and N(N+1)/2
    /// Hessian expressions.
    pub fn new(value: Expression, vars: VariableOrder) -> Result<Self> {
        if vars.is_empty() {
            return Err(Error::config("variables", "at least one variable is required"));
        }
        if let Some(i) = value.max_variable() {
            if i >= vars.len() {
                return Err(Error::UnknownVariable(format!("#{i}")));
            }
        }
        let n = vars.len();
        let gradient: Vec<Expression> = (0..n).map(|i| value.derivative(i)).collect();
        let mut hessian = Vec::with_capacity(n * (n + 1) / 2);
        for (i, g) in gradient.iter().enumerate() {
            for j in i..n {
                hessian.push(g.derivative(j));
            }
        }
        Ok(ScalarField {
            vars,
            value,
            gradient,
            hessian,
        })
    }

    /// Parses `text` and builds the field.
    pub fn build(text: &str, vars: VariableOrder) -> Result<Self> {
        let value = parse(text, &vars)?;
        Self::new(value, vars)
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }

    pub fn vars(&self) -> &VariableOrder {
        &self.vars
    }

    pub fn value_expr(&self) -> &Expression {
        &self.value
    }

    pub fn gradient_expr(&self, i: usize) -> &Expression {
        &self.gradient[i]
    }

    pub fn hessian_expr(&self, i: usize, j: usize) -> &Expression {
        let (lo, hi) = (i.min(j), i.max(j));
        &self.hessian[row_offset(self.dim(), lo) + hi - lo]
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.value.evaluate(x)
    }

    pub fn grad(&self, x: &[f64]) -> Result<Vector> {
        self.check_dim(x)?;
        self.gradient
            .iter()
            .map(|g| g.evaluate(x))
            .collect::<Result<Vec<_>>>()
            .map(Vector::new)
    }

    pub fn hessian(&self, x: &[f64]) -> Result<SymmetricMatrix> {
        self.check_dim(x)?;
        let upper = self.hessian.iter().map(|h| h.evaluate(x)).collect::<Result<Vec<_>>>()?;
        SymmetricMatrix::from_packed_upper(self.dim(), upper)
    }

    /// True when every mixed second partial is the zero expression, i.e.
    /// each gradient component depends on its own coordinate only.
    pub fn is_separable(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| ((i + 1)..n).all(|j| self.hessian_expr(i, j).is_zero()))
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "f({}) = {}",
            self.vars.names().join(", "),
            self.value.display(&self.vars)
        )
    }
}

/// Known critical set of a field: an isolated point or a line of critical
/// points `point + t * direction`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CriticalSet {
    Point { point: Vector },
    Line { point: Vector, direction: Vector },
}

impl CriticalSet {
    pub fn point(p: impl Into<Vector>) -> Self {
        CriticalSet::Point { point: p.into() }
    }

    pub fn line(p: impl Into<Vector>, dir: impl Into<Vector>) -> Self {
        CriticalSet::Line {
            point: p.into(),
            direction: dir.into(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            CriticalSet::Point { point } | CriticalSet::Line { point, .. } => point.dim(),
        }
    }

    /// Euclidean distance from `x` to the set.
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            CriticalSet::Point { point } => point.distance(x),
            CriticalSet::Line { point, direction } => {
                let dd = direction.dot(direction);
                let diff: Vec<f64> = x.iter().zip(point.iter()).map(|(a, b)| a - b).collect();
                if dd == 0.0 {
                    return crate::linalg::norm(&diff);
                }
                let t = direction.dot(&diff) / dd;
                diff.iter()
                    .zip(direction.iter())
                    .map(|(d, u)| (d - t * u).powi(2))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }
}

/// The builtin cost functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    /// `f(x, y, z) = 2xy + 2xz - 2x - y - z`: a line of strict saddles
    /// `(1/2, w, 1 - w)` and no minimum.
    LineOfSaddles,
    /// `f(x, y) = x^2/2 + y^4/4 - y^2/2`: strict saddle at the origin,
    /// minima at `(0, +-1)`.
    DoubleWell,
    /// `f(x) = |x|^2 / 2` in the given dimension.
    QuadraticBowl { dim: usize },
}

impl Builtin {
    pub const NAMES: [&'static str; 3] = ["line-of-saddles", "double-well", "quadratic-bowl"];

    pub fn name(&self) -> &'static str {
        match self {
            Builtin::LineOfSaddles => "line-of-saddles",
            Builtin::DoubleWell => "double-well",
            Builtin::QuadraticBowl { .. } => "quadratic-bowl",
        }
    }

    /// Looks up a builtin by name; `dim` only matters for the bowl
    /// (default 2).
    pub fn from_name(name: &str, dim: Option<usize>) -> Option<Builtin> {
        match name {
            "line-of-saddles" => Some(Builtin::LineOfSaddles),
            "double-well" => Some(Builtin::DoubleWell),
            "quadratic-bowl" => Some(Builtin::QuadraticBowl {
                dim: dim.unwrap_or(2).max(1),
            }),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Builtin::LineOfSaddles => 3,
            Builtin::DoubleWell => 2,
            Builtin::QuadraticBowl { dim } => *dim,
        }
    }

    pub fn field(&self) -> ScalarField {
        use Expression as E;
        let c = E::Constant;
        let v = E::Variable;
        let b = Box::new;
        let (value, vars) = match self {
            Builtin::LineOfSaddles => {
                let (x, y, z) = (v(0), v(1), v(2));
                // 2xy + 2xz - 2x - y - z
                let two_xy = E::Mul(b(E::Mul(b(c(2.0)), b(x.clone()))), b(y.clone()));
                let two_xz = E::Mul(b(E::Mul(b(c(2.0)), b(x.clone()))), b(z.clone()));
                let two_x = E::Mul(b(c(2.0)), b(x));
                let e = E::Sub(
                    b(E::Sub(b(E::Sub(b(E::Add(b(two_xy), b(two_xz))), b(two_x))), b(y))),
                    b(z),
                );
                (e, VariableOrder::new(&["x", "y", "z"]))
            }
            Builtin::DoubleWell => {
                // x^2/2 + y^4/4 - y^2/2
                let x2 = E::Div(b(E::IntPow(b(v(0)), 2)), b(c(2.0)));
                let y4 = E::Div(b(E::IntPow(b(v(1)), 4)), b(c(4.0)));
                let y2 = E::Div(b(E::IntPow(b(v(1)), 2)), b(c(2.0)));
                let e = E::Sub(b(E::Add(b(x2), b(y4))), b(y2));
                (e, VariableOrder::new(&["x", "y"]))
            }
            Builtin::QuadraticBowl { dim } => {
                let vars = if *dim <= 3 {
                    VariableOrder::new(&["x", "y", "z"][..*dim])
                } else {
                    Ok(VariableOrder::indexed(*dim))
                };
                let sum = (1..*dim).fold(E::IntPow(b(v(0)), 2), |acc, i| E::Add(b(acc), b(E::IntPow(b(v(i)), 2))));
                (E::Div(b(sum), b(c(2.0))), vars)
            }
        };
        let vars = vars.expect("builtin variable names are valid");
        ScalarField::new(value, vars).expect("builtin fields are well formed")
    }

    /// Domain used for the builtin's reference experiments and checks.
    pub fn reference_domain(&self) -> BoxDomain {
        let iv = match self {
            Builtin::LineOfSaddles => vec![(0.0, 1.0); 3],
            Builtin::DoubleWell => vec![(-1.0, 1.0), (-2.0, 2.0)],
            Builtin::QuadraticBowl { dim } => vec![(-1.0, 1.0); *dim],
        };
        BoxDomain::new(iv).expect("builtin domains are valid")
    }

    /// Analytic critical sets.
    pub fn critical_sets(&self) -> Vec<CriticalSet> {
        match self {
            Builtin::LineOfSaddles => {
                vec![CriticalSet::line([0.5, 0.0, 1.0], [0.0, 1.0, -1.0])]
            }
            Builtin::DoubleWell => vec![
                CriticalSet::point([0.0, 0.0]),
                CriticalSet::point([0.0, 1.0]),
                CriticalSet::point([0.0, -1.0]),
            ],
            Builtin::QuadraticBowl { dim } => vec![CriticalSet::point(Vector::zeros(*dim))],
        }
    }

    /// Concrete critical points, with representatives along critical lines.
    pub fn critical_points(&self) -> Vec<Vector> {
        match self {
            Builtin::LineOfSaddles => [0.0, 0.25, 0.5, 1.0, -3.0, 7.5]
                .iter()
                .map(|&w| Vector::from([0.5, w, 1.0 - w]))
                .collect(),
            _ => self
                .critical_sets()
                .into_iter()
                .map(|s| match s {
                    CriticalSet::Point { point } | CriticalSet::Line { point, .. } => point,
                })
                .collect(),
        }
    }
}

impl FromStr for Builtin {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Builtin::from_name(s, None).ok_or_else(|| {
            Error::config(
                "field",
                format!("unknown builtin `{s}`; expected one of {}", Builtin::NAMES.join(", ")),
            )
        })
    }
}

/// Finite-difference oracle settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdCheckOptions {
    pub h_grad: f64,
    pub h_hess: f64,
    pub tol_grad: f64,
    pub tol_hess: f64,
}

impl Default for FdCheckOptions {
    fn default() -> Self {
        FdCheckOptions {
            h_grad: 1e-5,
            h_hess: 1e-4,
            tol_grad: 1e-6,
            tol_hess: 1e-4,
        }
    }
}

impl FdCheckOptions {
    /// One step size and one tolerance for both derivative orders.
    pub fn uniform(h: f64, tol: f64) -> Self {
        FdCheckOptions {
            h_grad: h,
            h_hess: h,
            tol_grad: tol,
            tol_hess: tol,
        }
    }
}

/// Outcome of comparing symbolic derivatives with central differences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub points_checked: usize,
    /// Max over points and components of `|sym - fd| / max(1, |sym|)`.
    pub grad_max_rel_error: f64,
    pub hess_max_rel_error: f64,
    pub options: FdCheckOptions,
    /// Indices of points where evaluation was non-finite.
    pub non_finite_points: Vec<usize>,
    pub passed: bool,
}

fn rel_error(sym: f64, fd: f64) -> f64 {
    (sym - fd).abs() / sym.abs().max(1.0)
}

/// Compares symbolic gradient and Hessian against central differences of
/// `f` alone at every point.
pub fn fd_check(field: &ScalarField, points: &[Vector], opts: &FdCheckOptions) -> Result<CheckReport> {
    if !(opts.h_grad > 0.0 && opts.h_hess > 0.0) {
        return Err(Error::InvalidBound("finite-difference steps must be positive".into()));
    }
    let n = field.dim();
    let mut grad_err = 0.0_f64;
    let mut hess_err = 0.0_f64;
    let mut non_finite = Vec::new();
    let mut checked = 0;

    for (idx, p) in points.iter().enumerate() {
        let outcome = (|| -> Result<(f64, f64)> {
            let f = |x: &[f64]| field.value(x);
            let g = field.grad(p)?;
            let hs = field.hessian(p)?;
            let mut ge = 0.0_f64;
            let mut he = 0.0_f64;
            let h = opts.h_grad;
            for i in 0..n {
                let mut a = p.clone();
                let mut b = p.clone();
                a[i] += h;
                b[i] -= h;
                let fd = (f(&a)? - f(&b)?) / (2.0 * h);
                ge = ge.max(rel_error(g[i], fd));
            }
            let h = opts.h_hess;
            let f0 = f(p)?;
            for i in 0..n {
                for j in i..n {
                    let fd = if i == j {
                        let mut a = p.clone();
                        let mut b = p.clone();
                        a[i] += h;
                        b[i] -= h;
                        (f(&a)? - 2.0 * f0 + f(&b)?) / (h * h)
                    } else {
                        let shifted = |si: f64, sj: f64| {
                            let mut q = p.clone();
                            q[i] += si * h;
                            q[j] += sj * h;
                            f(&q)
                        };
                        (shifted(1.0, 1.0)? - shifted(1.0, -1.0)? - shifted(-1.0, 1.0)? + shifted(-1.0, -1.0)?)
                            / (4.0 * h * h)
                    };
                    he = he.max(rel_error(hs.get(i, j), fd));
                }
            }
            Ok((ge, he))
        })();
        match outcome {
            Ok((ge, he)) => {
                checked += 1;
                grad_err = grad_err.max(ge);
                hess_err = hess_err.max(he);
            }
            Err(Error::NonFiniteValue) => non_finite.push(idx),
            Err(e) => return Err(e),
        }
    }
    Ok(CheckReport {
        points_checked: checked,
        grad_max_rel_error: grad_err,
        hess_max_rel_error: hess_err,
        options: *opts,
        non_finite_points: non_finite,
        passed: checked > 0 && grad_err <= opts.tol_grad && hess_err <= opts.tol_hess,
    })
}
