//! Seeded Monte Carlo estimates of basins of attraction.
//!
//! Every trial draws its initial point from a counter-based stream keyed by
//! `(seed, trial index)`, so a report depends only on the configuration and
//! never on how trials are scheduled across threads.

use std::io::{self, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    classify, estimate_hessian_sup, plan_stepsize, refine_critical, BoxDomain, ClassifyTolerances, CriticalClass,
    CriticalPointRecord, RefineOptions, StepSizePlan,
};
use crate::dynamics::{GdMap, IterateOptions, Termination, Tolerances, DEFAULT_BUDGET};
use crate::error::{Error, Result};
use crate::expr::VariableOrder;
use crate::field::{Builtin, CriticalSet, ScalarField};
use crate::linalg::Vector;
use crate::rng::Stream;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "GDSADDLE_THREADS";

/// Uniform point in the open box, a pure function of `(seed, trial)`.
pub fn sample_uniform(domain: &BoxDomain, trial: u64, seed: u64) -> Vector {
    crate::analysis::sample_in(domain, &mut Stream::new(seed, trial))
}

/// Index of the nearest known critical set within `radius` (inclusive);
/// ties go to the lower index.
pub fn match_limit(limit: &[f64], known: &[CriticalSet], radius: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, set) in known.iter().enumerate() {
        if set.dim() != limit.len() {
            continue;
        }
        let d = set.distance(limit);
        if d <= radius && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((i, d));
        }
    }
    best.map(|(i, _)| i)
}

/// Which cost function to use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFieldSpec", into = "RawFieldSpec")]
pub enum FieldSpec {
    Builtin(Builtin),
    Expression { text: String, variables: VariableOrder },
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFieldSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    builtin: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expression: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    variables: Option<Vec<String>>,
}

impl TryFrom<RawFieldSpec> for FieldSpec {
    type Error = Error;
    fn try_from(raw: RawFieldSpec) -> Result<Self> {
        match (raw.builtin, raw.expression) {
            (Some(name), None) => {
                if raw.variables.is_some() {
                    return Err(Error::config("field.variables", "not allowed with `builtin`"));
                }
                if raw.dimension.is_some() && name != "quadratic-bowl" {
                    return Err(Error::config(
                        "field.dimension",
                        "only quadratic-bowl takes a dimension",
                    ));
                }
                Builtin::from_name(&name, raw.dimension)
                    .map(FieldSpec::Builtin)
                    .ok_or_else(|| {
                        Error::config(
                            "field.builtin",
                            format!(
                                "unknown builtin `{name}`; expected one of {}",
                                Builtin::NAMES.join(", ")
                            ),
                        )
                    })
            }
            (None, Some(text)) => {
                if raw.dimension.is_some() {
                    return Err(Error::config("field.dimension", "not allowed with `expression`"));
                }
                let vars = raw
                    .variables
                    .ok_or_else(|| Error::config("field.variables", "required with `expression`"))?;
                let variables =
                    VariableOrder::new(&vars).map_err(|e| Error::config("field.variables", e.to_string()))?;
                Ok(FieldSpec::Expression { text, variables })
            }
            _ => Err(Error::config("field", "give exactly one of `builtin` or `expression`")),
        }
    }
}

impl From<FieldSpec> for RawFieldSpec {
    fn from(spec: FieldSpec) -> Self {
        match spec {
            FieldSpec::Builtin(b) => RawFieldSpec {
                builtin: Some(b.name().to_string()),
                dimension: match b {
                    Builtin::QuadraticBowl { dim } => Some(dim),
                    _ => None,
                },
                expression: None,
                variables: None,
            },
            FieldSpec::Expression { text, variables } => RawFieldSpec {
                builtin: None,
                dimension: None,
                expression: Some(text),
                variables: Some(variables.into()),
            },
        }
    }
}

impl FieldSpec {
    pub fn build(&self) -> Result<ScalarField> {
        match self {
            FieldSpec::Builtin(b) => Ok(b.field()),
            FieldSpec::Expression { text, variables } => ScalarField::build(text, variables.clone()),
        }
    }

    pub fn builtin(&self) -> Option<Builtin> {
        match self {
            FieldSpec::Builtin(b) => Some(*b),
            FieldSpec::Expression { .. } => None,
        }
    }
}

/// Step size: a number, or `"auto"` (plan from the estimated Hessian sup
/// over the domain with the configured margin).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Fixed(f64),
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl AlphaSpec {
    pub const AUTO: AlphaSpec = AlphaSpec::Auto(AutoTag::Auto);
}

fn default_margin() -> f64 {
    0.9
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_radius() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub field: FieldSpec,
    pub domain: BoxDomain,
    pub alpha: AlphaSpec,
    /// Used only when `alpha` is `"auto"`.
    #[serde(default = "default_margin")]
    pub margin: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub classify: ClassifyTolerances,
    /// Defaults to the builtin's analytic critical sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_points: Option<Vec<CriticalSet>>,
    #[serde(default = "default_radius")]
    pub match_radius: f64,
    /// Stop trajectories that leave the domain. Leave off when the domain
    /// is known to be forward invariant or when escapes should be allowed
    /// to run to divergence.
    #[serde(default)]
    pub stop_on_domain_exit: bool,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the essentials.
    pub fn new(field: FieldSpec, domain: BoxDomain, alpha: AlphaSpec, trials: usize, seed: u64) -> Self {
        ExperimentConfig {
            field,
            domain,
            alpha,
            margin: default_margin(),
            trials,
            seed,
            budget: DEFAULT_BUDGET,
            tolerances: Tolerances::default(),
            classify: ClassifyTolerances::default(),
            known_points: None,
            match_radius: default_radius(),
            stop_on_domain_exit: false,
        }
    }
}

/// Grid nodes per axis when `alpha` is `"auto"`, capped so the whole grid
/// stays under `AUTO_GRID_TOTAL` points.
const AUTO_GRID_PER_AXIS: usize = 41;
const AUTO_GRID_TOTAL: usize = 1_000_000;
const AUTO_REFINE_ROUNDS: usize = 3;

/// A validated configuration with the field built and the step size fixed.
pub struct ResolvedExperiment {
    pub field: ScalarField,
    pub alpha: f64,
    pub plan: Option<StepSizePlan>,
    pub known: Vec<CriticalSet>,
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedExperiment> {
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.budget == 0 {
            return Err(Error::config("budget", "must be at least 1"));
        }
        if !(self.match_radius > 0.0) {
            return Err(Error::config("match_radius", "must be positive"));
        }
        self.tolerances.validate()?;
        let field = self.field.build().map_err(|e| Error::config("field", e.to_string()))?;
        if self.domain.dim() != field.dim() {
            return Err(Error::config(
                "domain",
                format!(
                    "has {} intervals but the field has {} variables",
                    self.domain.dim(),
                    field.dim()
                ),
            ));
        }
        let known = match &self.known_points {
            Some(k) => k.clone(),
            None => self.field.builtin().map(|b| b.critical_sets()).unwrap_or_default(),
        };
        if let Some(i) = known.iter().position(|k| k.dim() != field.dim()) {
            return Err(Error::config(format!("known_points[{i}]"), "wrong dimension"));
        }
        let (alpha, plan) = match self.alpha {
            AlphaSpec::Fixed(a) => {
                if !(a > 0.0 && a.is_finite()) {
                    return Err(Error::config("alpha", "must be positive and finite, or \"auto\""));
                }
                (a, None)
            }
            AlphaSpec::Auto(_) => {
                let n = field.dim();
                let per_axis =
                    ((AUTO_GRID_TOTAL as f64).powf(1.0 / n as f64).floor() as usize).clamp(2, AUTO_GRID_PER_AXIS);
                let est = estimate_hessian_sup(&field, &self.domain, &vec![per_axis; n], AUTO_REFINE_ROUNDS)?;
                if !(est.value > 0.0) {
                    return Err(Error::config(
                        "alpha",
                        "Hessian vanishes on the domain; give alpha explicitly",
                    ));
                }
                let plan =
                    plan_stepsize(est.value, self.margin, None).map_err(|e| Error::config("margin", e.to_string()))?;
                (plan.alpha_sufficient, Some(plan))
            }
        };
        Ok(ResolvedExperiment {
            field,
            alpha,
            plan,
            known,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub initial: Vector,
    pub termination: Termination,
    pub iterations: usize,
    pub final_grad_norm: f64,
    /// Present iff the trajectory converged.
    pub limit: Option<CriticalPointRecord>,
    pub matched: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictCounts {
    pub converged: usize,
    pub diverged: usize,
    pub exited_domain: usize,
    pub cycling: usize,
    pub budget_exhausted: usize,
}

impl VerdictCounts {
    pub fn total(&self) -> usize {
        self.converged + self.diverged + self.exited_domain + self.cycling + self.budget_exhausted
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub local_min: usize,
    pub strict_saddle: usize,
    pub degenerate: usize,
    pub not_critical: usize,
    /// Trials without a limit (anything but converged).
    pub no_limit: usize,
}

impl ClassCounts {
    pub fn total(&self) -> usize {
        self.local_min + self.strict_saddle + self.degenerate + self.not_critical + self.no_limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinEntry {
    pub index: usize,
    pub set: CriticalSet,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fractions {
    /// Trials whose classified limit is a strict saddle, over all trials.
    pub saddle_hit: f64,
    pub converged: f64,
    pub diverged: f64,
    pub budget_exhausted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub alpha: f64,
    pub step_size_plan: Option<StepSizePlan>,
    pub trials: usize,
    pub verdicts: VerdictCounts,
    pub classes: ClassCounts,
    pub fractions: Fractions,
    pub basins: Vec<BasinEntry>,
    /// Converged trials that matched no known critical set.
    pub unmatched: usize,
    pub stamp: Stamp,
    pub wall_clock_seconds: f64,
    #[serde(skip)]
    pub outcomes: Vec<TrialOutcome>,
}

impl ExperimentReport {
    /// Report JSON with the wall-clock field zeroed; identical configs give
    /// identical output.
    pub fn deterministic_json(&self) -> String {
        let mut r = self.clone();
        r.wall_clock_seconds = 0.0;
        serde_json::to_string_pretty(&r).expect("report serializes")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-trial CSV: `trial,x0_1..x0_N,verdict,class,match,final_gradnorm`.
    pub fn write_trials_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let n = self.config.domain.dim();
        let mut header = String::from("trial");
        for i in 1..=n {
            header.push_str(&format!(",x0_{i}"));
        }
        header.push_str(",verdict,class,match,final_gradnorm");
        writeln!(w, "{header}")?;
        for o in &self.outcomes {
            write!(w, "{}", o.trial)?;
            for v in o.initial.iter() {
                write!(w, ",{v:e}")?;
            }
            let class = o.limit.as_ref().map_or("", |l| l.class.as_str());
            let matched = o.matched.map(|m| m.to_string()).unwrap_or_default();
            writeln!(w, ",{},{class},{matched},{:e}", o.termination.kind(), o.final_grad_norm)?;
        }
        Ok(())
    }
}

/// How trials are scheduled. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    /// `None` uses `GDSADDLE_THREADS` if set, else rayon's default.
    Parallel(Option<usize>),
}

impl Execution {
    pub fn from_env() -> Self {
        let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok());
        match threads {
            Some(1) => Execution::Serial,
            t => Execution::Parallel(t),
        }
    }
}

fn run_trial(cfg: &ExperimentConfig, res: &ResolvedExperiment, map: &GdMap<'_>, trial: usize) -> Result<TrialOutcome> {
    let initial = sample_uniform(&cfg.domain, trial as u64, cfg.seed);
    let opts = IterateOptions {
        budget: cfg.budget,
        tolerances: cfg.tolerances,
        record_stride: None,
        record: false,
    };
    let domain = cfg.stop_on_domain_exit.then_some(&cfg.domain);
    let traj = map.iterate(&initial, domain, &opts)?;
    let mut outcome = TrialOutcome {
        trial,
        initial,
        termination: traj.termination,
        iterations: traj.iterations,
        final_grad_norm: traj.final_grad_norm,
        limit: None,
        matched: None,
    };
    if let Termination::Converged { limit } = &outcome.termination {
        let refine = RefineOptions {
            crit: cfg.classify.crit,
            ..RefineOptions::default()
        };
        let polished = refine_critical(&res.field, limit, &refine).unwrap_or_else(|| limit.clone());
        match classify(&res.field, &polished, &cfg.classify) {
            Ok(rec) => {
                outcome.matched = match_limit(&rec.location, &res.known, cfg.match_radius);
                outcome.limit = Some(rec);
            }
            Err(_) => outcome.termination = Termination::Diverged { non_finite: true },
        }
    }
    Ok(outcome)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment_with(cfg, Execution::from_env())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    let started = Instant::now();
    let res = cfg.resolve()?;
    let map = GdMap::new(&res.field, res.alpha)?;

    let outcomes: Vec<TrialOutcome> = match exec {
        Execution::Serial => (0..cfg.trials)
            .map(|i| run_trial(cfg, &res, &map, i))
            .collect::<Result<_>>()?,
        Execution::Parallel(threads) => {
            let mut builder = rayon::ThreadPoolBuilder::new();
            if let Some(t) = threads {
                builder = builder.num_threads(t);
            }
            let pool = builder.build().map_err(|e| Error::config("threads", e.to_string()))?;
            pool.install(|| {
                (0..cfg.trials)
                    .into_par_iter()
                    .map(|i| run_trial(cfg, &res, &map, i))
                    .collect::<Result<Vec<_>>>()
            })?
        }
    };

    let mut verdicts = VerdictCounts::default();
    let mut classes = ClassCounts::default();
    let mut basin_counts = vec![0usize; res.known.len()];
    let mut unmatched = 0;
    for o in &outcomes {
        match o.termination {
            Termination::Converged { .. } => verdicts.converged += 1,
            Termination::Diverged { .. } => verdicts.diverged += 1,
            Termination::ExitedDomain { .. } => verdicts.exited_domain += 1,
            Termination::Cycling { .. } => verdicts.cycling += 1,
            Termination::BudgetExhausted { .. } => verdicts.budget_exhausted += 1,
        }
        match o.limit.as_ref().map(|l| l.class) {
            Some(CriticalClass::LocalMin) => classes.local_min += 1,
            Some(CriticalClass::StrictSaddle) => classes.strict_saddle += 1,
            Some(CriticalClass::Degenerate) => classes.degenerate += 1,
            Some(CriticalClass::NotCritical) => classes.not_critical += 1,
            None => classes.no_limit += 1,
        }
        if o.limit.is_some() {
            match o.matched {
                Some(i) => basin_counts[i] += 1,
                None => unmatched += 1,
            }
        }
    }
    let trials = cfg.trials as f64;
    let basins = res
        .known
        .iter()
        .zip(basin_counts)
        .enumerate()
        .map(|(index, (set, count))| BasinEntry {
            index,
            set: set.clone(),
            count,
            fraction: count as f64 / trials,
        })
        .collect();

    Ok(ExperimentReport {
        schema_version: crate::shell::SCHEMA_VERSION,
        config: cfg.clone(),
        alpha: res.alpha,
        step_size_plan: res.plan,
        trials: cfg.trials,
        fractions: Fractions {
            saddle_hit: classes.strict_saddle as f64 / trials,
            converged: verdicts.converged as f64 / trials,
            diverged: verdicts.diverged as f64 / trials,
            budget_exhausted: verdicts.budget_exhausted as f64 / trials,
        },
        verdicts,
        classes,
        basins,
        unmatched,
        stamp: Stamp {
            seed: cfg.seed,
            version: crate::VERSION.to_string(),
        },
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        outcomes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic_and_inside() {
        let d: BoxDomain = "(-1,1)x(-2,2)".parse().unwrap();
        assert_eq!(sample_uniform(&d, 17, 5), sample_uniform(&d, 17, 5));
        assert_ne!(sample_uniform(&d, 17, 5), sample_uniform(&d, 18, 5));
        assert_ne!(sample_uniform(&d, 17, 5), sample_uniform(&d, 17, 6));
        for i in 0..10_000 {
            assert!(d.contains_open(&sample_uniform(&d, i, 5)));
        }
    }

    #[test]
    fn sampling_moments() {
        let d = BoxDomain::cube(1, 0.0, 1.0).unwrap();
        let n = 100_000;
        let mean: f64 = (0..n).map(|i| sample_uniform(&d, i, 42)[0]).sum::<f64>() / n as f64;
        let sigma = 1.0 / (12.0 * n as f64).sqrt();
        assert!((mean - 0.5).abs() <= 3.0 * sigma, "{mean}");
    }

    #[test]
    fn matching_rules() {
        let wells = [CriticalSet::point([0.0, 1.0]), CriticalSet::point([0.0, -1.0])];
        assert_eq!(match_limit(&[1e-9, 1.0 - 1e-9], &wells, 1e-3), Some(0));
        assert_eq!(match_limit(&[0.0, 0.0], &wells, 1e-3), None);
        let line = [CriticalSet::line([0.5, 0.0, 1.0], [0.0, 1.0, -1.0])];
        assert_eq!(match_limit(&[0.5, 0.3, 0.7], &line, 1e-6), Some(0));
        // equidistant at exactly the radius: lower index wins
        let pair = [CriticalSet::point([-0.5]), CriticalSet::point([0.5])];
        assert_eq!(match_limit(&[0.0], &pair, 0.5), Some(0));
    }

    #[test]
    fn bowl_converges_everywhere() {
        let cfg = ExperimentConfig::new(
            FieldSpec::Builtin(Builtin::QuadraticBowl { dim: 2 }),
            "(-3,3)x(-1,2)".parse().unwrap(),
            AlphaSpec::Fixed(0.5),
            100,
            9,
        );
        let r = run_experiment_with(&cfg, Execution::Serial).unwrap();
        assert_eq!(r.verdicts.converged, 100);
        assert_eq!(r.classes.local_min, 100);
        assert_eq!(r.basins[0].count, 100);
        assert_eq!(r.fractions.saddle_hit, 0.0);
    }

    #[test]
    fn auto_alpha_uses_hessian_sup() {
        let mut cfg = ExperimentConfig::new(
            FieldSpec::Builtin(Builtin::DoubleWell),
            Builtin::DoubleWell.reference_domain(),
            AlphaSpec::AUTO,
            10,
            1,
        );
        cfg.margin = 11.0 / 12.0;
        let r = run_experiment_with(&cfg, Execution::Serial).unwrap();
        assert!((r.alpha - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(r.step_size_plan.unwrap().l_estimate, 11.0);
    }

    #[test]
    fn config_json_round_trip_and_errors() {
        let text = r#"{
            "field": {"builtin": "double-well"},
            "domain": "(-1,1)x(-2,2)",
            "alpha": "auto",
            "trials": 10,
            "seed": 3
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.alpha, AlphaSpec::AUTO);
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        let expr = r#"{"field": {"expression": "x^2", "variables": ["x"]}, "domain": "(0,1)", "alpha": 0.1, "trials": 1, "seed": 0}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(expr).is_ok());
        let unknown = text.replace("\"seed\": 3", "\"seed\": 3, \"bogus\": 1");
        assert!(serde_json::from_str::<ExperimentConfig>(&unknown).is_err());
        let both = r#"{"field": {"builtin": "double-well", "expression": "x"}, "domain": "(0,1)", "alpha": 0.1, "trials": 1, "seed": 0}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(both).is_err());
        let bad_alpha = text.replace("\"auto\"", "\"fast\"");
        assert!(serde_json::from_str::<ExperimentConfig>(&bad_alpha).is_err());
    }

    #[test]
    fn resolve_validates() {
        let base = ExperimentConfig::new(
            FieldSpec::Builtin(Builtin::DoubleWell),
            Builtin::DoubleWell.reference_domain(),
            AlphaSpec::Fixed(0.1),
            10,
            1,
        );
        let mut c = base.clone();
        c.trials = 0;
        assert!(matches!(c.resolve(), Err(Error::Config { field, .. }) if field == "trials"));
        let mut c = base.clone();
        c.domain = BoxDomain::cube(3, 0.0, 1.0).unwrap();
        assert!(matches!(c.resolve(), Err(Error::Config { field, .. }) if field == "domain"));
        let mut c = base.clone();
        c.alpha = AlphaSpec::Fixed(-1.0);
        assert!(matches!(c.resolve(), Err(Error::Config { field, .. }) if field == "alpha"));
        let mut c = base;
        c.known_points = Some(vec![CriticalSet::point([0.0])]);
        assert!(c.resolve().is_err());
    }

    #[test]
    fn trials_csv_shape() {
        let cfg = ExperimentConfig::new(
            FieldSpec::Builtin(Builtin::DoubleWell),
            Builtin::DoubleWell.reference_domain(),
            AlphaSpec::Fixed(1.0 / 12.0),
            5,
            2,
        );
        let r = run_experiment_with(&cfg, Execution::Serial).unwrap();
        let mut buf = Vec::new();
        r.write_trials_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("trial,x0_1,x0_2,verdict,class,match,final_gradnorm"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 7);
        assert_eq!(row[3], "converged");
        assert_eq!(row[4], "local_min");
    }
}
