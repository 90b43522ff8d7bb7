//! Monte-Carlo experiments: seeded tracker runs over a budget sweep,
//! aggregated into RMS and worst-case tracking-error curves with the
//! matching theoretical envelope.

mod exec;
mod output;

pub use exec::Execution;
pub use output::{series_file_name, write_series_csv};

use crate::error::{Error, Result};
use crate::losses::{LossConstants, QuadraticLoss};
use crate::objective::StreamingObjective;
use crate::streamgen::RandomWalkConfig;
use crate::theory::{te_envelope, BoundEnvelope, TheoryParams};
use crate::tracker::{distance, TrackerConfig};
use crate::weights::WeightScheme;

pub const DEFAULT_WINDOW_FRACTION: f64 = 0.2;

/// Absolute round-off allowance when comparing a run against its envelope.
/// The envelope is exactly zero when `alpha = 0`, while the computed TE
/// carries round-off from centers of magnitude up to `C`.
pub const BOUND_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub scheme: WeightScheme,
    pub constants: LossConstants,
    /// Shared diagonal curvature of every sample loss.
    pub curvature: Vec<f64>,
    pub eta: f64,
    pub w0: Vec<f64>,
    /// Walk parameters; `walk.seed` is the base seed, run `r` uses `seed + r`.
    pub walk: RandomWalkConfig,
    pub horizon: usize,
    pub num_runs: usize,
    pub budgets: Vec<u32>,
    pub record_every: usize,
    pub window_fraction: f64,
    /// Multiplier applied to every envelope before checking; 1 in normal use.
    pub envelope_scale: f64,
}

impl ExperimentConfig {
    /// Scalar experiment with `f_t(w) = mu/2 (w - c_t)^2` and `C = C_max`.
    pub fn scalar(
        scheme: WeightScheme,
        mu: f64,
        eta: f64,
        budgets: Vec<u32>,
        walk: RandomWalkConfig,
        horizon: usize,
        num_runs: usize,
    ) -> Result<Self> {
        let constants = LossConstants::new(mu, mu, walk.minimizer_bound())?;
        let dim = walk.dim();
        let cfg = ExperimentConfig {
            scheme,
            constants,
            curvature: vec![mu; dim],
            eta,
            w0: vec![0.0; dim],
            walk,
            horizon,
            num_runs,
            budgets,
            record_every: 1,
            window_fraction: DEFAULT_WINDOW_FRACTION,
            envelope_scale: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn gamma(&self) -> Option<f64> {
        self.scheme.gamma()
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.scheme, WeightScheme::Custom(_)) {
            return Err(Error::Unsupported(
                "experiments need uniform or discounted weights (custom weights have no envelope)"
                    .to_string(),
            ));
        }
        self.walk.validate()?;
        let dim = self.walk.dim();
        if self.num_runs == 0 {
            return Err(Error::param("num_runs", "must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::param("horizon", "must be at least 1"));
        }
        if self.record_every == 0 {
            return Err(Error::param("record_every", "must be at least 1"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::param("window_fraction", "must lie in (0, 1]"));
        }
        if !(self.envelope_scale > 0.0 && self.envelope_scale.is_finite()) {
            return Err(Error::param("envelope_scale", "must be positive"));
        }
        if self.budgets.is_empty() {
            return Err(Error::param("E", "at least one gradient budget is required"));
        }
        if self.w0.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: self.w0.len(),
            });
        }
        if self.constants.minimizer_bound < self.walk.minimizer_bound() {
            return Err(Error::param(
                "C",
                format!(
                    "minimizer bound {} is below the walk's reach C_max sqrt(d) = {}",
                    self.constants.minimizer_bound,
                    self.walk.minimizer_bound()
                ),
            ));
        }
        QuadraticLoss::new(self.walk.c0.clone(), self.curvature.clone(), &self.constants)?;
        for &e in &self.budgets {
            TrackerConfig::new(self.eta, e, self.w0.clone(), &self.constants)?;
            TheoryParams::new(self.constants, self.eta, e, self.gamma())?;
        }
        Ok(())
    }

    fn objective(&self) -> Result<StreamingObjective> {
        StreamingObjective::new(self.scheme.clone()).without_history()
    }

    pub fn theory(&self, budget: u32) -> Result<TheoryParams> {
        TheoryParams::new(self.constants, self.eta, budget, self.gamma())
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.walk.seed.wrapping_add(run as u64)
    }
}

/// Full per-step record of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub init_gap: f64,
    pub iterates: Vec<Vec<f64>>,
    pub minimizers: Vec<Vec<f64>>,
    pub te: Vec<f64>,
    pub bound: BoundEnvelope,
}

/// Tracking errors `TE(1..=horizon)` of one run and its `||w_0 - argmin F_1||`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunErrors {
    pub init_gap: f64,
    pub te: Vec<f64>,
}

/// Drives one seeded run, handing `(t, w_t, argmin F_t)` to `record`.
fn drive(
    cfg: &ExperimentConfig,
    budget: u32,
    run: usize,
    mut record: impl FnMut(usize, &[f64], &[f64]),
) -> Result<f64> {
    let tracker = TrackerConfig::new(cfg.eta, budget, cfg.w0.clone(), &cfg.constants)?;
    let mut walk = cfg.walk.with_seed(cfg.run_seed(run)).walk()?;
    let mut obj = cfg.objective()?;
    let mut state = tracker.start();
    let mut target = vec![0.0; cfg.walk.dim()];
    let mut init_gap = 0.0;
    for t in 1..=cfg.horizon {
        let loss = QuadraticLoss::new(
            walk.next_center().to_vec(),
            cfg.curvature.clone(),
            &cfg.constants,
        )?;
        obj.absorb(loss)?;
        obj.minimizer_into(&mut target)?;
        if t == 1 {
            init_gap = distance(&state.w, &target);
        }
        state.step(&tracker, &obj)?;
        record(t, &state.w, &target);
    }
    Ok(init_gap)
}

pub fn run_errors(cfg: &ExperimentConfig, budget: u32, run: usize) -> Result<RunErrors> {
    let mut te = Vec::with_capacity(cfg.horizon);
    let init_gap = drive(cfg, budget, run, |_, w, target| te.push(distance(w, target)))?;
    Ok(RunErrors { init_gap, te })
}

pub fn trace_run(cfg: &ExperimentConfig, budget: u32, run: usize) -> Result<RunTrace> {
    cfg.validate()?;
    let mut iterates = Vec::with_capacity(cfg.horizon);
    let mut minimizers = Vec::with_capacity(cfg.horizon);
    let mut te = Vec::with_capacity(cfg.horizon);
    let init_gap = drive(cfg, budget, run, |_, w, target| {
        iterates.push(w.to_vec());
        minimizers.push(target.to_vec());
        te.push(distance(w, target));
    })?;
    let bound = te_envelope(&cfg.theory(budget)?, init_gap, cfg.horizon)?.scaled(cfg.envelope_scale);
    Ok(RunTrace {
        seed: cfg.run_seed(run),
        init_gap,
        iterates,
        minimizers,
        te,
        bound,
    })
}

/// Finite-horizon `limsup` proxy: the largest TE over the final
/// `window_fraction` of the series.
pub fn empirical_ate(series: &[f64], window_fraction: f64) -> Result<f64> {
    if series.is_empty() {
        return Err(Error::param("series", "tracking-error series is empty"));
    }
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::param("window_fraction", "must lie in (0, 1]"));
    }
    let len = ((series.len() as f64 * window_fraction).ceil() as usize).clamp(1, series.len());
    Ok(series[series.len() - len..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Envelope violations found in one or more runs.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub runs_checked: usize,
    pub points_checked: usize,
    pub violations: usize,
    /// Largest `TE(t) - bound(t)` over certified points (negative when all hold).
    /// Counted as a violation only above [`BOUND_SLACK`].
    pub worst_excess: f64,
    pub worst_run: Option<usize>,
    pub worst_t: Option<usize>,
}

impl BoundReport {
    fn empty() -> Self {
        BoundReport {
            runs_checked: 0,
            points_checked: 0,
            violations: 0,
            worst_excess: f64::NEG_INFINITY,
            worst_run: None,
            worst_t: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    fn merge(mut self, other: &BoundReport) -> Self {
        self.runs_checked += other.runs_checked;
        self.points_checked += other.points_checked;
        self.violations += other.violations;
        if other.worst_excess > self.worst_excess {
            self.worst_excess = other.worst_excess;
            self.worst_run = other.worst_run;
            self.worst_t = other.worst_t;
        }
        self
    }
}

/// Checks one run's `TE(t) <= bound(t)` for every certified `t`.
pub fn bound_check(te: &[f64], envelope: &BoundEnvelope) -> Result<BoundReport> {
    if te.len() != envelope.horizon() {
        return Err(Error::HorizonMismatch {
            series: te.len(),
            envelope: envelope.horizon(),
        });
    }
    let mut report = BoundReport::empty();
    report.runs_checked = 1;
    for (idx, (&e, &b)) in te.iter().zip(&envelope.values).enumerate() {
        let t = idx + 1;
        if !envelope.is_valid_at(t) {
            continue;
        }
        report.points_checked += 1;
        let excess = e - b;
        if excess > BOUND_SLACK {
            report.violations += 1;
        }
        if excess > report.worst_excess {
            report.worst_excess = excess;
            report.worst_t = Some(t);
        }
    }
    Ok(report)
}

/// Merges per-run reports, tagging the worst run by index.
pub fn merge_reports(reports: impl IntoIterator<Item = BoundReport>) -> BoundReport {
    reports
        .into_iter()
        .enumerate()
        .fold(BoundReport::empty(), |acc, (run, mut r)| {
            r.worst_run = Some(run);
            acc.merge(&r)
        })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AggregateTrace {
    pub t: usize,
    pub rms_te: f64,
    pub max_te: f64,
    pub bound: f64,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesResult {
    pub budget: u32,
    pub alpha: f64,
    pub valid_from: u64,
    pub rows: Vec<AggregateTrace>,
    /// Largest final-window TE over all runs.
    pub empirical_ate: f64,
    pub ate_floor: Option<f64>,
    pub max_init_gap: f64,
    pub report: BoundReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentResult {
    pub series: Vec<SeriesResult>,
}

impl ExperimentResult {
    pub fn for_budget(&self, budget: u32) -> Option<&SeriesResult> {
        self.series.iter().find(|s| s.budget == budget)
    }
}

struct RunOutcome {
    errors: RunErrors,
    report: BoundReport,
    ate: f64,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, Execution::default())
}

pub fn run_experiment_with(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult> {
    cfg.validate()?;
    let series = cfg
        .budgets
        .iter()
        .map(|&budget| run_series(cfg, budget, exec))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentResult { series })
}

fn run_series(cfg: &ExperimentConfig, budget: u32, exec: Execution) -> Result<SeriesResult> {
    let params = cfg.theory(budget)?;
    let outcomes = exec::map_runs(cfg.num_runs, exec, |run| {
        let errors = run_errors(cfg, budget, run)?;
        let envelope = te_envelope(&params, errors.init_gap, cfg.horizon)?.scaled(cfg.envelope_scale);
        let report = bound_check(&errors.te, &envelope)?;
        let ate = empirical_ate(&errors.te, cfg.window_fraction)?;
        Ok(RunOutcome {
            errors,
            report,
            ate,
        })
    })?;

    let max_init_gap = outcomes
        .iter()
        .map(|o| o.errors.init_gap)
        .fold(0.0, f64::max);
    let worst = te_envelope(&params, max_init_gap, cfg.horizon)?.scaled(cfg.envelope_scale);
    let runs = outcomes.len() as f64;
    let rows = (1..=cfg.horizon)
        .step_by(cfg.record_every)
        .map(|t| {
            let (sum_sq, max) = outcomes.iter().fold((0.0, 0.0f64), |(s, m), o| {
                let e = o.errors.te[t - 1];
                (s + e * e, m.max(e))
            });
            AggregateTrace {
                t,
                rms_te: (sum_sq / runs).sqrt(),
                max_te: max,
                bound: worst.at(t),
                valid: worst.is_valid_at(t),
            }
        })
        .collect();
    let empirical_ate = outcomes.iter().map(|o| o.ate).fold(0.0, f64::max);
    let report = merge_reports(outcomes.into_iter().map(|o| o.report));
    Ok(SeriesResult {
        budget,
        alpha: params.alpha(),
        valid_from: worst.valid_from,
        rows,
        empirical_ate,
        ate_floor: crate::theory::ate_floor(&params).ok(),
        max_init_gap,
        report,
    })
}

/// Least-squares slope of `ln rms_te` against `ln t` over `t_min..=t_max`.
pub fn loglog_slope(rows: &[AggregateTrace], t_min: usize, t_max: usize) -> Option<f64> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.t >= t_min && r.t <= t_max && r.rms_te > 0.0)
        .map(|r| ((r.t as f64).ln(), r.rms_te.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
