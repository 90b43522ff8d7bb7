use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use tvtrack::harness::{series_file_name, write_series_csv};
use tvtrack::theory::{certificate, min_budget, TheoryParams};
use tvtrack::{run_experiment_with, Execution, ExperimentConfig, ExperimentResult, SeriesResult};

use crate::config::{manifest, Settings};
use crate::error::CliError;
use crate::figures::{self, Figure, Panel};
use crate::plot::{self, Curve};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Human,
    Csv,
}

/// Options shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Common {
    pub config: Option<PathBuf>,
    pub overrides: Vec<String>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub format: Format,
}

impl Common {
    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::load(self.config.as_deref(), &self.overrides)?;
        if let Some(seed) = self.seed {
            s.set("walk.seed", &seed.to_string())?;
        }
        Ok(s)
    }

    pub fn execution(&self) -> Result<Execution, CliError> {
        match self.threads {
            None => Ok(Execution::default()),
            Some(0) => Err(CliError::config("--threads", "must be at least 1")),
            Some(n) => Ok(Execution::with_threads(n)),
        }
    }
}

fn execute(cfg: &ExperimentConfig, exec: Execution) -> Result<ExperimentResult, CliError> {
    run_experiment_with(cfg, exec).map_err(|e| match e {
        tvtrack::Error::InvalidParameter { .. } => CliError::from_core(e, "run"),
        other => CliError::Internal(other.to_string()),
    })
}

fn fmt_floor(floor: Option<f64>) -> String {
    floor.map_or_else(|| "vanishing".to_string(), |f| format!("{f:.6e}"))
}

const REPORT_HEADER: &str =
    "scheme,E,alpha,valid_from,runs,points,violations,worst_excess,empirical_ate,ate_floor";

fn report_line(cfg: &ExperimentConfig, s: &SeriesResult, format: Format) -> String {
    let r = &s.report;
    match format {
        Format::Csv => format!(
            "{},{},{:.16e},{},{},{},{},{:.16e},{:.16e},{}",
            cfg.scheme.label(),
            s.budget,
            s.alpha,
            s.valid_from,
            r.runs_checked,
            r.points_checked,
            r.violations,
            r.worst_excess,
            s.empirical_ate,
            s.ate_floor.map_or(String::new(), |f| format!("{f:.16e}")),
        ),
        Format::Human => {
            let mut line = format!(
                "{} E={}: alpha={:.6e} t0={} runs={} points={} violations={}",
                cfg.scheme.label(),
                s.budget,
                s.alpha,
                s.valid_from,
                r.runs_checked,
                r.points_checked,
                r.violations,
            );
            if r.violations > 0 {
                let _ = write!(
                    line,
                    " (worst excess {:.3e} in run {} at t={})",
                    r.worst_excess,
                    r.worst_run.unwrap_or(0),
                    r.worst_t.unwrap_or(0)
                );
            }
            let _ = write!(
                line,
                " empirical_ate={:.6e} ate_floor={}",
                s.empirical_ate,
                fmt_floor(s.ate_floor)
            );
            line
        }
    }
}

fn report(cfg: &ExperimentConfig, result: &ExperimentResult, format: Format) -> String {
    let mut out = String::new();
    if format == Format::Csv {
        let _ = writeln!(out, "{REPORT_HEADER}");
    }
    for s in &result.series {
        let _ = writeln!(out, "{}", report_line(cfg, s, format));
    }
    out
}

fn total_violations(results: &[&ExperimentResult]) -> usize {
    results
        .iter()
        .flat_map(|r| &r.series)
        .map(|s| s.report.violations)
        .sum()
}

fn violation_error(n: usize) -> CliError {
    CliError::Violations(format!("{n} bound violation(s) found"))
}

fn write_results(dir: &Path, cfg: &ExperimentConfig, result: &ExperimentResult) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for s in &result.series {
        let name = series_file_name(&cfg.scheme, s.budget);
        let mut buf = Vec::new();
        write_series_csv(&mut buf, s).map_err(|e| CliError::Internal(e.to_string()))?;
        fs::write(dir.join(&name), buf)?;
        names.push(name);
    }
    Ok(names)
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::config("--out", format!("cannot create {}: {e}", dir.display())))
}

/// `run`: one experiment from config, results written to `out`.
pub fn run(common: &Common, out: &Path, strict: bool, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = common.settings()?.experiment()?;
    let exec = common.execution()?;
    let result = execute(&cfg, exec)?;
    create_dir(out)?;
    let names = write_results(out, &cfg, &result)?;
    fs::write(out.join("manifest.txt"), manifest(&cfg, ""))?;
    let curves: Vec<Curve> = names
        .iter()
        .zip(&result.series)
        .map(|(n, s)| Curve { file: n.clone(), label: format!("E={}", s.budget) })
        .collect();
    let loglog = cfg.gamma().is_none();
    fs::write(out.join("plot.py"), plot::script(&cfg.scheme.label(), &curves, loglog, true))?;
    let text = report(&cfg, &result, common.format);
    fs::write(out.join("summary.txt"), &text)?;
    stdout.write_all(text.as_bytes())?;
    let n = total_violations(&[&result]);
    if strict && n > 0 {
        return Err(violation_error(n));
    }
    Ok(())
}

/// `check`: run the experiment and verify every per-run envelope; no files.
pub fn check(common: &Common, stdout: &mut dyn Write) -> Result<(), CliError> {
    let cfg = common.settings()?.experiment()?;
    let result = execute(&cfg, common.execution()?)?;
    stdout.write_all(report(&cfg, &result, common.format).as_bytes())?;
    let n = total_violations(&[&result]);
    if n > 0 {
        return Err(violation_error(n));
    }
    if common.format == Format::Human {
        writeln!(stdout, "ok: no bound violations")?;
    }
    Ok(())
}

/// Shorthand flags of `bounds`, each an alias for a config key.
#[derive(Clone, Debug, Default)]
pub struct BoundFlags {
    pub mu: Option<f64>,
    pub smoothness: Option<f64>,
    pub minimizer_bound: Option<f64>,
    pub eta: Option<f64>,
    pub budget: Option<String>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
}

impl BoundFlags {
    fn apply(&self, s: &mut Settings) -> Result<(), CliError> {
        let pairs = [
            ("loss.mu", self.mu.map(|x| x.to_string())),
            ("loss.L", self.smoothness.map(|x| x.to_string())),
            ("loss.C", self.minimizer_bound.map(|x| x.to_string())),
            ("tracker.eta", self.eta.map(|x| x.to_string())),
            ("tracker.E", self.budget.clone()),
            ("scheme.gamma", self.gamma.map(|x| x.to_string())),
            ("bounds.epsilon", self.epsilon.map(|x| x.to_string())),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, &v)?;
            }
        }
        if self.gamma.is_some() {
            s.set("scheme", "discounted")?;
        }
        Ok(())
    }
}

const BOUNDS_HEADER: &str = "E,alpha,drift_constant,A,t0,A_gamma,t0_gamma,ate_floor,min_budget";

/// `bounds`: theory constants only, no simulation.
pub fn bounds(common: &Common, flags: &BoundFlags, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut s = common.settings()?;
    flags.apply(&mut s)?;
    let scheme = s.scheme()?;
    let constants = s.constants()?;
    let eta: f64 = s
        .get("tracker.eta")
        .parse()
        .map_err(|_| CliError::config("tracker.eta", "expected a number"))?;
    let epsilon = s.epsilon()?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CliError::config("bounds.epsilon", format!("must be positive, got {epsilon}")));
    }
    let gamma = scheme.gamma();
    let mut out = String::new();
    match common.format {
        Format::Csv => {
            let _ = writeln!(out, "{BOUNDS_HEADER}");
        }
        Format::Human => {
            let _ = writeln!(out, "scheme          {}", scheme.label());
            let _ = writeln!(
                out,
                "mu, L, C        {}, {}, {}",
                constants.mu, constants.smoothness, constants.minimizer_bound
            );
            let _ = writeln!(out, "eta             {eta}");
            let _ = writeln!(out, "C'              {:.10e}", constants.drift_constant());
        }
    }
    for budget in s.budgets()? {
        let params = TheoryParams::new(constants, eta, budget, gamma).map_err(|e| CliError::from_core(e, "tracker.E"))?;
        let cert = certificate(&params, Some(epsilon)).map_err(|e| CliError::from_core(e, "tracker.E"))?;
        match common.format {
            Format::Csv => {
                let (ag, tg) = cert
                    .discounted
                    .map_or((String::new(), String::new()), |d| (format!("{:.16e}", d.a_gamma), d.t0.to_string()));
                let _ = writeln!(
                    out,
                    "{budget},{:.16e},{:.16e},{:.16e},{},{ag},{tg},{:.16e},{}",
                    cert.alpha,
                    cert.drift_constant,
                    cert.uniform.a,
                    cert.uniform.t0,
                    cert.ate_floor,
                    cert.min_budget.map_or(String::new(), |e| e.to_string()),
                );
            }
            Format::Human => {
                let _ = writeln!(out, "\nE = {budget}");
                let _ = writeln!(out, "  alpha         {:.10e}", cert.alpha);
                let _ = writeln!(out, "  A, t0         {:.10e}, {}", cert.uniform.a, cert.uniform.t0);
                match cert.discounted {
                    Some(d) => {
                        let _ = writeln!(out, "  A_gamma, t0   {:.10e}, {}", d.a_gamma, d.t0);
                        let _ = writeln!(out, "  ATE floor     {:.10e}", cert.ate_floor);
                    }
                    None => {
                        let _ = writeln!(out, "  ATE floor     0 (vanishing)");
                    }
                }
            }
        }
    }
    if let (Format::Human, Some(g)) = (common.format, gamma) {
        let e_star = min_budget(&constants, eta, g, epsilon).map_err(|e| CliError::from_core(e, "bounds.epsilon"))?;
        let _ = writeln!(out, "\nE* (eps = {epsilon})  {e_star}");
    }
    stdout.write_all(out.as_bytes())?;
    Ok(())
}

/// Outcome of one panel in a figure reproduction.
pub struct PanelRun {
    pub panel: Panel,
    pub cfg: ExperimentConfig,
    pub result: ExperimentResult,
}

pub fn run_panels(panels: Vec<Panel>, exec: Execution) -> Result<Vec<PanelRun>, CliError> {
    panels
        .into_iter()
        .map(|panel| {
            let cfg = panel.settings.experiment()?;
            let result = execute(&cfg, exec)?;
            Ok(PanelRun { panel, cfg, result })
        })
        .collect()
}

/// Figure-specific diagnostics written to `summary.txt`.
pub fn figure_summary(figure: Figure, runs: &[PanelRun]) -> String {
    let mut out = String::new();
    let horizon = runs[0].cfg.horizon;
    match figure {
        Figure::Fig1 => {
            let run = &runs[0];
            let _ = writeln!(out, "log-log slope of RMS TE over [{}, {horizon}]:", horizon / 4);
            for s in &run.result.series {
                let slope = figures::decay_slope(s, horizon);
                let ok = slope.is_some_and(|k| (-1.25..=-0.75).contains(&k));
                let _ = writeln!(
                    out,
                    "  E={}: {} ({})",
                    s.budget,
                    slope.map_or("n/a".to_string(), |k| format!("{k:.4}")),
                    if ok { "within [-1.25, -0.75]" } else { "outside [-1.25, -0.75]" }
                );
            }
            if let [a, b] = run.result.series.as_slice() {
                let ratio = figures::late_rms_ratio(b, a, horizon);
                let gap = b.budget.saturating_sub(a.budget) as i32;
                let expected = (1.0 - run.cfg.eta * run.cfg.constants.mu).powi(gap);
                let (lo, hi) = figures::late_window(horizon);
                let _ = writeln!(
                    out,
                    "late-horizon RMS ratio E={}/E={} over [{lo}, {hi}]: {ratio:.4} (per-step factor^{gap} = {expected:.4})",
                    b.budget, a.budget
                );
            }
        }
        Figure::Fig2 => {
            let run = &runs[0];
            let eps = runs[0].panel.settings.epsilon().unwrap_or(figures::FIG2_EPSILON);
            for s in &run.result.series {
                let _ = writeln!(
                    out,
                    "E={}: empirical ATE {:.6} (floor {}) {} eps={eps}",
                    s.budget,
                    s.empirical_ate,
                    fmt_floor(s.ate_floor),
                    if s.empirical_ate <= eps { "<=" } else { ">" },
                );
            }
            if let Some(g) = run.cfg.gamma() {
                match min_budget(&run.cfg.constants, run.cfg.eta, g, eps) {
                    Ok(e) => {
                        let _ = writeln!(out, "minimum budget E* for eps={eps}: {e}");
                    }
                    Err(e) => {
                        let _ = writeln!(out, "minimum budget unavailable: {e}");
                    }
                }
            }
        }
        Figure::Fig3 => {
            let mut ates = Vec::new();
            for r in runs {
                let s = &r.result.series[0];
                let _ = writeln!(out, "{} E={}: empirical ATE {:.6}", r.panel.label, s.budget, s.empirical_ate);
                if r.cfg.gamma().is_some() {
                    ates.push(s.empirical_ate);
                }
            }
            let monotone = ates.windows(2).all(|w| w[1] <= w[0]);
            let _ = writeln!(out, "ATE non-increasing in gamma: {monotone}");
            let top = runs.iter().rev().find(|r| r.cfg.gamma().is_some());
            let uni = runs.iter().find(|r| r.cfg.gamma().is_none());
            if let (Some(top), Some(uni)) = (top, uni) {
                let t_min = horizon / 2;
                let ratio = figures::max_pointwise_ratio(
                    &top.result.series[0].rows,
                    &uni.result.series[0].rows,
                    t_min,
                );
                let _ = writeln!(
                    out,
                    "max RMS ratio {} / uniform for t >= {t_min}: {ratio:.4}",
                    top.panel.label
                );
            }
        }
    }
    out
}

/// `repro`: run a figure preset and write everything under `out/<figure>/`.
pub fn repro(
    figure: Figure,
    common: &Common,
    out: &Path,
    strict: bool,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    if common.config.is_some() {
        return Err(CliError::config("--config", "repro uses built-in settings; adjust them with --set"));
    }
    let panels = figures::configured_panels(figure, &common.overrides, common.seed)?;
    let runs = run_panels(panels, common.execution()?)?;
    let dir = out.join(figure.to_string());
    create_dir(&dir)?;
    let single = runs.len() == 1;
    let mut curves = Vec::new();
    let mut text = String::new();
    for r in &runs {
        let names = write_results(&dir, &r.cfg, &r.result)?;
        let manifest_name = if single {
            "manifest.txt".to_string()
        } else {
            format!("manifest_{}.txt", r.panel.label)
        };
        fs::write(dir.join(manifest_name), manifest(&r.cfg, &format!("{figure} panel {}", r.panel.label)))?;
        for (n, s) in names.into_iter().zip(&r.result.series) {
            let label = if single {
                format!("E={}", s.budget)
            } else {
                r.panel.label.clone()
            };
            curves.push(Curve { file: n, label });
        }
        text.push_str(&report(&r.cfg, &r.result, common.format));
    }
    let loglog = figure == Figure::Fig1;
    let with_bound = figure != Figure::Fig3;
    fs::write(dir.join("plot.py"), plot::script(&figure.to_string(), &curves, loglog, with_bound))?;
    let summary = figure_summary(figure, &runs);
    fs::write(dir.join("summary.txt"), format!("{text}{summary}"))?;
    stdout.write_all(text.as_bytes())?;
    if common.format == Format::Human {
        stdout.write_all(summary.as_bytes())?;
    }
    let results: Vec<&ExperimentResult> = runs.iter().map(|r| &r.result).collect();
    let n = total_violations(&results);
    if strict && n > 0 {
        return Err(violation_error(n));
    }
    Ok(())
}
