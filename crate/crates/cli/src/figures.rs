//! Pre-baked experiment settings for the three reference figures.

use std::fmt;

use tvtrack::harness::{loglog_slope, AggregateTrace, SeriesResult};

use crate::config::Settings;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Uniform weights, mu = 0.1, eta = 2, E in {10, 20}.
    Fig1,
    /// Discounted weights, gamma = 0.7, mu = 0.1, eta = 2.85, E in {5, 10, 20}.
    Fig2,
    /// Discount-factor sweep gamma in {0.5, 0.7, 0.9, 0.99} plus a uniform overlay.
    Fig3,
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
        })
    }
}

pub const FIG3_GAMMAS: [f64; 4] = [0.5, 0.7, 0.9, 0.99];
pub const FIG3_BUDGET: u32 = 10;
pub const FIG2_EPSILON: f64 = 0.1;

const SHARED: &[(&str, &str)] = &[
    ("loss.mu", "0.1"),
    ("walk.c_max", "100"),
    ("walk.sigma2", "100"),
    ("walk.dim", "1"),
    ("walk.c0", "0"),
    ("tracker.w0", "0"),
    ("run.horizon", "1000"),
    ("run.num_runs", "1000"),
    ("run.record_every", "1"),
];

/// One named experiment inside a figure.
#[derive(Clone, Debug)]
pub struct Panel {
    pub label: String,
    pub settings: Settings,
}

fn base(extra: &[(&str, &str)]) -> Settings {
    let mut s = Settings::default();
    for (k, v) in SHARED.iter().chain(extra) {
        s.set(k, v).expect("preset keys are valid");
    }
    s
}

/// Panels making up `figure`, before user overrides.
pub fn panels(figure: Figure) -> Vec<Panel> {
    match figure {
        Figure::Fig1 => vec![Panel {
            label: "uniform".into(),
            settings: base(&[("scheme", "uniform"), ("tracker.eta", "2"), ("tracker.E", "10,20")]),
        }],
        Figure::Fig2 => vec![Panel {
            label: "discounted-g0.7".into(),
            settings: base(&[
                ("scheme", "discounted"),
                ("scheme.gamma", "0.7"),
                ("tracker.eta", "2.85"),
                ("tracker.E", "5,10,20"),
                ("bounds.epsilon", "0.1"),
            ]),
        }],
        Figure::Fig3 => {
            let e = FIG3_BUDGET.to_string();
            let mut out: Vec<Panel> = FIG3_GAMMAS
                .iter()
                .map(|g| {
                    let gs = g.to_string();
                    Panel {
                        label: format!("discounted-g{g}"),
                        settings: base(&[
                            ("scheme", "discounted"),
                            ("scheme.gamma", &gs),
                            ("tracker.eta", "2.85"),
                            ("tracker.E", &e),
                        ]),
                    }
                })
                .collect();
            out.push(Panel {
                label: "uniform".into(),
                settings: base(&[("scheme", "uniform"), ("tracker.eta", "2.85"), ("tracker.E", &e)]),
            });
            out
        }
    }
}

/// Panels with user overrides and an optional seed applied.
pub fn configured_panels(
    figure: Figure,
    overrides: &[String],
    seed: Option<u64>,
) -> Result<Vec<Panel>, CliError> {
    panels(figure)
        .into_iter()
        .map(|mut p| {
            p.settings.apply_overrides(overrides)?;
            if let Some(s) = seed {
                p.settings.set("walk.seed", &s.to_string())?;
            }
            Ok(p)
        })
        .collect()
}

/// Mean RMS tracking error over `t_min..=t_max`.
pub fn mean_rms(rows: &[AggregateTrace], t_min: usize, t_max: usize) -> f64 {
    let sel: Vec<f64> = rows
        .iter()
        .filter(|r| r.t >= t_min && r.t <= t_max)
        .map(|r| r.rms_te)
        .collect();
    sel.iter().sum::<f64>() / sel.len().max(1) as f64
}

/// Late-horizon window: the final 20% of `1..=horizon`.
pub fn late_window(horizon: usize) -> (usize, usize) {
    (horizon - horizon / 5 + 1, horizon)
}

/// Ratio of late-horizon mean RMS TE, `num / den`.
pub fn late_rms_ratio(num: &SeriesResult, den: &SeriesResult, horizon: usize) -> f64 {
    let (lo, hi) = late_window(horizon);
    mean_rms(&num.rows, lo, hi) / mean_rms(&den.rows, lo, hi)
}

/// Log-log slope of RMS TE over `[horizon / 4, horizon]`.
pub fn decay_slope(series: &SeriesResult, horizon: usize) -> Option<f64> {
    loglog_slope(&series.rows, horizon / 4, horizon)
}

/// Largest pointwise ratio `rms_a(t) / rms_b(t)` for `t >= t_min`.
pub fn max_pointwise_ratio(a: &[AggregateTrace], b: &[AggregateTrace], t_min: usize) -> f64 {
    a.iter()
        .zip(b)
        .filter(|(x, _)| x.t >= t_min)
        .map(|(x, y)| x.rms_te / y.rms_te)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for f in [Figure::Fig1, Figure::Fig2, Figure::Fig3] {
            for p in panels(f) {
                let cfg = p.settings.experiment().unwrap();
                assert_eq!(cfg.num_runs, 1000);
                assert_eq!(cfg.horizon, 1000);
                assert_eq!(cfg.scheme.label(), p.label);
            }
        }
        let fig1 = panels(Figure::Fig1)[0].settings.experiment().unwrap();
        assert_eq!(fig1.budgets, vec![10, 20]);
        assert_eq!(fig1.eta, 2.0);
        let fig2 = panels(Figure::Fig2)[0].settings.experiment().unwrap();
        assert_eq!(fig2.budgets, vec![5, 10, 20]);
        assert_eq!(fig2.scheme.gamma(), Some(0.7));
        assert_eq!(panels(Figure::Fig3).len(), 5);
    }

    #[test]
    fn overrides_reach_every_panel() {
        let ps = configured_panels(Figure::Fig3, &["run.num_runs=3".into()], Some(9)).unwrap();
        for p in ps {
            let cfg = p.settings.experiment().unwrap();
            assert_eq!(cfg.num_runs, 3);
            assert_eq!(cfg.walk.seed, 9);
        }
    }

    #[test]
    fn late_window_is_final_fifth() {
        assert_eq!(late_window(1000), (801, 1000));
        assert_eq!(late_window(100), (81, 100));
    }
}
