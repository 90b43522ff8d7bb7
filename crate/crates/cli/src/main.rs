use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tvtrack_cli::commands::{self, BoundFlags, Common, Format};
use tvtrack_cli::figures::Figure;
use tvtrack_cli::CliError;

#[derive(Parser)]
#[command(name = "tvtrack", version, about = "Budgeted gradient tracking of time-varying objectives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// key=value configuration file (a run manifest works too)
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable, applied after --config
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Base seed; run r uses seed + r. Same as --set walk.seed=N
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Cap on worker threads (1 runs sequentially)
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Human)]
    format: Format,
}

impl From<CommonArgs> for Common {
    fn from(a: CommonArgs) -> Self {
        Common {
            config: a.config,
            overrides: a.overrides,
            seed: a.seed,
            threads: a.threads,
            format: a.format,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured experiment and write CSVs, manifest and plot script
    Run {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        /// Exit with status 3 if any run exceeds its envelope
        #[arg(long)]
        strict: bool,
    },
    /// Print theory constants, ATE floor and minimum budget
    Bounds {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        mu: Option<f64>,
        #[arg(long = "L")]
        smoothness: Option<f64>,
        #[arg(long = "C")]
        minimizer_bound: Option<f64>,
        #[arg(long)]
        eta: Option<f64>,
        /// Gradient budget, or a comma list
        #[arg(long = "E")]
        budget: Option<String>,
        /// Discount factor; switches to discounted weights
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Reproduce a reference figure under OUT/<figure>/
    Repro {
        #[arg(value_enum)]
        figure: Figure,
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_name = "DIR", default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        strict: bool,
    },
    /// Run an experiment and verify every per-run envelope (exit 3 on violation)
    Check {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match cmd {
        Command::Run { common, out, strict } => commands::run(&common.into(), &out, strict, stdout),
        Command::Check { common } => commands::check(&common.into(), stdout),
        Command::Bounds {
            common,
            mu,
            smoothness,
            minimizer_bound,
            eta,
            budget,
            gamma,
            epsilon,
        } => {
            let flags = BoundFlags {
                mu,
                smoothness,
                minimizer_bound,
                eta,
                budget,
                gamma,
                epsilon,
            };
            commands::bounds(&common.into(), &flags, stdout)
        }
        Command::Repro {
            figure,
            common,
            out,
            strict,
        } => commands::repro(figure, &common.into(), &out, strict, stdout),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut stdout = std::io::stdout().lock();
    match dispatch(cli.command, &mut stdout) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = stdout.flush();
            eprintln!("tvtrack: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::Path;

    fn invoke(args: &[&str]) -> (Result<(), CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("tvtrack").chain(args.iter().copied())).unwrap();
        let mut out = Vec::new();
        let r = dispatch(cli.command, &mut out);
        (r, String::from_utf8(out).unwrap())
    }

    fn code(r: &Result<(), CliError>) -> i32 {
        r.as_ref().map_or_else(CliError::exit_code, |_| 0)
    }

    fn small_run(dir: &Path, extra: &[&str]) -> Result<(), CliError> {
        let d = dir.to_string_lossy().into_owned();
        let mut args = vec!["run", "--set", "run.horizon=100", "--set", "run.num_runs=10", "--out", &d];
        args.extend_from_slice(extra);
        invoke(&args).0
    }

    #[test]
    fn minimal_run_writes_one_row_per_step() {
        let tmp = tempfile::tempdir().unwrap();
        small_run(tmp.path(), &[]).unwrap();
        let csv = std::fs::read_to_string(tmp.path().join("uniform_E10.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,rms_te,max_te,bound,valid_from_flag"));
        assert_eq!(lines.count(), 100);
        for f in ["manifest.txt", "plot.py", "summary.txt"] {
            assert!(tmp.path().join(f).exists(), "{f}");
        }
    }

    #[test]
    fn bad_step_size_exits_2_and_names_interval() {
        let (r, _) = invoke(&["run", "--set", "tracker.eta=25"]);
        assert_eq!(code(&r), 2);
        let msg = r.unwrap_err().to_string();
        assert!(msg.contains("tracker.eta") && msg.contains("(0, 10]"), "{msg}");
    }

    #[test]
    fn unknown_key_exits_2() {
        let (r, _) = invoke(&["check", "--set", "tracker.speed=1"]);
        assert_eq!(code(&r), 2);
        assert!(r.unwrap_err().to_string().contains("tracker.speed"));
    }

    #[test]
    fn corrupted_envelope_fails_only_in_strict_mode() {
        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(code(&small_run(tmp.path(), &["--set", "check.envelope_scale=0.01"])), 0);
        let strict = small_run(tmp.path(), &["--set", "check.envelope_scale=0.01", "--strict"]);
        assert_eq!(code(&strict), 3);
        assert_eq!(code(&small_run(tmp.path(), &["--strict"])), 0);
    }

    #[test]
    fn check_exit_status_tracks_violations() {
        let base = ["check", "--set", "run.num_runs=5", "--set", "run.horizon=50"];
        let (ok, text) = invoke(&base);
        assert_eq!(code(&ok), 0);
        assert!(text.contains("violations=0"));
        let mut bad = base.to_vec();
        bad.extend(["--set", "check.envelope_scale=0.01"]);
        assert_eq!(code(&invoke(&bad).0), 3);
    }

    #[test]
    fn bounds_reports_minimum_budget() {
        let (r, text) = invoke(&[
            "bounds", "--mu", "0.1", "--L", "0.1", "--C", "100", "--eta", "2.85", "--gamma", "0.7",
            "--epsilon", "0.1", "--E", "20", "--format", "csv",
        ]);
        r.unwrap();
        let row = text.lines().nth(1).unwrap();
        assert!(row.starts_with("20,") && row.ends_with(",20"), "{row}");

        let (r, text) = invoke(&["bounds", "--gamma", "0.7", "--eta", "2.85", "--E", "5,10,20"]);
        r.unwrap();
        assert!(text.contains("E* (eps = 0.1)  20"), "{text}");
    }

    #[test]
    fn bounds_without_gamma_reports_vanishing_floor() {
        let (r, text) = invoke(&["bounds", "--eta", "2", "--E", "10"]);
        r.unwrap();
        assert!(text.contains("ATE floor     0 (vanishing)"));
        assert!(!text.contains("A_gamma"));
    }

    #[test]
    fn bounds_rejects_bad_ranges() {
        let (r, _) = invoke(&["bounds", "--gamma", "0.7", "--eta", "2.85", "--epsilon", "0"]);
        assert_eq!(code(&r), 2);
        assert!(r.unwrap_err().to_string().contains("bounds.epsilon"));
        assert_eq!(code(&invoke(&["bounds", "--gamma", "1.5"]).0), 2);
        assert_eq!(code(&invoke(&["bounds", "--mu=-1"]).0), 2);
    }

    #[test]
    fn zero_threads_is_a_config_error() {
        assert_eq!(code(&invoke(&["check", "--threads", "0", "--set", "run.num_runs=2"]).0), 2);
    }

    #[test]
    fn seed_flag_matches_set() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        small_run(a.path(), &["--seed", "42"]).unwrap();
        small_run(b.path(), &["--set", "walk.seed=42"]).unwrap();
        let read = |d: &Path| std::fs::read(d.join("uniform_E10.csv")).unwrap();
        assert_eq!(read(a.path()), read(b.path()));
    }

    #[test]
    fn repro_accepts_overrides() {
        let tmp = tempfile::tempdir().unwrap();
        let dir = tmp.path().to_string_lossy().into_owned();
        let (r, _) = invoke(&["repro", "fig3", "--set", "run.num_runs=4", "--set", "run.horizon=60", "--out", &dir]);
        r.unwrap();
        let fig = tmp.path().join("fig3");
        for f in [
            "uniform_E10.csv",
            "discounted-g0.99_E10.csv",
            "manifest_uniform.txt",
            "plot.py",
            "summary.txt",
        ] {
            assert!(fig.join(f).exists(), "{f}");
        }
        let summary = std::fs::read_to_string(fig.join("summary.txt")).unwrap();
        assert!(summary.contains("non-increasing"));
    }
}
