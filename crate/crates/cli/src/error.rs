use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error in `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("{0}")]
    Violations(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Maps a library error onto the configuration key it came from.
    pub fn from_core(err: tvtrack::Error, fallback_key: &str) -> Self {
        use tvtrack::Error as E;
        match err {
            E::InvalidParameter { name, reason } => CliError::config(key_for(name, fallback_key), reason),
            E::Io(msg) => CliError::Internal(msg),
            other => CliError::config(fallback_key, other.to_string()),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Violations(_) => 3,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn key_for<'a>(param: &str, fallback: &'a str) -> &'a str {
    match param {
        "eta" => "tracker.eta",
        "E" => "tracker.E",
        "w0" => "tracker.w0",
        "gamma" => "scheme.gamma",
        "mu" | "curvature" => "loss.mu",
        "L" => "loss.L",
        "C" => "loss.C",
        "c_max" => "walk.c_max",
        "sigma2" => "walk.sigma2",
        "c0" | "center" => "walk.c0",
        "dim" => "walk.dim",
        "horizon" => "run.horizon",
        "num_runs" => "run.num_runs",
        "record_every" => "run.record_every",
        "window_fraction" => "run.window_fraction",
        "envelope_scale" => "check.envelope_scale",
        "epsilon" => "bounds.epsilon",
        "threads" => "--threads",
        _ => fallback,
    }
}
