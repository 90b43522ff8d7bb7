//! Synthetic sample stream: loss centers follow a clamped Gaussian random walk
//! `c_{t+1} = clamp(c_t + z_{t+1}, -C_max, C_max)`, `z ~ N(0, sigma^2)`,
//! independently per coordinate.

use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::losses::{LossConstants, QuadraticLoss};

#[derive(Clone, Debug, PartialEq)]
pub struct RandomWalkConfig {
    pub c_max: f64,
    pub sigma2: f64,
    pub c0: Vec<f64>,
    pub seed: u64,
}

impl RandomWalkConfig {
    /// Walk starting at the origin in `dim` dimensions.
    pub fn new(c_max: f64, sigma2: f64, dim: usize, seed: u64) -> Result<Self> {
        let cfg = RandomWalkConfig {
            c_max,
            sigma2,
            c0: vec![0.0; dim],
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_max > 0.0 && self.c_max.is_finite()) {
            return Err(Error::param("c_max", format!("must be positive, got {}", self.c_max)));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::param("sigma2", format!("must be positive, got {}", self.sigma2)));
        }
        if self.c0.is_empty() {
            return Err(Error::param("dim", "dimension must be at least 1"));
        }
        if !self.c0.iter().all(|c| c.abs() <= self.c_max) {
            return Err(Error::param("c0", "start point must lie inside the clamp box"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.c0.len()
    }

    /// Euclidean bound on every center: `C_max sqrt(d)`.
    pub fn minimizer_bound(&self) -> f64 {
        self.c_max * (self.dim() as f64).sqrt()
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        RandomWalkConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn walk(&self) -> Result<RandomWalk> {
        RandomWalk::new(self)
    }
}

#[derive(Clone, Debug)]
pub struct RandomWalk {
    c_max: f64,
    current: Vec<f64>,
    rng: ChaCha8Rng,
    noise: Normal<f64>,
}

impl RandomWalk {
    pub fn new(cfg: &RandomWalkConfig) -> Result<Self> {
        cfg.validate()?;
        let noise = Normal::new(0.0, cfg.sigma2.sqrt())
            .map_err(|e| Error::param("sigma2", e.to_string()))?;
        Ok(RandomWalk {
            c_max: cfg.c_max,
            current: cfg.c0.clone(),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            noise,
        })
    }

    pub fn current(&self) -> &[f64] {
        &self.current
    }

    /// Advances every coordinate one step and returns the new center.
    pub fn next_center(&mut self) -> &[f64] {
        for c in &mut self.current {
            let z = self.noise.sample(&mut self.rng);
            *c = (*c + z).clamp(-self.c_max, self.c_max);
        }
        &self.current
    }
}

/// The first `horizon` losses of the stream, all sharing `curvature`.
pub fn stream(
    cfg: &RandomWalkConfig,
    horizon: usize,
    curvature: &[f64],
    constants: &LossConstants,
) -> Result<Vec<QuadraticLoss>> {
    if horizon == 0 {
        return Err(Error::param("horizon", "must be at least 1"));
    }
    if curvature.len() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            found: curvature.len(),
        });
    }
    let mut walk = cfg.walk()?;
    (0..horizon)
        .map(|_| QuadraticLoss::new(walk.next_center().to_vec(), curvature.to_vec(), constants))
        .collect()
}

/// Writes centers as CSV with header `t,c_1,...,c_d`.
pub fn export_centers<W: Write>(out: &mut W, centers: &[Vec<f64>]) -> Result<()> {
    let dim = centers.first().map_or(0, Vec::len);
    let header: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dim).map(|j| format!("c_{j}")))
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for (t, c) in centers.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: c.len(),
            });
        }
        write!(out, "{}", t + 1)?;
        for x in c {
            write!(out, ",{x:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads centers written by [`export_centers`].
pub fn import_centers<R: BufRead>(input: R) -> Result<Vec<Vec<f64>>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or(Error::Parse {
            line: 1,
            message: "missing header".to_string(),
        })??;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first() != Some(&"t") || cols.len() < 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header `t,c_1,...`, got `{header}`"),
        });
    }
    let dim = cols.len() - 1;
    let mut centers = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line = line?;
        let lineno = idx + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != dim + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {} fields, found {}", dim + 1, fields.len()),
            });
        }
        let row = fields[1..]
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("`{f}`: {e}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        centers.push(row);
    }
    Ok(centers)
}
