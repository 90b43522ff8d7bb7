//! Temporal weighting schemes `a_i(t)` over the samples seen so far.
//!
//! Uniform and discounted schemes also expose the two-term recursion
//! `F_{t+1} = carry * F_t + fresh * f_{t+1}` that lets a streaming objective
//! absorb a sample in O(1).

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Tolerance on `sum_i a_i(t) = 1` for user-supplied weights.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Above this exponent powers are evaluated through `exp(n ln x)`.
const LOG_SPACE_EXPONENT: u64 = 10_000;

/// `x^n` for `0 <= x < 1`, switching to log space for large `n`.
pub(crate) fn pow_u64(x: f64, n: u64) -> f64 {
    if n <= LOG_SPACE_EXPONENT {
        x.powi(n as i32)
    } else if x == 0.0 {
        0.0
    } else {
        (n as f64 * x.ln()).exp()
    }
}

/// `1 - x^n` for `0 < x < 1`, accurate when `x` is close to one.
pub(crate) fn one_minus_pow(x: f64, n: u64) -> f64 {
    -(n as f64 * x.ln()).exp_m1()
}

type WeightFn = dyn Fn(usize, usize) -> f64 + Send + Sync;

/// User-supplied rule `(i, t) -> a_i(t)`.
#[derive(Clone)]
pub struct CustomWeights(Arc<WeightFn>);

impl CustomWeights {
    pub fn new(rule: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        CustomWeights(Arc::new(rule))
    }

    fn raw(&self, i: usize, t: usize) -> f64 {
        (self.0)(i, t)
    }
}

impl fmt::Debug for CustomWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("CustomWeights(<fn>)")
    }
}

#[derive(Clone, Debug)]
pub enum WeightScheme {
    Uniform,
    Discounted { gamma: f64 },
    Custom(CustomWeights),
}

/// Multipliers in `F_{t+1} = carry * F_t + fresh * f_{t+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecursionCoefficients {
    pub carry: f64,
    pub fresh: f64,
}

impl WeightScheme {
    pub fn uniform() -> Self {
        WeightScheme::Uniform
    }

    /// Geometric discounting; `gamma` must lie strictly inside (0, 1).
    pub fn discounted(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::param(
                "gamma",
                format!("discount factor must lie in (0, 1), got {gamma}"),
            ));
        }
        Ok(WeightScheme::Discounted { gamma })
    }

    pub fn custom(rule: impl Fn(usize, usize) -> f64 + Send + Sync + 'static) -> Self {
        WeightScheme::Custom(CustomWeights::new(rule))
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            WeightScheme::Discounted { gamma } => Some(*gamma),
            _ => None,
        }
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        match self {
            WeightScheme::Uniform => "uniform".to_string(),
            WeightScheme::Discounted { gamma } => format!("discounted-g{gamma}"),
            WeightScheme::Custom(_) => "custom".to_string(),
        }
    }

    /// The weight `a_i(t)`.
    ///
    /// Custom schemes validate the whole row at `t` before answering.
    pub fn weight(&self, i: usize, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::ZeroTime);
        }
        if i == 0 || i > t {
            return Err(Error::IndexOutOfRange { i, t });
        }
        match self {
            WeightScheme::Uniform => Ok(1.0 / t as f64),
            WeightScheme::Discounted { gamma } => Ok(discounted_weight(*gamma, i, t)),
            WeightScheme::Custom(rule) => {
                validate_custom_row(rule, t)?;
                Ok(rule.raw(i, t))
            }
        }
    }

    /// All weights `(a_1(t), ..., a_t(t))`.
    pub fn weights(&self, t: usize) -> Result<Vec<f64>> {
        if t == 0 {
            return Err(Error::ZeroTime);
        }
        match self {
            WeightScheme::Uniform => Ok(vec![1.0 / t as f64; t]),
            WeightScheme::Discounted { gamma } => {
                Ok((1..=t).map(|i| discounted_weight(*gamma, i, t)).collect())
            }
            WeightScheme::Custom(rule) => validate_custom_row(rule, t),
        }
    }

    /// Coefficients taking `F_t` to `F_{t+1}`; defined for `t >= 1`.
    pub fn recursion_coeffs(&self, t: usize) -> Result<RecursionCoefficients> {
        if t == 0 {
            return Err(Error::ZeroTime);
        }
        match self {
            WeightScheme::Uniform => {
                let next = (t + 1) as f64;
                Ok(RecursionCoefficients {
                    carry: t as f64 / next,
                    fresh: 1.0 / next,
                })
            }
            WeightScheme::Discounted { gamma } => {
                let g = *gamma;
                let denom = one_minus_pow(g, t as u64 + 1);
                Ok(RecursionCoefficients {
                    carry: g * one_minus_pow(g, t as u64) / denom,
                    fresh: (1.0 - g) / denom,
                })
            }
            WeightScheme::Custom(_) => Err(Error::Unsupported(
                "custom weights have no two-term recursion; sum over the history directly"
                    .to_string(),
            )),
        }
    }
}

fn discounted_weight(gamma: f64, i: usize, t: usize) -> f64 {
    (1.0 - gamma) / one_minus_pow(gamma, t as u64) * pow_u64(gamma, (t - i) as u64)
}

fn validate_custom_row(rule: &CustomWeights, t: usize) -> Result<Vec<f64>> {
    let row: Vec<f64> = (1..=t).map(|i| rule.raw(i, t)).collect();
    if let Some((idx, w)) = row
        .iter()
        .enumerate()
        .find(|(_, w)| !(0.0..=1.0).contains(*w))
    {
        return Err(Error::InvalidWeights {
            t,
            reason: format!("a_{}({t}) = {w} is outside [0, 1]", idx + 1),
        });
    }
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidWeights {
            t,
            reason: format!("weights sum to {total}, not 1"),
        });
    }
    Ok(row)
}
