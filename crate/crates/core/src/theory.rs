//! Closed-form tracking-error constants and envelopes, plus the brute-force
//! sums they bound.
//!
//! The per-step recursion `TE(t+1) <= alpha (TE(t) + drift_t)` with
//! `alpha = (1 - eta mu)^E` unrolls into a geometric initialization term and
//! a drift sum `C' S(t)`. For uniform weights `S(t) <= A / t`; for
//! discounted weights `S(t) <= A_gamma (1 - gamma) / (1 - gamma^t)`, which
//! levels off at the asymptotic floor `C' (1 - gamma) alpha / (1 - alpha)`.

use crate::error::{Error, Result};
use crate::losses::LossConstants;
use crate::weights::{one_minus_pow, pow_u64};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TheoryParams {
    pub constants: LossConstants,
    pub eta: f64,
    pub budget: u32,
    pub gamma: Option<f64>,
}

impl TheoryParams {
    pub fn new(constants: LossConstants, eta: f64, budget: u32, gamma: Option<f64>) -> Result<Self> {
        check_step(&constants, eta)?;
        if budget == 0 {
            return Err(Error::param("E", "gradient budget must be at least 1"));
        }
        if let Some(g) = gamma {
            check_gamma(g)?;
        }
        Ok(TheoryParams {
            constants,
            eta,
            budget,
            gamma,
        })
    }

    pub fn with_budget(self, budget: u32) -> Result<Self> {
        Self::new(self.constants, self.eta, budget, self.gamma)
    }

    /// Per-time-step contraction `(1 - eta mu)^E`.
    pub fn alpha(&self) -> f64 {
        pow_u64(self.per_step_factor(), self.budget as u64)
    }

    /// Per-gradient-step contraction `1 - eta mu`.
    pub fn per_step_factor(&self) -> f64 {
        1.0 - self.eta * self.constants.mu
    }

    pub fn drift_constant(&self) -> f64 {
        self.constants.drift_constant()
    }
}

fn check_step(constants: &LossConstants, eta: f64) -> Result<()> {
    let max = constants.max_step();
    if !(eta > 0.0 && eta <= max) {
        return Err(Error::param(
            "eta",
            format!("step size {eta} outside the admissible interval (0, {max}]"),
        ));
    }
    Ok(())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::param(
            "gamma",
            format!("discount factor must lie in (0, 1), got {gamma}"),
        ));
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param(
            "alpha",
            format!("contraction factor must lie in [0, 1), got {alpha}"),
        ));
    }
    Ok(())
}

/// `S(t) = sum_{i=1}^{t-1} alpha^{t-i} / (i + 1)`, summed term by term.
pub fn uniform_sum_s(t: u64, alpha: f64) -> f64 {
    (1..t)
        .map(|i| pow_u64(alpha, t - i) / (i + 1) as f64)
        .sum()
}

/// `S(t) = sum_{i=1}^{t-1} (1 - gamma) alpha^{t-i} / (1 - gamma^{i+1})`, summed term by term.
pub fn discounted_sum_s(t: u64, alpha: f64, gamma: f64) -> f64 {
    (1..t)
        .map(|i| (1.0 - gamma) * pow_u64(alpha, t - i) / one_minus_pow(gamma, i + 1))
        .sum()
}

/// Constants `(A, t0)` with `S(t) <= A / t` for every `t >= t0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformConstants {
    pub a: f64,
    pub t0: u64,
}

/// Constants `(A_gamma, t0)` with `S(t) <= A_gamma (1 - gamma) / (1 - gamma^t)` for `t >= t0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscountedConstants {
    pub a_gamma: f64,
    pub t0: u64,
}

fn ceil_at_least_one(x: f64) -> u64 {
    let c = x.ceil();
    if c.is_finite() && c >= 1.0 {
        c as u64
    } else {
        1
    }
}

pub fn prop1_constants(alpha: f64) -> Result<UniformConstants> {
    check_alpha(alpha)?;
    let ratio = 2.0 * alpha / (1.0 - alpha);
    let t0 = ceil_at_least_one(ratio);
    let a = (t0 as f64 * uniform_sum_s(t0, alpha)).max(ratio);
    Ok(UniformConstants { a, t0 })
}

pub fn prop2_constants(alpha: f64, gamma: f64) -> Result<DiscountedConstants> {
    check_alpha(alpha)?;
    check_gamma(gamma)?;
    let ratio = (1.0 - alpha) / (1.0 + alpha - 2.0 * gamma * alpha);
    let t0 = ceil_at_least_one(ratio.ln() / gamma.ln());
    let head = one_minus_pow(gamma, t0) * discounted_sum_s(t0, alpha, gamma) / (1.0 - gamma);
    let a_gamma = head.max(2.0 * alpha / (1.0 - alpha));
    Ok(DiscountedConstants { a_gamma, t0 })
}

/// `lim_{t -> inf} S(t)` for discounted weights: `(1 - gamma) alpha / (1 - alpha)`.
pub fn discounted_sum_limit(alpha: f64, gamma: f64) -> f64 {
    (1.0 - gamma) * alpha / (1.0 - alpha)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeKind {
    UniformTE,
    DiscountedTE,
}

/// Upper bound on `TE(t)` for `t = 1..=horizon`; certified from `valid_from`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundEnvelope {
    pub values: Vec<f64>,
    pub valid_from: u64,
    pub kind: EnvelopeKind,
}

impl BoundEnvelope {
    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    /// Bound at time `t` (1-based).
    pub fn at(&self, t: usize) -> f64 {
        self.values[t - 1]
    }

    pub fn is_valid_at(&self, t: usize) -> bool {
        t as u64 >= self.valid_from
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for v in &mut self.values {
            *v *= factor;
        }
        self
    }
}

/// `alpha^t init_gap + C' A / t`.
pub fn te_envelope_uniform(params: &TheoryParams, init_gap: f64, horizon: usize) -> Result<BoundEnvelope> {
    let alpha = params.alpha();
    let consts = prop1_constants(alpha)?;
    let c_prime = params.drift_constant();
    let values = (1..=horizon as u64)
        .map(|t| pow_u64(alpha, t) * init_gap + c_prime * consts.a / t as f64)
        .collect();
    Ok(BoundEnvelope {
        values,
        valid_from: consts.t0,
        kind: EnvelopeKind::UniformTE,
    })
}

/// `alpha^t init_gap + C' A_gamma (1 - gamma) / (1 - gamma^t)`.
pub fn te_envelope_discounted(
    params: &TheoryParams,
    init_gap: f64,
    horizon: usize,
) -> Result<BoundEnvelope> {
    let gamma = params
        .gamma
        .ok_or_else(|| Error::param("gamma", "discounted envelope needs a discount factor"))?;
    let alpha = params.alpha();
    let consts = prop2_constants(alpha, gamma)?;
    let c_prime = params.drift_constant();
    let values = (1..=horizon as u64)
        .map(|t| {
            pow_u64(alpha, t) * init_gap
                + c_prime * consts.a_gamma * (1.0 - gamma) / one_minus_pow(gamma, t)
        })
        .collect();
    Ok(BoundEnvelope {
        values,
        valid_from: consts.t0,
        kind: EnvelopeKind::DiscountedTE,
    })
}

/// Envelope matching `params`: discounted when a discount factor is set.
pub fn te_envelope(params: &TheoryParams, init_gap: f64, horizon: usize) -> Result<BoundEnvelope> {
    match params.gamma {
        Some(_) => te_envelope_discounted(params, init_gap, horizon),
        None => te_envelope_uniform(params, init_gap, horizon),
    }
}

/// Asymptotic tracking-error bound `C' (1 - gamma) alpha / (1 - alpha)`.
pub fn ate_floor(params: &TheoryParams) -> Result<f64> {
    let gamma = params.gamma.ok_or_else(|| {
        Error::Unsupported(
            "uniform weights have a vanishing asymptotic tracking error; no floor".to_string(),
        )
    })?;
    Ok(params.drift_constant() * discounted_sum_limit(params.alpha(), gamma))
}

/// Smallest budget `E` whose ATE floor is at most `epsilon`:
/// `E >= ln(eps / (C'(1 - gamma) + eps)) / ln(1 - eta mu)`.
pub fn min_budget(constants: &LossConstants, eta: f64, gamma: f64, epsilon: f64) -> Result<u32> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::param(
            "epsilon",
            format!("target must be positive, got {epsilon}"),
        ));
    }
    let params = TheoryParams::new(*constants, eta, 1, Some(gamma))?;
    let factor = params.per_step_factor();
    if factor <= 0.0 {
        return Ok(1);
    }
    let c_prime = params.drift_constant();
    let threshold = (epsilon / (c_prime * (1.0 - gamma) + epsilon)).ln() / factor.ln();
    let mut budget = ceil_at_least_one(threshold).min(u32::MAX as u64) as u32;
    // The ceiling can land one off when the threshold is an integer up to round-off.
    let floor_at = |e: u32| ate_floor(&TheoryParams { budget: e, ..params });
    while floor_at(budget)? > epsilon && budget < u32::MAX {
        budget += 1;
    }
    while budget > 1 && floor_at(budget - 1)? <= epsilon {
        budget -= 1;
    }
    Ok(budget)
}

/// Iterates `x_{t+1} = alpha x_t + b_t` from `x_0` for `horizon` steps.
pub fn lemma3_limit(alpha: f64, mut b: impl FnMut(usize) -> f64, x0: f64, horizon: usize) -> f64 {
    (0..horizon).fold(x0, |x, t| alpha * x + b(t))
}

/// Every constant reported for one parameter set.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub alpha: f64,
    pub drift_constant: f64,
    pub uniform: UniformConstants,
    pub discounted: Option<DiscountedConstants>,
    pub ate_floor: f64,
    pub min_budget: Option<u32>,
}

pub fn certificate(params: &TheoryParams, epsilon: Option<f64>) -> Result<Certificate> {
    let alpha = params.alpha();
    let uniform = prop1_constants(alpha)?;
    let (discounted, floor, budget) = match params.gamma {
        Some(g) => {
            let budget = match epsilon {
                Some(eps) => Some(min_budget(&params.constants, params.eta, g, eps)?),
                None => None,
            };
            (Some(prop2_constants(alpha, g)?), ate_floor(params)?, budget)
        }
        None => (None, 0.0, None),
    };
    Ok(Certificate {
        alpha,
        drift_constant: params.drift_constant(),
        uniform,
        discounted,
        ate_floor: floor,
        min_budget: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn scalar(c: f64) -> LossConstants {
        LossConstants::new(0.1, 0.1, c).unwrap()
    }

    fn params(eta: f64, budget: u32, gamma: Option<f64>) -> TheoryParams {
        TheoryParams::new(scalar(100.0), eta, budget, gamma).unwrap()
    }

    #[test]
    fn alpha_values() {
        let a = params(2.0, 10, None).alpha();
        assert!((a - 0.1073741824).abs() < 1e-12);
        let a = params(2.85, 20, None).alpha();
        assert!((a - 0.715f64.powi(20)).abs() < 1e-15);
        assert!((a - 1.2193288e-3).abs() < 1e-9);
        assert!(TheoryParams::new(scalar(100.0), 2.0, 0, None).is_err());
    }

    #[test]
    fn uniform_sum_small_cases() {
        assert_eq!(uniform_sum_s(1, 0.5), 0.0);
        let oracle = 0.25 / 2.0 + 0.5 / 3.0;
        assert!((uniform_sum_s(3, 0.5) - oracle).abs() < 1e-15);
        for t in 1..200u64 {
            let lhs = uniform_sum_s(t + 1, 0.7);
            let rhs = 0.7 / (t + 1) as f64 + 0.7 * uniform_sum_s(t, 0.7);
            assert!((lhs - rhs).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn discounted_sum_small_cases() {
        assert_eq!(discounted_sum_s(1, 0.5, 0.5), 0.0);
        assert!((discounted_sum_s(2, 0.5, 0.5) - 1.0 / 3.0).abs() < 1e-15);
        for t in 1..200u64 {
            let lhs = discounted_sum_s(t + 1, 0.6, 0.8);
            let rhs = 0.2 * 0.6 / one_minus_pow(0.8, t + 1) + 0.6 * discounted_sum_s(t, 0.6, 0.8);
            assert!((lhs - rhs).abs() < 1e-14, "t={t}");
        }
        assert!((discounted_sum_s(200, 0.5, 0.5) - 0.5).abs() <= 1e-10);
    }

    #[test]
    fn prop1_examples() {
        let alpha = 0.8f64.powi(10);
        let c = prop1_constants(alpha).unwrap();
        assert_eq!(c.t0, 1);
        assert!((c.a - 2.0 * alpha / (1.0 - alpha)).abs() < 1e-15);
        assert!((c.a - 0.2406).abs() < 1e-4);

        let c = prop1_constants(0.5).unwrap();
        assert_eq!(c.t0, 2);
        assert_eq!(c.a, 2.0);

        let c = prop1_constants(0.0).unwrap();
        assert_eq!(c, UniformConstants { a: 0.0, t0: 1 });
        assert_eq!(uniform_sum_s(50, 0.0), 0.0);

        assert!(prop1_constants(1.0).is_err());
    }

    #[test]
    fn prop2_examples() {
        let alpha = 0.715f64.powi(10);
        assert!((alpha - 0.0349188890).abs() < 1e-9);
        assert_eq!(prop2_constants(alpha, 0.7).unwrap().t0, 1);

        let c = prop2_constants(0.5, 0.5).unwrap();
        assert_eq!(c.t0, 1);
        assert_eq!(c.a_gamma, 2.0);

        assert_eq!(prop2_constants(0.0, 0.5).unwrap().t0, 1);
    }

    #[test]
    fn uniform_envelope_example() {
        let p = params(2.0, 10, None);
        let env = te_envelope_uniform(&p, 10.0, 20).unwrap();
        let alpha = p.alpha();
        let expected = alpha.powi(10) * 10.0 + 200.0 * (2.0 * alpha / (1.0 - alpha)) / 10.0;
        assert!((env.at(10) - expected).abs() < 1e-12);
        assert!((env.at(10) - 4.813).abs() < 2e-3);
        assert_eq!(env.valid_from, 1);
        assert_eq!(env.kind, EnvelopeKind::UniformTE);

        for t in 1..=20 {
            let oracle = alpha.powi(t as i32) * 10.0 + 200.0 * uniform_sum_s(t as u64, alpha);
            assert!(oracle <= env.at(t) + 1e-12);
        }
    }

    #[test]
    fn perfect_tracker_envelopes_vanish() {
        // eta * mu = 1 gives alpha = 0.
        let p = params(10.0, 1, Some(0.7));
        assert_eq!(p.alpha(), 0.0);
        assert!(te_envelope_uniform(&p, 0.0, 50).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(te_envelope_discounted(&p, 0.0, 50).unwrap().values.iter().all(|v| *v == 0.0));
        assert_eq!(ate_floor(&p).unwrap(), 0.0);
    }

    #[test]
    fn discounted_envelope_floor() {
        let p = params(2.85, 20, Some(0.7));
        let floor = ate_floor(&p).unwrap();
        assert!((floor - 0.0732490434).abs() < 1e-9, "{floor}");
        assert!(floor <= 0.1);
        let env = te_envelope_discounted(&p, 5.0, 2000).unwrap();
        // The envelope levels off at C' A_gamma (1 - gamma) >= floor.
        assert!(env.at(2000) >= floor);
    }

    #[test]
    fn discounted_close_to_uniform_near_one() {
        let p_u = params(2.85, 10, None);
        let p_d = params(2.85, 10, Some(0.999));
        let u = te_envelope_uniform(&p_u, 1.0, 100).unwrap();
        let d = te_envelope_discounted(&p_d, 1.0, 100).unwrap();
        for t in [20usize, 50, 100] {
            let rel = (d.at(t) - u.at(t)).abs() / u.at(t);
            assert!(rel < 0.06, "t={t} rel={rel}");
        }
    }

    #[test]
    fn ate_floor_values() {
        let alpha = 0.715f64.powi(10);
        let p = params(2.85, 10, Some(0.7));
        let oracle = 200.0 * 0.3 * alpha / (1.0 - alpha);
        assert!((ate_floor(&p).unwrap() - oracle).abs() < 1e-12);
        assert!((oracle - 2.1709401611).abs() < 1e-9);

        let p = params(2.85, 10, Some(0.99));
        assert!((ate_floor(&p).unwrap() - 0.0723646720).abs() < 1e-9);

        assert!(matches!(ate_floor(&params(2.0, 10, None)), Err(Error::Unsupported(_))));
    }

    #[test]
    fn min_budget_fig2() {
        let c = scalar(100.0);
        let threshold = (0.1f64 / 60.1).ln() / 0.715f64.ln();
        assert!((threshold - 19.07).abs() < 0.01);
        let e = min_budget(&c, 2.85, 0.7, 0.1).unwrap();
        assert_eq!(e, 20);
        let p = params(2.85, 20, Some(0.7));
        assert!(ate_floor(&p).unwrap() <= 0.1);
        assert!(ate_floor(&p.with_budget(19).unwrap()).unwrap() > 0.1);
    }

    #[test]
    fn min_budget_loose_and_invalid() {
        let c = scalar(100.0);
        assert_eq!(min_budget(&c, 2.85, 0.7, 1e6).unwrap(), 1);
        assert!(min_budget(&c, 2.85, 0.7, 0.0).is_err());
        assert!(min_budget(&c, 2.85, 0.7, -1.0).is_err());
        assert!(min_budget(&c, 25.0, 0.7, 0.1).is_err());
    }

    #[test]
    fn lemma3_examples() {
        let x = lemma3_limit(0.5, |_| 1.0, 0.0, 100);
        assert!((x - 2.0).abs() <= 1e-12);
        let x = lemma3_limit(0.9, |t| 1.0 + 1.0 / (t + 1) as f64, 5.0, 2000);
        assert!((x - 10.0).abs() <= 1e-2);
        assert!(lemma3_limit(0.5, |_| 0.0, 3.0, 200).abs() < 1e-12);
    }

    #[test]
    fn certificate_contents() {
        let p = params(2.85, 20, Some(0.7));
        let cert = certificate(&p, Some(0.1)).unwrap();
        assert_eq!(cert.min_budget, Some(20));
        assert!(cert.discounted.is_some());
        let cert = certificate(&params(2.0, 10, None), Some(0.1)).unwrap();
        assert_eq!(cert.ate_floor, 0.0);
        assert!(cert.discounted.is_none() && cert.min_budget.is_none());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn prop1_bound_and_lower_bound(alpha in 0.0001f64..0.95) {
            let c = prop1_constants(alpha).unwrap();
            for t in c.t0..=1000 {
                let brute = uniform_sum_s(t, alpha);
                prop_assert!(brute <= c.a / t as f64 * (1.0 + 1e-12), "t={t}");
                let lower = alpha / t as f64 * (1.0 - alpha.powi(t as i32 - 1)) / (1.0 - alpha);
                prop_assert!(brute >= lower * (1.0 - 1e-12));
            }
        }

        #[test]
        fn prop2_bound(alpha in 0.0001f64..0.95, gamma in 0.05f64..0.99) {
            let c = prop2_constants(alpha, gamma).unwrap();
            for t in c.t0..=500 {
                let s = discounted_sum_s(t, alpha, gamma);
                let bound = c.a_gamma * (1.0 - gamma) / one_minus_pow(gamma, t);
                prop_assert!(s <= bound * (1.0 + 1e-12), "t={t}");
            }
        }

        #[test]
        fn envelope_monotone_in_budget(
            eta in 0.5f64..=10.0,
            gamma in prop::option::of(0.05f64..0.99),
            gap in 0.0f64..50.0,
            budget in 1u32..30,
        ) {
            let lo = TheoryParams::new(scalar(100.0), eta, budget, gamma).unwrap();
            let hi = lo.with_budget(budget + 1).unwrap();
            let a = te_envelope(&lo, gap, 200).unwrap();
            let b = te_envelope(&hi, gap, 200).unwrap();
            for t in 1..=200 {
                prop_assert!(b.at(t) <= a.at(t) * (1.0 + 1e-12) + 1e-300, "t={t}");
            }
        }

        #[test]
        fn min_budget_meets_target(
            eta in 0.1f64..=10.0,
            gamma in 0.05f64..0.995,
            eps in 1e-4f64..10.0,
            c in 1.0f64..200.0,
        ) {
            let consts = scalar(c);
            let e = min_budget(&consts, eta, gamma, eps).unwrap();
            let p = TheoryParams::new(consts, eta, e, Some(gamma)).unwrap();
            prop_assert!(ate_floor(&p).unwrap() <= eps);
            if e > 1 {
                prop_assert!(ate_floor(&p.with_budget(e - 1).unwrap()).unwrap() > eps);
            }
        }
    }
}
