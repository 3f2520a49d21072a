//! Learning-rate and streaming-batch schedules.
//!
//! Step sizes follow `γ_t = C_γ n_t^β t^{-α}` and batch sizes come from one of
//! three families: constant, deterministic power law, or random within power-law
//! bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyper-parameters `(C_γ, α, β)` of the learning rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearningRateParams {
    pub c_gamma: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl LearningRateParams {
    pub fn new(c_gamma: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self {
            c_gamma,
            alpha,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_gamma.is_finite() && self.c_gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "c_gamma must be positive, got {}",
                self.c_gamma
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParameter(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        Ok(())
    }

    /// Unchecked `C_γ n^β t^{-α}` for real-valued `n` and `t`.
    #[inline]
    pub fn step(&self, n: f64, t: f64) -> f64 {
        self.c_gamma * n.powf(self.beta) * t.powf(-self.alpha)
    }
}

/// `γ_t = C_γ n_t^β t^{-α}`.
pub fn learning_rate(p: &LearningRateParams, n_t: u64, t: u64) -> Result<f64> {
    if t == 0 || n_t == 0 {
        return Err(Error::InvalidParameter(format!(
            "learning rate needs t >= 1 and n_t >= 1, got t={t}, n_t={n_t}"
        )));
    }
    Ok(p.step(n_t as f64, t as f64))
}

/// Streaming-batch schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BatchSchedule {
    /// `n_t = C_ρ`.
    Constant { c_rho: u64 },
    /// `n_t = max(1, round(C_ρ t^ρ))`, halves rounded up.
    Varying { c_rho: f64, rho: f64 },
    /// `n_t` uniform on the integers of `[C_L t^{ρ_L}, C_H t^{ρ_H}]`.
    RandomBounded {
        c_low: f64,
        rho_low: f64,
        c_high: f64,
        rho_high: f64,
    },
}

fn check_rho(name: &str, rho: f64) -> Result<()> {
    if rho > -1.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in (-1, 1), got {rho}"
        )))
    }
}

fn check_scale(name: &str, c: f64) -> Result<()> {
    if c.is_finite() && c >= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be >= 1, got {c}"
        )))
    }
}

impl BatchSchedule {
    pub fn constant(c_rho: u64) -> Self {
        BatchSchedule::Constant { c_rho }
    }

    pub fn varying(c_rho: f64, rho: f64) -> Self {
        BatchSchedule::Varying { c_rho, rho }
    }

    /// Checks parameter ranges. For random schedules the integer interval is
    /// checked to be non-empty for every `t <= horizon`.
    pub fn validate(&self, horizon: u64) -> Result<()> {
        match *self {
            BatchSchedule::Constant { c_rho } => {
                if c_rho == 0 {
                    return Err(Error::InvalidParameter("c_rho must be >= 1".into()));
                }
            }
            BatchSchedule::Varying { c_rho, rho } => {
                check_scale("c_rho", c_rho)?;
                check_rho("rho", rho)?;
            }
            BatchSchedule::RandomBounded {
                c_low,
                rho_low,
                c_high,
                rho_high,
            } => {
                check_scale("c_low", c_low)?;
                check_scale("c_high", c_high)?;
                check_rho("rho_low", rho_low)?;
                check_rho("rho_high", rho_high)?;
                if rho_low > rho_high {
                    return Err(Error::InvalidParameter(format!(
                        "rho_low ({rho_low}) exceeds rho_high ({rho_high})"
                    )));
                }
                for t in 1..=horizon {
                    let (lo, hi) = self.random_interval(t);
                    if lo > hi {
                        return Err(Error::InvalidParameter(format!(
                            "empty batch interval [{lo}, {hi}] at t={t}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        !matches!(self, BatchSchedule::RandomBounded { .. })
    }

    /// Nominal scale `C_ρ` (`C_L` for random schedules).
    pub fn c_rho(&self) -> f64 {
        match *self {
            BatchSchedule::Constant { c_rho } => c_rho as f64,
            BatchSchedule::Varying { c_rho, .. } => c_rho,
            BatchSchedule::RandomBounded { c_low, .. } => c_low,
        }
    }

    /// Nominal exponent `ρ` (`ρ_L` for random schedules, 0 for constant).
    pub fn rho(&self) -> f64 {
        match *self {
            BatchSchedule::Constant { .. } => 0.0,
            BatchSchedule::Varying { rho, .. } => rho,
            BatchSchedule::RandomBounded { rho_low, .. } => rho_low,
        }
    }

    // Raw integer bounds; may be empty if the schedule is invalid.
    fn random_interval(&self, t: u64) -> (u64, u64) {
        match *self {
            BatchSchedule::RandomBounded {
                c_low,
                rho_low,
                c_high,
                rho_high,
            } => {
                let tf = t as f64;
                let lo = (c_low * tf.powf(rho_low)).ceil().max(1.0) as u64;
                let hi = (c_high * tf.powf(rho_high)).floor() as u64;
                (lo, hi)
            }
            _ => {
                let n = self.deterministic_size(t);
                (n, n)
            }
        }
    }

    fn deterministic_size(&self, t: u64) -> u64 {
        match *self {
            BatchSchedule::Constant { c_rho } => c_rho,
            BatchSchedule::Varying { c_rho, rho } => {
                let x = c_rho * (t as f64).powf(rho);
                ((x + 0.5).floor() as u64).max(1)
            }
            BatchSchedule::RandomBounded { .. } => unreachable!(),
        }
    }

    /// Batch size at block `t` for a deterministic schedule.
    ///
    /// Panics for random schedules; use [`batch_size`] there.
    pub fn size_at(&self, t: u64) -> u64 {
        assert!(self.is_deterministic(), "random schedule needs an rng");
        self.deterministic_size(t)
    }

    /// Mean batch size at block `t`; exact for deterministic schedules.
    pub fn expected_size(&self, t: u64) -> f64 {
        let (lo, hi) = self.random_interval(t);
        let hi = hi.max(lo);
        (lo as f64 + hi as f64) / 2.0
    }
}

/// Draws the batch size for block `t`. The rng is only touched by random schedules.
///
/// A random schedule whose interval is empty at `t` (which [`BatchSchedule::validate`]
/// rejects) yields the lower end.
pub fn batch_size<R: Rng + ?Sized>(s: &BatchSchedule, t: u64, rng: &mut R) -> Result<u64> {
    if t == 0 {
        return Err(Error::InvalidParameter("batch index t must be >= 1".into()));
    }
    Ok(match s {
        BatchSchedule::RandomBounded { .. } => {
            let (lo, hi) = s.random_interval(t);
            if hi <= lo {
                lo
            } else {
                rng.random_range(lo..=hi)
            }
        }
        _ => s.deterministic_size(t),
    })
}

/// `N_t = Σ_{i≤t} n_i` for a deterministic schedule.
pub fn cumulative_samples(s: &BatchSchedule, t: u64) -> Result<u64> {
    match *s {
        BatchSchedule::Constant { c_rho } => Ok(c_rho * t),
        BatchSchedule::Varying { .. } => Ok((1..=t).map(|i| s.deterministic_size(i)).sum()),
        BatchSchedule::RandomBounded { .. } => Err(Error::InvalidParameter(
            "cumulative samples of a random schedule depend on the path".into(),
        )),
    }
}

/// Effective rate exponent and the positive part of the batch exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateExponents {
    pub phi: f64,
    pub rho_tilde: f64,
    /// Whether `α - βρ̃` lies in `(1/2, 1)`.
    pub valid: bool,
}

/// `φ = ((1-β)ρ̃ + α)/(1 + ρ̃)` with `ρ̃ = max(ρ, 0)`.
///
/// For random schedules `φ' = ((1-β)ρ̃_L + α)/(1 + ρ̃_H)`.
pub fn rate_exponents(p: &LearningRateParams, s: &BatchSchedule) -> RateExponents {
    let in_range = |x: f64| x > 0.5 && x < 1.0;
    match *s {
        BatchSchedule::Constant { .. } => RateExponents {
            phi: p.alpha,
            rho_tilde: 0.0,
            valid: in_range(p.alpha),
        },
        BatchSchedule::Varying { rho, .. } => {
            let rt = rho.max(0.0);
            RateExponents {
                phi: ((1.0 - p.beta) * rt + p.alpha) / (1.0 + rt),
                rho_tilde: rt,
                valid: in_range(p.alpha - p.beta * rt),
            }
        }
        BatchSchedule::RandomBounded {
            rho_low, rho_high, ..
        } => {
            let lo = rho_low.max(0.0);
            let hi = rho_high.max(0.0);
            RateExponents {
                phi: ((1.0 - p.beta) * lo + p.alpha) / (1.0 + hi),
                rho_tilde: lo,
                valid: in_range(p.alpha - p.beta * hi),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn learning_rate_closed_forms() {
        let p = LearningRateParams::new(1.0, 2.0 / 3.0, 0.0).unwrap();
        assert!((learning_rate(&p, 8, 8).unwrap() - 0.25).abs() < 1e-15);
        let p = LearningRateParams::new(1.0, 2.0 / 3.0, 1.0 / 3.0).unwrap();
        assert!((learning_rate(&p, 8, 8).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn learning_rate_high_precision_value() {
        // 2.5 * 13^0.2 * 97^-0.75 evaluated with 50-digit arithmetic.
        let p = LearningRateParams::new(2.5, 0.75, 0.2).unwrap();
        let got = learning_rate(&p, 13, 97).unwrap();
        let want = 0.135_098_298_224_231_46;
        assert!((got - want).abs() / want < 1e-14, "{got}");
    }

    #[test]
    fn learning_rate_rejects_zero() {
        let p = LearningRateParams::new(1.0, 0.5, 0.0).unwrap();
        assert!(learning_rate(&p, 0, 1).is_err());
        assert!(learning_rate(&p, 1, 0).is_err());
    }

    #[test]
    fn parameter_ranges() {
        assert!(LearningRateParams::new(0.0, 0.5, 0.0).is_err());
        assert!(LearningRateParams::new(1.0, 0.0, 0.0).is_err());
        assert!(LearningRateParams::new(1.0, 1.2, 0.0).is_err());
        assert!(LearningRateParams::new(1.0, 1.0, 1.0).is_ok());
        assert!(LearningRateParams::new(1.0, 0.5, -0.1).is_err());
    }

    #[test]
    fn batch_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(batch_size(&BatchSchedule::constant(8), 100, &mut rng).unwrap(), 8);
        assert_eq!(batch_size(&BatchSchedule::varying(8.0, 0.5), 4, &mut rng).unwrap(), 16);
        assert_eq!(batch_size(&BatchSchedule::varying(1.0, -0.5), 9, &mut rng).unwrap(), 1);
        assert!(batch_size(&BatchSchedule::constant(8), 0, &mut rng).is_err());
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(BatchSchedule::varying(1.5, 0.3).size_at(1), 2);
        assert_eq!(BatchSchedule::varying(2.5, -0.3).size_at(1), 3);
        assert_eq!(BatchSchedule::varying(2.0, 0.5).size_at(2), 3);
    }

    #[test]
    fn cumulative() {
        assert_eq!(cumulative_samples(&BatchSchedule::constant(8), 5).unwrap(), 40);
        assert_eq!(cumulative_samples(&BatchSchedule::constant(8), 0).unwrap(), 0);
        assert_eq!(cumulative_samples(&BatchSchedule::varying(8.0, 0.5), 0).unwrap(), 0);
        assert_eq!(cumulative_samples(&BatchSchedule::varying(8.0, 0.5), 4).unwrap(), 49);
        let r = BatchSchedule::RandomBounded {
            c_low: 1.0,
            rho_low: 0.0,
            c_high: 4.0,
            rho_high: 0.0,
        };
        assert!(cumulative_samples(&r, 3).is_err());
    }

    #[test]
    fn random_interval_respected() {
        let s = BatchSchedule::RandomBounded {
            c_low: 2.0,
            rho_low: 0.2,
            c_high: 5.0,
            rho_high: 0.5,
        };
        s.validate(1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for t in 1..1000u64 {
            let n = batch_size(&s, t, &mut rng).unwrap() as f64;
            let tf = t as f64;
            assert!(n >= 2.0 * tf.powf(0.2) && n <= 5.0 * tf.powf(0.5));
        }
    }

    #[test]
    fn empty_random_interval_is_a_validation_error() {
        let s = BatchSchedule::RandomBounded {
            c_low: 1.2,
            rho_low: 0.0,
            c_high: 1.8,
            rho_high: 0.0,
        };
        assert!(s.validate(1).is_err());
        let s = BatchSchedule::RandomBounded {
            c_low: 1.0,
            rho_low: 0.5,
            c_high: 1.0,
            rho_high: 0.1,
        };
        assert!(s.validate(10).is_err());
    }

    #[test]
    fn exponents() {
        let p = LearningRateParams::new(1.0, 2.0 / 3.0, 1.0 / 3.0).unwrap();
        let e = rate_exponents(&p, &BatchSchedule::varying(8.0, 0.5));
        assert!((e.phi - 2.0 / 3.0).abs() < 1e-15);
        // α - βρ̃ = 1/2 sits on the open boundary.
        assert!(!e.valid);
        let e = rate_exponents(&p, &BatchSchedule::varying(8.0, 0.25));
        assert!((e.phi - 2.0 / 3.0).abs() < 1e-15 && e.valid);
        let p0 = LearningRateParams::new(1.0, 2.0 / 3.0, 0.0).unwrap();
        let e = rate_exponents(&p0, &BatchSchedule::constant(8));
        assert!((e.phi - 2.0 / 3.0).abs() < 1e-15 && e.rho_tilde == 0.0);
        let p1 = LearningRateParams::new(1.0, 1.0, 0.5).unwrap();
        let e = rate_exponents(&p1, &BatchSchedule::varying(1.0, 0.8));
        assert!((e.phi - 7.0 / 9.0).abs() < 1e-15 && e.valid);
        let e = rate_exponents(&p1, &BatchSchedule::constant(1));
        assert!(!e.valid);
    }

    #[test]
    fn serde_shape() {
        let s: BatchSchedule =
            serde_json::from_str(r#"{"kind": "varying", "c_rho": 8, "rho": 0.5}"#).unwrap();
        assert_eq!(s, BatchSchedule::varying(8.0, 0.5));
        assert!(serde_json::from_str::<BatchSchedule>(
            r#"{"kind": "varying", "c_rho": 8, "rho": 0.5, "bogus": 1}"#
        )
        .is_err());
        let p: LearningRateParams =
            serde_json::from_str(r#"{"c_gamma": 1.0, "alpha": 0.6667, "beta": 0.3333}"#).unwrap();
        assert_eq!(p.alpha, 0.6667);
    }
}
