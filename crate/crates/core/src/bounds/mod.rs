//! Closed-form non-asymptotic error bounds, evaluated as named terms.
//!
//! Exponential constants are carried as natural logarithms; a term whose
//! logarithm exceeds the `f64` range evaluates to `+∞` rather than NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::schedules::{BatchSchedule, LearningRateParams};

mod assg;
mod constants;
mod ssg;

pub use assg::{
    assg_bound_constant, assg_bound_constant_with, assg_bound_general, assg_bound_varying,
    assg_bound_varying_with, assg_general_curve, assg_general_from_curves,
};
pub use constants::{derived_constants, stretched_exp_series, DerivedConstants, SeriesValue};
pub use ssg::{
    fourth_moment_bound, fourth_moment_curve, fourth_moment_sweep, ssg_bound_constant,
    ssg_bound_general, ssg_bound_varying, ssg_general_curve, ssg_general_sweep, SsgGeneral,
};

/// Tolerance for treating an exponent as exactly `2/3` in the regime switches.
pub const REGIME_TIE_TOL: f64 = 1e-4;

/// A bound evaluated at one point: the terms and their sum.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundValue {
    pub total: f64,
    pub terms: Vec<(&'static str, f64)>,
    /// False when the hyper-parameters are outside the region the bound is stated for.
    pub valid: bool,
}

impl BoundValue {
    pub fn from_terms(terms: Vec<(&'static str, f64)>, valid: bool) -> Self {
        let total = terms.iter().map(|(_, v)| v).sum();
        Self {
            total,
            terms,
            valid,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

/// What a curve bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundQuantity {
    /// `E‖θ_t − θ*‖²`.
    MeanSquare,
    /// `(E‖θ̄_t − θ*‖²)^{1/2}`.
    RootMeanSquare,
    /// `E‖θ_t − θ*‖⁴`.
    FourthMoment,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundPoint {
    pub t: u64,
    pub n_total: u64,
    pub total: f64,
    pub terms: Vec<(String, f64)>,
}

/// A bound evaluated on a checkpoint grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub name: String,
    pub quantity: BoundQuantity,
    pub valid: bool,
    pub points: Vec<BoundPoint>,
}

impl BoundCurve {
    pub fn new(name: impl Into<String>, quantity: BoundQuantity) -> Self {
        Self {
            name: name.into(),
            quantity,
            valid: true,
            points: Vec::new(),
        }
    }

    pub fn push(&mut self, t: u64, n_total: u64, v: &BoundValue) {
        self.valid &= v.valid;
        self.points.push(BoundPoint {
            t,
            n_total,
            total: v.total,
            terms: v.terms.iter().map(|(n, x)| (n.to_string(), *x)).collect(),
        });
    }

    /// Bound on the mean-square error implied by this curve.
    pub fn mean_square_totals(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| match self.quantity {
                BoundQuantity::RootMeanSquare => p.total * p.total,
                _ => p.total,
            })
            .collect()
    }
}

/// Evaluates `f` at each `(t, N_t)` pair.
pub fn curve_from(
    name: &str,
    quantity: BoundQuantity,
    grid: &[(u64, u64)],
    mut f: impl FnMut(u64) -> Result<BoundValue>,
) -> Result<BoundCurve> {
    let mut c = BoundCurve::new(name, quantity);
    for &(t, n_total) in grid {
        c.push(t, n_total, &f(n_total)?);
    }
    Ok(c)
}

/// Expected suboptimality `E[L(θ_t) − L(θ*)] <= C_l δ_t / 2`.
pub fn suboptimality_bound(c_l: f64, delta: f64) -> f64 {
    c_l * delta / 2.0
}

/// Per-block batch sizes and step sizes `n_1..n_T`, `γ_1..γ_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSeq {
    pub n: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl BlockSeq {
    /// Blocks `1..=horizon` of a deterministic schedule.
    pub fn from_schedule(lr: &LearningRateParams, s: &BatchSchedule, horizon: u64) -> Result<Self> {
        if !s.is_deterministic() {
            return Err(Error::InvalidParameter(
                "general bounds need a deterministic batch schedule".into(),
            ));
        }
        lr.validate()?;
        s.validate(horizon)?;
        let n: Vec<f64> = (1..=horizon).map(|t| s.size_at(t) as f64).collect();
        let gamma = n
            .iter()
            .enumerate()
            .map(|(i, &ni)| lr.step(ni, (i + 1) as f64))
            .collect();
        Ok(Self { n, gamma })
    }

    pub fn from_parts(n: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        if n.len() != gamma.len() {
            return Err(Error::DimensionMismatch {
                expected: n.len(),
                got: gamma.len(),
            });
        }
        if n.iter().any(|&x| !(x >= 1.0)) || gamma.iter().any(|&g| !(g > 0.0)) {
            return Err(Error::InvalidParameter(
                "need n_i >= 1 and gamma_i > 0".into(),
            ));
        }
        Ok(Self { n, gamma })
    }

    pub fn len(&self) -> usize {
        self.n.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n.is_empty()
    }

    /// `N_t` for `t = 0..=T`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for &x in &self.n {
            acc += x;
            out.push(acc);
        }
        out
    }
}

/// `a · b` with `0 · ∞ = 0`.
#[inline]
pub(crate) fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// `ln(Σ exp(x_i))`, ignoring `-∞` entries.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(x)` with `ln(0) = -∞`.
#[inline]
pub(crate) fn ln0(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else {
        x.ln()
    }
}

/// Sliding maximum over windows `[lo(t), t]` whose left end never decreases.
pub(crate) struct WindowMax {
    idx: std::collections::VecDeque<(usize, f64)>,
}

impl WindowMax {
    pub fn new() -> Self {
        Self {
            idx: std::collections::VecDeque::new(),
        }
    }

    pub fn push(&mut self, i: usize, v: f64) {
        while let Some(&(_, b)) = self.idx.back() {
            if b <= v {
                self.idx.pop_back();
            } else {
                break;
            }
        }
        self.idx.push_back((i, v));
    }

    pub fn max_from(&mut self, lo: usize) -> f64 {
        while let Some(&(i, _)) = self.idx.front() {
            if i < lo {
                self.idx.pop_front();
            } else {
                break;
            }
        }
        self.idx.front().map_or(0.0, |&(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_max_matches_scan() {
        let xs = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0];
        let mut w = WindowMax::new();
        for t in 1..=xs.len() {
            w.push(t, xs[t - 1]);
            let lo = t.div_ceil(2);
            let want = xs[lo - 1..t].iter().copied().fold(f64::MIN, f64::max);
            assert_eq!(w.max_from(lo), want);
        }
    }

    #[test]
    fn log_sum_exp_edges() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
        assert!((log_sum_exp(&[1000.0, f64::NEG_INFINITY]) - 1000.0).abs() < 1e-12);
        assert_eq!(mul0(0.0, f64::INFINITY), 0.0);
    }

    #[test]
    fn block_seq_cumulative() {
        let lr = LearningRateParams::new(1.0, 0.5, 0.0).unwrap();
        let b = BlockSeq::from_schedule(&lr, &BatchSchedule::varying(8.0, 0.5), 4).unwrap();
        assert_eq!(b.cumulative(), vec![0.0, 8.0, 19.0, 33.0, 49.0]);
        let r = BatchSchedule::RandomBounded {
            c_low: 1.0,
            rho_low: 0.0,
            c_high: 2.0,
            rho_high: 0.0,
        };
        assert!(BlockSeq::from_schedule(&lr, &r, 4).is_err());
    }
}
