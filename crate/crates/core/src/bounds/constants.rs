//! Constants shared by the closed-form bounds.

use statrs::function::gamma::{gamma_ur, ln_gamma};

use super::{ln0, log_sum_exp};
use crate::error::{Error, Result};
use crate::models::ProblemConstants;
use crate::schedules::{rate_exponents, BatchSchedule, LearningRateParams};
use crate::summation::CompensatedSum;

/// Tail tolerance for the series.
pub const SERIES_TOL: f64 = 1e-15;
/// Terms summed explicitly before the tail is enclosed by integrals instead.
pub const SERIES_MAX_TERMS: u64 = 2_000_000;

/// A summed series with an upper bound on the overestimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    /// Never below the true value.
    pub value: f64,
    /// Number of terms summed explicitly.
    pub terms: u64,
    /// `value` exceeds the true sum by at most this much.
    pub tail_bound: f64,
}

/// `Σ_{i≥0} i^r exp(-c i^s)` with `0^0 = 1`, for `r >= 0`, `c > 0`, `0 < s`.
///
/// Past the mode the terms decrease, so `∫_M^∞` bounds the tail after `M`; that
/// integral is `Γ(a) Q(a, c M^s) / (s c^a)` with `a = (r+1)/s`. Terms are summed
/// until it drops below [`SERIES_TOL`]. Slowly decaying series stop after
/// [`SERIES_MAX_TERMS`] and enclose the convex tail between its trapezoid and
/// midpoint integrals instead. When even the convex region is out of reach, the
/// whole sum is `∫_0^∞` plus at most one peak term.
pub fn stretched_exp_series(r: f64, c: f64, s: f64) -> Result<SeriesValue> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Divergent(format!(
            "series exponent must be positive, got {s}"
        )));
    }
    if !(c > 0.0) || !c.is_finite() || !(r >= 0.0) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "series needs c > 0 and r >= 0, got c = {c}, r = {r}"
        )));
    }
    let a = (r + 1.0) / s;
    let ln_scale = ln_gamma(a) - s.ln() - a * c.ln();
    // ∫_m^∞ x^r exp(-c x^s) dx
    let tail = |m: f64| (ln_scale + gamma_ur(a, c * m.powf(s)).ln()).exp();
    let term = |x: f64| {
        let p = if r == 0.0 { 1.0 } else { x.powf(r) };
        p * (-c * x.powf(s)).exp()
    };
    let partial = |upto: u64| {
        let mut acc = CompensatedSum::new();
        for i in 0..upto {
            acc.add(term(i as f64));
        }
        acc.value()
    };

    let mode = if r > 0.0 { (r / (c * s)).powf(1.0 / s) } else { 0.0 };
    let mut lo = (mode.ceil() as u64).max(1);
    if tail(lo as f64) >= SERIES_TOL {
        let mut hi = lo;
        while tail(hi as f64) >= SERIES_TOL && hi < SERIES_MAX_TERMS {
            lo = hi;
            hi = (hi * 2).min(SERIES_MAX_TERMS);
        }
        if tail(hi as f64) >= SERIES_TOL {
            // Convex from x_c on, where the midpoint rule overestimates each term.
            let x_c = if r > 0.0 {
                ((r + r.sqrt()) / (c * s)).powf(1.0 / s)
            } else {
                0.0
            };
            let m = hi.max((x_c + 1.0).ceil() as u64);
            if m > 50 * SERIES_MAX_TERMS {
                // Unimodal terms: |Σ - ∫_0^∞| <= max term.
                let ln_peak = if r > 0.0 { r * mode.ln() - r / s } else { 0.0 };
                let peak = ln_peak.exp();
                return Ok(SeriesValue {
                    value: ln_scale.exp() + peak,
                    terms: 0,
                    tail_bound: 2.0 * peak,
                });
            }
            let mf = m as f64;
            let upper = tail(mf - 0.5);
            let lower = tail(mf) + term(mf) / 2.0;
            return Ok(SeriesValue {
                value: partial(m) + upper,
                terms: m,
                tail_bound: (upper - lower).max(0.0),
            });
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if tail(mid as f64) < SERIES_TOL {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        lo = hi;
    }
    let tb = tail(lo as f64);
    Ok(SeriesValue {
        value: partial(lo + 1) + tb,
        terms: lo + 1,
        tail_bound: tb,
    })
}

/// Constants of the constant-batch (`_c`) and varying-batch (`_v`) closed forms.
///
/// The exponential constants overflow `f64` for realistic `C_l`, so they are
/// stored as natural logarithms; `+∞` marks a constant that is not finite
/// because the step exponent is at or below 1/2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedConstants {
    pub ln_pi_c: f64,
    pub ln_pi_v: f64,
    pub ln_pi_c_prime: f64,
    pub ln_pi_v_prime: f64,
    pub ln_big_pi_c: f64,
    pub ln_big_pi_v: f64,
    pub ln_big_pi_c_prime: f64,
    pub ln_big_pi_v_prime: f64,
    pub a_inf: f64,
    pub a_inf_prime: f64,
    pub ln_gamma_c: f64,
    pub ln_gamma_v: f64,
}

impl DerivedConstants {
    pub fn pi_c(&self) -> f64 {
        self.ln_pi_c.exp()
    }
    pub fn pi_v(&self) -> f64 {
        self.ln_pi_v.exp()
    }
    pub fn pi_c_prime(&self) -> f64 {
        self.ln_pi_c_prime.exp()
    }
    pub fn pi_v_prime(&self) -> f64 {
        self.ln_pi_v_prime.exp()
    }
    pub fn big_pi_c(&self) -> f64 {
        self.ln_big_pi_c.exp()
    }
    pub fn big_pi_v(&self) -> f64 {
        self.ln_big_pi_v.exp()
    }
    pub fn big_pi_c_prime(&self) -> f64 {
        self.ln_big_pi_c_prime.exp()
    }
    pub fn big_pi_v_prime(&self) -> f64 {
        self.ln_big_pi_v_prime.exp()
    }
    pub fn gamma_c(&self) -> f64 {
        self.ln_gamma_c.exp()
    }
    pub fn gamma_v(&self) -> f64 {
        self.ln_gamma_v.exp()
    }
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

// x / (2a - 1) for the exponent of a constant that is only finite when a > 1/2.
fn over_two_a_minus_one(x: f64, a: f64) -> f64 {
    let d = 2.0 * a - 1.0;
    if d > 0.0 {
        x / d
    } else if x == 0.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `ln π_c`.
pub(crate) fn ln_pi_c(pc: &ProblemConstants, lr: &LearningRateParams, c_rho: f64) -> f64 {
    let (a, b, g) = (lr.alpha, lr.beta, lr.c_gamma);
    let inner = 2.0 * pc.c_l.powi(2) + c_rho * ind(c_rho > 1.0) * pc.c_nabla.powi(2);
    over_two_a_minus_one(4.0 * a * g * g * inner / c_rho.powf(1.0 - 2.0 * b), a)
}

/// `ln π_v`.
pub(crate) fn ln_pi_v(pc: &ProblemConstants, lr: &LearningRateParams, c_rho: f64, rho: f64) -> f64 {
    let (a, b, g) = (lr.alpha, lr.beta, lr.c_gamma);
    let e = a - b * rho.max(0.0);
    let inner = 2.0 * pc.c_l.powi(2) + pc.c_nabla.powi(2);
    over_two_a_minus_one(4.0 * e * g * g * c_rho.powf(2.0 * b) * inner, e)
}

// ln(xy) with 0 · ∞ = 0.
fn ln_mul(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY || b == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        a + b
    }
}

/// `ln(δ₀ + 2σ²/C_l²)`.
pub(crate) fn ln_initial(pc: &ProblemConstants) -> f64 {
    ln0(pc.delta0 + 2.0 * pc.sigma.powi(2) / pc.c_l.powi(2))
}

/// Every constant for the given hyper-parameters. The `_c` family uses the
/// schedule's `C_ρ` as a constant batch size; the `_v` family uses `(C_ρ, ρ)`.
pub fn derived_constants(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    schedule: &BatchSchedule,
) -> Result<DerivedConstants> {
    pc.validate()?;
    lr.validate()?;
    if lr.alpha >= 1.0 {
        return Err(Error::Divergent(format!(
            "alpha = {} makes the averaging series diverge",
            lr.alpha
        )));
    }
    let c_rho = schedule.c_rho();
    let rho = schedule.rho();
    let ex = rate_exponents(lr, schedule);
    let rt = ex.rho_tilde;
    let nonneg = ind(rho >= 0.0);
    let (a, b, g, mu) = (lr.alpha, lr.beta, lr.c_gamma, pc.mu);
    let (cl, cn, cd, tau4) = (pc.c_l, pc.c_nabla, pc.c_delta, pc.tau.powi(4));

    let ln_pi_c = ln_pi_c(pc, lr, c_rho);
    let ln_pi_v = ln_pi_v(pc, lr, c_rho, rho);
    let ln_pi_c_prime = ln_mul(ln_initial(pc), ln_pi_c);
    let ln_pi_v_prime = ln_mul(ln_initial(pc), ln_pi_v);

    let g2 = g * g;
    let g4 = g2 * g2;
    let r2 = c_rho.powf(2.0 * b);
    let r4 = r2 * r2;
    let big = ind(c_rho > 1.0);
    let ln_big_pi_c = over_two_a_minus_one(64.0 * a * cl.powi(2) * g2 * r2 / c_rho, a)
        + 192.0 * cl.powi(4) * g4 * r4 / c_rho.powi(3)
        + 456.0 * cl.powi(4) * g4 * r4 * big / c_rho.powi(2)
        + over_two_a_minus_one(32.0 * a * cn.powi(2) * g2 * r2 * big, a)
        + 192.0 * cn.powi(4) * g4 * r4 * big;
    let e = a - b * rt;
    let ln_big_pi_v = over_two_a_minus_one(32.0 * e * g2 * r2 * (2.0 * cl.powi(2) + cn.powi(2)), e)
        + 192.0 * g4 * r4 * (4.0 * cl.powi(4) + cn.powi(4));
    let init4 = pc.delta0_4 + 2.0 * tau4 / cl.powi(4);
    let ln_big_pi_c_prime = ln_mul(
        ln0(init4 + 4.0 * tau4 * g / (mu * cl.powi(2) * c_rho.powf(1.0 - b))),
        ln_big_pi_c,
    );
    let ln_big_pi_v_prime = ln_mul(ln0(init4 + 4.0 * tau4 * g / (mu * cl.powi(2))), ln_big_pi_v);

    let a_inf = stretched_exp_series(
        0.0,
        mu * g * c_rho.powf(b) / 2f64.powf(2.0 - a),
        1.0 - a,
    )?
    .value;
    if ex.phi >= 1.0 {
        return Err(Error::Divergent(format!(
            "rate exponent {} makes the averaging series diverge",
            ex.phi
        )));
    }
    let sv = (1.0 - ex.phi) * (1.0 + rt);
    let a_inf_prime = stretched_exp_series(
        rt,
        mu * g * c_rho.powf(b * nonneg) / 2f64.powf(1.0 + sv),
        sv,
    )?
    .value;

    let ln_gc = (1.0 / (g * c_rho.powf(b))).ln();
    let ln_d0 = 0.5 * ln0(pc.delta0);
    let ln_gamma_c = log_sum_exp(&[
        (1.0 / (g * c_rho.powf(b)) + cl).ln() + ln_d0,
        cl.ln() + 0.5 * ln_pi_c_prime + 0.5 * a_inf.ln() - 0.5 * c_rho.ln(),
        0.5 * ln_pi_c_prime + a_inf.ln() + ln_gc,
        ln0(cd) + 0.5 * ln_big_pi_c_prime + a_inf.ln(),
    ]);
    let two_rt = rt * std::f64::consts::LN_2;
    let ln_gamma_v = log_sum_exp(&[
        (1.0 / (g * c_rho.powf(b)) + cl).ln() + ln_d0,
        two_rt + cl.ln() + 0.5 * ln_pi_v_prime + 0.5 * a_inf_prime.ln() - 0.5 * c_rho.ln(),
        std::f64::consts::LN_2 + 0.5 * ln_pi_v_prime + a_inf_prime.ln() + ln_gc,
        two_rt + ln0(cd) + 0.5 * ln_big_pi_v_prime + a_inf_prime.ln(),
    ]);

    Ok(DerivedConstants {
        ln_pi_c,
        ln_pi_v,
        ln_pi_c_prime,
        ln_pi_v_prime,
        ln_big_pi_c,
        ln_big_pi_v,
        ln_big_pi_c_prime,
        ln_big_pi_v_prime,
        a_inf,
        a_inf_prime,
        ln_gamma_c,
        ln_gamma_v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn unit_constants() -> ProblemConstants {
        ProblemConstants {
            mu: 1.0,
            c_nabla: 1.0,
            c_l: 1.0,
            sigma: 1.0,
            tau: 1.0,
            c_delta: 0.0,
            lambda_cr: 1.0,
            delta0: 1.0,
            delta0_4: 1.0,
            estimated: false,
        }
    }

    #[test]
    fn series_large_rate_is_one() {
        let s = stretched_exp_series(0.0, 1e6, 0.5).unwrap();
        assert!((s.value - 1.0).abs() < 1e-15);
    }

    #[test]
    fn series_geometric() {
        // s = 1, r = 0: Σ e^{-ci} = 1/(1 - e^{-c})
        let c = 0.3f64;
        let s = stretched_exp_series(0.0, c, 1.0).unwrap();
        let want = 1.0 / (1.0 - (-c).exp());
        assert!((s.value - want).abs() < 1e-12, "{} vs {want}", s.value);
        assert!(s.tail_bound < SERIES_TOL);
    }

    #[test]
    fn slow_series_is_enclosed() {
        // c = 0.05, s = 0.25 needs far more terms than the explicit cap.
        let v = stretched_exp_series(0.0, 0.05, 0.25).unwrap();
        assert_eq!(v.terms, SERIES_MAX_TERMS);
        assert!(v.tail_bound < 1e-6 * v.value, "{v:?}");
        let w = stretched_exp_series(0.5, 0.05, 0.25).unwrap();
        assert!(w.value > v.value);
    }

    #[test]
    fn series_rejects_nonpositive_exponent() {
        assert!(matches!(
            stretched_exp_series(0.0, 1.0, 0.0),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn alpha_one_rejected() {
        let lr = LearningRateParams::new(1.0, 1.0, 0.0).unwrap();
        let r = derived_constants(&unit_constants(), &lr, &BatchSchedule::constant(1));
        assert!(matches!(r, Err(Error::Divergent(_))));
    }

    #[test]
    fn pi_c_unit_batch_collapses() {
        let pc = unit_constants();
        let lr = LearningRateParams::new(0.7, 0.75, 0.0).unwrap();
        let want = 8.0 * 0.75 * 0.49 / 0.5;
        assert!((ln_pi_c(&pc, &lr, 1.0) - want).abs() < 1e-12);
    }
}
