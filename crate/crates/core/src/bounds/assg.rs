//! Bounds on the averaged iterate, `(E‖θ̄_t − θ*‖²)^{1/2}`.

use super::constants::derived_constants;
use super::ssg::{blocks_for, fourth_moment_sweep, need_t, ssg_general_sweep};
use super::{mul0, BlockSeq, BoundCurve, BoundQuantity, BoundValue, DerivedConstants, REGIME_TIE_TOL};
use crate::error::{Error, Result};
use crate::models::ProblemConstants;
use crate::schedules::{rate_exponents, BatchSchedule, LearningRateParams};

/// General averaged bound for `t = 1..=T`, given bounds on `δ_0..=δ_T` and `Δ_0..=Δ_T`.
pub fn assg_general_from_curves(
    pc: &ProblemConstants,
    b: &BlockSeq,
    delta: &[f64],
    delta4: &[f64],
) -> Result<Vec<BoundValue>> {
    let len = b.len();
    for (name, c) in [("delta", delta), ("delta4", delta4)] {
        if c.len() < len + 1 {
            return Err(Error::GridMismatch(format!(
                "{name} curve has {} points, need {}",
                c.len(),
                len + 1
            )));
        }
    }
    let (n, g) = (&b.n, &b.gamma);
    let mu = pc.mu;
    let cum = b.cumulative();
    let (mut a, mut bb, mut c) = (0.0f64, 0.0f64, 0.0f64);
    let mut out = Vec::with_capacity(len);
    for t in 1..=len {
        // Sums run to t-1 for A and B and to t-1 (from 0) for C.
        if t >= 2 {
            let i = t - 1;
            let jump = (n[i] / g[i] - n[i - 1] / g[i - 1]).abs();
            a += mul0(jump, delta[i].sqrt());
            bb += mul0(n[i], delta[i]);
        }
        c += mul0(n[t - 1], delta4[t - 1].sqrt());
        let nt = cum[t];
        let scale = 1.0 / (nt * mu);
        out.push(BoundValue::from_terms(
            vec![
                ("leading", (pc.lambda_cr / nt).sqrt()),
                ("telescoping", scale * a),
                ("last_iterate", mul0(n[t - 1] / g[t - 1] * scale, delta[t].sqrt())),
                ("initial", n[0] * scale * (1.0 / g[0] + pc.c_l) * pc.delta0.sqrt()),
                ("martingale", pc.c_l * scale * bb.sqrt()),
                ("rest", mul0(pc.c_delta * scale, c)),
            ],
            true,
        ));
    }
    Ok(out)
}

/// General averaged bound at `t`, from bounds on `δ_0..=δ_t` and `Δ_0..=Δ_t`.
pub fn assg_bound_general(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    t: u64,
    delta_curve: &[f64],
    delta4_curve: &[f64],
) -> Result<BoundValue> {
    need_t(t)?;
    pc.validate()?;
    let b = BlockSeq::from_schedule(lr, batches, t)?;
    Ok(assg_general_from_curves(pc, &b, delta_curve, delta4_curve)?.swap_remove(t as usize - 1))
}

/// General averaged bound at each checkpoint, using the general bounds on `δ_t`
/// and `Δ_t` as inputs.
pub fn assg_general_curve(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    checkpoints: &[u64],
) -> Result<BoundCurve> {
    pc.validate()?;
    let (b, cum) = blocks_for(lr, batches, checkpoints)?;
    let mut delta = vec![pc.delta0];
    delta.extend(ssg_general_sweep(pc, &b).iter().map(|s| s.value().total));
    let mut delta4 = vec![pc.delta0_4];
    delta4.extend(fourth_moment_sweep(pc, &b).iter().map(|v| v.total));
    let vals = assg_general_from_curves(pc, &b, &delta, &delta4)?;
    let mut c = BoundCurve::new("assg_general", BoundQuantity::RootMeanSquare);
    for &t in checkpoints {
        c.push(t, cum[t as usize] as u64, &vals[t as usize - 1]);
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Regime {
    Below,
    Tie,
    Above,
}

fn regime(e: f64) -> Regime {
    let d = e - 2.0 / 3.0;
    if d.abs() <= REGIME_TIE_TOL {
        Regime::Tie
    } else if d < 0.0 {
        Regime::Below
    } else {
        Regime::Above
    }
}

fn positive_n(n_total: u64) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::InvalidParameter("n_total must be positive".into()));
    }
    Ok(n_total as f64)
}

/// Closed-form averaged bound for a constant batch size.
pub fn assg_bound_constant(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    c_rho: u64,
    n_total: u64,
) -> Result<BoundValue> {
    let dc = derived_constants(pc, lr, &BatchSchedule::constant(c_rho))?;
    assg_bound_constant_with(pc, lr, c_rho, n_total, &dc)
}

/// [`assg_bound_constant`] with precomputed constants.
pub fn assg_bound_constant_with(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    c_rho: u64,
    n_total: u64,
    dc: &DerivedConstants,
) -> Result<BoundValue> {
    let n = positive_n(n_total)?;
    if c_rho == 0 {
        return Err(Error::InvalidParameter("c_rho must be positive".into()));
    }
    let cr = c_rho as f64;
    let (a, b, g, mu) = (lr.alpha, lr.beta, lr.c_gamma, pc.mu);
    let (sigma, tau2, cd) = (pc.sigma, pc.tau * pc.tau, pc.c_delta);
    let s = cr.powf(1.0 - a - b);
    let mu32 = mu.powf(1.5);

    let noise = 6.0 * sigma * s.sqrt() / (g.sqrt() * mu32 * n.powf(1.0 - a / 2.0));
    let hessian = 2f64.powf(a) * 6.0 * cd * tau2 * g / (s * mu * mu * n.powf(a));
    let transient = (s.ln() + 0.5 * dc.ln_pi_c_prime + dc.a_inf.ln()
        - (g * mu).ln()
        - (1.0 - a) * n.ln())
    .exp();
    let martingale = 2.0 * pc.c_l * sigma * g.sqrt() / (s.sqrt() * mu32 * n.powf((1.0 + a) / 2.0));
    let initial = (cr.ln() + dc.ln_gamma_c - mu.ln() - n.ln()).exp();
    let big = if cr > 1.0 { 7.0 } else { 0.0 };
    let r = match regime(a) {
        Regime::Below => (n / cr).powf(1.0 - 1.5 * a),
        Regime::Tie => n.ln(),
        Regime::Above => 3.0 * a / (3.0 * a - 2.0),
    };
    let hessian_tail = (6.0 + big) * 2f64.powf(1.5 * a) * cd * tau2 * g.powf(1.5) * cr.powf(1.5 * b)
        / (mu32 * n)
        * r;
    Ok(BoundValue::from_terms(
        vec![
            ("leading", (pc.lambda_cr / n).sqrt()),
            ("noise", noise),
            ("hessian", hessian),
            ("transient", transient),
            ("martingale", martingale),
            ("initial", initial),
            ("hessian_tail", hessian_tail),
        ],
        a > 0.5 && a < 1.0,
    ))
}

/// Closed-form averaged bound for batches `C_ρ t^ρ`.
pub fn assg_bound_varying(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    c_rho: f64,
    rho: f64,
    n_total: u64,
) -> Result<BoundValue> {
    let s = BatchSchedule::varying(c_rho, rho);
    s.validate(1)?;
    let dc = derived_constants(pc, lr, &s)?;
    assg_bound_varying_with(pc, lr, c_rho, rho, n_total, &dc)
}

/// [`assg_bound_varying`] with precomputed constants.
pub fn assg_bound_varying_with(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    c_rho: f64,
    rho: f64,
    n_total: u64,
    dc: &DerivedConstants,
) -> Result<BoundValue> {
    let n = positive_n(n_total)?;
    let ex = rate_exponents(lr, &BatchSchedule::varying(c_rho, rho));
    let (phi, rt) = (ex.phi, ex.rho_tilde);
    let nn = if rho >= 0.0 { 1.0 } else { 0.0 };
    let (b, g, mu) = (lr.beta, lr.c_gamma, pc.mu);
    let (sigma, tau2, cd) = (pc.sigma, pc.tau * pc.tau, pc.c_delta);
    let s = c_rho.powf(1.0 - phi - b);
    let half = c_rho.powf((1.0 - phi - b) / 2.0 * nn);
    let mu32 = mu.powf(1.5);
    let k = 1.0 + rt;

    let noise = 2f64.powf(3.0 + phi * k) * sigma * half / (mu32 * g.sqrt() * n.powf(1.0 - phi / 2.0));
    let hessian = 2f64.powf((1.0 + phi) * k - 2.0) * cd * tau2 * g / (mu * mu * s * n.powf(phi));
    let transient = (s.ln() + 0.5 * dc.ln_pi_v_prime + dc.a_inf_prime.ln()
        - (g * mu).ln()
        - (1.0 - phi) * n.ln())
    .exp();
    let martingale =
        2f64.powf(phi * k / 2.0) * pc.c_l * sigma * g.sqrt() / (mu32 * half * n.powf((1.0 + phi) / 2.0));
    let initial = (c_rho.ln() + dc.ln_gamma_v - mu.ln() - n.ln()).exp();
    let e = lr.alpha - b * rt;
    let r = match regime(e) {
        Regime::Below => (n / c_rho).powf(1.5 * (1.0 - phi)),
        Regime::Tie => n.ln(),
        Regime::Above => 3.0 * e / (3.0 * e - 2.0),
    };
    let hessian_tail = 2f64.powf(1.5 * (1.0 + phi) * k) * cd * tau2 * g.powf(1.5)
        * c_rho.powf(1.0 + 1.5 * b - nn)
        / (mu32 * n)
        * r;
    Ok(BoundValue::from_terms(
        vec![
            ("leading", (pc.lambda_cr / n).sqrt()),
            ("noise", noise),
            ("hessian", hessian),
            ("transient", transient),
            ("martingale", martingale),
            ("initial", initial),
            ("hessian_tail", hessian_tail),
        ],
        ex.valid,
    ))
}
