//! Last-iterate bounds on `δ_t = E‖θ_t − θ*‖²` and `Δ_t = E‖θ_t − θ*‖⁴`.

use super::constants::{ln_initial, ln_pi_c, ln_pi_v};
use super::{BlockSeq, BoundCurve, BoundQuantity, BoundValue, WindowMax};
use crate::error::{Error, Result};
use crate::models::ProblemConstants;
use crate::recursion::half_start;
use crate::schedules::{rate_exponents, BatchSchedule, LearningRateParams};

/// `exp(Σ xs)`, or 0 when some factor is `exp(-∞)`.
pub(crate) fn exp_sum(xs: &[f64]) -> f64 {
    if xs.contains(&f64::NEG_INFINITY) {
        0.0
    } else {
        xs.iter().sum::<f64>().exp()
    }
}

fn prefix(n: usize, f: impl Fn(usize) -> f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for i in 0..n {
        acc += f(i);
        p.push(acc);
    }
    p
}

fn ind(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Pieces of the general last-iterate bound at one `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsgGeneral {
    /// Log of the product of the three exponential factors.
    pub ln_decay: f64,
    /// `δ₀ + 2σ²/C_l²`.
    pub initial: f64,
    /// `2σ²/μ · max γ_i/n_i` over `⌈t/2⌉ <= i <= t`.
    pub noise: f64,
}

impl SsgGeneral {
    pub fn transient(&self) -> f64 {
        if self.initial == 0.0 {
            0.0
        } else {
            self.initial * self.ln_decay.exp()
        }
    }

    pub fn value(&self) -> BoundValue {
        BoundValue::from_terms(
            vec![("transient", self.transient()), ("noise", self.noise)],
            true,
        )
    }
}

/// General bound on `δ_t` for every `t = 1..=T` of the block sequence.
pub fn ssg_general_sweep(pc: &ProblemConstants, b: &BlockSeq) -> Vec<SsgGeneral> {
    let (n, g) = (&b.n, &b.gamma);
    let len = b.len();
    let p_gamma = prefix(len, |i| g[i]);
    let p_var = prefix(len, |i| g[i] * g[i] / n[i]);
    let p_batch = prefix(len, |i| ind(n[i] > 1.0) * g[i] * g[i]);
    let initial = pc.delta0 + 2.0 * pc.sigma.powi(2) / pc.c_l.powi(2);
    let mut wmax = WindowMax::new();
    (1..=len)
        .map(|t| {
            wmax.push(t, g[t - 1] / n[t - 1]);
            let lo = half_start(t);
            let ln_decay = -pc.mu * (p_gamma[t] - p_gamma[lo - 1])
                + 4.0 * pc.c_l.powi(2) * p_var[t]
                + 2.0 * pc.c_nabla.powi(2) * p_batch[t];
            SsgGeneral {
                ln_decay,
                initial,
                noise: 2.0 * pc.sigma.powi(2) / pc.mu * wmax.max_from(lo),
            }
        })
        .collect()
}

/// General bound on `δ_t` for a deterministic schedule.
pub fn ssg_bound_general(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    t: u64,
) -> Result<BoundValue> {
    need_t(t)?;
    pc.validate()?;
    let b = BlockSeq::from_schedule(lr, batches, t)?;
    Ok(ssg_general_sweep(pc, &b)[t as usize - 1].value())
}

/// General bound on `δ_t` at each checkpoint.
pub fn ssg_general_curve(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    checkpoints: &[u64],
) -> Result<BoundCurve> {
    pc.validate()?;
    let (b, cum) = blocks_for(lr, batches, checkpoints)?;
    let sweep = ssg_general_sweep(pc, &b);
    let mut c = BoundCurve::new("ssg_general", BoundQuantity::MeanSquare);
    for &t in checkpoints {
        c.push(t, cum[t as usize] as u64, &sweep[t as usize - 1].value());
    }
    Ok(c)
}

pub(crate) fn need_t(t: u64) -> Result<()> {
    if t == 0 {
        return Err(Error::InvalidParameter("bounds need t >= 1".into()));
    }
    Ok(())
}

pub(crate) fn blocks_for(
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    checkpoints: &[u64],
) -> Result<(BlockSeq, Vec<f64>)> {
    if checkpoints.contains(&0) {
        return Err(Error::InvalidParameter("checkpoints start at t = 1".into()));
    }
    let horizon = checkpoints.iter().copied().max().unwrap_or(0);
    let b = BlockSeq::from_schedule(lr, batches, horizon)?;
    let cum = b.cumulative();
    Ok((b, cum))
}

/// Fourth-moment bound on `Δ_t` for every `t = 1..=T`.
pub fn fourth_moment_sweep(pc: &ProblemConstants, b: &BlockSeq) -> Vec<BoundValue> {
    let (n, g) = (&b.n, &b.gamma);
    let len = b.len();
    if len == 0 {
        return Vec::new();
    }
    let (mu, cl2, cn2) = (pc.mu, pc.c_l.powi(2), pc.c_nabla.powi(2));
    let tau4 = pc.tau.powi(4);
    let p_gamma = prefix(len, |i| g[i]);
    let p_ln_pi = prefix(len, |i| {
        let (gi, ni) = (g[i], n[i]);
        let g2 = gi * gi;
        let g4 = g2 * g2;
        let big = ind(ni > 1.0);
        32.0 * cl2 * g2 / ni
            + 96.0 * cl2 * cl2 * g4 / ni.powi(3)
            + 228.0 * cl2 * cl2 * big * g4 / (ni * ni)
            + 16.0 * cn2 * big * g2
            + 96.0 * cn2 * cn2 * big * g4
    });
    let initial = pc.delta0_4 + 2.0 * tau4 / (cl2 * cl2) + 4.0 * tau4 * g[0] / (mu * cl2 * n[0]);
    let mut m_quad = WindowMax::new();
    let mut m_cub = WindowMax::new();
    let mut m_batch = WindowMax::new();
    (1..=len)
        .map(|t| {
            let (gi, ni) = (g[t - 1], n[t - 1]);
            let r = gi / ni;
            m_quad.push(t, r * r);
            m_cub.push(t, r * r * r);
            m_batch.push(t, ind(ni > 1.0) * gi.powi(3) / (ni * ni));
            let lo = half_start(t);
            let transient = if initial == 0.0 {
                0.0
            } else {
                initial * (-mu * (p_gamma[t] - p_gamma[lo - 1]) + p_ln_pi[t]).exp()
            };
            BoundValue::from_terms(
                vec![
                    ("transient", transient),
                    ("noise_quadratic", 32.0 * tau4 / (mu * mu) * m_quad.max_from(lo)),
                    ("noise_cubic", 48.0 * tau4 / mu * m_cub.max_from(lo)),
                    ("noise_batch", 114.0 * tau4 / mu * m_batch.max_from(lo)),
                ],
                true,
            )
        })
        .collect()
}

/// Fourth-moment bound on `Δ_t` for a deterministic schedule.
pub fn fourth_moment_bound(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    t: u64,
) -> Result<BoundValue> {
    need_t(t)?;
    pc.validate()?;
    let b = BlockSeq::from_schedule(lr, batches, t)?;
    Ok(fourth_moment_sweep(pc, &b).swap_remove(t as usize - 1))
}

/// Fourth-moment bound at each checkpoint.
pub fn fourth_moment_curve(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    batches: &BatchSchedule,
    checkpoints: &[u64],
) -> Result<BoundCurve> {
    pc.validate()?;
    let (b, cum) = blocks_for(lr, batches, checkpoints)?;
    let sweep = fourth_moment_sweep(pc, &b);
    let mut c = BoundCurve::new("fourth_moment", BoundQuantity::FourthMoment);
    for &t in checkpoints {
        c.push(t, cum[t as usize] as u64, &sweep[t as usize - 1]);
    }
    Ok(c)
}

fn need_n(n_total: u64) -> Result<f64> {
    if n_total == 0 {
        return Err(Error::InvalidParameter("n_total must be positive".into()));
    }
    Ok(n_total as f64)
}

/// Closed-form bound on `δ_t` for a constant batch size, in terms of `N_t`.
pub fn ssg_bound_constant(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    c_rho: u64,
    n_total: u64,
) -> Result<BoundValue> {
    pc.validate()?;
    lr.validate()?;
    let n = need_n(n_total)?;
    if c_rho == 0 || !n_total.is_multiple_of(c_rho) {
        return Err(Error::InvalidParameter(format!(
            "n_total = {n_total} is not a positive multiple of c_rho = {c_rho}"
        )));
    }
    let cr = c_rho as f64;
    let (a, b, g, mu) = (lr.alpha, lr.beta, lr.c_gamma, pc.mu);
    let scale = cr.powf(1.0 - a - b);
    let decay = -mu * g * n.powf(1.0 - a) / (2f64.powf(1.0 - a) * scale);
    let transient = exp_sum(&[decay, ln_initial(pc), ln_pi_c(pc, lr, cr)]);
    let noise = 2f64.powf(1.0 + a) * pc.sigma.powi(2) * g / (mu * scale * n.powf(a));
    Ok(BoundValue::from_terms(
        vec![("transient", transient), ("noise", noise)],
        a > 0.5 && a < 1.0,
    ))
}

/// Closed-form bound on `δ_t` for batches `C_ρ t^ρ`, in terms of `N_t`.
pub fn ssg_bound_varying(
    pc: &ProblemConstants,
    lr: &LearningRateParams,
    c_rho: f64,
    rho: f64,
    n_total: u64,
) -> Result<BoundValue> {
    pc.validate()?;
    let s = BatchSchedule::varying(c_rho, rho);
    s.validate(1)?;
    lr.validate()?;
    let n = need_n(n_total)?;
    let ex = rate_exponents(lr, &s);
    let phi = ex.phi;
    let (b, g, mu) = (lr.beta, lr.c_gamma, pc.mu);
    let nonneg = if rho >= 0.0 { 1.0 } else { 0.0 };
    let decay = -mu * g * n.powf(1.0 - phi)
        / (2f64.powf((2.0 + rho) * (1.0 - phi)) * c_rho.powf(1.0 - b - phi));
    let transient = exp_sum(&[decay, ln_initial(pc), ln_pi_v(pc, lr, c_rho, rho)]);
    let noise = 2f64.powf(1.0 + (2.0 + rho) * phi) * pc.sigma.powi(2) * g
        / (mu * c_rho.powf((1.0 - b) * nonneg - phi) * n.powf(phi));
    Ok(BoundValue::from_terms(
        vec![("transient", transient), ("noise", noise)],
        ex.valid,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::{recursive_delta_bound, RecursionSpec, Variant};

    fn unit() -> ProblemConstants {
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
    fn noiseless_start_at_optimum_is_zero() {
        let mut pc = unit();
        pc.sigma = 0.0;
        pc.tau = 0.0;
        pc.delta0 = 0.0;
        pc.delta0_4 = 0.0;
        let lr = LearningRateParams::new(0.5, 0.66, 0.0).unwrap();
        let s = BatchSchedule::varying(2.0, 0.3);
        for t in [1, 2, 7, 50] {
            assert_eq!(ssg_bound_general(&pc, &lr, &s, t).unwrap().total, 0.0);
            assert_eq!(fourth_moment_bound(&pc, &lr, &s, t).unwrap().total, 0.0);
        }
        assert_eq!(ssg_bound_constant(&pc, &lr, 4, 400).unwrap().total, 0.0);
    }

    #[test]
    fn unit_batches_drop_gradient_factor() {
        let mut a = unit();
        let mut b = unit();
        a.c_nabla = 1.0;
        b.c_nabla = 50.0;
        let lr = LearningRateParams::new(0.5, 0.66, 0.0).unwrap();
        let s = BatchSchedule::constant(1);
        let x = ssg_bound_general(&a, &lr, &s, 40).unwrap();
        let y = ssg_bound_general(&b, &lr, &s, 40).unwrap();
        assert_eq!(x, y);
        let x = fourth_moment_bound(&a, &lr, &s, 40).unwrap();
        let y = fourth_moment_bound(&b, &lr, &s, 40).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let pc = unit();
        let lr = LearningRateParams::new(0.3, 0.6, 0.2).unwrap();
        let s = BatchSchedule::varying(3.0, 0.4);
        let b = BlockSeq::from_schedule(&lr, &s, 60).unwrap();
        let sweep = ssg_general_sweep(&pc, &b);
        for t in 1..=60usize {
            let lo = t.div_ceil(2);
            let win: f64 = b.gamma[lo - 1..t].iter().sum();
            let var: f64 = (0..t).map(|i| b.gamma[i].powi(2) / b.n[i]).sum();
            let bat: f64 = (0..t).filter(|&i| b.n[i] > 1.0).map(|i| b.gamma[i].powi(2)).sum();
            let mx = (lo - 1..t).map(|i| b.gamma[i] / b.n[i]).fold(0.0, f64::max);
            let want = (-win + 4.0 * var + 2.0 * bat).exp() * 3.0 + 2.0 * mx;
            let got = sweep[t - 1].value().total;
            assert!((got - want).abs() <= 1e-12 * want, "t={t}: {got} vs {want}");
        }
    }

    // With n ≡ 1 the general bound is the simple recursive bound with
    // ω = μ, η = 2C_l²γ, ν = 2σ²γ.
    #[test]
    fn unit_batch_agrees_with_recursive_form() {
        let pc = unit();
        let lr = LearningRateParams::new(0.2, 0.75, 0.0).unwrap();
        let b = BlockSeq::from_schedule(&lr, &BatchSchedule::constant(1), 30).unwrap();
        let sweep = ssg_general_sweep(&pc, &b);
        let gamma = b.gamma.clone();
        let eta: Vec<f64> = gamma.iter().map(|g| 2.0 * pc.c_l.powi(2) * g).collect();
        let nu: Vec<f64> = gamma.iter().map(|g| 2.0 * pc.sigma.powi(2) * g).collect();
        let spec = RecursionSpec::new(gamma, eta, nu, pc.mu, pc.delta0, 30).unwrap();
        for t in 1..=30usize {
            let rec = recursive_delta_bound(&spec, t, Variant::Simple).unwrap();
            let got = sweep[t - 1].value().total;
            assert!((got - rec).abs() <= 1e-12 * rec, "t={t}: {got} vs {rec}");
        }
    }

    #[test]
    fn constant_asymptotic_term_halves_by_two_to_alpha() {
        let pc = unit();
        let lr = LearningRateParams::new(1.0, 0.7, 0.1).unwrap();
        let a = ssg_bound_constant(&pc, &lr, 4, 4000).unwrap().term("noise").unwrap();
        let b = ssg_bound_constant(&pc, &lr, 4, 8000).unwrap().term("noise").unwrap();
        assert!((b / a - 2f64.powf(-0.7)).abs() < 1e-14);
        assert!(ssg_bound_constant(&pc, &lr, 4, 4001).is_err());
    }

    #[test]
    fn varying_with_flat_batches_has_constant_exponent() {
        let pc = unit();
        let lr = LearningRateParams::new(1.0, 0.7, 0.0).unwrap();
        let v1 = ssg_bound_varying(&pc, &lr, 1.0, 0.0, 1000).unwrap().term("noise").unwrap();
        let v2 = ssg_bound_varying(&pc, &lr, 1.0, 0.0, 2000).unwrap().term("noise").unwrap();
        assert!((v2 / v1 - 2f64.powf(-0.7)).abs() < 1e-14);
    }
}
