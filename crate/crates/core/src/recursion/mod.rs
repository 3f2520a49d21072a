//! Sum-product inequalities and upper bounds for the recursion
//! `δ_t = (1 - 2ωγ_t + η_tγ_t) δ_{t-1} + ν_tγ_t`.
//!
//! Sequences are 1-indexed. Empty sums are 0, empty products 1 and `inf ∅ = 0`.
//! Every "from t/2" range starts at `⌈t/2⌉`.

use std::cell::OnceCell;

use crate::error::{Error, Result};

pub mod verify;

/// A lazily evaluated real sequence `(x_i)_{i≥1}`.
pub trait Sequence {
    fn at(&self, i: usize) -> f64;
}

impl Sequence for [f64] {
    fn at(&self, i: usize) -> f64 {
        self[i - 1]
    }
}

impl Sequence for Vec<f64> {
    fn at(&self, i: usize) -> f64 {
        self[i - 1]
    }
}

impl<S: Sequence + ?Sized> Sequence for &S {
    fn at(&self, i: usize) -> f64 {
        (**self).at(i)
    }
}

/// Wraps a closure `i ↦ x_i`.
#[derive(Clone, Copy)]
pub struct FnSeq<F>(pub F);

impl<F: Fn(usize) -> f64> Sequence for FnSeq<F> {
    fn at(&self, i: usize) -> f64 {
        (self.0)(i)
    }
}

/// First index of the second half `[⌈t/2⌉, t]`, at least 1.
#[inline]
pub fn half_start(t: usize) -> usize {
    t.div_ceil(2).max(1)
}

fn check_range(k: usize, t: usize) -> Result<()> {
    if k == 0 || k > t {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= k <= t, got k={k}, t={t}"
        )));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if omega > 0.0 && omega.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")))
    }
}

fn check_contraction<S: Sequence + ?Sized>(gamma: &S, omega: f64, k: usize, t: usize) -> Result<()> {
    for i in k..=t {
        if omega * gamma.at(i) > 1.0 {
            return Err(Error::Precondition {
                index: i,
                what: format!("omega * gamma_i = {} > 1", omega * gamma.at(i)),
            });
        }
    }
    Ok(())
}

// Σ_{i=k}^{t} Π_{j=i+1}^{t} (1 + s ω γ_j) w_i γ_i, accumulated backwards.
// Returns (sum, Π_{j=k}^{t} (1 + s ω γ_j)).
fn backward_sum_prod<G, W>(gamma: &G, weight: W, omega: f64, sign: f64, k: usize, t: usize) -> (f64, f64)
where
    G: Sequence + ?Sized,
    W: Fn(usize) -> f64,
{
    let mut prod = 1.0;
    let mut sum = 0.0;
    for i in (k..=t).rev() {
        let g = gamma.at(i);
        sum += prod * weight(i) * g;
        prod *= 1.0 + sign * omega * g;
    }
    (sum, prod)
}

/// The chain `lhs <= mid <= rhs` for the increasing products.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumProdChain {
    pub lhs: f64,
    pub mid: f64,
    pub rhs: f64,
}

/// `lhs = Σ_{i=k}^{t} Π_{j=i+1}^{t}(1+ωγ_j)γ_i`, `mid = ω⁻¹Π_{j=k}^{t}(1+ωγ_j)`,
/// `rhs = ω⁻¹exp(ωΣ_{j=k}^{t}γ_j)`.
pub fn sum_prod_plus<G: Sequence + ?Sized>(gamma: &G, omega: f64, k: usize, t: usize) -> Result<SumProdChain> {
    check_range(k, t)?;
    check_omega(omega)?;
    let (lhs, prod) = backward_sum_prod(gamma, |_| 1.0, omega, 1.0, k, t);
    let s: f64 = (k..=t).map(|j| gamma.at(j)).sum();
    Ok(SumProdChain {
        lhs,
        mid: prod / omega,
        rhs: (omega * s).exp() / omega,
    })
}

/// Left side and bound of an inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounded {
    pub lhs: f64,
    pub bound: f64,
}

/// `Σ_{i=k}^{t} Π_{j=i+1}^{t}(1-ωγ_j)γ_i <= 1/ω`, given `ωγ_i <= 1` on `[k, t]`.
pub fn sum_prod_minus<G: Sequence + ?Sized>(gamma: &G, omega: f64, k: usize, t: usize) -> Result<Bounded> {
    check_range(k, t)?;
    check_omega(omega)?;
    check_contraction(gamma, omega, k, t)?;
    let (lhs, _) = backward_sum_prod(gamma, |_| 1.0, omega, -1.0, k, t);
    Ok(Bounded {
        lhs,
        bound: 1.0 / omega,
    })
}

/// Sign of the product factors `1 ± ωγ_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Weighted sums `Σ Π(1±ωγ_j) η_iγ_i` against `ω⁻¹ max η · exp(ωΣγ)` (plus) or
/// `ω⁻¹ max η` (minus, needs `ωγ_i <= 1`).
pub fn sum_prod_weighted<G, E>(gamma: &G, eta: &E, omega: f64, k: usize, t: usize, sign: Sign) -> Result<Bounded>
where
    G: Sequence + ?Sized,
    E: Sequence + ?Sized,
{
    check_range(k, t)?;
    check_omega(omega)?;
    let max_eta = (k..=t).map(|i| eta.at(i)).fold(f64::NEG_INFINITY, f64::max);
    match sign {
        Sign::Plus => {
            let (lhs, _) = backward_sum_prod(gamma, |i| eta.at(i), omega, 1.0, k, t);
            let s: f64 = (k..=t).map(|j| gamma.at(j)).sum();
            Ok(Bounded {
                lhs,
                bound: max_eta / omega * (omega * s).exp(),
            })
        }
        Sign::Minus => {
            check_contraction(gamma, omega, k, t)?;
            let (lhs, _) = backward_sum_prod(gamma, |i| eta.at(i), omega, -1.0, k, t);
            Ok(Bounded {
                lhs,
                bound: max_eta / omega,
            })
        }
    }
}

/// Inputs of the recursion `δ_t = (1 - 2ωγ_t + η_tγ_t)δ_{t-1} + ν_tγ_t`.
pub struct RecursionSpec<G, E, V> {
    pub gamma: G,
    pub eta: E,
    pub nu: V,
    pub omega: f64,
    pub delta0: f64,
    pub horizon: usize,
    t0: OnceCell<Option<usize>>,
}

impl<G: Sequence, E: Sequence, V: Sequence> RecursionSpec<G, E, V> {
    pub fn new(gamma: G, eta: E, nu: V, omega: f64, delta0: f64, horizon: usize) -> Result<Self> {
        check_omega(omega)?;
        if !(delta0 >= 0.0 && delta0.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta0 must be >= 0, got {delta0}")));
        }
        let spec = Self {
            gamma,
            eta,
            nu,
            omega,
            delta0,
            horizon,
            t0: OnceCell::new(),
        };
        for i in 1..=horizon {
            for (name, v) in [("gamma", spec.gamma.at(i)), ("eta", spec.eta.at(i))] {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::Precondition {
                        index: i,
                        what: format!("{name}_i = {v} is not positive"),
                    });
                }
            }
            let nu = spec.nu.at(i);
            if !(nu >= 0.0 && nu.is_finite()) {
                return Err(Error::Precondition {
                    index: i,
                    what: format!("nu_i = {nu} is negative"),
                });
            }
        }
        Ok(spec)
    }

    /// `t₀ = inf{t >= 1 : η_t <= ω}` within the horizon.
    pub fn t0(&self) -> Option<usize> {
        *self
            .t0
            .get_or_init(|| (1..=self.horizon).find(|&i| self.eta.at(i) <= self.omega))
    }

    /// The recursion itself, `δ_0..=δ_horizon`.
    pub fn exact(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.horizon + 1);
        let mut d = self.delta0;
        out.push(d);
        for i in 1..=self.horizon {
            let g = self.gamma.at(i);
            d = (1.0 - 2.0 * self.omega * g + self.eta.at(i) * g) * d + self.nu.at(i) * g;
            out.push(d);
        }
        out
    }
}

/// Which closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Splits at `t₀`; needs non-increasing sequences.
    Full,
    /// Cruder form with `exp(2Σηγ)`; no monotonicity needed.
    Simple,
}

fn check_non_increasing<S: Sequence>(name: &str, s: &S, t: usize) -> Result<()> {
    for i in 2..=t {
        if s.at(i) > s.at(i - 1) {
            return Err(Error::Precondition {
                index: i,
                what: format!("{name} increases at i={i}"),
            });
        }
    }
    Ok(())
}

/// Closed-form upper bound on `δ_t`.
pub fn recursive_delta_bound<G, E, V>(spec: &RecursionSpec<G, E, V>, t: usize, variant: Variant) -> Result<f64>
where
    G: Sequence,
    E: Sequence,
    V: Sequence,
{
    if t > spec.horizon {
        return Err(Error::InvalidParameter(format!(
            "t={t} beyond horizon {}",
            spec.horizon
        )));
    }
    if t == 0 {
        return Ok(spec.delta0);
    }
    let omega = spec.omega;
    let t0 = spec.t0().ok_or_else(|| Error::Precondition {
        index: spec.horizon,
        what: "eta_t never drops to omega within the horizon".into(),
    })?;
    check_contraction(&spec.gamma, omega, t0 + 1, t)?;
    let h = half_start(t);
    let decay = -omega * (h..=t).map(|i| spec.gamma.at(i)).sum::<f64>();
    let tail = (h..=t).map(|i| spec.nu.at(i)).fold(0.0, f64::max) / omega;
    let ratio = |i: usize| spec.nu.at(i) / spec.eta.at(i);
    let eta_gamma = |i: usize| spec.eta.at(i) * spec.gamma.at(i);
    match variant {
        Variant::Full => {
            let upto = t.max(t0);
            check_non_increasing("gamma", &spec.gamma, upto)?;
            check_non_increasing("eta", &spec.eta, upto)?;
            check_non_increasing("nu", &spec.nu, upto)?;
            let growth: f64 = (1..=t0).map(eta_gamma).sum();
            let m = (1..=t0).map(ratio).fold(0.0, f64::max);
            let mid: f64 = (t0 + 1..h).map(|i| spec.nu.at(i) * spec.gamma.at(i)).sum();
            let lead = scaled_exp(spec.delta0 + m, decay + growth);
            Ok(lead + decay.exp() * mid + tail)
        }
        Variant::Simple => {
            let growth: f64 = (1..=t).map(eta_gamma).sum();
            let m = (1..=t).map(ratio).fold(0.0, f64::max);
            Ok(scaled_exp(spec.delta0 + 2.0 * m, decay + 2.0 * growth) + tail)
        }
    }
}

/// `c · exp(x)` with `0 · exp(+∞) = 0`.
#[inline]
pub fn scaled_exp(c: f64, x: f64) -> f64 {
    if c == 0.0 {
        0.0
    } else {
        c * x.exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_term_plus_chain() {
        let g = vec![1.0, 1.0];
        let c = sum_prod_plus(&g, 1.0, 1, 2).unwrap();
        assert_eq!(c.lhs, 3.0);
        assert_eq!(c.mid, 4.0);
        assert!((c.rhs - 2f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn single_term_cases() {
        let g = vec![0.3, 0.7, 0.2];
        let c = sum_prod_plus(&g, 2.0, 3, 3).unwrap();
        assert_eq!(c.lhs, 0.2);
        assert!((c.mid - 1.4 / 2.0).abs() < 1e-15);
        let m = sum_prod_minus(&g, 1.0, 3, 3).unwrap();
        assert_eq!(m.lhs, 0.2);
        assert!(sum_prod_plus(&g, 1.0, 0, 1).is_err());
        assert!(sum_prod_plus(&g, 1.0, 3, 2).is_err());
    }

    #[test]
    fn minus_at_unit_contraction() {
        let omega = 4.0;
        let g = vec![0.25; 6];
        let m = sum_prod_minus(&g, omega, 1, 6).unwrap();
        assert_eq!(m.lhs, 0.25);
        assert_eq!(m.bound, 0.25);
    }

    #[test]
    fn minus_reports_failing_index() {
        let g = vec![0.1, 0.1, 3.0];
        match sum_prod_minus(&g, 1.0, 1, 3) {
            Err(Error::Precondition { index, .. }) => assert_eq!(index, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn weighted_constant_eta_scales() {
        let g = vec![0.2, 0.5, 0.1, 0.4];
        let eta = vec![3.0; 4];
        let w = sum_prod_weighted(&g, &eta, 0.7, 1, 4, Sign::Plus).unwrap();
        let p = sum_prod_plus(&g, 0.7, 1, 4).unwrap();
        assert!((w.lhs - 3.0 * p.lhs).abs() < 1e-14);
        assert!((w.bound - 3.0 * p.rhs).abs() < 1e-12);
        let w = sum_prod_weighted(&g, &eta, 0.7, 1, 4, Sign::Minus).unwrap();
        let m = sum_prod_minus(&g, 0.7, 1, 4).unwrap();
        assert!((w.lhs - 3.0 * m.lhs).abs() < 1e-14);
    }

    #[test]
    fn homogeneous_simple_bound_is_zero() {
        let spec = RecursionSpec::new(
            FnSeq(|i: usize| (i as f64).powf(-2.0 / 3.0)),
            FnSeq(|i: usize| 2.0 * (i as f64).powf(-2.0 / 3.0)),
            FnSeq(|_| 0.0),
            1.0,
            0.0,
            100,
        )
        .unwrap();
        assert_eq!(recursive_delta_bound(&spec, 100, Variant::Simple).unwrap(), 0.0);
    }

    #[test]
    fn t0_and_missing_t0() {
        let eta = vec![5.0, 3.0, 1.0, 0.5];
        let spec = RecursionSpec::new(vec![0.1; 4], eta, vec![1.0; 4], 1.0, 1.0, 4).unwrap();
        assert_eq!(spec.t0(), Some(3));
        let spec = RecursionSpec::new(vec![0.1; 4], vec![5.0; 4], vec![1.0; 4], 1.0, 1.0, 4).unwrap();
        assert!(matches!(
            recursive_delta_bound(&spec, 2, Variant::Simple),
            Err(Error::Precondition { index: 4, .. })
        ));
    }

    #[test]
    fn full_needs_monotone_sequences() {
        let spec = RecursionSpec::new(vec![0.1, 0.2, 0.1], vec![0.5; 3], vec![1.0; 3], 1.0, 1.0, 3).unwrap();
        assert!(matches!(
            recursive_delta_bound(&spec, 3, Variant::Full),
            Err(Error::Precondition { index: 2, .. })
        ));
        assert!(recursive_delta_bound(&spec, 3, Variant::Simple).is_ok());
    }

    #[test]
    fn exact_recursion_below_bounds() {
        let c_l2 = 4.0;
        let spec = RecursionSpec::new(
            FnSeq(|i: usize| 0.4 * (i as f64).powf(-2.0 / 3.0)),
            FnSeq(move |i: usize| 2.0 * c_l2 * 0.4 * (i as f64).powf(-2.0 / 3.0)),
            FnSeq(|i: usize| 2.0 * 0.4 * (i as f64).powf(-2.0 / 3.0)),
            1.0,
            3.0,
            400,
        )
        .unwrap();
        let exact = spec.exact();
        for t in 1..=400 {
            let f = recursive_delta_bound(&spec, t, Variant::Full).unwrap();
            let s = recursive_delta_bound(&spec, t, Variant::Simple).unwrap();
            assert!(exact[t] <= f && exact[t] <= s, "t={t}");
            if t >= spec.t0().unwrap() {
                assert!(f <= s * (1.0 + 1e-12));
            }
        }
    }
}
