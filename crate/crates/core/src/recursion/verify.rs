//! Randomized checks of the sum-product inequalities and the recursive bounds.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    recursive_delta_bound, sum_prod_minus, sum_prod_plus, sum_prod_weighted, RecursionSpec, Sign,
    Variant,
};
use crate::error::Error;

/// Relative slack for floating-point rounding in `lhs <= bound`.
pub const ROUNDING_SLACK: f64 = 1e-12;

/// One family of randomized checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Check {
    SumProdPlus,
    SumProdMinus,
    WeightedPlus,
    WeightedMinus,
    RecursiveFull,
    RecursiveSimple,
    ExactDominance,
}

impl Check {
    pub const ALL: [Check; 7] = [
        Check::SumProdPlus,
        Check::SumProdMinus,
        Check::WeightedPlus,
        Check::WeightedMinus,
        Check::RecursiveFull,
        Check::RecursiveSimple,
        Check::ExactDominance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::SumProdPlus => "sum-prod-plus",
            Check::SumProdMinus => "sum-prod-minus",
            Check::WeightedPlus => "weighted-plus",
            Check::WeightedMinus => "weighted-minus",
            Check::RecursiveFull => "recursive-full",
            Check::RecursiveSimple => "recursive-simple",
            Check::ExactDominance => "exact-dominance",
        }
    }

    fn id(self) -> u64 {
        Check::ALL.iter().position(|&c| c == self).unwrap() as u64
    }
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        Check::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown check {s:?}")))
    }
}

/// Suite parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Instances per inequality family.
    pub cases: usize,
    /// Specs for the long-horizon dominance check.
    pub dominance_specs: usize,
    pub max_horizon: usize,
    /// Test hook: reverses the inequality of one family.
    pub corrupt: Option<Check>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            cases: 1000,
            dominance_specs: 200,
            max_horizon: 500,
            corrupt: None,
        }
    }
}

/// Outcome of one family.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: Check,
    pub cases: usize,
    pub comparisons: usize,
    pub violations: usize,
    /// Largest `lhs / bound` seen.
    pub worst_ratio: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub rows: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(CheckResult::passed)
    }

    pub fn total_cases(&self) -> usize {
        self.rows.iter().map(|r| r.cases).sum()
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<18} {:>7} {:>11} {:>10} {:>14}  status",
            "check", "cases", "comparisons", "violations", "max lhs/bound"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<18} {:>7} {:>11} {:>10} {:>14.6}  {}",
                r.check.name(),
                r.cases,
                r.comparisons,
                r.violations,
                r.worst_ratio,
                if r.passed() { "PASS" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

fn positive_seq(rng: &mut ChaCha8Rng, len: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..len).map(|_| log_uniform(rng, lo, hi)).collect()
}

// Non-increasing sequence starting at `start`: either a power law or a product of
// random factors in [0.5, 1].
fn decreasing_seq(rng: &mut ChaCha8Rng, len: usize, start: f64) -> Vec<f64> {
    if rng.random_bool(0.5) {
        let b = rng.random_range(0.0..=1.5);
        (1..=len).map(|i| start * (i as f64).powf(-b)).collect()
    } else {
        let mut x = start;
        (0..len)
            .map(|i| {
                if i > 0 {
                    x *= rng.random_range(0.5..=1.0);
                }
                x
            })
            .collect()
    }
}

struct RandomRecursion {
    gamma: Vec<f64>,
    eta: Vec<f64>,
    nu: Vec<f64>,
    omega: f64,
    delta0: f64,
}

// `2ωγ_t <= 1` keeps every factor of the exact recursion nonnegative, and the last
// η is capped at ω so that t₀ exists within the horizon.
fn random_recursion(rng: &mut ChaCha8Rng, len: usize, monotone: bool) -> RandomRecursion {
    let omega = log_uniform(rng, 0.01, 10.0);
    let (gamma, mut eta, nu) = if monotone {
        let g0 = rng.random_range(0.01..=1.0) / (2.0 * omega);
        let e0 = omega * log_uniform(rng, 0.1, 30.0);
        let v0 = log_uniform(rng, 1e-3, 10.0);
        (
            decreasing_seq(rng, len, g0),
            decreasing_seq(rng, len, e0),
            decreasing_seq(rng, len, v0),
        )
    } else {
        let gamma = (0..len)
            .map(|_| rng.random_range(0.001..=1.0) / (2.0 * omega))
            .collect();
        (
            gamma,
            positive_seq(rng, len, 0.1 * omega, 10.0 * omega),
            positive_seq(rng, len, 1e-3, 10.0),
        )
    };
    if let Some(last) = eta.last_mut() {
        *last = last.min(omega);
    }
    RandomRecursion {
        gamma,
        eta,
        nu,
        omega,
        delta0: rng.random_range(0.0..=10.0),
    }
}

// (lhs, bound) pairs produced by one random instance.
fn instance(check: Check, rng: &mut ChaCha8Rng, max_horizon: usize) -> Vec<(f64, f64)> {
    let len = rng.random_range(1..=50usize);
    let k = rng.random_range(1..=len);
    let t = rng.random_range(k..=len);
    let omega = log_uniform(rng, 0.01, 10.0);
    match check {
        Check::SumProdPlus => {
            let g = positive_seq(rng, len, 1e-3, 2.0);
            let c = sum_prod_plus(&g, omega, k, t).expect("valid range");
            vec![(c.lhs, c.mid), (c.mid, c.rhs)]
        }
        Check::SumProdMinus => {
            let g: Vec<f64> = (0..len).map(|_| rng.random_range(1e-6..=1.0) / omega).collect();
            let b = sum_prod_minus(&g, omega, k, t).expect("feasible");
            vec![(b.lhs, b.bound)]
        }
        Check::WeightedPlus | Check::WeightedMinus => {
            let minus = check == Check::WeightedMinus;
            let g: Vec<f64> = if minus {
                (0..len).map(|_| rng.random_range(1e-6..=1.0) / omega).collect()
            } else {
                positive_seq(rng, len, 1e-3, 2.0)
            };
            let eta = positive_seq(rng, len, 1e-3, 100.0);
            let sign = if minus { Sign::Minus } else { Sign::Plus };
            let b = sum_prod_weighted(&g, &eta, omega, k, t, sign).expect("feasible");
            vec![(b.lhs, b.bound)]
        }
        Check::RecursiveFull | Check::RecursiveSimple | Check::ExactDominance => {
            let (len, monotone) = match check {
                Check::ExactDominance => (rng.random_range(1..=max_horizon.max(1)), true),
                Check::RecursiveFull => (len, true),
                _ => (len, false),
            };
            let r = random_recursion(rng, len, monotone);
            let spec = RecursionSpec::new(r.gamma, r.eta, r.nu, r.omega, r.delta0, len)
                .expect("positive sequences");
            let exact = spec.exact();
            let t0 = spec.t0().expect("eta capped at omega");
            let mut out = Vec::with_capacity(2 * len);
            for t in 1..=len {
                let simple = recursive_delta_bound(&spec, t, Variant::Simple).expect("feasible");
                if monotone {
                    let full = recursive_delta_bound(&spec, t, Variant::Full).expect("feasible");
                    out.push((exact[t], full));
                    if check == Check::ExactDominance {
                        out.push((exact[t], simple));
                    } else if t >= t0 {
                        out.push((full, simple));
                    }
                } else {
                    out.push((exact[t], simple));
                }
            }
            out
        }
    }
}

fn holds(lhs: f64, bound: f64) -> bool {
    lhs <= bound + ROUNDING_SLACK * bound.abs()
}

fn run_check(check: Check, cases: usize, opts: &VerifyOptions) -> CheckResult {
    let corrupt = opts.corrupt == Some(check);
    let per_case: Vec<(usize, usize, f64)> = (0..cases)
        .into_par_iter()
        .map(|c| {
            let seed = opts
                .seed
                .wrapping_mul(0x9e37_79b9_7f4a_7c15)
                .wrapping_add(check.id() << 40)
                .wrapping_add(c as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pairs = instance(check, &mut rng, opts.max_horizon);
            let mut bad = 0;
            let mut worst = 0.0f64;
            for &(lhs, bound) in &pairs {
                let ok = if corrupt { holds(bound, lhs) } else { holds(lhs, bound) };
                if !ok {
                    bad += 1;
                }
                if bound > 0.0 {
                    worst = worst.max(lhs / bound);
                }
            }
            (pairs.len(), bad, worst)
        })
        .collect();
    CheckResult {
        check,
        cases,
        comparisons: per_case.iter().map(|p| p.0).sum(),
        violations: per_case.iter().map(|p| p.1).sum(),
        worst_ratio: per_case.iter().map(|p| p.2).fold(0.0, f64::max),
    }
}

/// Runs every family and returns a per-family table.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let rows = Check::ALL
        .iter()
        .map(|&c| {
            let n = if c == Check::ExactDominance {
                opts.dominance_specs
            } else {
                opts.cases
            };
            run_check(c, n, opts)
        })
        .collect();
    VerifyReport { rows }
}
