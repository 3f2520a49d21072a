//! SSG iterates with streaming Polyak-Ruppert (ASSG) and log-weighted (WASSG) averages.
//!
//! Within block `t` the order is fixed: draw `n_t`, evaluate the gradient at
//! `θ_{t-1}`, fold `θ_{t-1}` into the averages, then take the step.

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Batch, GradientOracle};
use crate::schedules::{batch_size, BatchSchedule, LearningRateParams};
use crate::summation::{CompensatedSum, CompensatedVec};

/// Iterate, averages and counters of one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerState {
    /// Completed blocks.
    pub t: u64,
    /// `N_t`.
    pub n_total: u64,
    pub theta: Vec<f64>,
    pub theta_bar: Vec<f64>,
    /// `Σ n_i log(1+i)^λ` over averaged blocks.
    pub w_sum: f64,
    pub theta_bar_w: Vec<f64>,
    /// Blocks `t <= burn_in` are left out of both averages.
    pub burn_in: u64,
    avg_n: u64,
    bar_acc: CompensatedVec,
    bar_w_acc: CompensatedVec,
    w_acc: CompensatedSum,
}

impl OptimizerState {
    /// Starts at `theta0` with both averages at zero.
    pub fn new(theta0: Vec<f64>) -> Self {
        let d = theta0.len();
        Self {
            t: 0,
            n_total: 0,
            theta: theta0,
            theta_bar: vec![0.0; d],
            w_sum: 0.0,
            theta_bar_w: vec![0.0; d],
            burn_in: 0,
            avg_n: 0,
            bar_acc: CompensatedVec::zeros(d),
            bar_w_acc: CompensatedVec::zeros(d),
            w_acc: CompensatedSum::new(),
        }
    }

    pub fn with_burn_in(mut self, blocks: u64) -> Self {
        self.burn_in = blocks;
        self
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    fn averaging(&self) -> bool {
        self.t >= self.burn_in
    }

    /// `θ_t = θ_{t-1} - γ_t g`; advances `t` and `N_t`.
    pub fn ssg_step(&mut self, grad: &[f64], gamma_t: f64, n_t: u64) -> Result<()> {
        if grad.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: grad.len(),
            });
        }
        if !(gamma_t > 0.0) || n_t == 0 {
            return Err(Error::InvalidParameter(format!(
                "step needs gamma_t > 0 and n_t >= 1, got {gamma_t}, {n_t}"
            )));
        }
        let block = self.t + 1;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { block });
        }
        for (th, g) in self.theta.iter_mut().zip(grad) {
            *th -= gamma_t * g;
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { block });
        }
        self.t = block;
        self.n_total += n_t;
        Ok(())
    }

    /// `θ̄_t = (N_{t-1}/N_t) θ̄_{t-1} + (n_t/N_t) θ_{t-1}`. Call before [`Self::ssg_step`].
    pub fn assg_update(&mut self, n_t: u64) -> Result<()> {
        if n_t == 0 {
            return Err(Error::InvalidParameter("N_t = 0 in average".into()));
        }
        if !self.averaging() {
            return Ok(());
        }
        let n_new = self.avg_n + n_t;
        let w = n_t as f64 / n_new as f64;
        let delta: Vec<f64> = self
            .theta
            .iter()
            .zip(&self.theta_bar)
            .map(|(th, bar)| th - bar)
            .collect();
        self.bar_acc.add_scaled(&delta, w);
        self.theta_bar = self.bar_acc.values();
        self.avg_n = n_new;
        Ok(())
    }

    /// Weighted average with weights `n_i log(1+i)^λ` on `θ_{i-1}`. Call before
    /// [`Self::ssg_step`].
    pub fn wassg_update(&mut self, n_t: u64, lambda: f64) -> Result<()> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be > 0, got {lambda}"
            )));
        }
        if n_t == 0 {
            return Err(Error::InvalidParameter("n_t = 0 in weighted average".into()));
        }
        if !self.averaging() {
            return Ok(());
        }
        let i = (self.t + 1) as f64;
        let w = n_t as f64 * (1.0 + i).ln().powf(lambda);
        self.w_acc.add(w);
        self.w_sum = self.w_acc.value();
        let r = w / self.w_sum;
        let delta: Vec<f64> = self
            .theta
            .iter()
            .zip(&self.theta_bar_w)
            .map(|(th, bar)| th - bar)
            .collect();
        self.bar_w_acc.add_scaled(&delta, r);
        self.theta_bar_w = self.bar_w_acc.values();
        Ok(())
    }
}

/// Which averages a stream maintains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Averagers {
    pub assg: bool,
    /// `λ` of the weighted average, if tracked.
    pub wassg: Option<f64>,
}

impl Default for Averagers {
    fn default() -> Self {
        Self {
            assg: true,
            wassg: None,
        }
    }
}

/// Squared errors after block `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: u64,
    pub n_total: u64,
    pub err: f64,
    pub err_avg: Option<f64>,
    pub err_wavg: Option<f64>,
    /// `‖θ_t - θ*‖⁴`.
    pub err4: Option<f64>,
}

/// Everything a stream needs besides the model and the rng.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub lr: LearningRateParams,
    pub batches: BatchSchedule,
    pub averagers: Averagers,
    pub theta0: Vec<f64>,
    pub burn_in: u64,
    pub fourth_moment: bool,
}

impl StreamSpec {
    pub fn new(lr: LearningRateParams, batches: BatchSchedule, dim: usize) -> Self {
        Self {
            lr,
            batches,
            averagers: Averagers::default(),
            theta0: vec![0.0; dim],
            burn_in: 0,
            fourth_moment: false,
        }
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Runs `steps` blocks and records after each block listed in `record_at`
/// (every block when `None`). `record_at` must be increasing.
pub fn run_stream_at(
    model: &dyn GradientOracle,
    spec: &StreamSpec,
    steps: u64,
    record_at: Option<&[u64]>,
    rng: &mut dyn RngCore,
) -> Result<Vec<StepRecord>> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be >= 1".into()));
    }
    let d = model.dim();
    if spec.theta0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: spec.theta0.len(),
        });
    }
    let star = model.theta_star();
    let mut state = OptimizerState::new(spec.theta0.clone()).with_burn_in(spec.burn_in);
    let mut batch = Batch::with_dim(d);
    let mut grad = vec![0.0; d];
    let mut out = Vec::with_capacity(record_at.map_or(steps as usize, <[u64]>::len));
    let mut next = 0usize;
    for t in 1..=steps {
        let n = batch_size(&spec.batches, t, rng)?;
        model.sample_into(n as usize, rng, &mut batch);
        model.gradient_into(&state.theta, &batch, &mut grad)?;
        if spec.averagers.assg {
            state.assg_update(n)?;
        }
        if let Some(lambda) = spec.averagers.wassg {
            state.wassg_update(n, lambda)?;
        }
        let gamma = spec.lr.step(n as f64, t as f64);
        state.ssg_step(&grad, gamma, n)?;

        let wanted = match record_at {
            None => true,
            Some(r) => {
                if next < r.len() && r[next] == t {
                    next += 1;
                    true
                } else {
                    false
                }
            }
        };
        if wanted {
            let err = sq_dist(&state.theta, star);
            out.push(StepRecord {
                t,
                n_total: state.n_total,
                err,
                err_avg: spec.averagers.assg.then(|| sq_dist(&state.theta_bar, star)),
                err_wavg: spec.averagers.wassg.map(|_| sq_dist(&state.theta_bar_w, star)),
                err4: spec.fourth_moment.then_some(err * err),
            });
        }
    }
    Ok(out)
}

/// Runs `steps` blocks and records every block.
pub fn run_stream(
    model: &dyn GradientOracle,
    spec: &StreamSpec,
    steps: u64,
    rng: &mut dyn RngCore,
) -> Result<Vec<StepRecord>> {
    run_stream_at(model, spec, steps, None, rng)
}
