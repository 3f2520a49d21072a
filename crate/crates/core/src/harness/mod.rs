//! Monte-Carlo replication of streaming runs, rate fits, and comparison with bounds.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{BoundCurve, BoundQuantity};
use crate::error::{Error, Result};
use crate::models::{GradientOracle, LinearRegressionModel, RidgeModel, PAPER_D10_THETA};
use crate::optimizers::{run_stream_at, Averagers, StepRecord, StreamSpec};
use crate::schedules::{BatchSchedule, LearningRateParams};
use crate::summation::CompensatedSum;

mod presets;

pub use presets::{bound_curves, figure_configs, replicate_paper_figures, Figure, FigureOutput, PresetRun};

/// Env var capping the number of worker threads.
pub const THREADS_ENV: &str = "STREAMOPT_THREADS";
pub const DEFAULT_CHECKPOINTS: usize = 64;
pub const DEFAULT_REPLICATIONS: usize = 100;
pub const DEFAULT_BUDGET: u64 = 100_000;
/// Fraction of final checkpoints used by rate fits.
pub const DEFAULT_FIT_WINDOW: f64 = 0.5;

/// Which model generates the stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// Ten-dimensional Gaussian linear regression with unit noise.
    #[default]
    PaperD10,
    Linear {
        theta_star: Vec<f64>,
        noise_std: f64,
    },
    Ridge {
        theta_star: Vec<f64>,
        noise_std: f64,
        penalty: f64,
    },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn GradientOracle>> {
        Ok(match self {
            ModelSpec::PaperD10 => Box::new(LinearRegressionModel::paper_d10()),
            ModelSpec::Linear {
                theta_star,
                noise_std,
            } => Box::new(LinearRegressionModel::new(theta_star.clone(), *noise_std)?),
            ModelSpec::Ridge {
                theta_star,
                noise_std,
                penalty,
            } => Box::new(RidgeModel::new(
                LinearRegressionModel::new(theta_star.clone(), *noise_std)?,
                *penalty,
            )?),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::PaperD10 => PAPER_D10_THETA.len(),
            ModelSpec::Linear { theta_star, .. } | ModelSpec::Ridge { theta_star, .. } => {
                theta_star.len()
            }
        }
    }
}

/// Checkpoint grid: a number of log-spaced blocks, or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Checkpoints {
    LogSpaced(usize),
    Explicit(Vec<u64>),
}

impl Default for Checkpoints {
    fn default() -> Self {
        Checkpoints::LogSpaced(DEFAULT_CHECKPOINTS)
    }
}

/// `min(k, T)` strictly increasing block indices, roughly log-spaced, ending at `T`.
pub fn log_spaced_checkpoints(horizon: u64, k: usize) -> Vec<u64> {
    if horizon == 0 || k == 0 {
        return Vec::new();
    }
    let n = (k as u64).min(horizon) as usize;
    if n == 1 {
        return vec![horizon];
    }
    let ln_t = (horizon as f64).ln();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0u64;
    for i in 0..n {
        let raw = (ln_t * i as f64 / (n - 1) as f64).exp().round() as u64;
        let room = horizon - (n - 1 - i) as u64;
        let c = raw.max(prev + 1).min(room);
        out.push(c);
        prev = c;
    }
    out
}

fn default_reps() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_budget() -> u64 {
    DEFAULT_BUDGET
}

/// One Monte-Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub model: ModelSpec,
    pub lr: LearningRateParams,
    pub batches: BatchSchedule,
    /// Total samples; the run stops at the last block that fits.
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default = "default_reps")]
    pub replications: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub checkpoints: Checkpoints,
    #[serde(default)]
    pub averagers: Averagers,
    #[serde(default)]
    pub fourth_moment: bool,
    /// Start point; zeros when absent.
    #[serde(default)]
    pub theta0: Option<Vec<f64>>,
    /// Blocks excluded from the averages.
    #[serde(default)]
    pub burn_in: u64,
}

impl ExperimentConfig {
    pub fn new(lr: LearningRateParams, batches: BatchSchedule) -> Self {
        Self {
            model: ModelSpec::PaperD10,
            lr,
            batches,
            budget: DEFAULT_BUDGET,
            replications: DEFAULT_REPLICATIONS,
            base_seed: 0,
            checkpoints: Checkpoints::default(),
            averagers: Averagers::default(),
            fourth_moment: false,
            theta0: None,
            burn_in: 0,
        }
    }

    /// Last block `T` with `N_T <= budget` (expected sizes for random schedules).
    pub fn horizon(&self) -> Result<u64> {
        let mut total = 0.0;
        let mut t = 0u64;
        loop {
            let next = self.batches.expected_size(t + 1);
            if total + next > self.budget as f64 {
                break;
            }
            total += next;
            t += 1;
        }
        if t == 0 {
            return Err(Error::InvalidParameter(format!(
                "budget {} is smaller than the first batch",
                self.budget
            )));
        }
        Ok(t)
    }

    pub fn checkpoint_grid(&self) -> Result<Vec<u64>> {
        let horizon = self.horizon()?;
        let grid = match &self.checkpoints {
            Checkpoints::LogSpaced(k) => log_spaced_checkpoints(horizon, *k),
            Checkpoints::Explicit(v) => v.clone(),
        };
        if grid.is_empty() {
            return Err(Error::InvalidParameter("empty checkpoint grid".into()));
        }
        if grid[0] == 0 || grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidParameter(
                "checkpoints must be strictly increasing block indices >= 1".into(),
            ));
        }
        if *grid.last().unwrap() > horizon {
            return Err(Error::InvalidParameter(format!(
                "checkpoint {} is past the last block {horizon} of the budget",
                grid.last().unwrap()
            )));
        }
        Ok(grid)
    }

    pub fn theta0(&self) -> Vec<f64> {
        self.theta0
            .clone()
            .unwrap_or_else(|| vec![0.0; self.model.dim()])
    }

    pub fn validate(&self) -> Result<()> {
        self.lr.validate()?;
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be >= 1".into()));
        }
        let horizon = self.horizon()?;
        self.batches.validate(horizon)?;
        self.checkpoint_grid()?;
        if let Some(l) = self.averagers.wassg {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "wassg lambda must be > 0, got {l}"
                )));
            }
        }
        let model = self.model.build()?;
        if self.theta0().len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: self.theta0().len(),
            });
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    fn stream_spec(&self) -> StreamSpec {
        let mut s = StreamSpec::new(self.lr, self.batches, self.model.dim());
        s.averagers = self.averagers;
        s.theta0 = self.theta0();
        s.burn_in = self.burn_in;
        s.fourth_moment = self.fourth_moment;
        s
    }
}

/// One error curve of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Series {
    /// `E‖θ_t − θ*‖²`.
    Ssg,
    /// Averaged iterate.
    Assg,
    /// Log-weighted average.
    Wassg,
    /// `E‖θ_t − θ*‖⁴`.
    M4,
}

impl Series {
    pub const ALL: [Series; 4] = [Series::Ssg, Series::Assg, Series::Wassg, Series::M4];

    pub fn name(self) -> &'static str {
        match self {
            Series::Ssg => "ssg",
            Series::Assg => "assg",
            Series::Wassg => "wassg",
            Series::M4 => "m4",
        }
    }

    fn pick(self, r: &StepRecord) -> Option<f64> {
        match self {
            Series::Ssg => Some(r.err),
            Series::Assg => r.err_avg,
            Series::Wassg => r.err_wavg,
            Series::M4 => r.err4,
        }
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Series {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Series::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown series {s:?}")))
    }
}

/// Mean over replications and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrajectoryMeta {
    pub config_hash: String,
    pub seed_start: u64,
    pub replications: usize,
}

/// Replication-averaged error curves on a checkpoint grid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub meta: TrajectoryMeta,
    pub t: Vec<u64>,
    pub n_total: Vec<u64>,
    pub series: BTreeMap<Series, Vec<Stat>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn get(&self, s: Series) -> Option<&[Stat]> {
        self.series.get(&s).map(Vec::as_slice)
    }

    pub fn means(&self, s: Series) -> Option<Vec<f64>> {
        self.get(s).map(|v| v.iter().map(|x| x.mean).collect())
    }

    /// Across-replication variance of `s` at checkpoint `i`.
    pub fn variance(&self, s: Series, i: usize) -> Option<f64> {
        let st = self.get(s)?.get(i)?;
        Some(st.stderr * st.stderr * self.meta.replications as f64)
    }

    /// Copy keeping only the listed series.
    pub fn select(&self, keep: &[Series]) -> Trajectory {
        Trajectory {
            meta: self.meta.clone(),
            t: self.t.clone(),
            n_total: self.n_total.clone(),
            series: self
                .series
                .iter()
                .filter(|(k, _)| keep.contains(k))
                .map(|(k, v)| (*k, v.clone()))
                .collect(),
        }
    }
}

fn parse_threads(v: &str) -> Result<usize> {
    v.trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))
}

/// Thread pool honouring [`THREADS_ENV`].
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        b = b.num_threads(parse_threads(&v)?);
    }
    b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn replicate(
    model: &dyn GradientOracle,
    spec: &StreamSpec,
    horizon: u64,
    grid: &[u64],
    seed: u64,
) -> Result<Vec<StepRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_stream_at(model, spec, horizon, Some(grid), &mut rng).map_err(|e| match e {
        Error::NonFinite { block } => Error::ReplicationAborted { seed, block },
        other => other,
    })
}

/// Runs every replication and averages the error curves.
///
/// Replication `r` uses seed `base_seed + r`; the reduction runs in replication
/// order, so the result does not depend on the thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let model = cfg.model.build()?;
    let horizon = cfg.horizon()?;
    let grid = cfg.checkpoint_grid()?;
    let spec = cfg.stream_spec();
    let pool = thread_pool()?;
    let runs: Vec<Vec<StepRecord>> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|r| {
                let seed = cfg.base_seed.wrapping_add(r as u64);
                replicate(model.as_ref(), &spec, horizon, &grid, seed)
            })
            .collect::<Result<_>>()
    })?;
    Ok(aggregate(cfg, &grid, &runs))
}

fn aggregate(cfg: &ExperimentConfig, grid: &[u64], runs: &[Vec<StepRecord>]) -> Trajectory {
    let reps = runs.len() as f64;
    let n_total = (0..grid.len())
        .map(|i| {
            let s: CompensatedSum = runs.iter().map(|r| r[i].n_total as f64).collect();
            (s.value() / reps).round() as u64
        })
        .collect();
    let mut series = BTreeMap::new();
    for s in Series::ALL {
        if s.pick(&runs[0][0]).is_none() {
            continue;
        }
        let stats = (0..grid.len())
            .map(|i| {
                let xs: Vec<f64> = runs.iter().map(|r| s.pick(&r[i]).unwrap_or(f64::NAN)).collect();
                let mean = crate::summation::sum(xs.iter().copied()) / reps;
                let stderr = if runs.len() > 1 {
                    let ss = crate::summation::sum(xs.iter().map(|x| (x - mean) * (x - mean)));
                    (ss / (reps - 1.0) / reps).sqrt()
                } else {
                    0.0
                };
                Stat { mean, stderr }
            })
            .collect();
        series.insert(s, stats);
    }
    Trajectory {
        meta: TrajectoryMeta {
            config_hash: cfg.hash(),
            seed_start: cfg.base_seed,
            replications: runs.len(),
        },
        t: grid.to_vec(),
        n_total,
        series,
    }
}

/// Least-squares fit of `log y` on `log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Minimum number of points in a fit.
pub const MIN_FIT_POINTS: usize = 5;

/// OLS of `ln y` on `ln x`; pairs with a non-positive coordinate are dropped.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Result<RateFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < x.len() {
        log::warn!(
            "rate fit: dropped {} non-positive or non-finite values",
            x.len() - pts.len()
        );
    }
    if pts.len() < MIN_FIT_POINTS {
        return Err(Error::InvalidParameter(format!(
            "rate fit needs at least {MIN_FIT_POINTS} positive points, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("rate fit needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit {
        slope,
        intercept,
        r2,
        points: pts.len(),
    })
}

/// Empirical rate exponent of `series` against `N_t` over the final `window`
/// fraction of checkpoints.
pub fn fit_rate(traj: &Trajectory, series: Series, window: f64) -> Result<RateFit> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "window must lie in (0, 1], got {window}"
        )));
    }
    let ys = traj
        .means(series)
        .ok_or_else(|| Error::InvalidParameter(format!("trajectory has no {series} series")))?;
    let k = ((traj.len() as f64) * window).ceil() as usize;
    let start = traj.len() - k.min(traj.len());
    let xs: Vec<f64> = traj.n_total[start..].iter().map(|&n| n as f64).collect();
    fit_loglog(&xs, &ys[start..])
}

/// One checkpoint of a bound comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonRow {
    pub t: u64,
    pub n_total: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub bound: f64,
    /// `bound / empirical`.
    pub ratio: f64,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundComparison {
    pub curve: String,
    pub series: Series,
    pub rows: Vec<ComparisonRow>,
}

impl BoundComparison {
    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.violated).count()
    }
}

/// Monte-Carlo slack in standard errors.
pub const COMPARISON_SLACK_SE: f64 = 2.0;

/// Checks `empirical <= bound + 2·stderr` at every checkpoint. Averaged-iterate
/// bounds are squared before comparing.
pub fn compare_with_bound(traj: &Trajectory, curve: &BoundCurve) -> Result<BoundComparison> {
    let series = match curve.quantity {
        BoundQuantity::MeanSquare => Series::Ssg,
        BoundQuantity::RootMeanSquare => Series::Assg,
        BoundQuantity::FourthMoment => Series::M4,
    };
    let stats = traj.get(series).ok_or_else(|| {
        Error::GridMismatch(format!("trajectory has no {series} series for {}", curve.name))
    })?;
    if curve.points.len() != traj.len() {
        return Err(Error::GridMismatch(format!(
            "{} has {} points, trajectory has {}",
            curve.name,
            curve.points.len(),
            traj.len()
        )));
    }
    let bounds = curve.mean_square_totals();
    let rows = curve
        .points
        .iter()
        .zip(&bounds)
        .enumerate()
        .map(|(i, (p, &b))| {
            if p.t != traj.t[i] {
                return Err(Error::GridMismatch(format!(
                    "checkpoint {i}: bound at t={}, trajectory at t={}",
                    p.t, traj.t[i]
                )));
            }
            let s = stats[i];
            Ok(ComparisonRow {
                t: p.t,
                n_total: traj.n_total[i],
                empirical: s.mean,
                stderr: s.stderr,
                bound: b,
                ratio: b / s.mean,
                violated: !(s.mean <= b + COMPARISON_SLACK_SE * s.stderr),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundComparison {
        curve: curve.name.clone(),
        series,
        rows,
    })
}
