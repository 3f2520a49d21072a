//! Gradient oracles with known regularity constants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summation::CompensatedSum;

/// Regularity constants consumed by the bound formulas.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConstants {
    pub mu: f64,
    pub c_nabla: f64,
    pub c_l: f64,
    pub sigma: f64,
    pub tau: f64,
    pub c_delta: f64,
    pub lambda_cr: f64,
    pub delta0: f64,
    pub delta0_4: f64,
    /// Set when some constants are Monte-Carlo estimates rather than exact.
    #[serde(default)]
    pub estimated: bool,
}

impl ProblemConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mu", self.mu),
            ("c_nabla", self.c_nabla),
            ("c_l", self.c_l),
            ("sigma", self.sigma),
            ("tau", self.tau),
            ("c_delta", self.c_delta),
            ("lambda_cr", self.lambda_cr),
            ("delta0", self.delta0),
            ("delta0_4", self.delta0_4),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        for (name, v) in [("mu", self.mu), ("c_nabla", self.c_nabla), ("c_l", self.c_l)] {
            if v <= 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be > 0")));
            }
        }
        if self.mu > self.c_nabla {
            return Err(Error::InvalidParameter(format!(
                "mu ({}) exceeds c_nabla ({})",
                self.mu, self.c_nabla
            )));
        }
        if self.sigma > self.tau {
            return Err(Error::InvalidParameter(format!(
                "sigma ({}) exceeds tau ({})",
                self.sigma, self.tau
            )));
        }
        Ok(())
    }
}

/// A block of `n` samples stored row-major.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Batch {
    pub dim: usize,
    pub features: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Batch {
    pub fn with_dim(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        assert_eq!(x.len(), self.dim);
        self.features.extend_from_slice(x);
        self.targets.push(y);
    }
}

/// Source of random loss gradients `∇l_{t,i}`.
pub trait GradientOracle: Send + Sync {
    fn dim(&self) -> usize;

    /// Minimizer of the expected loss.
    fn theta_star(&self) -> &[f64];

    /// Replaces the contents of `batch` with `n` fresh samples.
    fn sample_into(&self, n: usize, rng: &mut dyn rand::RngCore, batch: &mut Batch);

    /// Writes the batch-mean gradient at `theta` into `out`.
    fn gradient_into(&self, theta: &[f64], batch: &Batch, out: &mut [f64]) -> Result<()>;

    /// Problem constants for a start point `theta0`.
    fn constants(&self, theta0: &[f64]) -> Result<ProblemConstants>;

    fn sample_batch(&self, n: usize, rng: &mut dyn rand::RngCore) -> Batch {
        let mut b = Batch::with_dim(self.dim());
        self.sample_into(n, rng, &mut b);
        b
    }

    fn batch_gradient(&self, theta: &[f64], batch: &Batch) -> Result<Vec<f64>> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(theta, batch, &mut g)?;
        Ok(g)
    }
}

/// Default `θ*` of the ten-dimensional benchmark.
pub const PAPER_D10_THETA: [f64; 10] = [-4.0, -3.0, 2.0, 1.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0];

/// Draws used for Monte-Carlo constant estimates.
pub const CONSTANT_ESTIMATE_DRAWS: usize = 100_000;
const CONSTANT_ESTIMATE_SEED: u64 = 0x5eed_c0de;

/// `y = Xᵀθ* + ε` with standard Gaussian `X` and `ε ~ N(0, noise_std²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearRegressionModel {
    pub theta_star: Vec<f64>,
    pub noise_std: f64,
}

impl LinearRegressionModel {
    pub fn new(theta_star: Vec<f64>, noise_std: f64) -> Result<Self> {
        if theta_star.is_empty() {
            return Err(Error::InvalidParameter("theta_star is empty".into()));
        }
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "noise_std must be >= 0, got {noise_std}"
            )));
        }
        Ok(Self {
            theta_star,
            noise_std,
        })
    }

    /// The `paper-d10` preset: `d = 10`, unit noise.
    pub fn paper_d10() -> Self {
        Self {
            theta_star: PAPER_D10_THETA.to_vec(),
            noise_std: 1.0,
        }
    }

    fn draw(&self, rng: &mut dyn rand::RngCore, x: &mut [f64]) -> f64 {
        let mut y = CompensatedSum::new();
        for (xi, &ti) in x.iter_mut().zip(&self.theta_star) {
            *xi = StandardNormal.sample(rng);
            y.add(*xi * ti);
        }
        let eps: f64 = if self.noise_std > 0.0 {
            self.noise_std * Distribution::<f64>::sample(&StandardNormal, rng)
        } else {
            0.0
        };
        y.value() + eps
    }
}

fn check_dims(expected: usize, theta: &[f64], batch: &Batch, out: &[f64]) -> Result<()> {
    for got in [theta.len(), batch.dim, out.len()] {
        if got != expected {
            return Err(Error::DimensionMismatch { expected, got });
        }
    }
    if batch.is_empty() {
        return Err(Error::InvalidParameter("empty batch".into()));
    }
    Ok(())
}

// out = (1/n) Σ X_i (X_iᵀθ - y_i)
fn least_squares_gradient(theta: &[f64], batch: &Batch, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for i in 0..batch.len() {
        let x = batch.row(i);
        let r: f64 = x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() - batch.targets[i];
        for (o, &xj) in out.iter_mut().zip(x) {
            *o += xj * r;
        }
    }
    let inv = 1.0 / batch.len() as f64;
    out.iter_mut().for_each(|o| *o *= inv);
}

fn sq_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl GradientOracle for LinearRegressionModel {
    fn dim(&self) -> usize {
        self.theta_star.len()
    }

    fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    fn sample_into(&self, n: usize, rng: &mut dyn rand::RngCore, batch: &mut Batch) {
        let d = self.dim();
        batch.dim = d;
        batch.features.resize(n * d, 0.0);
        batch.targets.resize(n, 0.0);
        for i in 0..n {
            let y = self.draw(rng, &mut batch.features[i * d..(i + 1) * d]);
            batch.targets[i] = y;
        }
    }

    fn gradient_into(&self, theta: &[f64], batch: &Batch, out: &mut [f64]) -> Result<()> {
        check_dims(self.dim(), theta, batch, out)?;
        least_squares_gradient(theta, batch, out);
        Ok(())
    }

    /// `μ = C_∇ = 1`, `C_δ = 0` and `Λ = d·noise_std²` are exact. `C_l = (E‖X‖⁴)^{1/2}`
    /// and `σ = τ = (E‖Xε‖⁴)^{1/4}` are Monte-Carlo estimates.
    fn constants(&self, theta0: &[f64]) -> Result<ProblemConstants> {
        let d = self.dim();
        if theta0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: theta0.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(CONSTANT_ESTIMATE_SEED);
        let mut x = vec![0.0; d];
        let mut m_x4 = CompensatedSum::new();
        let mut m_g4 = CompensatedSum::new();
        for _ in 0..CONSTANT_ESTIMATE_DRAWS {
            x.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
            let eps: f64 = self.noise_std * rng.sample::<f64, _>(StandardNormal);
            let r2 = sq_norm(&x);
            m_x4.add(r2 * r2);
            let g2 = r2 * eps * eps;
            m_g4.add(g2 * g2);
        }
        let draws = CONSTANT_ESTIMATE_DRAWS as f64;
        let tau = (m_g4.value() / draws).powf(0.25);
        let delta0 = sq_norm(
            &theta0
                .iter()
                .zip(&self.theta_star)
                .map(|(a, b)| a - b)
                .collect::<Vec<_>>(),
        );
        Ok(ProblemConstants {
            mu: 1.0,
            c_nabla: 1.0,
            c_l: (m_x4.value() / draws).sqrt(),
            sigma: tau,
            tau,
            c_delta: 0.0,
            lambda_cr: d as f64 * self.noise_std * self.noise_std,
            delta0,
            delta0_4: delta0 * delta0,
            estimated: true,
        })
    }
}

/// Linear regression with an added `penalty/2 · ‖θ‖²` per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub base: LinearRegressionModel,
    pub penalty: f64,
    minimizer: Vec<f64>,
}

impl RidgeModel {
    pub fn new(base: LinearRegressionModel, penalty: f64) -> Result<Self> {
        if !(penalty.is_finite() && penalty >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "penalty must be >= 0, got {penalty}"
            )));
        }
        let minimizer = base.theta_star.iter().map(|t| t / (1.0 + penalty)).collect();
        Ok(Self {
            base,
            penalty,
            minimizer,
        })
    }
}

impl GradientOracle for RidgeModel {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn theta_star(&self) -> &[f64] {
        &self.minimizer
    }

    fn sample_into(&self, n: usize, rng: &mut dyn rand::RngCore, batch: &mut Batch) {
        self.base.sample_into(n, rng, batch)
    }

    fn gradient_into(&self, theta: &[f64], batch: &Batch, out: &mut [f64]) -> Result<()> {
        check_dims(self.dim(), theta, batch, out)?;
        least_squares_gradient(theta, batch, out);
        for (o, t) in out.iter_mut().zip(theta) {
            *o += self.penalty * t;
        }
        Ok(())
    }

    /// `μ = C_∇ = 1 + penalty`; the remaining noise constants are Monte-Carlo
    /// estimates at the ridge minimizer.
    fn constants(&self, theta0: &[f64]) -> Result<ProblemConstants> {
        let d = self.dim();
        if theta0.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: theta0.len(),
            });
        }
        let h = 1.0 + self.penalty;
        let mut rng = ChaCha8Rng::seed_from_u64(CONSTANT_ESTIMATE_SEED);
        let mut batch = Batch::with_dim(d);
        let mut g = vec![0.0; d];
        let mut m_l = CompensatedSum::new();
        let mut m_g2 = CompensatedSum::new();
        let mut m_g4 = CompensatedSum::new();
        for _ in 0..CONSTANT_ESTIMATE_DRAWS {
            self.sample_into(1, &mut rng, &mut batch);
            let a = sq_norm(batch.row(0)) + self.penalty;
            m_l.add(a * a);
            self.gradient_into(&self.minimizer, &batch, &mut g)?;
            let g2 = sq_norm(&g);
            m_g2.add(g2);
            m_g4.add(g2 * g2);
        }
        let draws = CONSTANT_ESTIMATE_DRAWS as f64;
        let tau = (m_g4.value() / draws).powf(0.25);
        let delta0: f64 = theta0
            .iter()
            .zip(&self.minimizer)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        Ok(ProblemConstants {
            mu: h,
            c_nabla: h,
            c_l: (m_l.value() / draws).sqrt(),
            sigma: tau,
            tau,
            c_delta: 0.0,
            lambda_cr: m_g2.value() / draws / (h * h),
            delta0,
            delta0_4: delta0 * delta0,
            estimated: true,
        })
    }
}
