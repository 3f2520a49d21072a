#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use streamopt::optimizers::OptimizerState;

fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    let diff: f64 = got.iter().zip(want).map(|(a, b)| (a - b).powi(2)).sum();
    let norm: f64 = want.iter().map(|b| b * b).sum();
    if norm == 0.0 {
        diff.sqrt()
    } else {
        (diff / norm).sqrt()
    }
}

/// Runs one random sequence through the recursive averages and returns the largest
/// relative deviation from the direct weighted sums.
pub fn averaging_identity_error(rng: &mut ChaCha8Rng) -> f64 {
    let d = rng.random_range(1..=6);
    let steps = rng.random_range(1..=300);
    let lambda: f64 = rng.random_range(0.5..3.0);
    let theta0: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let mut st = OptimizerState::new(theta0);
    let mut prev = Vec::new();
    let mut n = Vec::new();
    let mut worst = 0.0f64;
    for i in 1..=steps {
        let n_i: u64 = rng.random_range(1..=200);
        st.assg_update(n_i).unwrap();
        st.wassg_update(n_i, lambda).unwrap();
        prev.push(st.theta.clone());
        n.push(n_i);
        let grad: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        st.ssg_step(&grad, rng.random_range(0.001..0.5), n_i).unwrap();

        let mut plain = vec![0.0; d];
        let mut weighted = vec![0.0; d];
        let (mut n_sum, mut w_sum) = (0.0, 0.0);
        for (k, (th, &nk)) in prev.iter().zip(&n).enumerate() {
            let w = nk as f64 * ((2 + k) as f64).ln().powf(lambda);
            n_sum += nk as f64;
            w_sum += w;
            for j in 0..d {
                plain[j] += nk as f64 * th[j];
                weighted[j] += w * th[j];
            }
        }
        plain.iter_mut().for_each(|v| *v /= n_sum);
        weighted.iter_mut().for_each(|v| *v /= w_sum);
        if i == steps || i % 17 == 0 {
            worst = worst
                .max(rel_err(&st.theta_bar, &plain))
                .max(rel_err(&st.theta_bar_w, &weighted));
        }
    }
    worst
}

/// Worst error over `count` sequences drawn from `seed`.
pub fn averaging_identity_suite(seed: u64, count: usize) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| averaging_identity_error(&mut rng))
        .fold(0.0, f64::max)
}
