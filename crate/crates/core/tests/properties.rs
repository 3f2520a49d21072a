use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use streamopt::bounds::{
    assg_bound_constant, assg_bound_varying, ssg_bound_constant, ssg_bound_varying, BoundValue,
};
use streamopt::harness::{fit_loglog, log_spaced_checkpoints, Series, Stat, Trajectory, TrajectoryMeta};
use streamopt::io::{read_trajectory_csv, write_trajectory_csv};
use streamopt::models::ProblemConstants;
use streamopt::schedules::{batch_size, learning_rate, rate_exponents, BatchSchedule, LearningRateParams};

fn pc(c_l: f64, sigma: f64, delta0: f64) -> ProblemConstants {
    ProblemConstants {
        mu: 1.0,
        c_nabla: 1.5,
        c_l,
        sigma,
        tau: sigma * 1.2,
        c_delta: 0.3,
        lambda_cr: 2.0,
        delta0,
        delta0_4: delta0 * delta0,
        estimated: false,
    }
}

fn slope(lo: &BoundValue, hi: &BoundValue, term: &str, n_lo: f64, n_hi: f64) -> f64 {
    (hi.term(term).unwrap().ln() - lo.term(term).unwrap().ln()) / (n_hi / n_lo).ln()
}

fn all_nonneg(v: &BoundValue) -> bool {
    v.total >= 0.0 && v.terms.iter().all(|(_, x)| *x >= 0.0)
}

proptest! {
    #[test]
    fn batch_sizes_are_at_least_one(
        c in 1.0f64..200.0,
        rho in -0.99f64..0.99,
        t in 1u64..100_000,
        seed in any::<u64>(),
    ) {
        prop_assert!(BatchSchedule::varying(c, rho).size_at(t) >= 1);
        prop_assert!(BatchSchedule::constant(c.round() as u64).size_at(t) >= 1);
        let r = BatchSchedule::RandomBounded { c_low: 1.0, rho_low: rho.min(0.0), c_high: c, rho_high: rho.max(0.0) };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert!(batch_size(&r, t, &mut rng).unwrap() >= 1);
    }

    #[test]
    fn learning_rate_decreases_for_fixed_batch(
        cg in 0.01f64..10.0, alpha in 0.01f64..1.0, beta in 0.0f64..1.0, n in 1u64..1000, t in 1u64..10_000,
    ) {
        let lr = LearningRateParams::new(cg, alpha, beta).unwrap();
        let a = learning_rate(&lr, n, t).unwrap();
        let b = learning_rate(&lr, n, t + 1).unwrap();
        prop_assert!(a > 0.0 && b < a);
    }

    #[test]
    fn closed_form_terms_are_nonnegative(
        c_l in 0.1f64..3.0, sigma in 0.0f64..3.0, delta0 in 0.0f64..50.0,
        alpha in 0.55f64..0.95, beta in 0.0f64..0.4, c in 1u64..64, rho in -0.5f64..0.5,
        k in 1u64..10_000,
    ) {
        let p = pc(c_l, sigma, delta0);
        let lr = LearningRateParams::new(0.2, alpha, beta).unwrap();
        prop_assert!(all_nonneg(&ssg_bound_constant(&p, &lr, c, c * k).unwrap()));
        prop_assert!(all_nonneg(&ssg_bound_varying(&p, &lr, c as f64, rho, c * k).unwrap()));
    }

    #[test]
    fn constant_noise_term_decays_at_alpha(
        alpha in 0.3f64..0.99, beta in 0.0f64..1.0, c in 1u64..128, sigma in 0.1f64..5.0,
    ) {
        let lr = LearningRateParams::new(0.5, alpha, beta).unwrap();
        let p = pc(1.0, sigma, 1.0);
        let (lo, hi) = (c * 1000, c * 1_000_000);
        let a = ssg_bound_constant(&p, &lr, c, lo).unwrap();
        let b = ssg_bound_constant(&p, &lr, c, hi).unwrap();
        prop_assert!((slope(&a, &b, "noise", lo as f64, hi as f64) + alpha).abs() < 1e-3);
    }

    #[test]
    fn varying_noise_term_decays_at_phi(
        alpha in 0.3f64..0.99, beta in 0.0f64..1.0, c in 1.0f64..128.0, rho in -0.9f64..0.9,
    ) {
        let lr = LearningRateParams::new(0.5, alpha, beta).unwrap();
        let s = BatchSchedule::varying(c, rho);
        let phi = rate_exponents(&lr, &s).phi;
        let p = pc(1.0, 1.0, 1.0);
        let (lo, hi) = (1_000u64, 1_000_000u64);
        let a = ssg_bound_varying(&p, &lr, c, rho, lo).unwrap();
        let b = ssg_bound_varying(&p, &lr, c, rho, hi).unwrap();
        prop_assert!((slope(&a, &b, "noise", lo as f64, hi as f64) + phi).abs() < 1e-3);
    }

    #[test]
    fn flat_varying_schedule_is_looser_than_constant(
        alpha in 0.55f64..0.95, beta in 0.0f64..0.5, c in 1u64..64, k in 1u64..100_000, delta0 in 0.0f64..10.0,
    ) {
        let lr = LearningRateParams::new(0.3, alpha, beta).unwrap();
        let p = pc(0.8, 1.0, delta0);
        let a = ssg_bound_constant(&p, &lr, c, c * k).unwrap();
        let b = ssg_bound_varying(&p, &lr, c as f64, 0.0, c * k).unwrap();
        let ratio = b.term("noise").unwrap() / a.term("noise").unwrap();
        prop_assert!((ratio - 2f64.powf(alpha)).abs() <= 1e-12 * ratio);
        prop_assert!(b.total >= a.total * (1.0 - 1e-12));
    }

    #[test]
    fn checkpoint_grid_is_strict(h in 1u64..1_000_000, k in 1usize..200) {
        let g = log_spaced_checkpoints(h, k);
        prop_assert_eq!(g.len(), k.min(h as usize));
        prop_assert_eq!(*g.last().unwrap(), h);
        prop_assert!(g[0] >= 1 && g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn fit_recovers_power_laws(a in -3.0f64..1.0, c in 0.01f64..100.0, n in 5usize..50) {
        let x: Vec<f64> = (1..=n).map(|i| (i * i * 10) as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| c * v.powf(a)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        prop_assert!((f.slope - a).abs() < 1e-9);
        prop_assert!((f.intercept - c.ln()).abs() < 1e-8);
    }

    #[test]
    fn trajectory_csv_round_trips(
        vals in prop::collection::vec((1e-300f64..1e300, 0.0f64..1e10), 1..40),
        seed_start in any::<u64>(),
        reps in 1usize..1000,
    ) {
        let len = vals.len();
        let stats: Vec<Stat> = vals.iter().map(|&(m, s)| Stat { mean: m, stderr: s }).collect();
        let mut traj = Trajectory {
            meta: TrajectoryMeta { config_hash: "f00".into(), seed_start, replications: reps },
            t: (1..=len as u64).collect(),
            n_total: (1..=len as u64).map(|t| t * 3).collect(),
            series: Default::default(),
        };
        traj.series.insert(Series::Ssg, stats.clone());
        traj.series.insert(Series::Wassg, stats.into_iter().rev().collect());
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &traj).unwrap();
        prop_assert_eq!(read_trajectory_csv(buf.as_slice()).unwrap(), traj);
    }
}

proptest! {
    // Each case sums slowly decaying series for the averaged-iterate constants.
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn averaged_closed_form_terms_are_nonnegative(
        c_l in 0.1f64..3.0, sigma in 0.0f64..3.0, delta0 in 0.0f64..50.0,
        alpha in 0.55f64..0.95, beta in 0.0f64..0.4, c in 1u64..64, rho in -0.5f64..0.5,
        k in 1u64..10_000,
    ) {
        let p = pc(c_l, sigma, delta0);
        let lr = LearningRateParams::new(0.2, alpha, beta).unwrap();
        prop_assert!(all_nonneg(&assg_bound_constant(&p, &lr, c, c * k).unwrap()));
        match assg_bound_varying(&p, &lr, c as f64, rho, c * k) {
            Ok(v) => prop_assert!(all_nonneg(&v)),
            // α - βρ̃ <= 1/2 leaves a divergent series.
            Err(streamopt::Error::Divergent(_)) => prop_assert!(alpha - beta * rho.max(0.0) <= 0.5),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}
