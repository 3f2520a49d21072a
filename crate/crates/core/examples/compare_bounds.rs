// Empirical errors of a small scalar problem against its bound curves.

use streamopt::harness::{
    bound_curves, compare_with_bound, run_experiment, BoundComparison, Checkpoints,
    ExperimentConfig, ModelSpec,
};
use streamopt::schedules::{BatchSchedule, LearningRateParams};

pub fn run_example() -> streamopt::Result<Vec<BoundComparison>> {
    let lr = LearningRateParams::new(0.1, 0.75, 0.0)?;
    let mut cfg = ExperimentConfig::new(lr, BatchSchedule::constant(4));
    cfg.model = ModelSpec::Linear {
        theta_star: vec![1.0],
        noise_std: 0.5,
    };
    cfg.budget = 20_000;
    cfg.replications = 50;
    cfg.checkpoints = Checkpoints::LogSpaced(16);
    cfg.fourth_moment = true;
    let traj = run_experiment(&cfg)?;
    let pc = cfg.model.build()?.constants(&cfg.theta0())?;
    bound_curves(&cfg, &pc)?
        .iter()
        .map(|c| compare_with_bound(&traj, c))
        .collect()
}

fn main() -> streamopt::Result<()> {
    for c in run_example()? {
        let last = c.rows.last().expect("non-empty grid");
        println!(
            "{:14} vs {:4}: violations {} final bound/empirical {:.3e}",
            c.curve,
            c.series.name(),
            c.violations(),
            last.ratio
        );
    }
    Ok(())
}
