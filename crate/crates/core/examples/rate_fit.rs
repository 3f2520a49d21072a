// Monte-Carlo trajectory and its empirical rate.

use streamopt::harness::{fit_rate, run_experiment, ExperimentConfig, RateFit, Series};
use streamopt::schedules::{rate_exponents, BatchSchedule, LearningRateParams};

pub fn run_example() -> streamopt::Result<(RateFit, RateFit, f64)> {
    let lr = LearningRateParams::new(1.0, 2.0 / 3.0, 0.0)?;
    let mut cfg = ExperimentConfig::new(lr, BatchSchedule::varying(8.0, 0.5));
    cfg.replications = 20;
    cfg.budget = 50_000;
    let traj = run_experiment(&cfg)?;
    let phi = rate_exponents(&cfg.lr, &cfg.batches).phi;
    Ok((
        fit_rate(&traj, Series::Ssg, 0.5)?,
        fit_rate(&traj, Series::Assg, 0.5)?,
        phi,
    ))
}

fn main() -> streamopt::Result<()> {
    let (ssg, assg, phi) = run_example()?;
    println!("predicted last-iterate slope -{phi:.3}");
    println!("ssg  slope {:.3} (r2 {:.3})", ssg.slope, ssg.r2);
    println!("assg slope {:.3} (r2 {:.3})", assg.slope, assg.r2);
    Ok(())
}
