// Closed-form bounds for the last and the averaged iterate.

use streamopt::bounds::{assg_bound_constant, ssg_bound_constant, BoundValue};
use streamopt::models::ProblemConstants;
use streamopt::schedules::LearningRateParams;

pub fn run_example() -> streamopt::Result<Vec<(u64, BoundValue, BoundValue)>> {
    // A well-conditioned toy problem keeps every constant finite.
    let pc = ProblemConstants {
        mu: 1.0,
        c_nabla: 1.0,
        c_l: 0.5,
        sigma: 1.0,
        tau: 1.0,
        c_delta: 0.5,
        lambda_cr: 2.0,
        delta0: 1.0,
        delta0_4: 1.0,
        estimated: false,
    };
    let lr = LearningRateParams::new(0.3, 0.75, 0.0)?;
    [1_000u64, 10_000, 100_000, 1_000_000]
        .into_iter()
        .map(|n| {
            Ok((
                n,
                ssg_bound_constant(&pc, &lr, 2, n)?,
                assg_bound_constant(&pc, &lr, 2, n)?,
            ))
        })
        .collect()
}

fn main() -> streamopt::Result<()> {
    for (n, last, avg) in run_example()? {
        println!("N={n:8} last={:.4e} averaged={:.4e}", last.total, avg.total);
        for (name, v) in &avg.terms {
            println!("    {name:14} {v:.3e}");
        }
    }
    Ok(())
}
