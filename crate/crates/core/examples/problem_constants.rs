// Gradient oracle of the ten-dimensional regression model and its constants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use streamopt::models::{Batch, GradientOracle, LinearRegressionModel, ProblemConstants};

pub fn run_example() -> streamopt::Result<(Vec<f64>, ProblemConstants)> {
    let model = LinearRegressionModel::paper_d10();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut batch = Batch::with_dim(model.dim());
    model.sample_into(256, &mut rng, &mut batch);
    let mut grad = vec![0.0; model.dim()];
    model.gradient_into(&vec![0.0; model.dim()], &batch, &mut grad)?;
    let pc = model.constants(&vec![0.0; model.dim()])?;
    Ok((grad, pc))
}

fn main() -> streamopt::Result<()> {
    let (grad, pc) = run_example()?;
    println!("mean gradient at 0: {grad:.3?}");
    println!("{pc:#?}");
    Ok(())
}
