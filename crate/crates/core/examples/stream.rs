// One stream with the plain, averaged and weighted-averaged iterates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use streamopt::models::LinearRegressionModel;
use streamopt::optimizers::{run_stream, Averagers, StepRecord, StreamSpec};
use streamopt::schedules::{BatchSchedule, LearningRateParams};

pub fn run_example() -> streamopt::Result<Vec<StepRecord>> {
    let model = LinearRegressionModel::paper_d10();
    let lr = LearningRateParams::new(1.0, 2.0 / 3.0, 0.0)?;
    let mut spec = StreamSpec::new(lr, BatchSchedule::constant(8), 10);
    spec.averagers = Averagers {
        assg: true,
        wassg: Some(2.0),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    run_stream(&model, &spec, 2000, &mut rng)
}

fn main() -> streamopt::Result<()> {
    let recs = run_example()?;
    for r in recs.iter().filter(|r| r.t.is_power_of_two()) {
        println!(
            "t={:5} N={:6} ssg={:.3e} assg={:.3e} wassg={:.3e}",
            r.t,
            r.n_total,
            r.err,
            r.err_avg.unwrap_or(f64::NAN),
            r.err_wavg.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
