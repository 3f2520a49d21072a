// Learning rates, batch sizes and the predicted rate exponents.

use streamopt::schedules::{
    cumulative_samples, learning_rate, rate_exponents, BatchSchedule, LearningRateParams,
};

pub fn run_example() -> streamopt::Result<Vec<(u64, u64, f64)>> {
    let lr = LearningRateParams::new(1.0, 2.0 / 3.0, 1.0 / 3.0)?;
    let s = BatchSchedule::varying(8.0, 0.5);
    s.validate(1000)?;
    let mut rows = Vec::new();
    for t in [1, 10, 100, 1000] {
        let n = s.size_at(t);
        rows.push((t, n, learning_rate(&lr, n, t)?));
    }
    let e = rate_exponents(&lr, &s);
    println!("phi = {:.4}, valid = {}", e.phi, e.valid);
    println!("N_1000 = {}", cumulative_samples(&s, 1000)?);
    Ok(rows)
}

fn main() -> streamopt::Result<()> {
    for (t, n, g) in run_example()? {
        println!("t={t:5} n_t={n:4} gamma_t={g:.5}");
    }
    Ok(())
}
