// Randomized checks of the sum-product and recursion inequalities.

use streamopt::recursion::verify::{run_verify, VerifyOptions, VerifyReport};

pub fn run_example() -> VerifyReport {
    run_verify(&VerifyOptions {
        cases: 200,
        dominance_specs: 20,
        ..Default::default()
    })
}

fn main() {
    let report = run_example();
    print!("{report}");
    if !report.passed() {
        std::process::exit(1);
    }
}
