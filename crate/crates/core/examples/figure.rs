// A reduced run of the constant-batch figure, written as CSV files.

use std::fs::File;

use streamopt::harness::{replicate_paper_figures, Figure, FigureOutput};
use streamopt::io::{write_bound_csv, write_trajectory_csv};

pub fn run_example(replications: usize) -> streamopt::Result<FigureOutput> {
    replicate_paper_figures(Figure::Fig1, replications)
}

fn main() -> streamopt::Result<()> {
    let out = run_example(10)?;
    let dir = std::env::temp_dir().join("streamopt-fig1");
    std::fs::create_dir_all(&dir)?;
    for (p, traj) in &out.runs {
        write_trajectory_csv(File::create(dir.join(format!("{}.csv", p.label)))?, traj)?;
    }
    for ((p, _), (label, curves)) in out.runs.iter().zip(&out.bounds) {
        let f = File::create(dir.join(format!("{label}_bounds.csv")))?;
        write_bound_csv(f, &p.config.hash(), curves)?;
    }
    println!("wrote {}", dir.display());
    Ok(())
}
