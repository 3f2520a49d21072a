//! Command-line front end.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{
    apply_run_overrides, load_value, override_experiment, run_config_from_value, split_dotted_args,
    OutputFormat,
};
use crate::error::{Error, Result};
use crate::harness::{
    bound_curves, figure_configs, fit_rate, run_experiment, ExperimentConfig, Figure, Series,
    Trajectory, DEFAULT_FIT_WINDOW,
};
use crate::io::{read_trajectory_csv, write_bound_csv, write_trajectory_csv, Manifest, ManifestEntry};
use crate::models::ProblemConstants;
use crate::recursion::verify::{run_verify, Check, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Streaming mini-batch SGD experiments and bounds.
///
/// Any `--key.sub value` flag overrides a nested config field, e.g.
/// `--lr.alpha 0.75` or `--batches.c_rho 16`.
#[derive(Debug, Parser)]
#[command(name = "streamopt", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Source {
    /// JSON or TOML run config.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in figure grid: fig1..fig6 (or `robustness`).
    #[arg(long)]
    pub preset: Option<String>,
    /// Output directory (default `out`, or `output.dir` of the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte-Carlo run; writes one CSV per curve and a manifest.
    Run {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long, value_parser = parse_format)]
        format: Option<OutputFormat>,
    },
    /// Bound curves on the checkpoint grid of each configuration.
    Bounds {
        #[command(flatten)]
        source: Source,
        /// JSON problem constants; estimated from the model when absent.
        #[arg(long)]
        constants: Option<PathBuf>,
    },
    /// Randomized checks of the recursion inequalities.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        cases: usize,
        #[arg(long, default_value_t = 200)]
        dominance: usize,
        #[arg(long, hide = true)]
        corrupt: Option<String>,
    },
    /// Log-log rate fit of one series of a trajectory CSV.
    Fit {
        #[arg(long)]
        csv: PathBuf,
        #[arg(long, default_value = "ssg")]
        series: String,
        /// Fraction of final checkpoints used.
        #[arg(long, default_value_t = DEFAULT_FIT_WINDOW)]
        window: f64,
    },
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        _ => Err(format!("unknown format {s:?} (csv, json)")),
    }
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERICAL
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let (rest, overrides) = match split_dotted_args(args) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, &overrides) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, overrides: &[(String, String)]) -> Result<i32> {
    match cmd {
        Command::Run {
            source,
            reps,
            seed,
            budget,
            format,
        } => {
            let mut ov = overrides.to_vec();
            for (k, v) in [
                ("replications", reps.map(|x| x.to_string())),
                ("base_seed", seed.map(|x| x.to_string())),
                ("budget", budget.map(|x| x.to_string())),
            ] {
                if let Some(v) = v {
                    ov.push((k.to_string(), v));
                }
            }
            let plan = resolve(&source, &ov)?;
            cmd_run(&plan, format.unwrap_or(plan.format))
        }
        Command::Bounds { source, constants } => {
            let plan = resolve(&source, overrides)?;
            let pc = constants.map(|p| read_constants(&p)).transpose()?;
            cmd_bounds(&plan, pc.as_ref())
        }
        Command::Verify {
            seed,
            cases,
            dominance,
            corrupt,
        } => {
            no_overrides(overrides)?;
            let corrupt = corrupt.map(|c| c.parse::<Check>()).transpose()?;
            cmd_verify(&VerifyOptions {
                seed,
                cases,
                dominance_specs: dominance,
                corrupt,
                ..Default::default()
            })
        }
        Command::Fit {
            csv,
            series,
            window,
        } => {
            no_overrides(overrides)?;
            cmd_fit(&csv, series.parse().map_err(|e: Error| Error::Config(e.to_string()))?, window)
        }
    }
}

fn no_overrides(overrides: &[(String, String)]) -> Result<()> {
    match overrides.first() {
        Some((k, _)) => Err(Error::Config(format!("--{k} is not accepted here"))),
        None => Ok(()),
    }
}

fn read_constants(p: &Path) -> Result<ProblemConstants> {
    let pc: ProblemConstants = serde_json::from_value(load_value(p)?)
        .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
    pc.validate()?;
    Ok(pc)
}

/// Resolved list of configurations plus output settings.
#[derive(Debug, Clone)]
pub struct Plan {
    pub preset: Option<String>,
    pub runs: Vec<(String, ExperimentConfig)>,
    pub dir: PathBuf,
    pub format: OutputFormat,
}

pub fn resolve(source: &Source, overrides: &[(String, String)]) -> Result<Plan> {
    let mut plan = match (&source.config, &source.preset) {
        (Some(path), None) => {
            let mut v = load_value(path)?;
            apply_run_overrides(&mut v, overrides)?;
            let rc = run_config_from_value(v)?;
            Plan {
                preset: None,
                runs: vec![(rc.label, rc.experiment)],
                dir: rc.output.dir,
                format: rc.output.format,
            }
        }
        (None, Some(name)) => {
            let fig: Figure = name.parse()?;
            let runs = figure_configs(fig)
                .into_iter()
                .map(|p| Ok((p.label, override_experiment(&p.config, overrides)?)))
                .collect::<Result<_>>()?;
            Plan {
                preset: Some(fig.name().to_string()),
                runs,
                dir: PathBuf::from("out"),
                format: OutputFormat::Csv,
            }
        }
        _ => return Err(Error::Config("give exactly one of --config or --preset".into())),
    };
    if let Some(d) = &source.out {
        plan.dir.clone_from(d);
    }
    for (label, cfg) in &plan.runs {
        cfg.validate()
            .map_err(|e| if e.is_config() { Error::Config(format!("{label}: {e}")) } else { e })?;
    }
    Ok(plan)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn write_manifest(dir: &Path, m: &Manifest) -> Result<()> {
    let f = create(&dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(f, m).map_err(|e| Error::Io(e.into()))
}

fn entry(label: &str, cfg: &ExperimentConfig) -> ManifestEntry {
    ManifestEntry {
        label: label.to_string(),
        config_hash: cfg.hash(),
        config: cfg.clone(),
        seed_start: cfg.base_seed,
        seed_end: cfg.base_seed + cfg.replications as u64,
        files: Default::default(),
    }
}

fn trajectory_json(traj: &Trajectory) -> serde_json::Value {
    let series: serde_json::Map<String, serde_json::Value> = traj
        .series
        .iter()
        .map(|(s, v)| {
            let pts: Vec<_> = v
                .iter()
                .map(|x| serde_json::json!({"mean": x.mean, "stderr": x.stderr}))
                .collect();
            (s.name().to_string(), pts.into())
        })
        .collect();
    serde_json::json!({
        "config_hash": traj.meta.config_hash,
        "seed_start": traj.meta.seed_start,
        "replications": traj.meta.replications,
        "t": traj.t,
        "n_total": traj.n_total,
        "series": series,
    })
}

pub fn cmd_run(plan: &Plan, format: OutputFormat) -> Result<i32> {
    std::fs::create_dir_all(&plan.dir)?;
    let mut manifest = Manifest::new("run", plan.preset.clone());
    for (label, cfg) in &plan.runs {
        let start = Instant::now();
        let traj = run_experiment(cfg)?;
        log::info!(
            "{label}: {} replications, {} checkpoints in {:.1?}",
            cfg.replications,
            traj.len(),
            start.elapsed()
        );
        let mut e = entry(label, cfg);
        match format {
            OutputFormat::Csv => {
                for s in traj.series.keys() {
                    let name = format!("{label}_{s}.csv");
                    write_trajectory_csv(create(&plan.dir.join(&name))?, &traj.select(&[*s]))?;
                    e.files.insert(s.name().to_string(), name);
                }
            }
            OutputFormat::Json => {
                let name = format!("{label}.json");
                serde_json::to_writer_pretty(create(&plan.dir.join(&name))?, &trajectory_json(&traj))
                    .map_err(|e| Error::Io(e.into()))?;
                for s in traj.series.keys() {
                    e.files.insert(s.name().to_string(), name.clone());
                }
            }
        }
        manifest.entries.push(e);
    }
    write_manifest(&plan.dir, &manifest)?;
    println!("wrote {} run(s) to {}", plan.runs.len(), plan.dir.display());
    Ok(EXIT_OK)
}

pub fn cmd_bounds(plan: &Plan, constants: Option<&ProblemConstants>) -> Result<i32> {
    std::fs::create_dir_all(&plan.dir)?;
    let mut manifest = Manifest::new("bounds", plan.preset.clone());
    for (label, cfg) in &plan.runs {
        let pc = match constants {
            Some(pc) => *pc,
            None => cfg.model.build()?.constants(&cfg.theta0())?,
        };
        let curves = bound_curves(cfg, &pc)?;
        let name = format!("{label}_bounds.csv");
        write_bound_csv(create(&plan.dir.join(&name))?, &cfg.hash(), &curves)?;
        let mut e = entry(label, cfg);
        for c in &curves {
            if !c.valid {
                log::warn!("{label}: {} is outside its validity region", c.name);
            }
            e.files.insert(c.name.clone(), name.clone());
        }
        manifest.entries.push(e);
    }
    write_manifest(&plan.dir, &manifest)?;
    println!("wrote {} bound file(s) to {}", plan.runs.len(), plan.dir.display());
    Ok(EXIT_OK)
}

pub fn cmd_verify(opts: &VerifyOptions) -> Result<i32> {
    let start = Instant::now();
    let report = run_verify(opts);
    print!("{report}");
    println!("elapsed {:.2?}", start.elapsed());
    Ok(if report.passed() {
        EXIT_OK
    } else {
        EXIT_VERIFY_FAILED
    })
}

pub fn cmd_fit(csv: &Path, series: Series, window: f64) -> Result<i32> {
    let traj = read_trajectory_csv(File::open(csv)?)?;
    let f = fit_rate(&traj, series, window)?;
    println!(
        "series={series} slope={:.6} intercept={:.6} r2={:.6} points={}",
        f.slope, f.intercept, f.r2, f.points
    );
    Ok(EXIT_OK)
}
