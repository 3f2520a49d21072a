//! Canned experiment grids for the reference figures.

use std::fmt;
use std::str::FromStr;

use crate::bounds::{
    assg_bound_constant_with, assg_bound_varying_with, assg_general_curve, curve_from,
    derived_constants, fourth_moment_curve, ssg_bound_constant, ssg_bound_varying,
    ssg_general_curve, BoundCurve, BoundQuantity,
};
use crate::error::{Error, Result};
use crate::models::ProblemConstants;
use crate::optimizers::Averagers;
use crate::schedules::{cumulative_samples, BatchSchedule, LearningRateParams};

use super::{run_experiment, ExperimentConfig, Trajectory};

/// Batch scales shared by the constant and varying figures.
pub const FIGURE_C_RHO: [u64; 4] = [1, 8, 64, 128];
/// Batch growth exponents of the varying and robustness figures.
pub const FIGURE_RHO: [f64; 3] = [-0.5, 0.0, 0.5];
pub const WASSG_LAMBDA: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// Constant batches, `C_ρ ∈ {1, 8, 64, 128}`.
    Fig1,
    /// Varying batches at `C_ρ = 1`.
    Fig2,
    Fig3,
    Fig4,
    /// Varying batches at `C_ρ = 128`.
    Fig5,
    /// `α = 2/3`, `β = 1/3`, `C_ρ = 8`, with the weighted average at `λ = 2`.
    Fig6,
}

impl Figure {
    pub const ALL: [Figure; 6] = [
        Figure::Fig1,
        Figure::Fig2,
        Figure::Fig3,
        Figure::Fig4,
        Figure::Fig5,
        Figure::Fig6,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
            Figure::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Figure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "robustness" {
            return Ok(Figure::Fig6);
        }
        Figure::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset {s:?} (fig1..fig6)")))
    }
}

/// One labelled configuration of a preset.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetRun {
    pub label: String,
    pub config: ExperimentConfig,
}

fn lr(beta: f64) -> LearningRateParams {
    LearningRateParams {
        c_gamma: 1.0,
        alpha: 2.0 / 3.0,
        beta,
    }
}

fn rho_label(rho: f64) -> String {
    format!("rho{rho}")
}

pub fn figure_configs(fig: Figure) -> Vec<PresetRun> {
    let run = |label: String, lr, batches| PresetRun {
        label,
        config: ExperimentConfig::new(lr, batches),
    };
    match fig {
        Figure::Fig1 => FIGURE_C_RHO
            .iter()
            .map(|&c| run(format!("crho{c}"), lr(0.0), BatchSchedule::constant(c)))
            .collect(),
        Figure::Fig2 | Figure::Fig3 | Figure::Fig4 | Figure::Fig5 => {
            let c = match fig {
                Figure::Fig2 => FIGURE_C_RHO[0],
                Figure::Fig3 => FIGURE_C_RHO[1],
                Figure::Fig4 => FIGURE_C_RHO[2],
                _ => FIGURE_C_RHO[3],
            };
            FIGURE_RHO
                .iter()
                .map(|&rho| {
                    run(
                        format!("crho{c}_{}", rho_label(rho)),
                        lr(0.0),
                        BatchSchedule::varying(c as f64, rho),
                    )
                })
                .collect()
        }
        Figure::Fig6 => FIGURE_RHO
            .iter()
            .map(|&rho| {
                let mut r = run(
                    rho_label(rho),
                    lr(1.0 / 3.0),
                    BatchSchedule::varying(8.0, rho),
                );
                r.config.averagers = Averagers {
                    assg: true,
                    wassg: Some(WASSG_LAMBDA),
                };
                r
            })
            .collect(),
    }
}

/// Closed-form and general bound curves on the checkpoint grid of `cfg`.
///
/// Constant schedules get `ssg_constant`/`assg_constant`, varying ones
/// `ssg_varying`/`assg_varying`; both also get `ssg_general`, `fourth_moment` and
/// `assg_general`. Random schedules have no certified bound.
pub fn bound_curves(cfg: &ExperimentConfig, pc: &ProblemConstants) -> Result<Vec<BoundCurve>> {
    if !cfg.batches.is_deterministic() {
        return Err(Error::Config(
            "bounds need a deterministic batch schedule".into(),
        ));
    }
    let ts = cfg.checkpoint_grid()?;
    let grid: Vec<(u64, u64)> = ts
        .iter()
        .map(|&t| Ok((t, cumulative_samples(&cfg.batches, t)?)))
        .collect::<Result<_>>()?;
    let lr = &cfg.lr;
    let dc = derived_constants(pc, lr, &cfg.batches)?;
    let (last, avg) = match cfg.batches {
        BatchSchedule::Constant { c_rho } => (
            curve_from("ssg_constant", BoundQuantity::MeanSquare, &grid, |n| {
                ssg_bound_constant(pc, lr, c_rho, n)
            })?,
            curve_from("assg_constant", BoundQuantity::RootMeanSquare, &grid, |n| {
                assg_bound_constant_with(pc, lr, c_rho, n, &dc)
            })?,
        ),
        BatchSchedule::Varying { c_rho, rho } => (
            curve_from("ssg_varying", BoundQuantity::MeanSquare, &grid, |n| {
                ssg_bound_varying(pc, lr, c_rho, rho, n)
            })?,
            curve_from("assg_varying", BoundQuantity::RootMeanSquare, &grid, |n| {
                assg_bound_varying_with(pc, lr, c_rho, rho, n, &dc)
            })?,
        ),
        BatchSchedule::RandomBounded { .. } => unreachable!("checked above"),
    };
    Ok(vec![
        last,
        ssg_general_curve(pc, lr, &cfg.batches, &ts)?,
        fourth_moment_curve(pc, lr, &cfg.batches, &ts)?,
        avg,
        assg_general_curve(pc, lr, &cfg.batches, &ts)?,
    ])
}

/// Trajectories and bound curves of one preset.
#[derive(Debug, Clone)]
pub struct FigureOutput {
    pub figure: Figure,
    pub runs: Vec<(PresetRun, Trajectory)>,
    pub bounds: Vec<(String, Vec<BoundCurve>)>,
}

/// Runs every configuration of `fig` with `replications` replications.
pub fn replicate_paper_figures(fig: Figure, replications: usize) -> Result<FigureOutput> {
    let mut runs = Vec::new();
    let mut bounds = Vec::new();
    for mut p in figure_configs(fig) {
        p.config.replications = replications;
        let traj = run_experiment(&p.config)?;
        let pc = p.config.model.build()?.constants(&p.config.theta0())?;
        bounds.push((p.label.clone(), bound_curves(&p.config, &pc)?));
        runs.push((p, traj));
    }
    Ok(FigureOutput {
        figure: fig,
        runs,
        bounds,
    })
}
