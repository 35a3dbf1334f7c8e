//! `privopt bias-demo`: a one-dimensional instance where a biased oracle
//! drives the optimizer to the worst endpoint.
//!
//! f(θ) = bθ/2 on [−c, c] is the risk of the linear loss with L = b/2 and
//! X ≡ 1. The biased channel reports gradients with mean −b/2, so the run
//! heads for θ = +c while θ* = −c. The unbiased counterpart uses the ℓ∞
//! maximum-entropy channel at the same radius M.

use std::sync::Arc;

use anyhow::Result;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use privopt_core::rng::derive_seed;
use privopt_core::{Channel, DataDist, LossFn, Norm, NormBall, RiskSpec, Vector};

use crate::table::{Cell, Table};
use crate::tradeoff::{mean_std, Setup};

pub const SCHEMA: &str = "privopt-bias-demo/v1";

pub const COLUMNS: &[&str] = &[
    "run",
    "channel",
    "n",
    "reps",
    "bias",
    "m",
    "gap_mean",
    "gap_std",
    "sup_minus_inf",
    "threshold",
    "pass",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasDemoConfig {
    pub seed: Option<u64>,
    pub b: f64,
    pub c: f64,
    /// M as a multiple of the gradient size L = b/2.
    pub m_over_l: f64,
    pub n_grid: Vec<usize>,
    pub reps: usize,
    /// The biased run must reach this fraction of sup − inf.
    pub wrong_fraction: f64,
    /// The unbiased run must stay below factor·M·c/√n.
    pub unbiased_factor: f64,
}

impl Default for BiasDemoConfig {
    fn default() -> Self {
        BiasDemoConfig {
            seed: None,
            b: 1.0,
            c: 1.0,
            m_over_l: 4.0,
            n_grid: vec![1_000, 10_000, 100_000],
            reps: 20,
            wrong_fraction: 0.9,
            unbiased_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BiasDemoOutput {
    pub table: Table,
    pub failures: Vec<String>,
    /// Whether a zero-bias run reproduced the unbiased run bit for bit.
    pub zero_bias_identical: bool,
}

fn setup(cfg: &BiasDemoConfig, bias: Option<f64>) -> Result<Setup> {
    let l = cfg.b / 2.0;
    let m = cfg.m_over_l * l;
    let risk = RiskSpec::new(
        LossFn::linear(l, Norm::Linf)?,
        DataDist::cube_bernoulli(1.0, Vector::filled(1, 1.0))?,
        NormBall::new(Norm::L1, cfg.c)?,
    );
    let channel = match bias {
        Some(v) => Channel::biased_demo(1, l, m, Vector::new(vec![v])?)?,
        None => Channel::linf_maxent(1, l, m)?,
    };
    Ok(Setup {
        risk,
        channel: Arc::new(channel),
    })
}

pub fn bias_demo(cfg: &BiasDemoConfig, seed: u64) -> Result<BiasDemoOutput> {
    anyhow::ensure!(cfg.b > 0.0 && cfg.c > 0.0, "b and c must be positive");
    anyhow::ensure!(cfg.reps > 0, "reps must be positive");
    anyhow::ensure!(
        !cfg.n_grid.is_empty() && cfg.n_grid.iter().all(|n| *n > 0),
        "n_grid must be non-empty and positive"
    );
    anyhow::ensure!(
        cfg.m_over_l >= 3.0,
        "the biased channel needs M ≥ L + b, i.e. m_over_l ≥ 3"
    );
    let l = cfg.b / 2.0;
    let m = cfg.m_over_l * l;
    let range = cfg.b * cfg.c;
    let runs = [
        ("biased", Some(-cfg.b)),
        ("unbiased", None),
        ("zero_bias", Some(0.0)),
    ];
    let cells: Vec<(usize, usize)> = (0..runs.len())
        .flat_map(|k| (0..cfg.n_grid.len()).map(move |j| (k, j)))
        .collect();
    let results: Vec<Vec<f64>> = cells
        .par_iter()
        .map(|&(k, j)| -> Result<Vec<f64>> {
            let s = setup(cfg, runs[k].1)?;
            // every run at a given n shares its seeds, so zero bias is comparable bit for bit
            let cell_seed = derive_seed(seed, j as u64);
            (0..cfg.reps)
                .map(|rep| Ok(s.excess_risk(cfg.n_grid[j], derive_seed(cell_seed, rep as u64))?))
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(SCHEMA, COLUMNS);
    let mut failures = Vec::new();
    let last = cfg.n_grid.len() - 1;
    for (idx, &(k, j)) in cells.iter().enumerate() {
        let (name, bias) = runs[k];
        let n = cfg.n_grid[j];
        let (mean, std) = mean_std(&results[idx]);
        let (threshold, pass) = match name {
            "biased" if j == last => {
                let t = cfg.wrong_fraction * range;
                (Some(t), Some(mean >= t))
            }
            "unbiased" => {
                let t = cfg.unbiased_factor * m * cfg.c / (n as f64).sqrt();
                (Some(t), Some(mean <= t))
            }
            _ => (None, None),
        };
        if pass == Some(false) {
            failures.push(format!(
                "{name} run at n={n}: gap {mean} vs threshold {}",
                threshold.unwrap_or(f64::NAN)
            ));
        }
        table.push(vec![
            ("run", name.into()),
            ("channel", setup(cfg, bias)?.channel.kind.name().into()),
            ("n", n.into()),
            ("reps", cfg.reps.into()),
            ("bias", bias.into()),
            ("m", m.into()),
            ("gap_mean", mean.into()),
            ("gap_std", std.into()),
            ("sup_minus_inf", range.into()),
            ("threshold", threshold.into()),
            (
                "pass",
                pass.map(|p| Cell::from(if p { "true" } else { "false" }))
                    .unwrap_or(Cell::Empty),
            ),
        ]);
    }
    let per_run = cfg.n_grid.len();
    let zero_bias_identical = results[per_run..2 * per_run] == results[2 * per_run..];
    if !zero_bias_identical {
        failures.push("zero-bias run differs from the unbiased run".into());
    }
    Ok(BiasDemoOutput {
        table,
        failures,
        zero_bias_identical,
    })
}
