//! `privopt tradeoff`: private mirror-descent sweeps against the minimax curves.
//!
//! * `rate_n`: median loss, ℓ∞ maximum-entropy channel at M = m_over_l·L,
//!   mirror descent over the ℓ1 ball of radius r·d, excess risk against n.
//! * `rate_eps`: linear loss with ℓ∞ gradients, the ε-DP ℓ∞ sampler, mirror
//!   descent over the ℓ1 ball of radius r, excess risk against ε.
//! * `effective_sample`: the `rate_eps` problem at (n, ε) next to the
//!   non-private run with max(1, ⌊nε²/d⌋) samples.
//!
//! Data always come from the cube family with P(X_j = 1) = (1 + δν_j)/2 and
//! alternating signs ν = (+1, −1, +1, …).

use std::sync::Arc;

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use privopt_core::minimax::{lower_bound, upper_bound, BoundSpec, Budget, Theorem};
use privopt_core::numeric::log_log_slope;
use privopt_core::optimizers::run;
use privopt_core::rng::derive_seed;
use privopt_core::{
    Channel, DataDist, LossFn, Method, Norm, NormBall, OptimizerConfig, PrivateGradStream,
    RiskSpec, Vector,
};

use crate::table::{Cell, Table};

pub const SCHEMA: &str = "privopt-tradeoff/v1";

pub const COLUMNS: &[&str] = &[
    "row",
    "experiment",
    "d",
    "n",
    "eps",
    "m",
    "n_eff",
    "reps",
    "risk_mean",
    "risk_std",
    "risk_ref_mean",
    "risk_ref_std",
    "risk_ratio",
    "lower_bound",
    "upper_bound",
    "slope",
    "target",
    "tolerance",
    "pass",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    RateN,
    RateEps,
    EffectiveSample,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::RateN => "rate_n",
            Experiment::RateEps => "rate_eps",
            Experiment::EffectiveSample => "effective_sample",
        }
    }

    fn salt(self) -> u64 {
        match self {
            Experiment::RateN => 1,
            Experiment::RateEps => 2,
            Experiment::EffectiveSample => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TradeoffConfig {
    pub experiments: Vec<Experiment>,
    pub seed: Option<u64>,
    pub reps: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub r: f64,
    pub delta: f64,
    pub rate_n: RateNConfig,
    pub rate_eps: RateEpsConfig,
    pub effective_sample: EffectiveSampleConfig,
    pub thresholds: Thresholds,
}

impl Default for TradeoffConfig {
    fn default() -> Self {
        TradeoffConfig {
            experiments: vec![
                Experiment::RateN,
                Experiment::RateEps,
                Experiment::EffectiveSample,
            ],
            seed: None,
            reps: 50,
            l: 1.0,
            r: 1.0,
            delta: 0.5,
            rate_n: RateNConfig::default(),
            rate_eps: RateEpsConfig::default(),
            effective_sample: EffectiveSampleConfig::default(),
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateNConfig {
    pub d_grid: Vec<usize>,
    pub n_grid: Vec<usize>,
    pub m_over_l: f64,
}

impl Default for RateNConfig {
    fn default() -> Self {
        RateNConfig {
            d_grid: vec![2, 8, 32],
            n_grid: (8..=16).map(|k| 1usize << k).collect(),
            m_over_l: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RateEpsConfig {
    pub d_grid: Vec<usize>,
    pub n: usize,
    pub eps_grid: Vec<f64>,
}

impl Default for RateEpsConfig {
    fn default() -> Self {
        RateEpsConfig {
            d_grid: vec![2, 8, 32],
            n: 1 << 14,
            eps_grid: vec![0.25, 0.35, 0.5, 0.7, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EffectiveSampleConfig {
    pub d_grid: Vec<usize>,
    pub n: usize,
    pub eps_grid: Vec<f64>,
}

impl Default for EffectiveSampleConfig {
    fn default() -> Self {
        EffectiveSampleConfig {
            d_grid: vec![2, 8, 32],
            n: 1 << 16,
            eps_grid: vec![0.25, 0.5, 1.0],
        }
    }
}

/// Acceptance windows used by `--check`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub slope_n: f64,
    pub slope_n_tol: f64,
    pub slope_eps: f64,
    pub slope_eps_tol: f64,
    /// Largest allowed max(ratio, 1/ratio) of private to matched non-private risk.
    pub ratio_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            slope_n: -0.5,
            slope_n_tol: 0.1,
            slope_eps: -1.0,
            slope_eps_tol: 0.15,
            ratio_max: 2.0,
        }
    }
}

impl TradeoffConfig {
    pub fn validate(&self) -> Result<()> {
        anyhow::ensure!(
            !self.experiments.is_empty(),
            "experiments must be non-empty"
        );
        anyhow::ensure!(self.reps > 0, "reps must be positive");
        anyhow::ensure!(self.l > 0.0 && self.r > 0.0, "L and r must be positive");
        anyhow::ensure!(
            self.delta > 0.0 && self.delta <= 1.0,
            "delta must lie in (0, 1]"
        );
        for e in &self.experiments {
            let (ds, ok_grid) = match e {
                Experiment::RateN => (
                    &self.rate_n.d_grid,
                    self.rate_n.n_grid.iter().all(|n| *n > 0) && !self.rate_n.n_grid.is_empty(),
                ),
                Experiment::RateEps => (
                    &self.rate_eps.d_grid,
                    grid_ok(&self.rate_eps.eps_grid) && self.rate_eps.n > 0,
                ),
                Experiment::EffectiveSample => (
                    &self.effective_sample.d_grid,
                    grid_ok(&self.effective_sample.eps_grid) && self.effective_sample.n > 0,
                ),
            };
            anyhow::ensure!(
                !ds.is_empty() && ds.iter().all(|d| *d > 0),
                "{}: d_grid must be non-empty and positive",
                e.name()
            );
            anyhow::ensure!(
                ok_grid,
                "{}: grids must be non-empty and positive",
                e.name()
            );
        }
        anyhow::ensure!(
            self.rate_n.m_over_l >= 1.0,
            "rate_n.m_over_l must be at least 1"
        );
        Ok(())
    }
}

fn grid_ok(g: &[f64]) -> bool {
    !g.is_empty() && g.iter().all(|v| *v > 0.0 && v.is_finite())
}

pub fn alternating_signs(d: usize) -> Vector {
    Vector::new(
        (0..d)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect(),
    )
    .expect("finite")
}

/// One private optimization problem: who answers, through what, over which domain.
#[derive(Debug, Clone)]
pub struct Setup {
    pub risk: RiskSpec,
    pub channel: Arc<Channel>,
}

impl Setup {
    pub fn median_linf(d: usize, l: f64, r: f64, delta: f64, m: f64) -> Result<Self> {
        let risk = RiskSpec::new(
            LossFn::median(l, r)?,
            DataDist::cube_bernoulli(delta, alternating_signs(d))?,
            NormBall::new(Norm::L1, r * d as f64)?,
        );
        Ok(Setup {
            risk,
            channel: Arc::new(Channel::linf_maxent(d, l, m)?),
        })
    }

    /// Linear loss with the given channel; `None` means no privacy at all.
    pub fn linear(d: usize, l: f64, r: f64, delta: f64, eps: Option<f64>) -> Result<Self> {
        let channel = match eps {
            Some(e) => Channel::dp_linf_sampler(d, l, e)?,
            None => Channel::identity(d, NormBall::new(Norm::Linf, l)?)?,
        };
        let risk = RiskSpec::new(
            LossFn::linear(l, Norm::Linf)?,
            DataDist::cube_bernoulli(delta, alternating_signs(d))?,
            NormBall::new(Norm::L1, r)?,
        );
        Ok(Setup {
            risk,
            channel: Arc::new(channel),
        })
    }

    /// Excess risk of the averaged mirror-descent iterate after n private queries.
    pub fn excess_risk(&self, n: usize, seed: u64) -> Result<f64> {
        let d = self.risk.dim();
        let mut stream = PrivateGradStream::population(
            self.risk.data.clone(),
            self.risk.loss,
            self.channel.clone(),
            seed,
        )?;
        let cfg = OptimizerConfig::new(
            Method::MirrorDescentL1,
            self.risk.domain,
            n,
            self.channel.target.radius,
        )?;
        let mut out = run(&mut stream, &cfg, d)?;
        Ok(out.evaluate(&self.risk)?)
    }

    /// Mean and sample standard deviation of the excess risk over `reps` seeds.
    pub fn risk_stats(&self, n: usize, reps: usize, seed: u64) -> Result<(f64, f64)> {
        let gaps = (0..reps)
            .map(|k| self.excess_risk(n, derive_seed(seed, k as u64)))
            .collect::<Result<Vec<f64>>>()?;
        Ok(mean_std(&gaps))
    }
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[derive(Debug, Clone, Copy)]
struct CellSpec {
    experiment: Experiment,
    d: usize,
    n: usize,
    eps: Option<f64>,
    seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct CellResult {
    spec: CellSpec,
    m: f64,
    n_eff: Option<usize>,
    risk: (f64, f64),
    reference: Option<(f64, f64)>,
    bounds: (f64, f64),
}

pub fn effective_sample_size(n: usize, eps: f64, d: usize) -> usize {
    ((n as f64 * eps * eps / d as f64).floor() as usize).max(1)
}

fn cells(cfg: &TradeoffConfig, master: u64) -> Vec<CellSpec> {
    let mut out = Vec::new();
    for &e in &cfg.experiments {
        let s = derive_seed(master, e.salt());
        let mut push = |d: usize, n: usize, eps: Option<f64>| {
            let idx = out.iter().filter(|c: &&CellSpec| c.experiment == e).count();
            out.push(CellSpec {
                experiment: e,
                d,
                n,
                eps,
                seed: derive_seed(s, idx as u64),
            });
        };
        match e {
            Experiment::RateN => {
                for &d in &cfg.rate_n.d_grid {
                    for &n in &cfg.rate_n.n_grid {
                        push(d, n, None);
                    }
                }
            }
            Experiment::RateEps => {
                for &d in &cfg.rate_eps.d_grid {
                    for &eps in &cfg.rate_eps.eps_grid {
                        push(d, cfg.rate_eps.n, Some(eps));
                    }
                }
            }
            Experiment::EffectiveSample => {
                for &d in &cfg.effective_sample.d_grid {
                    for &eps in &cfg.effective_sample.eps_grid {
                        push(d, cfg.effective_sample.n, Some(eps));
                    }
                }
            }
        }
    }
    out
}

fn run_cell(cfg: &TradeoffConfig, c: CellSpec) -> Result<CellResult> {
    let (l, r, delta) = (cfg.l, cfg.r, cfg.delta);
    let nf = c.n as f64;
    match c.experiment {
        Experiment::RateN => {
            let m = cfg.rate_n.m_over_l * l;
            let setup = Setup::median_linf(c.d, l, r, delta, m)?;
            let spec = BoundSpec::new(Theorem::T1a, c.d, nf, l, r, Budget::Radius(m));
            Ok(CellResult {
                spec: c,
                m,
                n_eff: None,
                risk: setup.risk_stats(c.n, cfg.reps, c.seed)?,
                reference: None,
                bounds: (lower_bound(&spec)?, upper_bound(&spec)?),
            })
        }
        Experiment::RateEps | Experiment::EffectiveSample => {
            let eps = c.eps.expect("eps cell");
            let setup = Setup::linear(c.d, l, r, delta, Some(eps))?;
            let spec = BoundSpec::new(Theorem::T4, c.d, nf, l, r, Budget::Eps(eps));
            let risk = setup.risk_stats(c.n, cfg.reps, c.seed)?;
            let (n_eff, reference) = if c.experiment == Experiment::EffectiveSample {
                let ne = effective_sample_size(c.n, eps, c.d);
                let base = Setup::linear(c.d, l, r, delta, None)?;
                let stats = base.risk_stats(ne, cfg.reps, derive_seed(c.seed, u64::MAX))?;
                (Some(ne), Some(stats))
            } else {
                (None, None)
            };
            Ok(CellResult {
                spec: c,
                m: setup.channel.target.radius,
                n_eff,
                risk,
                reference,
                bounds: (lower_bound(&spec)?, upper_bound(&spec)?),
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct TradeoffOutput {
    pub table: Table,
    /// Threshold violations, reported as exit code 3 under `--check`.
    pub failures: Vec<String>,
}

pub fn tradeoff(cfg: &TradeoffConfig, seed: u64) -> Result<TradeoffOutput> {
    cfg.validate()?;
    let specs = cells(cfg, seed);
    let results: Vec<CellResult> = specs
        .par_iter()
        .map(|c| {
            run_cell(cfg, *c).with_context(|| {
                format!(
                    "{} cell d={} n={} eps={:?}",
                    c.experiment.name(),
                    c.d,
                    c.n,
                    c.eps
                )
            })
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(SCHEMA, COLUMNS);
    let mut failures = Vec::new();
    for res in &results {
        let c = res.spec;
        let ratio = res.reference.map(|(m, _)| res.risk.0 / m);
        if res.bounds.0 > res.bounds.1 {
            failures.push(format!(
                "{} d={} n={}: lower bound {} above upper bound {}",
                c.experiment.name(),
                c.d,
                c.n,
                res.bounds.0,
                res.bounds.1
            ));
        }
        table.push(vec![
            ("row", "cell".into()),
            ("experiment", c.experiment.name().into()),
            ("d", c.d.into()),
            ("n", c.n.into()),
            ("eps", c.eps.into()),
            ("m", res.m.into()),
            ("n_eff", res.n_eff.into()),
            ("reps", cfg.reps.into()),
            ("risk_mean", res.risk.0.into()),
            ("risk_std", res.risk.1.into()),
            ("risk_ref_mean", res.reference.map(|r| r.0).into()),
            ("risk_ref_std", res.reference.map(|r| r.1).into()),
            ("risk_ratio", ratio.into()),
            ("lower_bound", res.bounds.0.into()),
            ("upper_bound", res.bounds.1.into()),
        ]);
    }

    let t = &cfg.thresholds;
    for &e in &cfg.experiments {
        let ds = match e {
            Experiment::RateN => &cfg.rate_n.d_grid,
            Experiment::RateEps => &cfg.rate_eps.d_grid,
            Experiment::EffectiveSample => &cfg.effective_sample.d_grid,
        };
        for &d in ds {
            let group: Vec<&CellResult> = results
                .iter()
                .filter(|r| r.spec.experiment == e && r.spec.d == d)
                .collect();
            let (value, target, tol, ok) = match e {
                Experiment::RateN | Experiment::RateEps => {
                    let xs: Vec<f64> = group
                        .iter()
                        .map(|r| match e {
                            Experiment::RateN => r.spec.n as f64,
                            _ => r.spec.eps.expect("eps cell"),
                        })
                        .collect();
                    let ys: Vec<f64> = group.iter().map(|r| r.risk.0).collect();
                    let (target, tol) = match e {
                        Experiment::RateN => (t.slope_n, t.slope_n_tol),
                        _ => (t.slope_eps, t.slope_eps_tol),
                    };
                    if xs.len() < 2 {
                        continue;
                    }
                    let slope = log_log_slope(&xs, &ys);
                    (slope, target, tol, (slope - target).abs() <= tol)
                }
                Experiment::EffectiveSample => {
                    let worst = group
                        .iter()
                        .filter_map(|r| r.reference.map(|(m, _)| r.risk.0 / m))
                        .map(|q| q.max(1.0 / q))
                        .fold(1.0, f64::max);
                    (worst, 1.0, t.ratio_max, worst <= t.ratio_max)
                }
            };
            if !ok {
                failures.push(format!(
                    "{} d={d}: fitted {} = {value} outside target {target} (tolerance {tol})",
                    e.name(),
                    if e == Experiment::EffectiveSample {
                        "worst ratio"
                    } else {
                        "slope"
                    }
                ));
            }
            let mut row = vec![
                ("row", Cell::from("fit")),
                ("experiment", e.name().into()),
                ("d", d.into()),
                ("reps", cfg.reps.into()),
                ("target", target.into()),
                ("tolerance", tol.into()),
                ("pass", if ok { "true" } else { "false" }.into()),
            ];
            if e == Experiment::EffectiveSample {
                row.push(("risk_ratio", value.into()));
            } else {
                row.push(("slope", value.into()));
            }
            table.push(row);
        }
    }
    Ok(TradeoffOutput { table, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn effective_sample_floor() {
        assert_eq!(effective_sample_size(1 << 16, 0.25, 32), 128);
        assert_eq!(effective_sample_size(10, 0.1, 8), 1);
        assert_eq!(effective_sample_size(1 << 16, 1.0, 2), 1 << 15);
    }

    #[test]
    fn small_sweep_is_deterministic() {
        let cfg = TradeoffConfig {
            reps: 3,
            rate_n: RateNConfig {
                d_grid: vec![2],
                n_grid: vec![64, 256],
                m_over_l: 2.0,
            },
            rate_eps: RateEpsConfig {
                d_grid: vec![2],
                n: 128,
                eps_grid: vec![0.5, 1.0],
            },
            effective_sample: EffectiveSampleConfig {
                d_grid: vec![2],
                n: 256,
                eps_grid: vec![1.0],
            },
            ..TradeoffConfig::default()
        };
        let a = tradeoff(&cfg, 5).unwrap().table.to_csv();
        let b = tradeoff(&cfg, 5).unwrap().table.to_csv();
        assert_eq!(a, b);
        assert_ne!(a, tradeoff(&cfg, 6).unwrap().table.to_csv());
        assert!(a.starts_with("# privopt-tradeoff/v1\nrow,experiment,"));
    }

    #[test]
    fn more_samples_help() {
        let s = Setup::median_linf(4, 1.0, 1.0, 0.5, 2.0).unwrap();
        let (small, _) = s.risk_stats(64, 10, 1).unwrap();
        let (large, _) = s.risk_stats(16_384, 10, 1).unwrap();
        assert!(large < small / 4.0, "{small} {large}");
    }
}
