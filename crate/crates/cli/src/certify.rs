//! `privopt certify`: unbiasedness, mutual information and DP ratio of one channel.

use std::collections::HashSet;

use anyhow::Result;
use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use privopt_core::information::{self, mi_closed_form, mi_monte_carlo, mutual_information_exact};
use privopt_core::rng::{derived, Rng};
use privopt_core::{
    Channel, ChannelConfig, ChannelKind, DiscreteDist, InfoReport, Norm, NormBall,
    PrivacyCertificate, Vector,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyConfig {
    #[serde(flatten)]
    pub channel: ChannelConfig,
    /// Random inputs drawn from the source ball.
    #[serde(default = "default_inputs")]
    pub inputs: usize,
    /// Monte-Carlo draws per input when the pmf is not enumerated.
    #[serde(default = "default_draws")]
    pub draws: usize,
    /// Samples for the plug-in MI estimate; 0 disables it.
    #[serde(default = "default_mi_samples")]
    pub mi_samples: usize,
    #[serde(default = "default_z_threshold")]
    pub z_threshold: f64,
    /// Skip the exact pmf mean and test unbiasedness by sampling only.
    #[serde(default)]
    pub monte_carlo_only: bool,
}

const FIELDS: &[&str] = &[
    "kind",
    "d",
    "L",
    "M_or_eps",
    "seed",
    "bias",
    "inputs",
    "draws",
    "mi_samples",
    "z_threshold",
    "monte_carlo_only",
];

impl CertifyConfig {
    /// Parse a configuration, rejecting unknown fields (serde cannot do so
    /// through the flattened channel description).
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if let Some(map) = value.as_object() {
            if let Some(key) = map.keys().find(|k| !FIELDS.contains(&k.as_str())) {
                anyhow::bail!("unknown field `{key}`, expected one of {FIELDS:?}");
            }
        }
        Ok(serde_json::from_value(value)?)
    }
}

fn default_inputs() -> usize {
    20
}

fn default_draws() -> usize {
    1_000_000
}

fn default_mi_samples() -> usize {
    200_000
}

fn default_z_threshold() -> f64 {
    4.0
}

/// Largest d for which the pmf is enumerated for the exact mean.
const EXACT_MEAN_MAX_DIM: usize = 12;
/// Largest number of source extreme points for exact mutual information.
const EXACT_MI_MAX_POINTS: usize = 1 << 10;
/// Largest number of source extreme points for the plug-in estimate.
const MC_MI_MAX_POINTS: usize = 64;
/// Largest d for the exhaustive DP ratio.
const DP_RATIO_MAX_DIM: usize = 10;

/// A point drawn uniformly from the ball.
pub fn random_in_ball(ball: NormBall, d: usize, rng: &mut Rng) -> Vector {
    let r = ball.radius;
    let coords: Vec<f64> = match ball.norm {
        Norm::Linf => (0..d).map(|_| r * (2.0 * rng.gen::<f64>() - 1.0)).collect(),
        Norm::L1 => {
            // the first d of d + 1 normalized exponentials are uniform on the simplex body
            let e: Vec<f64> = (0..=d).map(|_| rng.sample::<f64, _>(Exp1)).collect();
            let total: f64 = e.iter().sum();
            e[..d]
                .iter()
                .map(|x| {
                    let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    s * r * x / total
                })
                .collect()
        }
        Norm::L2 => {
            let g: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
            let radius = r * rng.gen::<f64>().powf(1.0 / d as f64);
            g.iter().map(|x| radius * x / n).collect()
        }
    };
    Vector::new(coords).expect("finite coordinates")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanCheck {
    /// Largest |mean − x|/(std/√N) over inputs and coordinates.
    pub max_z: f64,
    pub max_abs_residual: f64,
    pub coordinates: usize,
}

/// Per-coordinate z-scores of the Monte-Carlo mean of Z ~ Q(·|x) against x.
pub fn monte_carlo_mean_check(
    ch: &Channel,
    inputs: &[Vector],
    draws: usize,
    seed: u64,
) -> Result<MeanCheck> {
    anyhow::ensure!(draws >= 2, "need at least two draws per input");
    let per_input: Vec<(f64, f64)> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, x)| -> Result<(f64, f64)> {
            let mut rng = derived(seed, i as u64);
            let d = x.dim();
            let mut sum = vec![0.0f64; d];
            let mut sumsq = vec![0.0f64; d];
            for _ in 0..draws {
                let z = ch.sample(x, &mut rng)?;
                for (j, v) in z.iter().enumerate() {
                    sum[j] += v;
                    sumsq[j] += v * v;
                }
            }
            let nf = draws as f64;
            let mut worst_z = 0.0f64;
            let mut worst_res = 0.0f64;
            for j in 0..d {
                let mean = sum[j] / nf;
                let var = (sumsq[j] / nf - mean * mean).max(0.0) * nf / (nf - 1.0);
                let res = (mean - x[j]).abs();
                let se = (var / nf).sqrt();
                let z = if se > 0.0 {
                    res / se
                } else if res == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst_z = worst_z.max(z);
                worst_res = worst_res.max(res);
            }
            Ok((worst_z, worst_res))
        })
        .collect::<Result<_>>()?;
    Ok(MeanCheck {
        max_z: per_input.iter().map(|p| p.0).fold(0.0, f64::max),
        max_abs_residual: per_input.iter().map(|p| p.1).fold(0.0, f64::max),
        coordinates: inputs.iter().map(Vector::dim).sum(),
    })
}

/// max over inputs and coordinates of |E_Q[Z | x] − x| from the exact pmf.
pub fn exact_mean_residual(ch: &Channel, inputs: &[Vector]) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in inputs {
        let mean = ch.pmf(x)?.mean();
        worst = worst.max(mean.distance(x, Norm::Linf));
    }
    Ok(worst)
}

pub fn certify(cfg: &CertifyConfig, seed: u64) -> Result<InfoReport> {
    let ch = Channel::from_config(&cfg.channel)?;
    anyhow::ensure!(cfg.inputs > 0, "inputs must be positive");
    anyhow::ensure!(
        cfg.z_threshold > 0.0,
        "z_threshold must be positive, got {}",
        cfg.z_threshold
    );
    let d = ch.dim;
    let mut violations = Vec::new();

    let mut rng = derived(seed, 0);
    let inputs: Vec<Vector> = (0..cfg.inputs)
        .map(|_| random_in_ball(ch.source, d, &mut rng))
        .collect();

    let exact_mean = !cfg.monte_carlo_only && ch.has_finite_support() && d <= EXACT_MEAN_MAX_DIM;
    let (residual, method) = if exact_mean {
        let res = exact_mean_residual(&ch, &inputs)?;
        let tol = 1e-9 * ch.target.radius.max(1.0);
        if res > tol {
            violations.push(format!(
                "exact mean of Z misses the input by {res:e} (tolerance {tol:e})"
            ));
        }
        (res, "exact_pmf_max_abs".to_string())
    } else {
        let check = monte_carlo_mean_check(&ch, &inputs, cfg.draws, derived(seed, 1).gen())?;
        if check.max_z > cfg.z_threshold {
            violations.push(format!(
                "Monte-Carlo mean z-score {} exceeds {} over {} coordinates",
                check.max_z, cfg.z_threshold, check.coordinates
            ));
        }
        (
            check.max_z,
            format!("monte_carlo_max_z_{}_draws", cfg.draws),
        )
    };

    let n_points = match ch.source.norm {
        Norm::Linf if d < 64 => 1usize << d,
        Norm::L1 => 2 * d,
        _ => usize::MAX,
    };
    let source = if n_points <= EXACT_MI_MAX_POINTS {
        Some(DiscreteDist::uniform(ch.source_extreme_points()?)?)
    } else {
        None
    };

    let mi_closed = match ch.kind {
        ChannelKind::LinfMaxent | ChannelKind::L1Maxent => Some(
            mi_closed_form(
                ch.kind,
                d,
                ch.source.radius,
                ch.privacy_param().unwrap_or(1.0),
            )?
            .exact,
        ),
        ChannelKind::Identity => source.as_ref().map(DiscreteDist::entropy),
        _ => None,
    };

    let mi_exact = match &source {
        Some(src) if ch.has_finite_support() => Some(mutual_information_exact(src, &ch)?),
        _ => None,
    };
    if let (Some(e), Some(c)) = (mi_exact, mi_closed) {
        if (e - c).abs() > 1e-9 * c.abs().max(1.0) {
            violations.push(format!(
                "exact mutual information {e} differs from the closed form {c}"
            ));
        }
    }
    if let (PrivacyCertificate::MutualInformation { nats }, Some(e)) = (ch.certificate(), mi_exact)
    {
        if e > nats * (1.0 + 1e-9) + 1e-12 {
            violations.push(format!(
                "mutual information {e} exceeds the certified {nats} nats"
            ));
        }
    }

    let mi_mc = match (&source, mi_exact) {
        (Some(src), Some(exact)) if cfg.mi_samples >= 10_000 && src.len() <= MC_MI_MAX_POINTS => {
            let mut r = derived(seed, 2);
            let (est, se) = mi_monte_carlo(src, &ch, cfg.mi_samples, &mut r)?;
            let nz = output_alphabet(src, &ch)?;
            let bias =
                ((src.len() - 1) * nz.saturating_sub(1)) as f64 / (2.0 * cfg.mi_samples as f64);
            if est < exact - 3.0 * se || est > exact + 3.0 * se + bias {
                violations.push(format!(
                    "plug-in MI {est} ± {se} inconsistent with the exact {exact} (bias allowance {bias})"
                ));
            }
            Some((est, se))
        }
        _ => None,
    };

    let dp_ratio = if ch.kind.is_differentially_private()
        && (d <= DP_RATIO_MAX_DIM || !ch.has_finite_support())
    {
        let ratio = ch.max_privacy_ratio()?;
        let eps = ch.privacy_param().unwrap_or(0.0);
        if ratio > eps.exp() * (1.0 + 1e-9) {
            violations.push(format!(
                "likelihood ratio {ratio} exceeds e^eps = {}",
                eps.exp()
            ));
        }
        Some(ratio)
    } else {
        None
    };

    Ok(InfoReport {
        channel: ch.kind.name().to_string(),
        d,
        privacy_param: ch.privacy_param(),
        non_private: matches!(ch.certificate(), PrivacyCertificate::NonPrivate),
        mi_exact,
        mi_exact_bits: mi_exact.map(information::nats_to_bits),
        mi_closed_form: mi_closed,
        mi_monte_carlo: mi_mc,
        dp_ratio_max: dp_ratio,
        unbiasedness_max_residual: residual,
        unbiasedness_method: method,
        violations,
    })
}

/// Number of distinct outputs reachable from the source support.
fn output_alphabet(source: &DiscreteDist, ch: &Channel) -> Result<usize> {
    let mut seen = HashSet::new();
    for x in &source.support {
        for z in &ch.pmf(x)?.support {
            seen.insert(z.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>());
        }
    }
    Ok(seen.len())
}
