//! Privacy channels: randomized maps g → Z with E[Z | g] = g.
//!
//! Two channels are mutual-information optimal (ℓ∞ and ℓ1 source balls),
//! one is the optimal locally differentially private channel on the
//! hypercube, and two are the ε-DP samplers for ℓ∞ and ℓ2 gradient bounds.
//! `identity` and `biased_demo` exist for diagnostics.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{cube_point, Norm, NormBall, Vector};
use crate::information::{self, point_key, DiscreteDist};
use crate::numeric::{binom, gamma_ratio, ln_binom};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    LinfMaxent,
    L1Maxent,
    DpHypercube,
    DpLinfSampler,
    DpL2Sampler,
    Identity,
    BiasedDemo,
}

impl ChannelKind {
    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::LinfMaxent => "linf_maxent",
            ChannelKind::L1Maxent => "l1_maxent",
            ChannelKind::DpHypercube => "dp_hypercube",
            ChannelKind::DpLinfSampler => "dp_linf_sampler",
            ChannelKind::DpL2Sampler => "dp_l2_sampler",
            ChannelKind::Identity => "identity",
            ChannelKind::BiasedDemo => "biased_demo",
        }
    }

    pub fn is_differentially_private(self) -> bool {
        matches!(
            self,
            ChannelKind::DpHypercube | ChannelKind::DpLinfSampler | ChannelKind::DpL2Sampler
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrivacyCertificate {
    /// sup_P I(P, Q) in nats.
    MutualInformation {
        nats: f64,
    },
    DifferentialPrivacy {
        eps: f64,
    },
    NonPrivate,
}

/// Derived constants fixed at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibration {
    Identity,
    LinfMaxent {
        m: f64,
    },
    /// `ratio` is M = M1/L; the conditional law on the 2d atoms is
    /// (e^γ, e^{−γ}, 1, …, 1)/denom.
    L1Maxent {
        m1: f64,
        ratio: f64,
        gamma: f64,
        denom: f64,
    },
    /// Two-level law q_hi on {⟨z, x⟩ > 0} and q_lo elsewhere; outputs are
    /// `scale`·z where scale = L/t.
    DpHypercube {
        eps: f64,
        c_d: f64,
        q_hi: f64,
        q_lo: f64,
        t: f64,
        scale: f64,
    },
    DpLinfSampler {
        eps: f64,
        pi: f64,
        b: f64,
    },
    DpL2Sampler {
        eps: f64,
        pi: f64,
        b: f64,
    },
    BiasedDemo {
        m: f64,
        bias: Vector,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub kind: ChannelKind,
    pub dim: usize,
    pub source: NormBall,
    pub target: NormBall,
    pub calibration: Calibration,
}

/// JSON form `{kind, d, L, M_or_eps, seed}` used by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M_or_eps", default, skip_serializing_if = "Option::is_none")]
    pub m_or_eps: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias: Option<Vec<f64>>,
}

/// Upper cap on d for which 2^d-point pmfs are enumerated.
pub const PMF_MAX_DIM: usize = 20;

const SOURCE_TOL: f64 = 1e-12;

fn check_dim_positive(d: usize) -> Result<()> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    Ok(())
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be positive and finite, got {eps}"));
    }
    Ok(())
}

/// #{z ∈ {−1,1}^d : ⟨z, x⟩ > k} for any x ∈ {−1,1}^d.
pub fn count_above(d: u64, k: i64) -> f64 {
    // ⟨z, x⟩ = d − 2·(number of disagreements i), so the condition is i < (d − k)/2.
    let upper = (d as i64 - k + 1).div_euclid(2); // ⌈(d − k)/2⌉
    (0..upper.clamp(0, d as i64 + 1) as u64)
        .map(|i| binom(d, i))
        .sum()
}

/// Coefficient c with Σ_{z : ⟨z,x⟩ > 0} z = c·x, namely C(d−1, ⌈d/2⌉ − 1).
pub fn half_cube_mean_coefficient(d: u64) -> f64 {
    binom(d - 1, d.div_ceil(2) - 1)
}

/// K_d = Σ_{i ≤ ⌊d/2⌋} (d − 2i) C(d, i).
pub fn k_d(d: u64) -> f64 {
    (0..=d / 2).map(|i| (d - 2 * i) as f64 * binom(d, i)).sum()
}

/// Threshold ε*(d) below which the k = 0 two-level channel is optimal;
/// +∞ for d = 1.
pub fn eps_star(d: u64) -> f64 {
    let c = count_above(d, 0);
    let k = k_d(d);
    let two_d = 2f64.powi(d as i32);
    if k == c {
        return f64::INFINITY;
    }
    ((k + two_d - c) / (k - c)).ln()
}

/// γ solving (e^γ − e^{−γ})/(e^γ + e^{−γ} + 2d − 2) = 1/M.
pub fn l1_gamma(d: usize, m: f64) -> f64 {
    let a = 2.0 * d as f64 - 2.0;
    ((a + (a * a + 4.0 * (m * m - 1.0)).sqrt()) / (2.0 * (m - 1.0))).ln()
}

/// E|U₁| for U uniform on the unit sphere in R^d.
pub fn sphere_abs_first_moment(d: usize) -> f64 {
    if d > 1024 {
        return gamma_ratio(d as f64 / 2.0, (d as f64 + 1.0) / 2.0) / PI.sqrt();
    }
    // Γ(k/2)/Γ((k+1)/2) steps by k/(k+1) from k to k + 2
    let (mut k, mut ratio) = if d % 2 == 1 {
        (1usize, PI.sqrt())
    } else {
        (2usize, 2.0 / PI.sqrt())
    };
    while k < d {
        ratio *= k as f64 / (k + 1) as f64;
        k += 2;
    }
    ratio / PI.sqrt()
}

fn fair_sign(rng: &mut Rng) -> f64 {
    if rng.gen::<bool>() {
        1.0
    } else {
        -1.0
    }
}

/// Random signs with P(+1) = (1 + x_i/s)/2, i.e. E[y_i] = x_i/s.
fn round_to_signs(x: &Vector, s: f64, rng: &mut Rng) -> Vec<f64> {
    x.iter()
        .map(|xi| {
            if rng.gen::<f64>() < 0.5 + xi / (2.0 * s) {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

fn uniform_signs(d: usize, rng: &mut Rng) -> Vec<f64> {
    let mut out = Vec::with_capacity(d);
    let mut word = 0u64;
    for i in 0..d {
        if i % 64 == 0 {
            word = rng.gen();
        }
        out.push(if word >> (i % 64) & 1 == 1 { 1.0 } else { -1.0 });
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn negate(v: &mut [f64]) {
    for x in v.iter_mut() {
        *x = -*x;
    }
}

/// P(Σ y_i = 2m − d) for independent signs with P(y_i = 1) = (1 + a_i)/2, m = 0..d.
fn sign_sum_law(a: impl Iterator<Item = f64>, d: usize) -> Vec<f64> {
    let mut dp = vec![0.0; d + 1];
    dp[0] = 1.0;
    for (j, ai) in a.enumerate() {
        let p = (1.0 + ai) / 2.0;
        for m in (0..=j + 1).rev() {
            let up = if m > 0 { dp[m - 1] * p } else { 0.0 };
            dp[m] = dp[m] * (1.0 - p) + up;
        }
    }
    dp
}

impl Channel {
    /// Prop.-1 channel: independent coordinates on {±M}^d, source ‖x‖∞ ≤ L.
    pub fn linf_maxent(d: usize, l: f64, m: f64) -> Result<Self> {
        check_dim_positive(d)?;
        let source = NormBall::new(Norm::Linf, l)?;
        if !(m >= l && m.is_finite()) {
            return invalid(format!("linf_maxent needs M ≥ L, got M = {m}, L = {l}"));
        }
        Ok(Channel {
            kind: ChannelKind::LinfMaxent,
            dim: d,
            source,
            target: NormBall::new(Norm::Linf, m)?,
            calibration: Calibration::LinfMaxent { m },
        })
    }

    /// Prop.-2 channel: randomized rounding to {±L e_i}, then the γ-tilted
    /// law on {±M1 e_j}.
    pub fn l1_maxent(d: usize, l: f64, m1: f64) -> Result<Self> {
        check_dim_positive(d)?;
        let source = NormBall::new(Norm::L1, l)?;
        if !(m1 > l && m1.is_finite()) {
            return invalid(format!("l1_maxent needs M1 > L, got M1 = {m1}, L = {l}"));
        }
        let ratio = m1 / l;
        let gamma = l1_gamma(d, ratio);
        let denom = gamma.exp() + (-gamma).exp() + 2.0 * d as f64 - 2.0;
        Ok(Channel {
            kind: ChannelKind::L1Maxent,
            dim: d,
            source,
            target: NormBall::new(Norm::L1, m1)?,
            calibration: Calibration::L1Maxent {
                m1,
                ratio,
                gamma,
                denom,
            },
        })
    }

    /// Optimal ε-DP channel for the ℓ∞ ball (k = 0 regime, ε < ε*(d)).
    pub fn dp_hypercube(d: usize, l: f64, eps: f64) -> Result<Self> {
        check_dim_positive(d)?;
        check_eps(eps)?;
        let source = NormBall::new(Norm::Linf, l)?;
        let star = eps_star(d as u64);
        if eps >= star {
            return Err(Error::Unsupported(format!(
                "dp_hypercube implements eps < eps*({d}) = {star}; got {eps}"
            )));
        }
        let c_d = count_above(d as u64, 0);
        let e = eps.exp();
        let norm = e * c_d + 2f64.powi(d as i32) - c_d;
        let q_hi = e / norm;
        let q_lo = 1.0 / norm;
        let t = (e - 1.0) / norm * half_cube_mean_coefficient(d as u64);
        let scale = l / t;
        Ok(Channel {
            kind: ChannelKind::DpHypercube,
            dim: d,
            source,
            target: NormBall::new(Norm::Linf, scale)?,
            calibration: Calibration::DpHypercube {
                eps,
                c_d,
                q_hi,
                q_lo,
                t,
                scale,
            },
        })
    }

    /// ε-DP sampler for ‖g‖∞ ≤ L with outputs in {±B}^d.
    pub fn dp_linf_sampler(d: usize, l: f64, eps: f64) -> Result<Self> {
        check_dim_positive(d)?;
        check_eps(eps)?;
        let source = NormBall::new(Norm::Linf, l)?;
        let e = eps.exp();
        let d64 = d as u64;
        let ln_b = (d as f64 - 1.0) * 2f64.ln() + l.ln() + ((e + 1.0) / (e - 1.0)).ln()
            - ln_binom(d64 - 1, d64.div_ceil(2) - 1);
        let b = if d <= 60 {
            2f64.powi(d as i32 - 1) * l * (e + 1.0) / (e - 1.0) / half_cube_mean_coefficient(d64)
        } else {
            ln_b.exp()
        };
        Ok(Channel {
            kind: ChannelKind::DpLinfSampler,
            dim: d,
            source,
            target: NormBall::new(Norm::Linf, b)?,
            calibration: Calibration::DpLinfSampler {
                eps,
                pi: e / (e + 1.0),
                b,
            },
        })
    }

    /// ε-DP sampler for ‖g‖₂ ≤ L with outputs on the sphere of radius B.
    pub fn dp_l2_sampler(d: usize, l: f64, eps: f64) -> Result<Self> {
        check_dim_positive(d)?;
        check_eps(eps)?;
        let source = NormBall::new(Norm::L2, l)?;
        let e = eps.exp();
        let b = l * (e + 1.0) / (e - 1.0) / sphere_abs_first_moment(d);
        Ok(Channel {
            kind: ChannelKind::DpL2Sampler,
            dim: d,
            source,
            target: NormBall::new(Norm::L2, b)?,
            calibration: Calibration::DpL2Sampler {
                eps,
                pi: e / (e + 1.0),
                b,
            },
        })
    }

    /// Z = g. Non-private.
    pub fn identity(d: usize, source: NormBall) -> Result<Self> {
        check_dim_positive(d)?;
        Ok(Channel {
            kind: ChannelKind::Identity,
            dim: d,
            source,
            target: source,
            calibration: Calibration::Identity,
        })
    }

    /// Coordinatewise ±M perturbation with mean g + bias. Deliberately biased.
    pub fn biased_demo(d: usize, l: f64, m: f64, bias: Vector) -> Result<Self> {
        check_dim_positive(d)?;
        bias.check_dim(d)?;
        if !(m >= l + bias.norm(Norm::Linf)) {
            return invalid("biased_demo needs M ≥ L + ‖bias‖∞");
        }
        Ok(Channel {
            kind: ChannelKind::BiasedDemo,
            dim: d,
            source: NormBall::new(Norm::Linf, l)?,
            target: NormBall::new(Norm::Linf, m)?,
            calibration: Calibration::BiasedDemo { m, bias },
        })
    }

    pub fn from_config(cfg: &ChannelConfig) -> Result<Self> {
        let param = || {
            cfg.m_or_eps.ok_or_else(|| {
                Error::InvalidParameter(format!("{} needs M_or_eps", cfg.kind.name()))
            })
        };
        match cfg.kind {
            ChannelKind::LinfMaxent => Channel::linf_maxent(cfg.d, cfg.l, param()?),
            ChannelKind::L1Maxent => Channel::l1_maxent(cfg.d, cfg.l, param()?),
            ChannelKind::DpHypercube => Channel::dp_hypercube(cfg.d, cfg.l, param()?),
            ChannelKind::DpLinfSampler => Channel::dp_linf_sampler(cfg.d, cfg.l, param()?),
            ChannelKind::DpL2Sampler => Channel::dp_l2_sampler(cfg.d, cfg.l, param()?),
            ChannelKind::Identity => Channel::identity(cfg.d, NormBall::new(Norm::Linf, cfg.l)?),
            ChannelKind::BiasedDemo => {
                let bias = Vector::new(cfg.bias.clone().unwrap_or_else(|| vec![0.0; cfg.d]))?;
                Channel::biased_demo(cfg.d, cfg.l, param()?, bias)
            }
        }
    }

    /// The privacy parameter: M (target radius) or ε.
    pub fn privacy_param(&self) -> Option<f64> {
        match &self.calibration {
            Calibration::Identity => None,
            Calibration::LinfMaxent { m } => Some(*m),
            Calibration::L1Maxent { m1, .. } => Some(*m1),
            Calibration::DpHypercube { eps, .. }
            | Calibration::DpLinfSampler { eps, .. }
            | Calibration::DpL2Sampler { eps, .. } => Some(*eps),
            Calibration::BiasedDemo { m, .. } => Some(*m),
        }
    }

    pub fn certificate(&self) -> PrivacyCertificate {
        let l = self.source.radius;
        match &self.calibration {
            Calibration::LinfMaxent { m } => PrivacyCertificate::MutualInformation {
                nats: information::linf_maxent_mi(self.dim, l, *m),
            },
            Calibration::L1Maxent { ratio, .. } => PrivacyCertificate::MutualInformation {
                nats: information::l1_maxent_mi(self.dim, 1.0, *ratio),
            },
            Calibration::DpHypercube { eps, .. }
            | Calibration::DpLinfSampler { eps, .. }
            | Calibration::DpL2Sampler { eps, .. } => {
                PrivacyCertificate::DifferentialPrivacy { eps: *eps }
            }
            Calibration::Identity | Calibration::BiasedDemo { .. } => {
                PrivacyCertificate::NonPrivate
            }
        }
    }

    pub fn has_finite_support(&self) -> bool {
        self.kind != ChannelKind::DpL2Sampler
    }

    /// Extreme points of the source ball, the support of the saddle-point source.
    pub fn source_extreme_points(&self) -> Result<Vec<Vector>> {
        self.source.extreme_points(self.dim)
    }

    fn check_input(&self, g: &Vector) -> Result<()> {
        g.check_dim(self.dim)?;
        if !g.is_finite() {
            return Err(Error::NonFinite);
        }
        let n = g.norm(self.source.norm);
        if n > self.source.radius * (1.0 + SOURCE_TOL) + SOURCE_TOL {
            return Err(Error::OutsideSource(format!(
                "{:?} norm {n} exceeds source radius {}",
                self.source.norm, self.source.radius
            )));
        }
        Ok(())
    }

    /// Draw Z ~ Q(· | g).
    pub fn sample(&self, g: &Vector, rng: &mut Rng) -> Result<Vector> {
        self.check_input(g)?;
        Ok(self.sample_unchecked(g, rng))
    }

    pub(crate) fn sample_unchecked(&self, g: &Vector, rng: &mut Rng) -> Vector {
        let d = self.dim;
        let l = self.source.radius;
        match &self.calibration {
            Calibration::Identity => g.clone(),
            Calibration::LinfMaxent { m } => Vector::raw(
                round_to_signs(g, *m, rng)
                    .into_iter()
                    .map(|s| s * m)
                    .collect(),
            ),
            Calibration::BiasedDemo { m, bias } => Vector::raw(
                round_to_signs(&g.add(bias), *m, rng)
                    .into_iter()
                    .map(|s| s * m)
                    .collect(),
            ),
            Calibration::L1Maxent {
                m1, gamma, denom, ..
            } => {
                let (i, s) = round_to_l1_vertex(g, l, rng);
                let u = rng.gen::<f64>() * denom;
                let (eg, emg) = (gamma.exp(), (-gamma).exp());
                if u < eg {
                    Vector::basis(d, i, s * m1)
                } else if u < eg + emg || d == 1 {
                    Vector::basis(d, i, -s * m1)
                } else {
                    // uniform over the 2d − 2 atoms ±M1·e_j, j ≠ i
                    let k = ((u - eg - emg) as usize).min(2 * d - 3);
                    let j = k / 2;
                    let j = if j >= i { j + 1 } else { j };
                    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                    Vector::basis(d, j, sign * m1)
                }
            }
            Calibration::DpHypercube {
                c_d, q_hi, scale, ..
            } => {
                let x = round_to_signs(g, l, rng);
                let high = rng.gen::<f64>() < c_d * q_hi;
                let mut z = uniform_signs(d, rng);
                if high {
                    // uniform on {⟨z, x⟩ > 0}: reject ties, reflect into the half
                    let mut s = dot(&z, &x);
                    while s == 0.0 {
                        z = uniform_signs(d, rng);
                        s = dot(&z, &x);
                    }
                    if s < 0.0 {
                        negate(&mut z);
                    }
                } else if d % 2 == 1 {
                    if dot(&z, &x) > 0.0 {
                        negate(&mut z);
                    }
                } else {
                    // uniform on {⟨z, x⟩ ≤ 0}, ties included
                    while dot(&z, &x) > 0.0 {
                        z = uniform_signs(d, rng);
                    }
                }
                Vector::raw(z.into_iter().map(|v| v * scale).collect())
            }
            Calibration::DpLinfSampler { pi, b, .. } => {
                let y = round_to_signs(g, l, rng);
                let want = if rng.gen::<f64>() < *pi { 1.0 } else { -1.0 };
                let mut z = uniform_signs(d, rng);
                let s = dot(&z, &y);
                if s * want < 0.0 {
                    negate(&mut z);
                }
                Vector::raw(z.into_iter().map(|v| v * b).collect())
            }
            Calibration::DpL2Sampler { pi, b, .. } => {
                let n = g.norm(Norm::L2);
                let dir = if n > 0.0 {
                    let s = if rng.gen::<f64>() < 0.5 + n / (2.0 * l) {
                        1.0
                    } else {
                        -1.0
                    };
                    g.scaled(s / n)
                } else {
                    unit_sphere(d, rng)
                };
                let want = if rng.gen::<f64>() < *pi { 1.0 } else { -1.0 };
                let mut z = unit_sphere(d, rng);
                if z.dot(&dir) * want < 0.0 {
                    z = z.scaled(-1.0);
                }
                z.scaled(*b)
            }
        }
    }

    /// Exact conditional law Q(· | g) on the channel's canonical support.
    pub fn pmf(&self, g: &Vector) -> Result<DiscreteDist> {
        self.check_input(g)?;
        let d = self.dim;
        let l = self.source.radius;
        let guard = |d: usize| -> Result<()> {
            if d > PMF_MAX_DIM {
                return Err(Error::Unsupported(format!("pmf over 2^{d} atoms")));
            }
            Ok(())
        };
        match &self.calibration {
            Calibration::Identity => DiscreteDist::new(vec![g.clone()], vec![1.0]),
            Calibration::LinfMaxent { m } => {
                guard(d)?;
                product_sign_pmf(g, *m)
            }
            Calibration::BiasedDemo { m, bias } => {
                guard(d)?;
                product_sign_pmf(&g.add(bias), *m)
            }
            Calibration::L1Maxent {
                m1, gamma, denom, ..
            } => {
                let rounding = l1_rounding_law(g, l);
                let (eg, emg) = (gamma.exp(), (-gamma).exp());
                let mut support = Vec::with_capacity(2 * d);
                let mut probs = vec![0.0; 2 * d];
                for j in 0..d {
                    support.push(Vector::basis(d, j, *m1));
                    support.push(Vector::basis(d, j, -m1));
                }
                // atom index 2j is +e_j, 2j + 1 is −e_j
                for (a, pa) in rounding.iter().enumerate() {
                    if *pa == 0.0 {
                        continue;
                    }
                    for (b, pb) in probs.iter_mut().enumerate() {
                        let w = if a == b {
                            eg
                        } else if a / 2 == b / 2 {
                            emg
                        } else {
                            1.0
                        };
                        *pb += pa * w / denom;
                    }
                }
                DiscreteDist::new(support, probs)
            }
            Calibration::DpHypercube {
                q_hi, q_lo, scale, ..
            } => {
                guard(d)?;
                let level = |k: i64| if k > 0 { *q_hi } else { *q_lo };
                two_level_mixture_pmf(g, l, *scale, level)
            }
            Calibration::DpLinfSampler { pi, b, .. } => {
                guard(d)?;
                let base = 2f64.powi(-(d as i32));
                let level = |k: i64| match k.signum() {
                    1 => 2.0 * pi * base,
                    -1 => 2.0 * (1.0 - pi) * base,
                    _ => base,
                };
                two_level_mixture_pmf(g, l, *b, level)
            }
            Calibration::DpL2Sampler { .. } => Err(Error::Unsupported(
                "dp_l2_sampler has continuous support".into(),
            )),
        }
    }

    /// sup over outputs z and source points x, x′ of Q(z|x)/Q(z|x′).
    ///
    /// Interior inputs are mixtures of extreme-point laws, so the extreme
    /// points are enumerated exhaustively. The ℓ2 sampler has a density that
    /// takes two values on the sphere, and its ratio is read off them.
    pub fn max_privacy_ratio(&self) -> Result<f64> {
        if let Calibration::DpL2Sampler { pi, .. } = &self.calibration {
            return Ok(pi / (1.0 - pi));
        }
        let points = self.source_extreme_points()?;
        let laws: Vec<DiscreteDist> = points.iter().map(|x| self.pmf(x)).collect::<Result<_>>()?;
        let mut hi: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        let mut lo: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
        let mut seen: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        for law in &laws {
            for (z, p) in law.support.iter().zip(&law.probs) {
                let key = point_key(z);
                let h = hi.entry(key.clone()).or_insert(0.0);
                *h = h.max(*p);
                let l = lo.entry(key.clone()).or_insert(f64::INFINITY);
                *l = l.min(*p);
                *seen.entry(key).or_insert(0) += 1;
            }
        }
        let mut ratio = 1.0f64;
        for (key, h) in &hi {
            // an output missing from some conditional law has probability 0 there
            let l = if seen[key] < laws.len() { 0.0 } else { lo[key] };
            if *h > 0.0 {
                ratio = ratio.max(h / l);
            }
        }
        Ok(ratio)
    }
}

fn unit_sphere(d: usize, rng: &mut Rng) -> Vector {
    loop {
        let v: Vec<f64> = (0..d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-300 {
            return Vector::raw(v.into_iter().map(|x| x / n).collect());
        }
    }
}

/// Rounding x → X′ ∈ {±L e_i} with E[X′] = x: with probability ‖x‖₁/L pick
/// coordinate i w.p. |x_i|/‖x‖₁ and sign(x_i); otherwise pick one of the 2d
/// vertices uniformly.
fn round_to_l1_vertex(x: &Vector, l: f64, rng: &mut Rng) -> (usize, f64) {
    let d = x.dim();
    let n1 = x.norm(Norm::L1);
    let u = rng.gen::<f64>() * l;
    if u < n1 {
        let mut acc = 0.0;
        for (i, xi) in x.iter().enumerate() {
            acc += xi.abs();
            if u < acc {
                return (i, if *xi > 0.0 { 1.0 } else { -1.0 });
            }
        }
        // rounding slack in the cumulative sum
        let i = x
            .iter()
            .rposition(|v| *v != 0.0)
            .expect("nonzero vector has a nonzero coordinate");
        return (i, x[i].signum());
    }
    (rng.gen_range(0..d), fair_sign(rng))
}

/// Law of the rounding above on the 2d vertices (index 2i is +e_i, 2i + 1 is −e_i).
fn l1_rounding_law(x: &Vector, l: f64) -> Vec<f64> {
    let d = x.dim();
    let n1 = x.norm(Norm::L1);
    let uniform = (1.0 - n1 / l).max(0.0) / (2 * d) as f64;
    let mut p = vec![uniform; 2 * d];
    for (i, xi) in x.iter().enumerate() {
        if *xi > 0.0 {
            p[2 * i] += xi / l;
        } else if *xi < 0.0 {
            p[2 * i + 1] += -xi / l;
        }
    }
    p
}

/// Independent coordinates on {±m} with mean x.
fn product_sign_pmf(x: &Vector, m: f64) -> Result<DiscreteDist> {
    let d = x.dim();
    let mut support = Vec::with_capacity(1 << d);
    let mut probs = Vec::with_capacity(1 << d);
    for mask in 0..1u64 << d {
        let z = cube_point(d, mask);
        let p: f64 = z
            .iter()
            .zip(x.iter())
            .map(|(zi, xi)| 0.5 + zi * xi / (2.0 * m))
            .product();
        support.push(z.scaled(m));
        probs.push(p);
    }
    DiscreteDist::new(support, probs)
}

/// pmf of scale·z where X′ is the coordinatewise sign rounding of g/L and
/// P(z | X′) = level(⟨z, X′⟩). Summed in O(d²) per atom via the law of ⟨z, X′⟩.
fn two_level_mixture_pmf(
    g: &Vector,
    l: f64,
    scale: f64,
    level: impl Fn(i64) -> f64,
) -> Result<DiscreteDist> {
    let d = g.dim();
    let mut support = Vec::with_capacity(1 << d);
    let mut probs = Vec::with_capacity(1 << d);
    for mask in 0..1u64 << d {
        let z = cube_point(d, mask);
        // y_i = z_i X′_i has P(y_i = 1) = (1 + z_i g_i/L)/2
        let law = sign_sum_law(z.iter().zip(g.iter()).map(|(zi, gi)| zi * gi / l), d);
        let p: f64 = law
            .iter()
            .enumerate()
            .map(|(m, pm)| pm * level(2 * m as i64 - d as i64))
            .sum();
        support.push(z.scaled(scale));
        probs.push(p);
    }
    DiscreteDist::new(support, probs)
}
