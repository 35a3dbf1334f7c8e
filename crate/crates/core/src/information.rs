//! Entropy, divergences and mutual information of (source, channel) pairs,
//! with closed-form saddle-point values and the M ↔ I* bijection.
//!
//! All logarithms are natural; `nats_to_bits` converts for reporting.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channels::{l1_gamma, Channel, ChannelKind};
use crate::error::{invalid, Error, Result};
use crate::geometry::Vector;
use crate::numeric::xlogx;
use crate::rng::Rng;

pub fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

pub fn bits_to_nats(x: f64) -> f64 {
    x * LN_2
}

/// h(p) = −p log p − (1−p) log(1−p) in nats.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return invalid(format!("binary entropy needs p in [0, 1], got {p}"));
    }
    Ok(-xlogx(p) - xlogx(1.0 - p))
}

pub fn binary_entropy_bits(p: f64) -> Result<f64> {
    binary_entropy(p).map(nats_to_bits)
}

/// A finite distribution over points of R^d.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    pub support: Vec<Vector>,
    pub probs: Vec<f64>,
}

const SUM_TOL: f64 = 1e-12;

impl DiscreteDist {
    pub fn new(support: Vec<Vector>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() || support.is_empty() {
            return invalid("support and probabilities must be non-empty and of equal length");
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= -SUM_TOL)) {
            return invalid("probabilities must be nonnegative");
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL * (probs.len() as f64).max(1.0) {
            return invalid(format!("probabilities sum to {total}, not 1"));
        }
        let probs = probs.into_iter().map(|p| p.max(0.0)).collect();
        Ok(DiscreteDist { support, probs })
    }

    pub fn uniform(support: Vec<Vector>) -> Result<Self> {
        let w = 1.0 / support.len().max(1) as f64;
        let n = support.len();
        DiscreteDist::new(support, vec![w; n])
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mean(&self) -> Vector {
        let mut m = Vector::zeros(self.support[0].dim());
        for (x, p) in self.support.iter().zip(&self.probs) {
            m.axpy(*p, x);
        }
        m
    }

    pub fn entropy(&self) -> f64 {
        self.probs.iter().map(|p| -xlogx(*p)).sum()
    }

    pub fn sample_index(&self, rng: &mut Rng) -> usize {
        let u = rng.gen::<f64>();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
    }

    /// Both distributions re-expressed on the union of their supports.
    pub fn on_union(p: &DiscreteDist, q: &DiscreteDist) -> (DiscreteDist, DiscreteDist) {
        let mut index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
        let mut support = Vec::new();
        for x in p.support.iter().chain(&q.support) {
            index.entry(point_key(x)).or_insert_with(|| {
                support.push(x.clone());
                support.len() - 1
            });
        }
        let spread = |dist: &DiscreteDist| {
            let mut probs = vec![0.0; support.len()];
            for (x, w) in dist.support.iter().zip(&dist.probs) {
                probs[index[&point_key(x)]] += w;
            }
            DiscreteDist {
                support: support.clone(),
                probs,
            }
        };
        (spread(p), spread(q))
    }
}

/// Hashable identity of a support point (with −0 folded into +0).
pub(crate) fn point_key(x: &Vector) -> Vec<u64> {
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn check_shared_support(p: &DiscreteDist, q: &DiscreteDist) -> Result<()> {
    if p.support != q.support {
        return Err(Error::MismatchedSupport);
    }
    Ok(())
}

/// D_kl(p ‖ q) in nats; +∞ when p is not absolutely continuous w.r.t. q.
pub fn kl_divergence(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    check_shared_support(p, q)?;
    let mut acc = 0.0;
    for (a, b) in p.probs.iter().zip(&q.probs) {
        if *a > 0.0 {
            if *b == 0.0 {
                return Ok(f64::INFINITY);
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc.max(0.0))
}

pub fn tv_distance(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    check_shared_support(p, q)?;
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Exact I(X; Z) = E_P[D_kl(Q(·|X) ‖ Q(·))] in nats.
pub fn mutual_information_exact(source: &DiscreteDist, ch: &Channel) -> Result<f64> {
    if !ch.has_finite_support() {
        return Err(Error::Unsupported(format!(
            "{} has continuous support",
            ch.kind.name()
        )));
    }
    let conditionals: Vec<DiscreteDist> = source
        .support
        .iter()
        .map(|x| ch.pmf(x))
        .collect::<Result<_>>()?;
    mutual_information_of_kernel(&source.probs, &conditionals)
}

/// I(X; Z) for a prior `weights` over rows and conditional laws `rows`.
pub fn mutual_information_of_kernel(weights: &[f64], rows: &[DiscreteDist]) -> Result<f64> {
    let cells: usize = rows.iter().map(|r| r.len()).sum();
    if cells > 10_000_000 {
        return Err(Error::Unsupported(
            "joint support exceeds 10^7 cells".into(),
        ));
    }
    let mut marginal: BTreeMap<Vec<u64>, f64> = BTreeMap::new();
    for (w, row) in weights.iter().zip(rows) {
        for (z, p) in row.support.iter().zip(&row.probs) {
            *marginal.entry(point_key(z)).or_insert(0.0) += w * p;
        }
    }
    let mut acc = 0.0;
    for (w, row) in weights.iter().zip(rows) {
        if *w == 0.0 {
            continue;
        }
        for (z, p) in row.support.iter().zip(&row.probs) {
            if *p > 0.0 {
                acc += w * p * (p / marginal[&point_key(z)]).ln();
            }
        }
    }
    Ok(acc.max(0.0))
}

/// sup_P I(P, Q*) for the ℓ∞ maximum-entropy channel, in nats:
/// d·(log 2 − h(1/2 + L/2M)).
pub fn linf_maxent_mi(d: usize, l: f64, m: f64) -> f64 {
    let p = 0.5 + l / (2.0 * m);
    d as f64 * (LN_2 + xlogx(p) + xlogx(1.0 - p))
}

/// sup_P I(P, Q*) for the ℓ1 maximum-entropy channel, in nats:
/// log(2d) − log D_γ + γ(e^γ − e^{−γ})/D_γ.
pub fn l1_maxent_mi(d: usize, l: f64, m1: f64) -> f64 {
    let g = l1_gamma(d, m1 / l);
    let (e, ei) = (g.exp(), (-g).exp());
    let denom = e + ei + 2.0 * d as f64 - 2.0;
    ((2 * d) as f64).ln() - denom.ln() + g * (e - ei) / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiClosedForm {
    pub exact: f64,
    pub upper_bound: f64,
    pub asymptotic: f64,
}

/// (exact value, upper bound, large-M approximation dL²/2M²), in nats.
/// The ℓ1 upper bound is the alphabet bound log(2d).
pub fn mi_closed_form(kind: ChannelKind, d: usize, l: f64, m: f64) -> Result<MiClosedForm> {
    check_radius(kind, l, m)?;
    let d_f = d as f64;
    let asymptotic = d_f * l * l / (2.0 * m * m);
    match kind {
        ChannelKind::LinfMaxent => Ok(MiClosedForm {
            exact: linf_maxent_mi(d, l, m),
            upper_bound: d_f * l * l / (m * m),
            asymptotic,
        }),
        ChannelKind::L1Maxent => Ok(MiClosedForm {
            exact: l1_maxent_mi(d, l, m),
            upper_bound: (2.0 * d_f).ln(),
            asymptotic,
        }),
        other => Err(Error::Unsupported(format!(
            "no closed-form mutual information for {}",
            other.name()
        ))),
    }
}

fn check_radius(kind: ChannelKind, l: f64, m: f64) -> Result<()> {
    let ok = match kind {
        ChannelKind::L1Maxent => m > l,
        _ => m >= l,
    };
    if !(ok && l > 0.0 && m.is_finite()) {
        return invalid(format!("invalid radii L = {l}, M = {m}"));
    }
    Ok(())
}

/// Largest value of sup_P I over the family, attained as M ↓ L.
pub fn max_information(kind: ChannelKind, d: usize) -> Result<f64> {
    match kind {
        ChannelKind::LinfMaxent => Ok(d as f64 * LN_2),
        ChannelKind::L1Maxent => Ok((2.0 * d as f64).ln()),
        other => Err(Error::Unsupported(format!(
            "no information family for {}",
            other.name()
        ))),
    }
}

/// M with mi_closed_form(M).exact = I* (nats), by bisection on log M.
pub fn information_to_radius(kind: ChannelKind, d: usize, l: f64, i_star: f64) -> Result<f64> {
    let max = max_information(kind, d)?;
    if !(i_star > 0.0 && i_star <= max) {
        return Err(Error::InvalidParameter(format!(
            "I* = {i_star} nats outside (0, {max}]"
        )));
    }
    let mi = |m: f64| -> f64 {
        match kind {
            ChannelKind::LinfMaxent => linf_maxent_mi(d, l, m),
            _ => l1_maxent_mi(d, l, m),
        }
    };
    if i_star == max {
        return Ok(l);
    }
    let mut lo = 0.0f64; // log(M/L)
    let mut hi = 1.0f64;
    while mi(l * hi.exp()) > i_star {
        hi *= 2.0;
        if hi > 700.0 {
            return Err(Error::InvalidParameter(format!(
                "I* = {i_star} too small to invert"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mi(l * mid.exp()) > i_star {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Ok(l * (0.5 * (lo + hi)).exp())
}

/// Plug-in mutual information of samples (X, Z) with X ~ `source`, Z ~ Q(·|X),
/// plus the delete-one jackknife standard error.
pub fn mi_monte_carlo(
    source: &DiscreteDist,
    ch: &Channel,
    n: usize,
    rng: &mut Rng,
) -> Result<(f64, f64)> {
    if !ch.has_finite_support() {
        return Err(Error::Unsupported(format!(
            "{} has continuous support",
            ch.kind.name()
        )));
    }
    if n < 10_000 {
        return invalid("Monte-Carlo mutual information needs n ≥ 10^4");
    }
    let mut z_index: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut joint: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for _ in 0..n {
        let i = source.sample_index(rng);
        let z = ch.sample(&source.support[i], rng)?;
        let next = z_index.len();
        let j = *z_index.entry(point_key(&z)).or_insert(next);
        *joint.entry((i, j)).or_insert(0) += 1;
    }
    Ok(plug_in_mi_with_jackknife(
        &joint,
        source.len(),
        z_index.len(),
        n,
    ))
}

fn clogc(c: u64) -> f64 {
    if c == 0 {
        0.0
    } else {
        let c = c as f64;
        c * c.ln()
    }
}

/// Plug-in MI = log n + (T_xz − T_x − T_z)/n with T = Σ c log c, and the
/// jackknife over the n delete-one estimates (grouped by cell).
fn plug_in_mi_with_jackknife(
    joint: &BTreeMap<(usize, usize), u64>,
    nx: usize,
    nz: usize,
    n: usize,
) -> (f64, f64) {
    let mut rows = vec![0u64; nx];
    let mut cols = vec![0u64; nz];
    for (&(i, j), &c) in joint {
        rows[i] += c;
        cols[j] += c;
    }
    let t_xz: f64 = joint.values().map(|c| clogc(*c)).sum();
    let t_x: f64 = rows.iter().map(|c| clogc(*c)).sum();
    let t_z: f64 = cols.iter().map(|c| clogc(*c)).sum();
    let nf = n as f64;
    let full = nf.ln() + (t_xz - t_x - t_z) / nf;

    let m = nf - 1.0;
    let mut mean_loo = 0.0;
    let mut loo_values = Vec::with_capacity(joint.len());
    for (&(i, j), &c) in joint {
        let txz = t_xz - clogc(c) + clogc(c - 1);
        let tx = t_x - clogc(rows[i]) + clogc(rows[i] - 1);
        let tz = t_z - clogc(cols[j]) + clogc(cols[j] - 1);
        let v = m.ln() + (txz - tx - tz) / m;
        mean_loo += c as f64 * v / nf;
        loo_values.push((c, v));
    }
    let var: f64 = loo_values
        .iter()
        .map(|(c, v)| *c as f64 * (v - mean_loo).powi(2))
        .sum::<f64>()
        * (nf - 1.0)
        / nf;
    (full.max(0.0), var.sqrt())
}

/// Certification summary of a channel. Information values are in nats.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub channel: String,
    pub d: usize,
    pub privacy_param: Option<f64>,
    pub non_private: bool,
    pub mi_exact: Option<f64>,
    pub mi_exact_bits: Option<f64>,
    pub mi_closed_form: Option<f64>,
    pub mi_monte_carlo: Option<(f64, f64)>,
    pub dp_ratio_max: Option<f64>,
    pub unbiasedness_max_residual: f64,
    pub unbiasedness_method: String,
    pub violations: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Norm, NormBall};
    use crate::rng::seeded;

    fn point(x: f64) -> Vector {
        Vector::new(vec![x]).unwrap()
    }

    fn bernoulli(p: f64) -> DiscreteDist {
        DiscreteDist::new(vec![point(1.0), point(-1.0)], vec![p, 1.0 - p]).unwrap()
    }

    #[test]
    fn binary_entropy_examples() {
        assert!((binary_entropy(0.5).unwrap() - LN_2).abs() < 1e-15);
        assert!((binary_entropy_bits(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        let direct = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        let h = binary_entropy(0.75).unwrap();
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.5623).abs() < 1e-4);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn divergence_examples() {
        let p = bernoulli(0.3);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
        for delta in [0.01, 0.1, 0.2, 1.0 / 3.0] {
            let kl = kl_divergence(
                &bernoulli((1.0 + delta) / 2.0),
                &bernoulli((1.0 - delta) / 2.0),
            )
            .unwrap();
            assert!(kl <= 3.0 * delta * delta);
        }
        let a = DiscreteDist::new(vec![point(0.0)], vec![1.0]).unwrap();
        let b = DiscreteDist::new(vec![point(1.0)], vec![1.0]).unwrap();
        assert_eq!(kl_divergence(&a, &b), Err(Error::MismatchedSupport));
        let (a, b) = DiscreteDist::on_union(&a, &b);
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(kl_divergence(&a, &b).unwrap(), f64::INFINITY);
    }

    #[test]
    fn identity_channel_information() {
        let source = DiscreteDist::uniform(vec![point(1.0), point(-1.0)]).unwrap();
        let ch = Channel::identity(1, NormBall::new(Norm::Linf, 1.0).unwrap()).unwrap();
        assert!((mutual_information_exact(&source, &ch).unwrap() - LN_2).abs() < 1e-15);
        let mut rng = seeded(2);
        let (est, se) = mi_monte_carlo(&source, &ch, 20_000, &mut rng).unwrap();
        assert!((est - LN_2).abs() <= 3.0 * se + 1e-3);
    }

    #[test]
    fn closed_form_limits() {
        let f = mi_closed_form(ChannelKind::LinfMaxent, 3, 1.0, 1.0).unwrap();
        assert!((nats_to_bits(f.exact) - 3.0).abs() < 1e-12);
        let f = mi_closed_form(ChannelKind::LinfMaxent, 3, 1.0, 1e6).unwrap();
        assert!(f.exact < 1e-11 && f.upper_bound < 1e-11);
        let f = mi_closed_form(ChannelKind::L1Maxent, 50, 1.0, 100.0).unwrap();
        assert!((f.exact - f.asymptotic).abs() / f.asymptotic <= 0.05);
        assert!(mi_closed_form(ChannelKind::DpHypercube, 3, 1.0, 2.0).is_err());
    }

    #[test]
    fn radius_inversion() {
        let d = 10;
        assert_eq!(
            information_to_radius(ChannelKind::LinfMaxent, d, 1.0, d as f64 * LN_2).unwrap(),
            1.0
        );
        let i = bits_to_nats(0.1);
        let m = information_to_radius(ChannelKind::LinfMaxent, d, 1.0, i).unwrap();
        assert!((linf_maxent_mi(d, 1.0, m) - i).abs() < 1e-8);
        let i = 0.01;
        let m = information_to_radius(ChannelKind::L1Maxent, d, 1.0, i).unwrap();
        let approx = (d as f64 / (2.0 * i)).sqrt();
        assert!((m - approx).abs() / approx < 0.05);
        assert!(information_to_radius(ChannelKind::LinfMaxent, d, 1.0, 100.0).is_err());
        assert!(information_to_radius(ChannelKind::LinfMaxent, d, 1.0, 0.0).is_err());
    }
}
