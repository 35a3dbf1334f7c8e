//! Minimax machinery: Fano and Le Cam testing bounds, the per-sample mutual
//! information bounds for the hard instances, exact MI of those instances,
//! simulated hypothesis tests, and the lower/upper rate curves.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::channels::{l1_gamma, Channel, ChannelKind};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    covariance_bounded_packing, gilbert_varshamov_packing, Norm, Packing, Vector,
};
use crate::information::{
    information_to_radius, l1_maxent_mi, linf_maxent_mi, mutual_information_of_kernel, point_key,
    DiscreteDist,
};
use crate::losses::{DataDist, LossFn};
use crate::numeric::{binom_exact, xlogx};
use crate::rng::{derived, Rng};

/// P(ν̂ ≠ ν) ≥ 1 − (I + log 2)/log|V|, clamped to [0, 1].
pub fn fano_bound(mi: f64, packing_size: usize) -> Result<f64> {
    if !(mi >= 0.0) {
        return invalid(format!("mutual information must be nonnegative, got {mi}"));
    }
    if packing_size < 2 {
        return invalid("Fano's inequality needs at least two hypotheses");
    }
    Ok((1.0 - (mi + LN_2) / (packing_size as f64).ln()).clamp(0.0, 1.0))
}

/// P(error) ≥ 1/2 − ‖P₁ − P₋₁‖_TV/2.
pub fn le_cam_bound(tv: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tv) {
        return invalid(format!("total variation must lie in [0, 1], got {tv}"));
    }
    Ok(0.5 - 0.5 * tv)
}

/// KL between the two n-fold marginals of an ε-DP channel:
/// ≤ 4n(e^ε − 1)² ‖P_ν − P_ν′‖²_TV.
pub fn dp_marginal_kl_bound(eps: f64, n: f64, tv: f64) -> Result<f64> {
    check_nonneg("eps", eps)?;
    Ok(4.0 * n * (eps.exp() - 1.0).powi(2) * tv * tv)
}

/// Mutual information through a non-interactive ε-DP channel:
/// ≤ e^ε n (e^ε − e^{−ε})² · sup_term.
pub fn dp_nonint_info_bound(eps: f64, n: f64, sup_term: f64) -> Result<f64> {
    check_nonneg("eps", eps)?;
    Ok(eps.exp() * n * (eps.exp() - (-eps).exp()).powi(2) * sup_term)
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0 && v.is_finite()) {
        return invalid(format!("{name} must be nonnegative and finite, got {v}"));
    }
    Ok(())
}

fn check_pos(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return invalid(format!("{name} must be positive and finite, got {v}"));
    }
    Ok(())
}

/// rL√(log 2d)/√n, the non-private rate over the ℓ1 ball.
pub fn nonprivate_rate(d: usize, n: f64, l: f64, r: f64) -> f64 {
    r * l * ((2 * d) as f64).ln().sqrt() / n.sqrt()
}

/// D = (e^γ − e^{−γ})/(e^γ + e^{−γ} + 2(d − 1)) for M = M1/L.
pub fn l1_channel_diff(d: usize, m: f64) -> f64 {
    let g = l1_gamma(d, m);
    let (e, ei) = (g.exp(), (-g).exp());
    (e - ei) / (e + ei + 2.0 * (d as f64 - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MiLemma {
    L4,
    L5,
    L6,
    L7,
    L8,
    L11,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub d: usize,
    pub n: f64,
    pub delta: f64,
    /// Lipschitz constant L.
    pub l: f64,
    /// M_∞ (L4, L5) or M1 (L6).
    pub m: Option<f64>,
    pub eps: Option<f64>,
    /// Threshold of the two-level channel (L8).
    pub k: Option<i64>,
}

impl LemmaParams {
    pub fn new(d: usize, delta: f64, l: f64) -> Self {
        LemmaParams {
            d,
            n: 1.0,
            delta,
            l,
            m: None,
            eps: None,
            k: None,
        }
    }

    pub fn with_radius(mut self, m: f64) -> Self {
        self.m = Some(m);
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = Some(eps);
        self
    }

    pub fn with_k(mut self, k: i64) -> Self {
        self.k = Some(k);
        self
    }

    fn radius(&self) -> Result<f64> {
        self.m
            .ok_or_else(|| Error::InvalidParameter("this lemma needs a radius M".into()))
    }

    fn epsilon(&self) -> Result<f64> {
        let e = self
            .eps
            .ok_or_else(|| Error::InvalidParameter("this lemma needs eps".into()))?;
        check_pos("eps", e)?;
        Ok(e)
    }
}

/// C_d(k) = Σ_{i < ⌈(d−k)/2⌉} C(d, i) and C(d − 1, ⌈(d−k)/2⌉ − 1), exactly.
pub fn lemma8_constants(d: usize, k: i64) -> Result<(u128, u128)> {
    check_lemma8_k(d, k)?;
    let du = d as u64;
    let upper = (d as i64 - k + 1).div_euclid(2) as u64;
    let c: u128 = (0..upper).map(|i| binom_exact(du, i).unwrap()).sum();
    let b = binom_exact(du - 1, upper - 1).unwrap();
    Ok((c, b))
}

fn check_lemma8_k(d: usize, k: i64) -> Result<()> {
    let max = 2 * (d as i64 + 1).div_euclid(2) - 2;
    if d == 0 || k < 0 || k % 2 != 0 || k > max {
        return invalid(format!(
            "k must be even with 0 ≤ k ≤ {max} at d = {d}, got {k}"
        ));
    }
    Ok(())
}

/// Mean shift of the two-level channel: E[Z | X = x] = Δ/δ · x, with
/// Δ = δ(e^ε − 1)C(d−1, ⌈(d−k)/2⌉−1)/((e^ε − 1)C_d(k) + 2^d).
pub fn lemma8_delta(delta: f64, eps: f64, d: usize, k: i64) -> Result<f64> {
    let (c, b) = lemma8_constants(d, k)?;
    let e = eps.exp();
    Ok(delta * (e - 1.0) / ((e - 1.0) * c as f64 + 2f64.powi(d as i32)) * b as f64)
}

/// The lemma's displayed constant, with (e^ε + 1) in the denominator. Kept for
/// comparison: the exact mutual information exceeds its square.
pub fn lemma8_delta_as_stated(delta: f64, eps: f64, d: usize, k: i64) -> Result<f64> {
    let (c, b) = lemma8_constants(d, k)?;
    let e = eps.exp();
    Ok(delta * (e - 1.0) / ((e + 1.0) * c as f64 + 2f64.powi(d as i32)) * b as f64)
}

/// Upper bound on the mutual information for n samples of the lemma's instance.
pub fn mi_lemma_value(lemma: MiLemma, p: &LemmaParams) -> Result<f64> {
    if p.d == 0 {
        return invalid("dimension must be positive");
    }
    check_pos("L", p.l)?;
    check_nonneg("n", p.n)?;
    if !(0.0..=1.0).contains(&p.delta) {
        return invalid(format!("delta must lie in [0, 1], got {}", p.delta));
    }
    let (n, d, delta, l) = (p.n, p.d as f64, p.delta, p.l);
    match lemma {
        MiLemma::L4 => {
            let m = p.radius()?;
            Ok(n * delta * delta * l * l / (m * m))
        }
        MiLemma::L5 => {
            let m = p.radius()?;
            Ok(n * delta * delta * l * l * d / (m * m))
        }
        MiLemma::L6 => {
            let m1 = p.radius()?;
            if m1 <= l {
                return invalid("the ℓ1 channel needs M1 > L");
            }
            let diff = l1_channel_diff(p.d, m1 / l);
            Ok(n * delta * delta * diff * diff)
        }
        MiLemma::L7 => {
            let e = p.epsilon()?;
            dp_nonint_info_bound(e, n, delta * delta / (4.0 * d))
        }
        MiLemma::L8 => {
            let e = p.epsilon()?;
            let k = p.k.unwrap_or(0);
            let big_delta = lemma8_delta(delta, e, p.d, k)?;
            Ok(n * big_delta * big_delta)
        }
        MiLemma::L11 => {
            let e = p.epsilon()?;
            Ok(n * 25.0 * e.exp() / 16.0 * delta * delta / d * (e.exp() - (-e).exp()).powi(2))
        }
    }
}

/// How samples X are drawn given ν.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// X ∈ {−1,1}^d with P(X_j = 1) = (1 + δν_j)/2.
    Cube,
    /// X = ±e_j with j uniform and P(+) = (1 + δν_j)/2.
    Coord,
}

/// Nature picks ν uniformly from the packing, owners hold X ~ P_ν, and the
/// learner sees channel outputs of the loss subgradient at `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct TestingInstance {
    pub packing: Packing,
    pub delta: f64,
    pub sampling: Sampling,
    pub loss: LossFn,
    pub channel: Channel,
    pub theta: Vector,
}

impl TestingInstance {
    pub fn new(
        packing: Packing,
        delta: f64,
        sampling: Sampling,
        loss: LossFn,
        channel: Channel,
    ) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return invalid(format!("delta must lie in (0, 1], got {delta}"));
        }
        let d = packing.dim();
        if channel.dim != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: channel.dim,
            });
        }
        Ok(TestingInstance {
            packing,
            delta,
            sampling,
            loss,
            channel,
            theta: Vector::zeros(d),
        })
    }

    pub fn dim(&self) -> usize {
        self.packing.dim()
    }

    pub fn data(&self, nu: &Vector) -> Result<DataDist> {
        match self.sampling {
            Sampling::Cube => DataDist::cube_bernoulli(self.delta, nu.clone()),
            Sampling::Coord => DataDist::coord_basis(self.delta, nu.clone()),
        }
    }

    /// The law of one channel output under each hypothesis.
    pub fn output_laws(&self) -> Result<Vec<DiscreteDist>> {
        self.packing
            .points
            .iter()
            .map(|nu| {
                let data = self.data(nu)?.support()?;
                let mut acc: BTreeMap<Vec<u64>, (Vector, f64)> = BTreeMap::new();
                let mut order = Vec::new();
                for (x, px) in data.support.iter().zip(&data.probs) {
                    if *px == 0.0 {
                        continue;
                    }
                    let g = self.loss.subgrad(x, &self.theta)?;
                    let law = self.channel.pmf(&g)?;
                    for (z, pz) in law.support.iter().zip(&law.probs) {
                        let key = point_key(z);
                        let e = acc.entry(key.clone()).or_insert_with(|| {
                            order.push(key);
                            (z.clone(), 0.0)
                        });
                        e.1 += px * pz;
                    }
                }
                let (support, probs) = order.iter().map(|k| acc[k].clone()).unzip();
                DiscreteDist::new(support, probs)
            })
            .collect()
    }

    /// I(Z; V) for one sample, exactly (finite-support channels).
    pub fn mutual_information(&self) -> Result<f64> {
        let laws = self.output_laws()?;
        let w = vec![1.0 / laws.len() as f64; laws.len()];
        mutual_information_of_kernel(&w, &laws)
    }

    /// E[Z | ν] for every hypothesis; channels are unbiased so this is E[g].
    fn mean_gradients(&self) -> Result<Vec<Vector>> {
        self.packing
            .points
            .iter()
            .map(|nu| {
                let data = self.data(nu)?.support()?;
                let mut m = Vector::zeros(self.dim());
                for (x, px) in data.support.iter().zip(&data.probs) {
                    m.axpy(*px, &self.loss.subgrad(x, &self.theta)?);
                }
                Ok(m)
            })
            .collect()
    }
}

/// The proof construction behind each lemma, at the given parameters.
pub fn lemma_instance(lemma: MiLemma, p: &LemmaParams, rng: &mut Rng) -> Result<TestingInstance> {
    let d = p.d;
    let l = p.l;
    match lemma {
        MiLemma::L4 => TestingInstance::new(
            Packing::signed_basis(d),
            p.delta,
            Sampling::Cube,
            LossFn::linear(l, Norm::Linf)?,
            Channel::linf_maxent(d, l, p.radius()?)?,
        ),
        MiLemma::L5 => TestingInstance::new(
            gilbert_varshamov_packing(d, rng)?,
            p.delta,
            Sampling::Cube,
            LossFn::median(l, 1.0)?,
            Channel::linf_maxent(d, l, p.radius()?)?,
        ),
        MiLemma::L6 => TestingInstance::new(
            gilbert_varshamov_packing(d, rng)?,
            p.delta,
            Sampling::Coord,
            LossFn::hinge(l, 1.0)?,
            Channel::l1_maxent(d, l, p.radius()?)?,
        ),
        MiLemma::L7 | MiLemma::L8 => TestingInstance::new(
            Packing::signed_basis(d),
            p.delta,
            Sampling::Cube,
            LossFn::linear(l, Norm::Linf)?,
            Channel::dp_hypercube(d, l, p.epsilon()?)?,
        ),
        MiLemma::L11 => TestingInstance::new(
            covariance_bounded_packing(d, rng)?,
            p.delta,
            Sampling::Coord,
            LossFn::linear(l, Norm::Linf)?,
            Channel::dp_hypercube(d, l, p.epsilon()?)?,
        ),
    }
}

/// Exact I(Z; V) for V uniform on {±e_i}, X from the cube sampling with
/// parameter δ, and Z on {−1,1}^d with q(z|x) ∝ e^ε on ⟨z, x⟩ > k, 1 elsewhere.
pub fn two_level_mi_exact(d: usize, eps: f64, k: i64, delta: f64) -> Result<f64> {
    if d == 0 || d > 12 {
        return invalid(format!(
            "exact two-level enumeration supports 1 ≤ d ≤ 12, got {d}"
        ));
    }
    check_pos("eps", eps)?;
    if !(0.0..=1.0).contains(&delta) {
        return invalid(format!("delta must lie in [0, 1], got {delta}"));
    }
    let big_n = 1usize << d;
    let e = eps.exp();
    let ip = |a: usize, b: usize| -> i64 { d as i64 - 2 * (a ^ b).count_ones() as i64 };
    let above = (0..big_n).filter(|z| ip(*z, big_n - 1) > k).count() as f64;
    let norm = e * above + (big_n as f64 - above);
    let q = |z: usize, x: usize| if ip(z, x) > k { e / norm } else { 1.0 / norm };
    // ν = s·e_i; P(x | ν) = (1 + δ s x_i)/2^d
    let mut laws: Vec<Vec<f64>> = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut pz = vec![0.0; big_n];
            for x in 0..big_n {
                let xi = if x >> i & 1 == 1 { 1.0 } else { -1.0 };
                let px = (1.0 + delta * s * xi) / big_n as f64;
                for (z, p) in pz.iter_mut().enumerate() {
                    *p += px * q(z, x);
                }
            }
            laws.push(pz);
        }
    }
    let w = 1.0 / laws.len() as f64;
    let marginal: Vec<f64> = (0..big_n)
        .map(|z| laws.iter().map(|l| w * l[z]).sum())
        .collect();
    let h_marg: f64 = marginal.iter().map(|p| -xlogx(*p)).sum();
    let h_cond: f64 = laws
        .iter()
        .map(|l| w * l.iter().map(|p| -xlogx(*p)).sum::<f64>())
        .sum();
    Ok((h_marg - h_cond).max(0.0))
}

/// Frequency with which a good test misidentifies ν from n private samples.
///
/// Finite-support channels use the exact maximum-likelihood test; continuous
/// ones pick the hypothesis whose mean gradient is nearest the sample mean.
pub fn empirical_testing_error(
    inst: &TestingInstance,
    n: usize,
    reps: usize,
    rng: &mut Rng,
) -> Result<f64> {
    if reps == 0 {
        return invalid("need at least one repetition");
    }
    let nv = inst.packing.len();
    let master: u64 = rng.gen();
    let datas: Vec<DataDist> = inst
        .packing
        .points
        .iter()
        .map(|nu| inst.data(nu))
        .collect::<Result<_>>()?;
    let mut errors = 0usize;
    if inst.channel.has_finite_support() {
        let laws = inst.output_laws()?;
        let mut table: BTreeMap<Vec<u64>, Vec<f64>> = BTreeMap::new();
        for (v, law) in laws.iter().enumerate() {
            for (z, p) in law.support.iter().zip(&law.probs) {
                table
                    .entry(point_key(z))
                    .or_insert_with(|| vec![f64::NEG_INFINITY; nv])[v] = p.ln();
            }
        }
        for rep in 0..reps {
            let mut r = derived(master, rep as u64);
            let truth = r.gen_range(0..nv);
            let mut ll = vec![0.0; nv];
            for _ in 0..n {
                let x = datas[truth].sample(&mut r);
                let g = inst.loss.subgrad(&x, &inst.theta)?;
                let z = inst.channel.sample(&g, &mut r)?;
                let row = &table[&point_key(&z)];
                for (a, b) in ll.iter_mut().zip(row) {
                    *a += b;
                }
            }
            if pick_best(&ll, &mut r) != truth {
                errors += 1;
            }
        }
    } else {
        let means = inst.mean_gradients()?;
        for rep in 0..reps {
            let mut r = derived(master, rep as u64);
            let truth = r.gen_range(0..nv);
            let mut sum = Vector::zeros(inst.dim());
            for _ in 0..n {
                let x = datas[truth].sample(&mut r);
                let g = inst.loss.subgrad(&x, &inst.theta)?;
                sum.axpy(1.0, &inst.channel.sample(&g, &mut r)?);
            }
            let avg = sum.scaled(1.0 / n.max(1) as f64);
            let score: Vec<f64> = means.iter().map(|m| -avg.distance(m, Norm::L2)).collect();
            if pick_best(&score, &mut r) != truth {
                errors += 1;
            }
        }
    }
    Ok(errors as f64 / reps as f64)
}

/// argmax with uniformly random tie-breaking.
fn pick_best(scores: &[f64], rng: &mut Rng) -> usize {
    let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<usize> = (0..scores.len())
        .filter(|i| scores[*i] >= best - 1e-12 * best.abs().max(1.0))
        .collect();
    ties[rng.gen_range(0..ties.len())]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Theorem {
    T1a,
    T1b,
    T2,
    T3,
    T4,
    #[serde(rename = "T5_linear")]
    T5Linear,
    #[serde(rename = "T5_general")]
    T5General,
    C1,
    C2,
    C3,
}

impl Theorem {
    pub const ALL: [Theorem; 10] = [
        Theorem::T1a,
        Theorem::T1b,
        Theorem::T2,
        Theorem::T3,
        Theorem::T4,
        Theorem::T5Linear,
        Theorem::T5General,
        Theorem::C1,
        Theorem::C2,
        Theorem::C3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::T1a => "T1a",
            Theorem::T1b => "T1b",
            Theorem::T2 => "T2",
            Theorem::T3 => "T3",
            Theorem::T4 => "T4",
            Theorem::T5Linear => "T5_linear",
            Theorem::T5General => "T5_general",
            Theorem::C1 => "C1",
            Theorem::C2 => "C2",
            Theorem::C3 => "C3",
        }
    }

    /// Whether the budget is an ε (otherwise a radius or information level).
    pub fn uses_eps(self) -> bool {
        matches!(
            self,
            Theorem::T3 | Theorem::T4 | Theorem::T5Linear | Theorem::T5General | Theorem::C3
        )
    }
}

/// Privacy budget of a bound: the channel radius (M_∞ or M1), ε, or I* in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Radius(f64),
    Eps(f64),
    Information(f64),
}

impl Budget {
    pub fn value(self) -> f64 {
        match self {
            Budget::Radius(v) | Budget::Eps(v) | Budget::Information(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundSpec {
    pub theorem: Theorem,
    pub d: usize,
    pub n: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub r: f64,
    pub budget: Budget,
    /// ℓq geometry of the domain for the T5 bounds, in [2, ∞].
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "one")]
    pub c_lower: f64,
    #[serde(default = "one")]
    pub c_upper: f64,
}

fn default_q() -> f64 {
    f64::INFINITY
}

fn one() -> f64 {
    1.0
}

impl BoundSpec {
    pub fn new(theorem: Theorem, d: usize, n: f64, l: f64, r: f64, budget: Budget) -> Self {
        BoundSpec {
            theorem,
            d,
            n,
            l,
            r,
            budget,
            q: f64::INFINITY,
            c_lower: 1.0,
            c_upper: 1.0,
        }
    }

    pub fn with_q(mut self, q: f64) -> Self {
        self.q = q;
        self
    }

    pub fn with_constants(mut self, c_lower: f64, c_upper: f64) -> Self {
        self.c_lower = c_lower;
        self.c_upper = c_upper;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return invalid("dimension must be positive");
        }
        check_pos("n", self.n)?;
        check_pos("L", self.l)?;
        check_pos("r", self.r)?;
        check_pos("c_lower", self.c_lower)?;
        check_pos("c_upper", self.c_upper)?;
        check_pos("budget", self.budget.value())?;
        let eps_budget = matches!(self.budget, Budget::Eps(_));
        if self.theorem.uses_eps() != eps_budget {
            return invalid(format!(
                "{} takes {} budget",
                self.theorem.name(),
                if self.theorem.uses_eps() {
                    "an eps"
                } else {
                    "a radius or information"
                }
            ));
        }
        if matches!(self.theorem, Theorem::T5Linear | Theorem::T5General)
            && !(self.q >= 2.0 || self.q == f64::INFINITY)
        {
            return invalid(format!("q must lie in [2, ∞], got {}", self.q));
        }
        Ok(())
    }

    fn log2d(&self) -> f64 {
        ((2 * self.d) as f64).ln()
    }

    /// M_∞ for the ℓ∞ families, from a radius or an information level.
    fn linf_radius(&self) -> Result<f64> {
        let m = match self.budget {
            Budget::Radius(m) => m,
            Budget::Information(i) => {
                information_to_radius(ChannelKind::LinfMaxent, self.d, self.l, i)?
            }
            Budget::Eps(_) => unreachable!("validated"),
        };
        if m < self.l {
            return invalid(format!("M_∞ = {m} must be at least L = {}", self.l));
        }
        Ok(m)
    }

    /// M1 for the ℓ1 family.
    fn l1_radius(&self) -> Result<f64> {
        let m = match self.budget {
            Budget::Radius(m) => m,
            Budget::Information(i) => {
                information_to_radius(ChannelKind::L1Maxent, self.d, self.l, i)?
            }
            Budget::Eps(_) => unreachable!("validated"),
        };
        if m <= self.l {
            return invalid(format!("M1 = {m} must exceed L = {}", self.l));
        }
        Ok(m)
    }

    fn linf_information(&self) -> Result<f64> {
        match self.budget {
            Budget::Information(i) => Ok(i),
            _ => Ok(linf_maxent_mi(self.d, self.l, self.linf_radius()?)),
        }
    }

    fn l1_information(&self) -> Result<f64> {
        match self.budget {
            Budget::Information(i) => Ok(i),
            _ => Ok(l1_maxent_mi(self.d, self.l, self.l1_radius()?)),
        }
    }

    fn eps(&self) -> f64 {
        self.budget.value()
    }

    /// √d/ε · d^{1/2 − 1/q}/√n
    fn t5_rate(&self) -> f64 {
        let d = self.d as f64;
        d.sqrt() / self.eps() * d.powf(0.5 - 1.0 / self.q) / self.n.sqrt()
    }
}

/// Closed-form minimax lower bound for the theorem's setting.
pub fn lower_bound(spec: &BoundSpec) -> Result<f64> {
    spec.validate()?;
    let (d, n, l, r) = (spec.d as f64, spec.n, spec.l, spec.r);
    let sn = n.sqrt();
    match spec.theorem {
        Theorem::T1a => {
            let m = spec.linf_radius()?;
            Ok((r * l * d).min(m * r * d / (9.0 * sn)) / 20.0)
        }
        Theorem::T1b => {
            let m = spec.linf_radius()?;
            Ok((r * l).min(m * r * spec.log2d().sqrt() / (2.0 * sn)) / 8.0)
        }
        Theorem::T2 => {
            let m1 = spec.l1_radius()?;
            let diff = l1_channel_diff(spec.d, m1 / l);
            Ok((r * l).min(r * l * d.sqrt() / (9.0 * sn * diff)) / 20.0)
        }
        Theorem::T3 => {
            let eps = spec.eps();
            if spec.d < 2 {
                return invalid("T3 requires d ≥ 2");
            }
            if eps > 1.25 {
                return invalid(format!("T3 assumes eps ≤ 5/4, got {eps}"));
            }
            Ok((r * l).min(d.sqrt() / eps * r * l * spec.log2d().sqrt() / (4.0 * sn)) / 8.0)
        }
        Theorem::T4 => {
            let eps = spec.eps();
            Ok(spec.c_lower * (d.sqrt() / eps * r * l * spec.log2d().sqrt() / sn).min(r * l))
        }
        Theorem::T5Linear => {
            let mid = (n * spec.eps() * spec.eps()).sqrt().powf(-1.0 / spec.q);
            Ok(spec.c_lower * r * l * spec.t5_rate().min(mid).min(1.0))
        }
        Theorem::T5General => Ok(spec.c_lower * (r * l * spec.t5_rate()).min(r * l)),
        Theorem::C1 => {
            let i = spec.linf_information()?;
            Ok(spec.c_lower * (d / i).sqrt() * r * l * spec.log2d().sqrt() / sn)
        }
        Theorem::C2 => {
            let i = spec.l1_information()?;
            Ok(spec.c_lower * (d / i).sqrt() * r * l * d.sqrt() / sn)
        }
        Theorem::C3 => Ok(spec.c_lower * d.sqrt() / spec.eps() * r * l * spec.log2d().sqrt() / sn),
    }
}

/// Achievable rate in the theorem's setting.
///
/// Lower-bound-only statements take the upper bound of the method that
/// attains them: mirror descent with the radius-M channel for T1a (over the
/// ℓ1 ball of radius rd containing [−r, r]^d) and T1b, the C2 rate for T2,
/// and the C3 rate for T3. T5 over general losses has no stated upper bound.
pub fn upper_bound(spec: &BoundSpec) -> Result<f64> {
    spec.validate()?;
    let (d, n, l, r) = (spec.d as f64, spec.n, spec.l, spec.r);
    let sn = n.sqrt();
    let cu = spec.c_upper;
    match spec.theorem {
        Theorem::T1a => Ok(cu * spec.linf_radius()? * r * d * spec.log2d().sqrt() / sn),
        Theorem::T1b => Ok(cu * spec.linf_radius()? * r * spec.log2d().sqrt() / sn),
        Theorem::T2 | Theorem::C2 => {
            let i = spec.l1_information()?;
            Ok(cu * (d / i).sqrt() * r * l * d.sqrt() / sn)
        }
        Theorem::T3 | Theorem::C3 => {
            Ok(cu * d.sqrt() / spec.eps() * r * l * spec.log2d().sqrt() / sn)
        }
        Theorem::T4 => {
            Ok(cu * (d.sqrt() / spec.eps() * r * l * spec.log2d().sqrt() / sn).min(r * l))
        }
        Theorem::T5Linear => Ok(cu * r * l * spec.t5_rate().min(1.0)),
        Theorem::T5General => Err(Error::Unsupported(
            "no upper bound is stated for general (L, p) losses".into(),
        )),
        Theorem::C1 => {
            let i = spec.linf_information()?;
            Ok(cu * (d / i).sqrt() * r * l * spec.log2d().sqrt() / sn)
        }
    }
}

/// δ used by the proof of each lower bound.
pub fn default_delta(spec: &BoundSpec) -> Result<f64> {
    spec.validate()?;
    let (d, sn, l) = (spec.d as f64, spec.n.sqrt(), spec.l);
    let v = match spec.theorem {
        Theorem::T1a => {
            let m = spec.linf_radius()?;
            if spec.d >= 9 {
                m / (8.0 * l * sn)
            } else {
                m / (3.0 * l * sn)
            }
        }
        Theorem::T1b | Theorem::C1 => spec.linf_radius()? * spec.log2d().sqrt() / (2.0 * l * sn),
        Theorem::T2 | Theorem::C2 => {
            let diff = l1_channel_diff(spec.d, spec.l1_radius()? / l);
            d.sqrt() / (8.0 * diff * sn)
        }
        Theorem::T3 | Theorem::C3 => (d * spec.log2d()).sqrt() / (4.0 * spec.eps() * sn),
        Theorem::T4 => {
            let e = spec.eps();
            if spec.d == 1 {
                1.0 / (2.0 * 2f64.sqrt() * sn * (e.exp() - 1.0))
            } else {
                (d * spec.log2d()).sqrt() / ((e.exp() * spec.n).sqrt() * (e.exp() - (-e).exp()))
            }
        }
        Theorem::T5Linear | Theorem::T5General => {
            let e = spec.eps();
            d / (sn * (e.exp() - (-e).exp()))
        }
    };
    Ok(v.min(1.0))
}

/// (C_d(k), Δ, printed Δ, exact per-sample MI) for the k-threshold channel.
pub fn lemma8_row(d: usize, eps: f64, k: i64, delta: f64) -> Result<(u128, f64, f64, f64)> {
    let (c, _) = lemma8_constants(d, k)?;
    let big = lemma8_delta(delta, eps, d, k)?;
    let stated = lemma8_delta_as_stated(delta, eps, d, k)?;
    Ok((c, big, stated, two_level_mi_exact(d, eps, k, delta)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn testing_bounds() {
        let d = 5;
        assert!((fano_bound(0.0, 2 * d).unwrap() - (1.0 - LN_2 / (10f64).ln())).abs() < 1e-15);
        assert_eq!(le_cam_bound(0.0).unwrap(), 0.5);
        assert_eq!(fano_bound(10f64.ln(), 10).unwrap(), 0.0);
        assert!(fano_bound(-1.0, 4).is_err());
        assert!(fano_bound(0.0, 1).is_err());
        assert!(le_cam_bound(1.5).is_err());
    }

    #[test]
    fn dp_information_bounds() {
        assert_eq!(dp_marginal_kl_bound(0.0, 100.0, 0.3).unwrap(), 0.0);
        assert_eq!(dp_nonint_info_bound(0.0, 100.0, 0.3).unwrap(), 0.0);
        // Pinsker turns the KL bound into the squared-TV bound of the d = 1 argument
        let (eps, n, delta) = (0.5f64, 200.0, 0.05);
        let tv_sq = dp_marginal_kl_bound(eps, n, delta).unwrap() / 2.0;
        assert!((tv_sq - 2.0 * (eps.exp() - 1.0).powi(2) * n * delta * delta).abs() < 1e-12);
        let p = LemmaParams::new(4, 0.3, 1.0).with_eps(eps);
        let p = LemmaParams { n, ..p };
        let l7 = mi_lemma_value(MiLemma::L7, &p).unwrap();
        let b = dp_nonint_info_bound(eps, n, 0.09 / 16.0).unwrap();
        assert!((l7 - b).abs() < 1e-12);
    }

    #[test]
    fn lemma8_printed_constant() {
        let e = 1f64.exp();
        let stated = lemma8_delta_as_stated(1.0, 1.0, 3, 0).unwrap();
        assert!((stated - 2.0 * (e - 1.0) / (4.0 * e + 12.0)).abs() < 1e-15);
        let exact = two_level_mi_exact(3, 1.0, 0, 1.0).unwrap();
        assert!(exact > stated * stated);
        let derived_sq = lemma8_delta(1.0, 1.0, 3, 0).unwrap().powi(2);
        assert!(exact <= derived_sq);
        assert!(lemma8_constants(3, 1).is_err());
        assert!(lemma8_constants(3, 4).is_err());
        assert_eq!(lemma8_constants(3, 2).unwrap(), (1, 1));
    }

    #[test]
    fn two_level_matches_dp_channel_instance() {
        let p = LemmaParams::new(3, 0.4, 1.0).with_eps(0.7);
        let inst = lemma_instance(MiLemma::L8, &p, &mut seeded(1)).unwrap();
        let a = inst.mutual_information().unwrap();
        let b = two_level_mi_exact(3, 0.7, 0, 0.4).unwrap();
        assert!((a - b).abs() < 1e-13);
    }

    #[test]
    fn lemma4_example() {
        let p = LemmaParams::new(2, 0.5, 1.0).with_radius(2.0);
        let inst = lemma_instance(MiLemma::L4, &p, &mut seeded(1)).unwrap();
        let mi = inst.mutual_information().unwrap();
        assert!(mi <= mi_lemma_value(MiLemma::L4, &p).unwrap());
        assert_eq!(
            mi_lemma_value(MiLemma::L4, &LemmaParams::new(2, 0.0, 1.0).with_radius(2.0)).unwrap(),
            0.0
        );
    }

    #[test]
    fn bound_examples() {
        let b = BoundSpec::new(Theorem::T1b, 8, 1e6, 1.0, 1.0, Budget::Radius(1.0));
        let want = 1.0 * 1.0 * 16f64.ln().sqrt() / (16.0 * 1e3);
        assert!((lower_bound(&b).unwrap() - want).abs() < 1e-15);
        let b = BoundSpec::new(Theorem::T1b, 8, 1024.0, 1.0, 1.0, Budget::Radius(4.0));
        let want = (4.0 * 16f64.ln().sqrt() / (2.0 * 32.0)).min(1.0) / 8.0;
        assert!((lower_bound(&b).unwrap() - want).abs() < 1e-15);
        let t3 = BoundSpec::new(Theorem::T3, 4, 100.0, 1.0, 1.0, Budget::Eps(1.3));
        assert!(lower_bound(&t3).is_err());
        let t5 = BoundSpec::new(Theorem::T5Linear, 9, 1e8, 1.0, 1.0, Budget::Eps(0.5));
        assert!((upper_bound(&t5).unwrap() - 9.0 / (0.5 * 1e4)).abs() < 1e-15);
        assert!(upper_bound(&t5.with_q(2.0)).unwrap() < upper_bound(&t5).unwrap());
    }

    #[test]
    fn t2_diff_two_codings() {
        let (d, m) = (5usize, 10.0);
        let a = 2.0 * d as f64 - 2.0;
        let g = ((a + (a * a + 4.0 * (m * m - 1.0)).sqrt()) / (2.0 * (m - 1.0))).ln();
        let direct = g.sinh() / (g.cosh() + (d as f64 - 1.0));
        assert!((l1_channel_diff(d, m) - direct).abs() < 1e-15);
        // the calibration identity makes D exactly 1/M
        assert!((l1_channel_diff(d, m) - 1.0 / m).abs() < 1e-13);
    }

    #[test]
    fn effective_sample_size_identity() {
        let (d, n, eps) = (8usize, 4096.0, 0.5);
        let c3 = BoundSpec::new(Theorem::C3, d, n, 1.0, 1.0, Budget::Eps(eps));
        let np = nonprivate_rate(d, n * eps * eps / d as f64, 1.0, 1.0);
        assert!((upper_bound(&c3).unwrap() - np).abs() < 1e-12 * np);
    }
}
