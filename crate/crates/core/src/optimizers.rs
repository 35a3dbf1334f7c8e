//! Stochastic mirror descent over the ℓ1 ball and projected SGD over the ℓ2
//! ball, both returning the uniform average of their iterates.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{Norm, NormBall, Vector};
use crate::losses::RiskSpec;

/// Anything that answers "give me a (possibly perturbed) subgradient at θ".
pub trait GradOracle {
    fn query(&mut self, theta: &Vector) -> Result<Vector>;

    /// Seed of the randomness behind the answers, when there is one.
    fn seed(&self) -> Option<u64> {
        None
    }
}

/// Adapter turning a closure into an oracle, for exact or hand-built gradients.
pub struct FnOracle<F>(pub F);

impl<F> GradOracle for FnOracle<F>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    fn query(&mut self, theta: &Vector) -> Result<Vector> {
        (self.0)(theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MirrorDescentL1,
    SgdL2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub method: Method,
    pub domain: NormBall,
    pub steps: usize,
    pub step_size_scale: f64,
    /// M_∞ for mirror descent, M_2 for SGD.
    pub grad_bound: f64,
    #[serde(default)]
    pub record_trace: bool,
}

impl OptimizerConfig {
    pub fn new(method: Method, domain: NormBall, steps: usize, grad_bound: f64) -> Result<Self> {
        let cfg = OptimizerConfig {
            method,
            domain,
            steps,
            step_size_scale: 1.0,
            grad_bound,
            record_trace: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_step_size_scale(mut self, scale: f64) -> Result<Self> {
        self.step_size_scale = scale;
        self.validate()?;
        Ok(self)
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return invalid("an optimizer needs at least one step");
        }
        if !(self.grad_bound > 0.0 && self.grad_bound.is_finite()) {
            return invalid(format!(
                "gradient bound must be positive, got {}",
                self.grad_bound
            ));
        }
        if !(self.step_size_scale > 0.0 && self.step_size_scale.is_finite()) {
            return invalid(format!(
                "step-size scale must be positive, got {}",
                self.step_size_scale
            ));
        }
        let wanted = match self.method {
            Method::MirrorDescentL1 => Norm::L1,
            Method::SgdL2 => Norm::L2,
        };
        if self.domain.norm != wanted {
            return Err(Error::InvalidParameter(format!(
                "{:?} needs an {:?} ball domain, got {:?}",
                self.method, wanted, self.domain.norm
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerRun {
    pub iterates: Option<Vec<Vector>>,
    pub averaged: Vector,
    pub risk_gap: Option<f64>,
    pub seed: Option<u64>,
}

impl OptimizerRun {
    /// Fill in the excess risk of the averaged iterate.
    pub fn evaluate(&mut self, risk: &RiskSpec) -> Result<f64> {
        let gap = risk.excess_risk(&self.averaged)?;
        self.risk_gap = Some(gap);
        Ok(gap)
    }
}

/// Mirror descent: the fixed η = √(2 log 2d)/(r₁ M_∞ √n).
/// SGD: the base step r₂/M₂, used as η_t = base/√t.
pub fn step_size_for(method: Method, domain: NormBall, grad_bound: f64, d: usize, n: usize) -> f64 {
    match method {
        Method::MirrorDescentL1 => {
            (2.0 * ((2 * d) as f64).ln()).sqrt() / (domain.radius * grad_bound * (n as f64).sqrt())
        }
        Method::SgdL2 => domain.radius / grad_bound,
    }
}

pub fn run(
    oracle: &mut impl GradOracle,
    config: &OptimizerConfig,
    d: usize,
) -> Result<OptimizerRun> {
    match config.method {
        Method::MirrorDescentL1 => mirror_descent_l1(oracle, config, d),
        Method::SgdL2 => sgd_l2(oracle, config, d),
    }
}

fn checked_query(oracle: &mut impl GradOracle, theta: &Vector) -> Result<Vector> {
    let g = oracle.query(theta)?;
    g.check_dim(theta.dim())?;
    if !g.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(g)
}

/// Entropic mirror descent on the 2d-simplex lift θ = r₁(u − v) of the ℓ1 ball,
/// started at the uniform lift (θ = 0).
pub fn mirror_descent_l1(
    oracle: &mut impl GradOracle,
    config: &OptimizerConfig,
    d: usize,
) -> Result<OptimizerRun> {
    config.validate()?;
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let r1 = config.domain.radius;
    let n = config.steps;
    let eta = config.step_size_scale
        * step_size_for(config.method, config.domain, config.grad_bound, d, n);
    // log-weights of (u_1..u_d, v_1..v_d)
    let mut log_w = vec![0.0f64; 2 * d];
    let mut weights = vec![1.0 / (2 * d) as f64; 2 * d];
    let mut theta = Vector::zeros(d);
    let mut sum = Vector::zeros(d);
    let mut trace = config.record_trace.then(|| Vec::with_capacity(n));

    for _ in 0..n {
        sum.axpy(1.0, &theta);
        if let Some(t) = trace.as_mut() {
            t.push(theta.clone());
        }
        let g = checked_query(oracle, &theta)?;
        for i in 0..d {
            let step = eta * r1 * g[i];
            log_w[i] -= step;
            log_w[d + i] += step;
        }
        let top = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for (w, lw) in weights.iter_mut().zip(log_w.iter_mut()) {
            *lw -= top;
            *w = lw.exp();
            z += *w;
        }
        for i in 0..d {
            theta[i] = r1 * (weights[i] - weights[d + i]) / z;
        }
    }
    Ok(OptimizerRun {
        iterates: trace,
        averaged: sum.scaled(1.0 / n as f64),
        risk_gap: None,
        seed: oracle.seed(),
    })
}

/// Projected SGD with η_t = r₂/(M₂√t), started at the origin.
pub fn sgd_l2(
    oracle: &mut impl GradOracle,
    config: &OptimizerConfig,
    d: usize,
) -> Result<OptimizerRun> {
    config.validate()?;
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let n = config.steps;
    let base = config.step_size_scale
        * step_size_for(config.method, config.domain, config.grad_bound, d, n);
    let mut theta = Vector::zeros(d);
    let mut sum = Vector::zeros(d);
    let mut trace = config.record_trace.then(|| Vec::with_capacity(n));

    for t in 1..=n {
        sum.axpy(1.0, &theta);
        if let Some(tr) = trace.as_mut() {
            tr.push(theta.clone());
        }
        let g = checked_query(oracle, &theta)?;
        theta.axpy(-base / (t as f64).sqrt(), &g);
        theta = config.domain.project(&theta)?;
    }
    Ok(OptimizerRun {
        iterates: trace,
        averaged: sum.scaled(1.0 / n as f64),
        risk_gap: None,
        seed: oracle.seed(),
    })
}
