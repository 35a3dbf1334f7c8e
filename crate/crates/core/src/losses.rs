//! (L, p)-loss families with exact subgradient oracles, the data
//! distributions used by the hard instances, and closed-form risks.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{hypercube, Norm, NormBall, Vector};
use crate::information::DiscreteDist;
use crate::numeric::sign;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// L‖r x − θ‖₁
    Median,
    /// L[r − ⟨x, θ⟩]₊
    Hinge,
    /// L log(1 + exp(−⟨x, θ⟩)), with x the label-signed covariate b·a.
    Logistic,
    /// L⟨x, θ⟩
    Linear,
}

/// A convex loss whose subgradients satisfy ‖g‖_p ≤ L on the supported data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossFn {
    pub kind: LossKind,
    pub lipschitz: f64,
    pub grad_norm: Norm,
    /// Offset scale r used by the median and hinge losses.
    pub r: f64,
}

impl LossFn {
    fn build(kind: LossKind, lipschitz: f64, grad_norm: Norm, r: f64) -> Result<Self> {
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return invalid(format!(
                "Lipschitz constant must be positive, got {lipschitz}"
            ));
        }
        if !(r > 0.0 && r.is_finite()) {
            return invalid(format!("loss offset r must be positive, got {r}"));
        }
        Ok(LossFn {
            kind,
            lipschitz,
            grad_norm,
            r,
        })
    }

    /// Median loss; an (L, ∞)-loss.
    pub fn median(lipschitz: f64, r: f64) -> Result<Self> {
        Self::build(LossKind::Median, lipschitz, Norm::Linf, r)
    }

    /// Hinge loss; an (L, 1)-loss for data with ‖x‖₁ ≤ 1.
    pub fn hinge(lipschitz: f64, r: f64) -> Result<Self> {
        Self::build(LossKind::Hinge, lipschitz, Norm::L1, r)
    }

    /// Logistic loss; an (L, 1)-loss for data with ‖x‖₁ ≤ 1.
    pub fn logistic(lipschitz: f64) -> Result<Self> {
        Self::build(LossKind::Logistic, lipschitz, Norm::L1, 1.0)
    }

    /// Linear loss; an (L, p)-loss for data in the unit ℓp ball.
    pub fn linear(lipschitz: f64, grad_norm: Norm) -> Result<Self> {
        Self::build(LossKind::Linear, lipschitz, grad_norm, 1.0)
    }

    pub fn value(&self, x: &Vector, theta: &Vector) -> Result<f64> {
        x.check_dim(theta.dim())?;
        let l = self.lipschitz;
        Ok(match self.kind {
            LossKind::Median => {
                l * x
                    .iter()
                    .zip(theta.iter())
                    .map(|(xi, ti)| (self.r * xi - ti).abs())
                    .sum::<f64>()
            }
            LossKind::Hinge => l * (self.r - x.dot(theta)).max(0.0),
            LossKind::Logistic => l * softplus(-x.dot(theta)),
            LossKind::Linear => l * x.dot(theta),
        })
    }

    /// An element of ∂_θ ℓ(x, θ). Kinks use sign(0) = 0 for the median loss
    /// and the active side −Lx for the hinge at zero margin.
    pub fn subgrad(&self, x: &Vector, theta: &Vector) -> Result<Vector> {
        x.check_dim(theta.dim())?;
        let l = self.lipschitz;
        Ok(match self.kind {
            LossKind::Median => Vector::raw(
                x.iter()
                    .zip(theta.iter())
                    .map(|(xi, ti)| l * sign(ti - self.r * xi))
                    .collect(),
            ),
            LossKind::Hinge => {
                if self.r - x.dot(theta) >= 0.0 {
                    x.scaled(-l)
                } else {
                    Vector::zeros(x.dim())
                }
            }
            LossKind::Logistic => {
                let m = x.dot(theta);
                x.scaled(-l / (1.0 + m.exp()))
            }
            LossKind::Linear => x.scaled(l),
        })
    }
}

/// log(1 + eᵗ) without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Data distributions P_ν of the hard instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataDist {
    /// X ∈ {−1,1}^d with independent coordinates, P(X_j = 1) = (1 + δν_j)/2.
    CubeBernoulli { delta: f64, nu: Vector },
    /// j uniform on {1..d}, then X = e_j w.p. (1 + δν_j)/2 and −e_j otherwise.
    CoordBasis { delta: f64, nu: Vector },
    /// Uniform over stored samples.
    CustomEmpirical { samples: Vec<Vector> },
}

pub const ENUMERATION_MAX_DIM: usize = 20;

impl DataDist {
    pub fn cube_bernoulli(delta: f64, nu: Vector) -> Result<Self> {
        check_delta_nu(delta, &nu)?;
        Ok(DataDist::CubeBernoulli { delta, nu })
    }

    pub fn coord_basis(delta: f64, nu: Vector) -> Result<Self> {
        check_delta_nu(delta, &nu)?;
        Ok(DataDist::CoordBasis { delta, nu })
    }

    pub fn custom_empirical(samples: Vec<Vector>) -> Result<Self> {
        let Some(first) = samples.first() else {
            return invalid("empirical distribution needs at least one sample");
        };
        let d = first.dim();
        for s in &samples {
            s.check_dim(d)?;
        }
        Ok(DataDist::CustomEmpirical { samples })
    }

    pub fn dim(&self) -> usize {
        match self {
            DataDist::CubeBernoulli { nu, .. } | DataDist::CoordBasis { nu, .. } => nu.dim(),
            DataDist::CustomEmpirical { samples } => samples[0].dim(),
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> Vector {
        match self {
            DataDist::CubeBernoulli { delta, nu } => Vector::raw(
                nu.iter()
                    .map(|&v| {
                        if rng.gen::<f64>() < (1.0 + delta * v) / 2.0 {
                            1.0
                        } else {
                            -1.0
                        }
                    })
                    .collect(),
            ),
            DataDist::CoordBasis { delta, nu } => {
                let d = nu.dim();
                let j = rng.gen_range(0..d);
                let s = if rng.gen::<f64>() < (1.0 + delta * nu[j]) / 2.0 {
                    1.0
                } else {
                    -1.0
                };
                Vector::basis(d, j, s)
            }
            DataDist::CustomEmpirical { samples } => {
                samples[rng.gen_range(0..samples.len())].clone()
            }
        }
    }

    /// The exact law as weighted atoms; cube supports are enumerated for d ≤ 20.
    pub fn support(&self) -> Result<DiscreteDist> {
        match self {
            DataDist::CubeBernoulli { delta, nu } => {
                let d = nu.dim();
                if d > ENUMERATION_MAX_DIM {
                    return Err(Error::Unsupported(format!("enumerating 2^{d} cube points")));
                }
                let points = hypercube(d);
                let probs = points
                    .iter()
                    .map(|x| {
                        x.iter()
                            .zip(nu.iter())
                            .map(|(xi, v)| (1.0 + delta * v * xi) / 2.0)
                            .product()
                    })
                    .collect();
                DiscreteDist::new(points, probs)
            }
            DataDist::CoordBasis { delta, nu } => {
                let d = nu.dim();
                let mut points = Vec::with_capacity(2 * d);
                let mut probs = Vec::with_capacity(2 * d);
                for j in 0..d {
                    for s in [1.0, -1.0] {
                        points.push(Vector::basis(d, j, s));
                        probs.push((1.0 + s * delta * nu[j]) / (2.0 * d as f64));
                    }
                }
                DiscreteDist::new(points, probs)
            }
            DataDist::CustomEmpirical { samples } => {
                let w = 1.0 / samples.len() as f64;
                DiscreteDist::new(samples.clone(), vec![w; samples.len()])
            }
        }
    }

    /// E[X].
    pub fn mean(&self) -> Vector {
        match self {
            DataDist::CubeBernoulli { delta, nu } => nu.scaled(*delta),
            DataDist::CoordBasis { delta, nu } => nu.scaled(delta / nu.dim() as f64),
            DataDist::CustomEmpirical { samples } => {
                let mut m = Vector::zeros(samples[0].dim());
                for s in samples {
                    m.axpy(1.0 / samples.len() as f64, s);
                }
                m
            }
        }
    }

    fn delta_nu(&self) -> Option<(f64, &Vector)> {
        match self {
            DataDist::CubeBernoulli { delta, nu } | DataDist::CoordBasis { delta, nu } => {
                Some((*delta, nu))
            }
            DataDist::CustomEmpirical { .. } => None,
        }
    }
}

fn check_delta_nu(delta: f64, nu: &Vector) -> Result<()> {
    if !(0.0..=1.0).contains(&delta) {
        return invalid(format!("delta must lie in [0, 1], got {delta}"));
    }
    if nu.iter().any(|v| !matches!(*v, -1.0 | 0.0 | 1.0)) {
        return invalid("nu entries must lie in {-1, 0, 1}");
    }
    Ok(())
}

/// Population risk R(θ) = E_P[ℓ(X, θ)] over a domain Θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    pub loss: LossFn,
    pub data: DataDist,
    pub domain: NormBall,
}

/// Closed-form minimizer θ* with R(θ*); `unique` is false when the
/// minimizing set is larger than the returned point.
#[derive(Debug, Clone, PartialEq)]
pub struct Minimizer {
    pub theta: Vector,
    pub value: f64,
    pub unique: bool,
}

/// f_a(t) = (1+a)/2·|t − r| + (1−a)/2·|t + r|, the per-coordinate median risk.
fn median_coord(a: f64, t: f64, r: f64) -> f64 {
    (1.0 + a) / 2.0 * (t - r).abs() + (1.0 - a) / 2.0 * (t + r).abs()
}

/// (1+a)/2·[r − t]₊ + (1−a)/2·[r + t]₊, the per-coordinate hinge risk.
fn hinge_coord(a: f64, t: f64, r: f64) -> f64 {
    (1.0 + a) / 2.0 * (r - t).max(0.0) + (1.0 - a) / 2.0 * (r + t).max(0.0)
}

impl RiskSpec {
    pub fn new(loss: LossFn, data: DataDist, domain: NormBall) -> Self {
        RiskSpec { loss, data, domain }
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    /// Exact R(θ): closed-form coordinate sums where the loss separates,
    /// exact enumeration of the support otherwise, plug-in mean for samples.
    pub fn risk_value(&self, theta: &Vector) -> Result<f64> {
        theta.check_dim(self.dim())?;
        let l = self.loss.lipschitz;
        let r = self.loss.r;
        match (&self.data, self.loss.kind) {
            (DataDist::CubeBernoulli { .. } | DataDist::CoordBasis { .. }, LossKind::Linear) => {
                Ok(l * self.data.mean().dot(theta))
            }
            (DataDist::CubeBernoulli { delta, nu }, LossKind::Median) => Ok(l * nu
                .iter()
                .zip(theta.iter())
                .map(|(v, t)| median_coord(delta * v, *t, r))
                .sum::<f64>()),
            (DataDist::CoordBasis { delta, nu }, LossKind::Hinge) => Ok(l / nu.dim() as f64
                * nu.iter()
                    .zip(theta.iter())
                    .map(|(v, t)| hinge_coord(delta * v, *t, r))
                    .sum::<f64>()),
            (DataDist::CoordBasis { delta, nu }, LossKind::Median) => {
                let d = nu.dim() as f64;
                let l1 = theta.norm(Norm::L1);
                Ok(l / d
                    * nu.iter()
                        .zip(theta.iter())
                        .map(|(v, t)| median_coord(delta * v, *t, r) + l1 - t.abs())
                        .sum::<f64>())
            }
            _ => self.expectation_by_enumeration(theta),
        }
    }

    fn expectation_by_enumeration(&self, theta: &Vector) -> Result<f64> {
        let support = self.data.support()?;
        let mut acc = 0.0;
        for (x, p) in support.support.iter().zip(&support.probs) {
            acc += p * self.loss.value(x, theta)?;
        }
        Ok(acc)
    }

    /// Closed-form minimizer over the domain for the structured families.
    pub fn risk_minimizer(&self) -> Result<Minimizer> {
        let d = self.dim();
        let Some((delta, nu)) = self.data.delta_nu() else {
            return Err(Error::Unsupported(
                "empirical risks have no closed-form minimizer; use an optimizer".into(),
            ));
        };
        let r = self.loss.r;
        let all_signed = nu.iter().all(|v| *v != 0.0);
        match (&self.data, self.loss.kind) {
            (_, LossKind::Linear) => {
                let mu = self.data.mean().scaled(self.loss.lipschitz);
                let (theta, unique) = linear_argmin(&mu, self.domain);
                let value = self.risk_value(&theta)?;
                Ok(Minimizer {
                    theta,
                    value,
                    unique,
                })
            }
            (DataDist::CubeBernoulli { .. }, LossKind::Median)
            | (DataDist::CoordBasis { .. }, LossKind::Hinge) => {
                if !self.domain.contains_cube(d, r) {
                    return Err(Error::Unsupported(
                        "closed-form minimizer needs the domain to contain [-r, r]^d".into(),
                    ));
                }
                let theta = nu.scaled(r);
                let unique = match self.loss.kind {
                    LossKind::Median => delta > 0.0 && all_signed,
                    _ => delta > 0.0 && delta < 1.0 && all_signed,
                };
                let value = self.risk_value(&theta)?;
                Ok(Minimizer {
                    theta,
                    value,
                    unique,
                })
            }
            _ => Err(Error::Unsupported(format!(
                "no closed-form minimizer for {:?} loss with this distribution",
                self.loss.kind
            ))),
        }
    }

    pub fn excess_risk(&self, theta: &Vector) -> Result<f64> {
        Ok(self.risk_value(theta)? - self.risk_minimizer()?.value)
    }
}

/// argmin of ⟨c, θ⟩ over the ball, and whether it is unique.
fn linear_argmin(c: &Vector, ball: NormBall) -> (Vector, bool) {
    let d = c.dim();
    let big_r = ball.radius;
    if c.iter().all(|v| *v == 0.0) {
        return (Vector::zeros(d), false);
    }
    match ball.norm {
        Norm::L1 => {
            let cmax = c.norm(Norm::Linf);
            let i = c.iter().position(|v| v.abs() == cmax).unwrap_or(0);
            let ties = c.iter().filter(|v| v.abs() == cmax).count();
            (Vector::basis(d, i, -big_r * sign(c[i])), ties == 1)
        }
        Norm::L2 => (c.scaled(-big_r / c.norm(Norm::L2)), true),
        Norm::Linf => (
            Vector::raw(c.iter().map(|v| -big_r * sign(*v)).collect()),
            c.iter().all(|v| *v != 0.0),
        ),
    }
}

/// inf_θ [R_v(θ) + R_w(θ)] − R_v(θ*_v) − R_w(θ*_w) for two risks of the same family.
pub fn separation(v: &RiskSpec, w: &RiskSpec) -> Result<f64> {
    let same_data_kind = std::mem::discriminant(&v.data) == std::mem::discriminant(&w.data);
    if v.loss != w.loss || v.domain != w.domain || !same_data_kind || v.dim() != w.dim() {
        return Err(Error::InvalidParameter(
            "separation needs two risks from the same family".into(),
        ));
    }
    let (Some((dv, nv)), Some((dw, nw))) = (v.data.delta_nu(), w.data.delta_nu()) else {
        return Err(Error::Unsupported("separation of empirical risks".into()));
    };
    let l = v.loss.lipschitz;
    let r = v.loss.r;
    let d = v.dim();
    // Σ_j |a_j| + |b_j| − |a_j + b_j| with a = δ_v ν, b = δ_w w.
    let kink_gap = || -> f64 {
        nv.iter()
            .zip(nw.iter())
            .map(|(x, y)| {
                let (a, b) = (dv * x, dw * y);
                a.abs() + b.abs() - (a + b).abs()
            })
            .sum()
    };
    match (&v.data, v.loss.kind) {
        (_, LossKind::Linear) => {
            let q = v.domain.norm.dual();
            let mv = v.data.mean().scaled(l);
            let mw = w.data.mean().scaled(l);
            Ok(v.domain.radius * (mv.norm(q) + mw.norm(q) - mv.add(&mw).norm(q)))
        }
        (DataDist::CubeBernoulli { .. }, LossKind::Median) if v.domain.contains_cube(d, r) => {
            Ok(l * r * kink_gap())
        }
        (DataDist::CoordBasis { .. }, LossKind::Hinge) if v.domain.contains_cube(d, r) => {
            Ok(l * r / d as f64 * kink_gap())
        }
        _ => Err(Error::Unsupported(format!(
            "no closed-form separation for {:?} loss with this distribution",
            v.loss.kind
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn v(x: &[f64]) -> Vector {
        Vector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn subgradient_examples() {
        let median = LossFn::median(1.0, 1.0).unwrap();
        assert_eq!(
            median.subgrad(&v(&[1.0, -1.0]), &v(&[0.0, 0.0])).unwrap(),
            v(&[-1.0, 1.0])
        );
        let linear = LossFn::linear(2.0, Norm::Linf).unwrap();
        assert_eq!(
            linear.subgrad(&v(&[1.0, -1.0]), &v(&[0.3, 7.0])).unwrap(),
            v(&[2.0, -2.0])
        );
        let hinge = LossFn::hinge(1.0, 1.0).unwrap();
        assert_eq!(
            hinge.subgrad(&v(&[1.0, 0.0]), &v(&[2.0, 0.0])).unwrap(),
            v(&[0.0, 0.0])
        );
        // zero margin selects the active side
        assert_eq!(
            hinge.subgrad(&v(&[1.0, 0.0]), &v(&[1.0, 0.0])).unwrap(),
            v(&[-1.0, 0.0])
        );
        assert!(median.subgrad(&v(&[1.0]), &v(&[0.0, 0.0])).is_err());
    }

    #[test]
    fn hinge_subgradient_matches_finite_difference() {
        let hinge = LossFn::hinge(1.0, 1.0).unwrap();
        let x = v(&[1.0, 0.0]);
        let theta = v(&[2.0, 0.0]);
        let h = 1e-6;
        let g = hinge.subgrad(&x, &theta).unwrap();
        for i in 0..2 {
            let mut tp = theta.clone();
            tp[i] += h;
            let fd = (hinge.value(&x, &tp).unwrap() - hinge.value(&x, &theta).unwrap()) / h;
            assert!((fd - g[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn risk_examples() {
        let nu = v(&[1.0, -1.0, 1.0]);
        let delta = 0.4;
        let r = 0.7;
        let ball = NormBall::new(Norm::Linf, 1.0).unwrap();
        let median = RiskSpec::new(
            LossFn::median(1.0, r).unwrap(),
            DataDist::cube_bernoulli(delta, nu.clone()).unwrap(),
            ball,
        );
        let theta = v(&[0.1, 0.5, -0.9]);
        let expected = (1.0 + delta) / 2.0 * theta.distance(&nu.scaled(r), Norm::L1)
            + (1.0 - delta) / 2.0 * theta.add(&nu.scaled(r)).norm(Norm::L1);
        assert!((median.risk_value(&theta).unwrap() - expected).abs() < 1e-14);

        let linear = RiskSpec::new(
            LossFn::linear(1.5, Norm::Linf).unwrap(),
            DataDist::cube_bernoulli(delta, nu.clone()).unwrap(),
            ball,
        );
        assert!((linear.risk_value(&theta).unwrap() - 1.5 * delta * nu.dot(&theta)).abs() < 1e-14);

        let flat = RiskSpec::new(
            linear.loss,
            DataDist::cube_bernoulli(0.0, nu).unwrap(),
            ball,
        );
        assert_eq!(flat.risk_value(&theta).unwrap(), 0.0);
    }

    #[test]
    fn minimizer_examples() {
        let l1 = NormBall::new(Norm::L1, 2.0).unwrap();
        let nu = Vector::basis(3, 1, -1.0);
        let lin = RiskSpec::new(
            LossFn::linear(1.0, Norm::Linf).unwrap(),
            DataDist::cube_bernoulli(0.5, nu.clone()).unwrap(),
            l1,
        );
        let m = lin.risk_minimizer().unwrap();
        assert_eq!(m.theta, nu.scaled(-2.0));
        assert!((m.value + 0.5 * 2.0).abs() < 1e-15);
        assert!(m.unique);

        let box_ = NormBall::new(Norm::Linf, 1.0).unwrap();
        let sv = v(&[1.0, -1.0]);
        let med = RiskSpec::new(
            LossFn::median(1.0, 1.0).unwrap(),
            DataDist::cube_bernoulli(0.3, sv.clone()).unwrap(),
            box_,
        );
        let m = med.risk_minimizer().unwrap();
        assert_eq!(m.theta, sv);
        assert!(m.unique);

        let hinge = RiskSpec::new(
            LossFn::hinge(1.0, 1.0).unwrap(),
            DataDist::coord_basis(0.0, sv.clone()).unwrap(),
            box_,
        );
        let m = hinge.risk_minimizer().unwrap();
        assert_eq!(m.theta, sv);
        assert!(!m.unique);

        let emp = RiskSpec::new(
            LossFn::median(1.0, 1.0).unwrap(),
            DataDist::custom_empirical(vec![sv]).unwrap(),
            box_,
        );
        assert!(matches!(emp.risk_minimizer(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn separation_examples() {
        let l1 = NormBall::new(Norm::L1, 1.0).unwrap();
        let loss = LossFn::linear(1.0, Norm::Linf).unwrap();
        let delta = 0.3;
        let spec =
            |nu: Vector| RiskSpec::new(loss, DataDist::cube_bernoulli(delta, nu).unwrap(), l1);
        let e1 = Vector::basis(4, 0, 1.0);
        let e2 = Vector::basis(4, 1, 1.0);
        let s = separation(&spec(e1.clone()), &spec(e1.scaled(-1.0))).unwrap();
        assert!((s - 2.0 * delta).abs() < 1e-15);
        let s = separation(&spec(e1.clone()), &spec(e2)).unwrap();
        assert!((s - delta).abs() < 1e-15);
        assert_eq!(separation(&spec(e1.clone()), &spec(e1)).unwrap(), 0.0);

        let d = 8;
        let box_ = NormBall::new(Norm::Linf, 1.0).unwrap();
        let hinge = LossFn::hinge(1.0, 1.0).unwrap();
        let nu = Vector::filled(d, 1.0);
        let mut w = nu.clone();
        w[0] = -1.0;
        w[1] = -1.0;
        let hs = |n: Vector| RiskSpec::new(hinge, DataDist::coord_basis(delta, n).unwrap(), box_);
        let s = separation(&hs(nu), &hs(w)).unwrap();
        assert!((s - delta / 2.0).abs() < 1e-15);
    }

    #[test]
    fn separation_rejects_mixed_families() {
        let b = NormBall::new(Norm::Linf, 1.0).unwrap();
        let nu = Vector::filled(2, 1.0);
        let a = RiskSpec::new(
            LossFn::median(1.0, 1.0).unwrap(),
            DataDist::cube_bernoulli(0.5, nu.clone()).unwrap(),
            b,
        );
        let c = RiskSpec::new(
            LossFn::hinge(1.0, 1.0).unwrap(),
            DataDist::coord_basis(0.5, nu).unwrap(),
            b,
        );
        assert!(separation(&a, &c).is_err());
    }

    #[test]
    fn sampling_matches_mean() {
        let nu = v(&[1.0, -1.0, 0.0]);
        let dist = DataDist::cube_bernoulli(0.5, nu).unwrap();
        let mut rng = seeded(11);
        let n = 200_000;
        let mut acc = Vector::zeros(3);
        for _ in 0..n {
            acc.axpy(1.0 / n as f64, &dist.sample(&mut rng));
        }
        let m = dist.mean();
        for i in 0..3 {
            assert!((acc[i] - m[i]).abs() < 0.01);
        }
    }
}
