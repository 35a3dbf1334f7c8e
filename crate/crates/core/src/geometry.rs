//! Norm-ball geometry: vectors, projections, extreme points and hypercube packings.

use std::ops::{Index, IndexMut};

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::Rng;

/// Dense real vector. All constructors that accept outside data reject
/// non-finite entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector(Vec<f64>);

impl Vector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("vector must have positive dimension");
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Vector(entries))
    }

    /// Wraps entries produced by internal arithmetic that is finite by construction.
    pub(crate) fn raw(entries: Vec<f64>) -> Self {
        debug_assert!(entries.iter().all(|v| v.is_finite()));
        Vector(entries)
    }

    pub fn zeros(d: usize) -> Self {
        Vector(vec![0.0; d])
    }

    pub fn filled(d: usize, value: f64) -> Self {
        Vector(vec![value; d])
    }

    /// `scale · e_i` in dimension `d`.
    pub fn basis(d: usize, i: usize, scale: f64) -> Self {
        let mut v = vec![0.0; d];
        v[i] = scale;
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn norm(&self, p: Norm) -> f64 {
        match p {
            Norm::L1 => self.0.iter().map(|v| v.abs()).sum(),
            Norm::L2 => self.0.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Norm::Linf => self.0.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Number of nonzero entries.
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|v| **v != 0.0).count()
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn scaled(&self, c: f64) -> Vector {
        Vector(self.0.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Vector) -> Vector {
        Vector(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &Vector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += c * b;
        }
    }

    pub fn distance(&self, other: &Vector, p: Norm) -> f64 {
        self.sub(other).norm(p)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_dim(&self, d: usize) -> Result<()> {
        if self.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: self.dim(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vector> for Vec<f64> {
    fn from(v: Vector) -> Self {
        v.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    /// The dual norm index q = p/(p−1).
    pub fn dual(self) -> Norm {
        match self {
            Norm::L1 => Norm::Linf,
            Norm::L2 => Norm::L2,
            Norm::Linf => Norm::L1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBall {
    pub norm: Norm,
    pub radius: f64,
}

impl NormBall {
    pub fn new(norm: Norm, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return invalid(format!("ball radius must be positive, got {radius}"));
        }
        Ok(NormBall { norm, radius })
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        x.norm(self.norm) <= self.radius + tol
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        match self.norm {
            Norm::L1 => project_l1_ball(x, self.radius),
            Norm::L2 => project_l2_ball(x, self.radius),
            Norm::Linf => project_linf_ball(x, self.radius),
        }
    }

    /// Whether the ball contains the cube [−r, r]^d.
    pub fn contains_cube(&self, d: usize, r: f64) -> bool {
        let corner = match self.norm {
            Norm::L1 => r * d as f64,
            Norm::L2 => r * (d as f64).sqrt(),
            Norm::Linf => r,
        };
        corner <= self.radius * (1.0 + 1e-12)
    }

    /// Extreme points of the ℓ1 ball (±r e_i) and ℓ∞ ball ({±r}^d).
    pub fn extreme_points(&self, d: usize) -> Result<Vec<Vector>> {
        match self.norm {
            Norm::L1 => Ok((0..d)
                .flat_map(|i| [1.0, -1.0].map(|s| Vector::basis(d, i, s * self.radius)))
                .collect()),
            Norm::Linf => {
                if d > 20 {
                    return Err(Error::Unsupported(format!("2^{d} cube corners")));
                }
                Ok(hypercube(d)
                    .into_iter()
                    .map(|v| v.scaled(self.radius))
                    .collect())
            }
            Norm::L2 => Err(Error::Unsupported(
                "ℓ2 ball has a continuum of extreme points".into(),
            )),
        }
    }
}

/// All 2^d points of {−1, 1}^d; bit i of the index set means coordinate i is +1.
pub fn hypercube(d: usize) -> Vec<Vector> {
    (0..1u64 << d).map(|m| cube_point(d, m)).collect()
}

pub fn cube_point(d: usize, mask: u64) -> Vector {
    Vector(
        (0..d)
            .map(|i| if mask >> i & 1 == 1 { 1.0 } else { -1.0 })
            .collect(),
    )
}

fn check_projection_input(x: &Vector, r: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(r > 0.0 && r.is_finite()) {
        return invalid(format!("projection radius must be positive, got {r}"));
    }
    Ok(())
}

pub fn project_l2_ball(x: &Vector, r: f64) -> Result<Vector> {
    check_projection_input(x, r)?;
    let n = x.norm(Norm::L2);
    if n <= r {
        return Ok(x.clone());
    }
    Ok(x.scaled(r / n))
}

pub fn project_linf_ball(x: &Vector, r: f64) -> Result<Vector> {
    check_projection_input(x, r)?;
    Ok(Vector(x.iter().map(|v| v.clamp(-r, r)).collect()))
}

/// Euclidean projection onto {‖y‖₁ ≤ r} by soft-thresholding, with the
/// threshold found exactly from the sorted magnitudes.
pub fn project_l1_ball(x: &Vector, r: f64) -> Result<Vector> {
    check_projection_input(x, r)?;
    if x.norm(Norm::L1) <= r {
        return Ok(x.clone());
    }
    let mut u: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - r) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    Ok(Vector(
        x.iter()
            .map(|v| v.signum() * (v.abs() - tau).max(0.0))
            .collect(),
    ))
}

/// A finite subset V of the hypercube with guaranteed pairwise ℓ1 separation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Packing {
    pub points: Vec<Vector>,
    pub min_l1_separation: f64,
}

impl Packing {
    pub fn new(points: Vec<Vector>) -> Result<Self> {
        if points.len() < 2 {
            return invalid("a packing needs at least two points");
        }
        let d = points[0].dim();
        for p in &points {
            p.check_dim(d)?;
        }
        let mut sep = f64::INFINITY;
        for (i, a) in points.iter().enumerate() {
            for b in &points[i + 1..] {
                sep = sep.min(a.distance(b, Norm::L1));
            }
        }
        if sep == 0.0 {
            return invalid("packing points must be distinct");
        }
        Ok(Packing {
            points,
            min_l1_separation: sep,
        })
    }

    /// The 2d signed basis vectors {±e_i}.
    pub fn signed_basis(d: usize) -> Self {
        let points = (0..d)
            .flat_map(|i| [1.0, -1.0].map(|s| Vector::basis(d, i, s)))
            .collect();
        Packing {
            points,
            min_l1_separation: 2.0,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    /// Largest eigenvalue of (1/|V|) Σ ν νᵀ.
    pub fn second_moment_max_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = self.points.len() as f64;
        let mut sigma = vec![0.0; d * d];
        for p in &self.points {
            for i in 0..d {
                for j in 0..d {
                    sigma[i * d + j] += p[i] * p[j] / m;
                }
            }
        }
        power_iteration(&sigma, d, 1e-8, 100_000)
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix (row-major).
pub fn power_iteration(a: &[f64], d: usize, tol: f64, max_iter: usize) -> f64 {
    // Slightly uneven start so it is not orthogonal to the leading eigenvector.
    let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 1e-3 * i as f64).collect();
    let mut lambda = 0.0;
    for _ in 0..max_iter {
        let w: Vec<f64> = (0..d)
            .map(|i| (0..d).map(|j| a[i * d + j] * v[j]).sum())
            .collect();
        let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return 0.0;
        }
        let next: f64 = w.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>()
            / v.iter().map(|x| x * x).sum::<f64>();
        v = w.iter().map(|x| x / n).collect();
        if (next - lambda).abs() <= tol * next.abs().max(1.0) {
            return next;
        }
        lambda = next;
    }
    lambda
}

pub const PACKING_RETRY_BUDGET: usize = 1000;

fn random_sign_vector(d: usize, rng: &mut Rng) -> Vector {
    Vector(
        (0..d)
            .map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            .collect(),
    )
}

/// Randomized greedy packing of {−1,1}^d: candidates are accepted when they
/// lie at ℓ1 distance ≥ d/2 from every accepted point.
fn greedy_packing(d: usize, target: usize, rng: &mut Rng) -> Option<Vec<Vector>> {
    let sep = d as f64 / 2.0;
    let mut points: Vec<Vector> = Vec::with_capacity(target);
    let budget = 64 * target + 256;
    for _ in 0..budget {
        let c = random_sign_vector(d, rng);
        if points.iter().all(|p| p.distance(&c, Norm::L1) >= sep) {
            points.push(c);
            if points.len() >= target {
                return Some(points);
            }
        }
    }
    None
}

fn packing_target(d: usize, divisor: f64) -> usize {
    ((d as f64 / divisor).exp().ceil() as usize).max(2)
}

/// V ⊂ {−1,1}^d with pairwise ℓ1 distance ≥ d/2 and |V| ≥ max(2, exp(d/8)).
pub fn gilbert_varshamov_packing(d: usize, rng: &mut Rng) -> Result<Packing> {
    gilbert_varshamov_packing_with_budget(d, rng, PACKING_RETRY_BUDGET)
}

pub fn gilbert_varshamov_packing_with_budget(
    d: usize,
    rng: &mut Rng,
    retries: usize,
) -> Result<Packing> {
    if d == 0 {
        return invalid("dimension must be positive");
    }
    let target = packing_target(d, 8.0);
    for _ in 0..retries {
        if let Some(points) = greedy_packing(d, target, rng) {
            return Packing::new(points);
        }
    }
    Err(Error::ConstructionFailed(retries))
}

/// Packing with separation ≥ d/2, size ≥ ⌈exp(d/16)⌉ and
/// λ_max((1/|V|) Σ ν νᵀ) ≤ 25.
pub fn covariance_bounded_packing(d: usize, rng: &mut Rng) -> Result<Packing> {
    covariance_bounded_packing_with_budget(d, rng, PACKING_RETRY_BUDGET)
}

pub fn covariance_bounded_packing_with_budget(
    d: usize,
    rng: &mut Rng,
    retries: usize,
) -> Result<Packing> {
    if d < 2 {
        return invalid("covariance-bounded packing needs d ≥ 2");
    }
    let target = packing_target(d, 16.0);
    for _ in 0..retries {
        if let Some(points) = greedy_packing(d, target, rng) {
            let packing = Packing::new(points)?;
            if packing.second_moment_max_eigenvalue() <= 25.0 {
                return Ok(packing);
            }
        }
    }
    Err(Error::ConstructionFailed(retries))
}
