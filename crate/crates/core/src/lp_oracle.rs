//! Brute-force solver for the linear program whose optimum is the optimal
//! ε-DP unbiased channel on the hypercube. Test oracle only.
//!
//! For a fixed input x ∈ {−1,1}^d the program is
//!
//! ```text
//! maximize t  subject to  Σ_z z q(z) = t x,  Σ_z q(z) = 1,
//!                         s ≤ q(z) ≤ e^ε s  for all z,  q, s, t ≥ 0,
//! ```
//!
//! where t = 1/M is the reciprocal of the output scale. The auxiliary s
//! turns the pairwise ratio constraints q(z) ≤ e^ε q(z′) into 2·2^d rows.
//! It is solved by a dense two-phase simplex with Bland's rule, in exact
//! rational arithmetic for d ≤ 4 and in f64 for d ∈ {5, 6}.

use std::cmp::Ordering;
use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::channels::{count_above, half_cube_mean_coefficient};
use crate::error::{invalid, Error, Result};
use crate::geometry::cube_point;
use crate::numeric::binom_exact;

pub const LP_MAX_DIM: usize = 6;
pub const EXACT_MAX_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpLpInstance {
    pub d: usize,
    pub eps: f64,
}

impl DpLpInstance {
    pub fn new(d: usize, eps: f64) -> Result<Self> {
        if d == 0 || d > LP_MAX_DIM {
            return invalid(format!("LP oracle supports 1 ≤ d ≤ {LP_MAX_DIM}, got {d}"));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return invalid(format!("eps must be positive and finite, got {eps}"));
        }
        Ok(DpLpInstance { d, eps })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DpLpSolution {
    pub t_star: f64,
    /// q indexed by the mask of `geometry::cube_point` (bit i set ⇔ z_i = +1).
    pub q: Vec<f64>,
    /// Distinct values of q, largest first.
    pub levels: Vec<f64>,
    /// No other optimal vertex was found under ± objective perturbation.
    pub unique: bool,
    /// Solved in exact rational arithmetic.
    pub exact: bool,
}

impl DpLpSolution {
    pub fn max_ratio(&self) -> f64 {
        let hi = self.q.iter().cloned().fold(0.0, f64::max);
        let lo = self.q.iter().cloned().fold(f64::INFINITY, f64::min);
        hi / lo
    }

    /// The even k with q(z) at its top level exactly when ⟨z, x⟩ > k, if the
    /// solution has two levels split that way.
    pub fn split_threshold(&self, x: &[f64]) -> Option<i64> {
        if self.levels.len() != 2 {
            return None;
        }
        let d = x.len();
        let top = self.levels[0];
        let tol = 1e-9 * top;
        let inner = |mask: usize| -> i64 {
            cube_point(d, mask as u64)
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .round() as i64
        };
        let high: Vec<i64> = (0..self.q.len())
            .filter(|m| (self.q[*m] - top).abs() <= tol)
            .map(inner)
            .collect();
        let low_max = (0..self.q.len())
            .filter(|m| (self.q[*m] - top).abs() > tol)
            .map(inner)
            .max()?;
        let high_min = *high.iter().min()?;
        // smallest even k in [low_max, high_min)
        let k = low_max + low_max.rem_euclid(2);
        (high_min > low_max && k < high_min).then_some(k)
    }
}

/// Exact ε*(d) as the ratio (K_d + 2^d − C_d)/(K_d − C_d); `None` when
/// K_d = C_d (d = 1), where the threshold is infinite.
pub fn eps_star_ratio(d: usize) -> Option<(u128, u128)> {
    let d = d as u64;
    let c: u128 = (0..(d + 1) / 2).map(|i| binom_exact(d, i).unwrap()).sum();
    let k: u128 = (0..=d / 2)
        .map(|i| (d - 2 * i) as u128 * binom_exact(d, i).unwrap())
        .sum();
    if k == c {
        return None;
    }
    Some((k + (1u128 << d) - c, k - c))
}

pub fn eps_star(d: usize) -> f64 {
    match eps_star_ratio(d) {
        Some((num, den)) => (num as f64 / den as f64).ln(),
        None => f64::INFINITY,
    }
}

/// Closed-form k = 0 solution (defined for ε < ε*): the printed two-level
/// pmf and t = (e^ε − 1) C(d−1, ⌈d/2⌉−1)/(e^ε C_d + 2^d − C_d).
pub fn closed_form_solution(d: usize, eps: f64, x: &[f64]) -> (f64, Vec<f64>) {
    let du = d as u64;
    let e = eps.exp();
    let c = count_above(du, 0);
    let norm = e * c + 2f64.powi(d as i32) - c;
    let (q_hi, q_lo) = (e / norm, 1.0 / norm);
    let t = (e - 1.0) / norm * half_cube_mean_coefficient(du);
    let q = (0..1usize << d)
        .map(|m| {
            let ip: f64 = cube_point(d, m as u64)
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
            if ip > 0.5 {
                q_hi
            } else {
                q_lo
            }
        })
        .collect();
    (t, q)
}

/// Numbers the simplex can run on.
trait Field: Clone + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn from_i64(x: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    /// Sign, with a tolerance for inexact fields.
    fn sign(&self) -> Ordering;
    fn cmp_val(&self, o: &Self) -> Ordering {
        self.sub(o).sign()
    }
    fn is_zero_val(&self) -> bool {
        self.sign() == Ordering::Equal
    }
}

const F64_TOL: f64 = 1e-11;

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn from_i64(x: i64) -> Self {
        x as f64
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if *self > F64_TOL {
            Ordering::Greater
        } else if *self < -F64_TOL {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_f64(x: f64) -> Self {
        BigRational::from_float(x).expect("finite float")
    }
    fn from_i64(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn sign(&self) -> Ordering {
        if self.is_zero() {
            Ordering::Equal
        } else if self.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        }
    }
    fn is_zero_val(&self) -> bool {
        self.is_zero()
    }
}

/// Dense tableau for max cᵀx s.t. Ax = b, x ≥ 0; the last entry of each row is b.
struct Tableau<S> {
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    ncols: usize,
}

impl<S: Field> Tableau<S> {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero_val() {
                *v = v.div(&p);
            }
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.ncols)
            .filter(|j| !prow[*j].is_zero_val())
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c].clone();
            if f.is_zero_val() {
                continue;
            }
            for &j in &nz {
                row[j] = row[j].sub(&f.mul(&prow[j]));
            }
            row[c] = S::zero();
        }
        self.basis[r] = c;
    }

    /// Bland's-rule primal simplex on the columns with `allowed(j)`.
    fn maximize(&mut self, cost: &[S], allowed: impl Fn(usize) -> bool) -> Result<()> {
        let rhs = self.ncols;
        for _ in 0..100_000 {
            let entering = (0..self.ncols).filter(|j| allowed(*j)).find(|&j| {
                if self.basis.contains(&j) {
                    return false;
                }
                let mut z = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    let cb = &cost[self.basis[i]];
                    if !cb.is_zero_val() && !row[j].is_zero_val() {
                        z = z.sub(&cb.mul(&row[j]));
                    }
                }
                z.sign() == Ordering::Greater
            });
            let Some(j) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, S)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[j].sign() != Ordering::Greater {
                    continue;
                }
                let ratio = row[rhs].div(&row[j]);
                let better = match &best {
                    None => true,
                    Some((bi, br)) => match ratio.cmp_val(br) {
                        Ordering::Less => true,
                        Ordering::Equal => self.basis[i] < self.basis[*bi],
                        Ordering::Greater => false,
                    },
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else {
                return Err(Error::Unsupported("unbounded linear program".into()));
            };
            self.pivot(r, j);
        }
        Err(Error::Unsupported("simplex iteration limit reached".into()))
    }

    fn solution(&self, n: usize) -> Vec<S> {
        let mut x = vec![S::zero(); n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][self.ncols].clone();
            }
        }
        x
    }
}

/// Two-phase simplex for max cᵀx, Ax = b ≥ 0, x ≥ 0.
fn simplex<S: Field>(a: &[Vec<S>], b: &[S], c: &[S]) -> Result<Vec<S>> {
    let (m, n) = (a.len(), c.len());
    let ncols = n + m;
    let rows = a
        .iter()
        .zip(b)
        .enumerate()
        .map(|(i, (ai, bi))| {
            let mut row = ai.clone();
            row.extend((0..m).map(|k| if k == i { S::one() } else { S::zero() }));
            row.push(bi.clone());
            row
        })
        .collect();
    let mut tab = Tableau {
        rows,
        basis: (n..n + m).collect(),
        ncols,
    };
    let phase1: Vec<S> = (0..ncols)
        .map(|j| if j < n { S::zero() } else { S::from_i64(-1) })
        .collect();
    tab.maximize(&phase1, |_| true)?;
    let infeasibility = tab
        .basis
        .iter()
        .enumerate()
        .filter(|(_, b)| **b >= n)
        .fold(S::zero(), |acc, (i, _)| acc.add(&tab.rows[i][ncols]));
    if infeasibility.sign() == Ordering::Greater {
        return Err(Error::Infeasible);
    }
    // drive zero-level artificials out, dropping redundant rows
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            if let Some(j) = (0..n).find(|j| !tab.rows[r][*j].is_zero_val()) {
                tab.pivot(r, j);
            } else {
                tab.rows.remove(r);
                tab.basis.remove(r);
                continue;
            }
        }
        r += 1;
    }
    let mut cost = c.to_vec();
    cost.extend((0..m).map(|_| S::zero()));
    tab.maximize(&cost, |j| j < n)?;
    Ok(tab.solution(n))
}

/// Rows and objective of the DP channel LP; variable order (q_0..q_{N−1}, s, t, a_z, b_z).
fn dp_lp<S: Field>(d: usize, eps: f64, x: &[f64], objective_tilt: &[S]) -> Result<(f64, Vec<S>)> {
    let big_n = 1usize << d;
    let nvar = 3 * big_n + 2;
    let (s_col, t_col) = (big_n, big_n + 1);
    let e = S::from_f64(eps.exp());
    let mut a = Vec::with_capacity(1 + d + 2 * big_n);
    let mut b = Vec::with_capacity(a.capacity());
    let mut row = vec![S::zero(); nvar];
    for v in row.iter_mut().take(big_n) {
        *v = S::one();
    }
    a.push(row);
    b.push(S::one());
    for i in 0..d {
        let mut row = vec![S::zero(); nvar];
        for (mask, v) in row.iter_mut().enumerate().take(big_n) {
            let zi = if mask >> i & 1 == 1 { 1 } else { -1 };
            *v = S::from_i64(zi);
        }
        // sign of x_i is folded in so every right-hand side stays nonnegative
        let xi = if x[i] > 0.0 { 1 } else { -1 };
        for v in row.iter_mut().take(big_n) {
            *v = v.mul(&S::from_i64(xi));
        }
        row[t_col] = S::from_i64(-1);
        a.push(row);
        b.push(S::zero());
    }
    for z in 0..big_n {
        // q_z − s − a_z = 0
        let mut row = vec![S::zero(); nvar];
        row[z] = S::one();
        row[s_col] = S::from_i64(-1);
        row[big_n + 2 + z] = S::from_i64(-1);
        a.push(row);
        b.push(S::zero());
        // e^ε s − q_z − b_z = 0
        let mut row = vec![S::zero(); nvar];
        row[z] = S::from_i64(-1);
        row[s_col] = e.clone();
        row[2 * big_n + 2 + z] = S::from_i64(-1);
        a.push(row);
        b.push(S::zero());
    }
    let mut c = vec![S::zero(); nvar];
    c[t_col] = S::one();
    for (cz, tilt) in c.iter_mut().zip(objective_tilt) {
        *cz = tilt.clone();
    }
    let sol = simplex(&a, &b, &c)?;
    Ok((sol[t_col].to_f64(), sol[..big_n].to_vec()))
}

fn tilt<S: Field>(big_n: usize, sign: i64) -> Vec<S> {
    // a fixed irregular direction, small enough not to trade against t
    let scale = S::from_f64(1.0 / 1024.0 / 1024.0 / 1024.0);
    (0..big_n)
        .map(|z| {
            let w = ((z as i64 * 7919 + 13) % 17) - 8;
            S::from_i64(sign * w).mul(&scale)
        })
        .collect()
}

fn solve_in<S: Field>(inst: &DpLpInstance, x: &[f64], exact: bool) -> Result<DpLpSolution> {
    let big_n = 1usize << inst.d;
    let (t_star, q) = dp_lp::<S>(inst.d, inst.eps, x, &[])?;
    let q_f: Vec<f64> = q.iter().map(Field::to_f64).collect();
    let mut unique = true;
    for sign in [1, -1] {
        let (_, q_alt) = dp_lp::<S>(inst.d, inst.eps, x, &tilt::<S>(big_n, sign))?;
        let same = q.iter().zip(&q_alt).all(|(a, b)| {
            if exact {
                a.cmp_val(b) == Ordering::Equal
            } else {
                (a.to_f64() - b.to_f64()).abs() <= 1e-9
            }
        });
        unique &= same;
    }
    let mut levels: Vec<f64> = Vec::new();
    let mut sorted = q_f.clone();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    for v in sorted {
        if levels
            .last()
            .map_or(true, |l: &f64| (l - v).abs() > 1e-12 * l.abs().max(1e-300))
        {
            levels.push(v);
        }
    }
    Ok(DpLpSolution {
        t_star,
        q: q_f,
        levels,
        unique,
        exact,
    })
}

/// Optimal (t, q) for input x ∈ {−1,1}^d.
pub fn solve_dp_lp(inst: &DpLpInstance, x: &[f64]) -> Result<DpLpSolution> {
    if x.len() != inst.d {
        return Err(Error::DimensionMismatch {
            expected: inst.d,
            got: x.len(),
        });
    }
    if x.iter().any(|v| v.abs() != 1.0) {
        return invalid("LP input must be a sign vector");
    }
    if inst.d <= EXACT_MAX_DIM {
        solve_in::<BigRational>(inst, x, true)
    } else {
        solve_in::<f64>(inst, x, false)
    }
}

/// Same LP in f64 regardless of d, for fast scans.
pub fn solve_dp_lp_f64(inst: &DpLpInstance, x: &[f64]) -> Result<DpLpSolution> {
    solve_in::<f64>(inst, x, false)
}

/// Locates the first ε in (lo, hi) at which the optimal level structure stops
/// being the k = 0 split, by bisection on the LP solutions at x = 1.
pub fn locate_phase_transition(d: usize, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let ones = vec![1.0; d];
    let is_k0 = |eps: f64| -> Result<bool> {
        let sol = solve_dp_lp(&DpLpInstance::new(d, eps)?, &ones)?;
        Ok(sol.split_threshold(&ones) == Some(0))
    };
    if !is_k0(lo)? || is_k0(hi)? {
        return invalid(format!(
            "no k = 0 → k > 0 transition bracketed by ({lo}, {hi})"
        ));
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if is_k0(mid)? {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::k_d;

    #[test]
    fn randomized_response() {
        let e = 1f64.exp();
        let sol = solve_dp_lp(&DpLpInstance::new(1, 1.0).unwrap(), &[1.0]).unwrap();
        assert!((sol.t_star - (e - 1.0) / (e + 1.0)).abs() < 1e-14);
        // mask 1 ⇔ z = +1
        assert!((sol.q[1] - e / (e + 1.0)).abs() < 1e-14);
        assert!((sol.q[0] - 1.0 / (e + 1.0)).abs() < 1e-14);
        assert!(sol.unique && sol.exact);
    }

    #[test]
    fn eps_star_values() {
        assert_eq!(eps_star_ratio(1), None);
        assert_eq!(eps_star(1), f64::INFINITY);
        assert_eq!(eps_star_ratio(2), Some((5, 1)));
        assert_eq!(eps_star_ratio(3), Some((10, 2)));
        assert!((eps_star(3) - 5f64.ln()).abs() < 1e-15);
        assert_eq!((count_above(3, 0), k_d(3)), (4.0, 6.0));
    }

    #[test]
    fn d3_k0_regime_matches_closed_form() {
        let ones = [1.0; 3];
        let sol = solve_dp_lp(&DpLpInstance::new(3, 0.5).unwrap(), &ones).unwrap();
        let (t, q) = closed_form_solution(3, 0.5, &ones);
        assert!((sol.t_star - t).abs() < 1e-12);
        for (a, b) in sol.q.iter().zip(&q) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(sol.split_threshold(&ones), Some(0));
        assert!(sol.unique);
    }

    #[test]
    fn d3_above_threshold_splits_higher() {
        let ones = [1.0; 3];
        let sol = solve_dp_lp(&DpLpInstance::new(3, 2.0).unwrap(), &ones).unwrap();
        assert_eq!(sol.split_threshold(&ones), Some(2));
        assert!((sol.max_ratio() - 2f64.exp()).abs() < 1e-10);
    }
}
