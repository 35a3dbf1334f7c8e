//! `privopt bounds`: lower/upper bound tables over a theorem grid, plus the
//! constants C_d(k) and Δ of the k-threshold DP channel.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use privopt_core::minimax::{
    default_delta, lemma8_row, lower_bound, mi_lemma_value, upper_bound, BoundSpec, Budget,
    LemmaParams, MiLemma, Theorem,
};

use crate::table::{Cell, Table};

pub const SCHEMA: &str = "privopt-bounds/v1";

pub const COLUMNS: &[&str] = &[
    "table",
    "theorem",
    "d",
    "n",
    "L",
    "r",
    "budget_kind",
    "budget",
    "q",
    "lower_bound",
    "upper_bound",
    "delta",
    "note",
    "eps",
    "k",
    "c_d_k",
    "lemma8_delta",
    "lemma8_delta_printed",
    "mi_exact",
    "mi_bound",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub seed: Option<u64>,
    pub theorems: Vec<Theorem>,
    pub d_grid: Vec<usize>,
    pub n_grid: Vec<f64>,
    #[serde(rename = "L")]
    pub l: f64,
    pub r: f64,
    /// Channel radii M/L for the radius-budget theorems.
    pub m_over_l: Vec<f64>,
    pub eps_grid: Vec<f64>,
    /// 1/q for the ℓq theorems; 0 stands for q = ∞.
    pub inv_q_grid: Vec<f64>,
    pub lemma8: Lemma8Config,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Lemma8Config {
    pub d_grid: Vec<usize>,
    pub eps_grid: Vec<f64>,
    pub delta: f64,
}

impl Default for Lemma8Config {
    fn default() -> Self {
        Lemma8Config {
            d_grid: (1..=8).collect(),
            eps_grid: vec![0.5, 1.0],
            delta: 0.25,
        }
    }
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            seed: None,
            theorems: Theorem::ALL.to_vec(),
            d_grid: vec![2, 8, 32],
            n_grid: (8..=16).map(|k| (1u64 << k) as f64).collect(),
            l: 1.0,
            r: 1.0,
            m_over_l: vec![2.0, 4.0],
            eps_grid: vec![0.25, 0.5, 1.0],
            inv_q_grid: vec![0.5, 0.0],
            lemma8: Lemma8Config::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundsOutput {
    pub table: Table,
    pub failures: Vec<String>,
}

fn budgets(cfg: &BoundsConfig, t: Theorem) -> Vec<Budget> {
    if t.uses_eps() {
        cfg.eps_grid.iter().map(|e| Budget::Eps(*e)).collect()
    } else {
        cfg.m_over_l
            .iter()
            .map(|m| Budget::Radius(m * cfg.l))
            .collect()
    }
}

fn budget_kind(b: Budget) -> &'static str {
    match b {
        Budget::Radius(_) => "radius",
        Budget::Eps(_) => "eps",
        Budget::Information(_) => "information",
    }
}

pub fn bounds(cfg: &BoundsConfig) -> Result<BoundsOutput> {
    anyhow::ensure!(
        !cfg.theorems.is_empty() && !cfg.d_grid.is_empty() && !cfg.n_grid.is_empty(),
        "theorem, d and n grids must be non-empty"
    );
    anyhow::ensure!(
        cfg.inv_q_grid.iter().all(|v| (0.0..=0.5).contains(v)),
        "1/q must lie in [0, 1/2]"
    );
    let mut n_grid = cfg.n_grid.clone();
    n_grid.sort_by(f64::total_cmp);

    let mut table = Table::new(SCHEMA, COLUMNS);
    let mut failures = Vec::new();
    for &t in &cfg.theorems {
        let qs: Vec<f64> = match t {
            Theorem::T5Linear | Theorem::T5General => cfg.inv_q_grid.clone(),
            _ => vec![0.0],
        };
        for &d in &cfg.d_grid {
            for b in budgets(cfg, t) {
                for &inv_q in &qs {
                    let q = if inv_q == 0.0 {
                        f64::INFINITY
                    } else {
                        1.0 / inv_q
                    };
                    let mut previous: Option<f64> = None;
                    for &n in &n_grid {
                        let spec = BoundSpec::new(t, d, n, cfg.l, cfg.r, b).with_q(q);
                        let mut row = vec![
                            ("table", Cell::from("bound")),
                            ("theorem", t.name().into()),
                            ("d", d.into()),
                            ("n", n.into()),
                            ("L", cfg.l.into()),
                            ("r", cfg.r.into()),
                            ("budget_kind", budget_kind(b).into()),
                            ("budget", b.value().into()),
                            ("q", q.into()),
                        ];
                        match lower_bound(&spec) {
                            Ok(lo) => {
                                let up = upper_bound(&spec).ok();
                                if let Some(up) = up {
                                    if lo > up * (1.0 + 1e-12) {
                                        failures.push(format!(
                                            "{} d={d} n={n} budget={}: lower {lo} > upper {up}",
                                            t.name(),
                                            b.value()
                                        ));
                                    }
                                }
                                if let Some(p) = previous {
                                    if lo > p * (1.0 + 1e-12) {
                                        failures.push(format!(
                                            "{} d={d} budget={}: lower bound grows with n at n={n}",
                                            t.name(),
                                            b.value()
                                        ));
                                    }
                                }
                                previous = Some(lo);
                                row.push(("lower_bound", lo.into()));
                                row.push(("upper_bound", up.into()));
                                row.push(("delta", default_delta(&spec).ok().into()));
                                if up.is_none() {
                                    row.push(("note", "no stated upper bound".into()));
                                }
                            }
                            Err(e) => row.push(("note", format!("rejected: {e}").into())),
                        }
                        table.push(row);
                    }
                }
            }
        }
    }

    let lc = &cfg.lemma8;
    for &d in &lc.d_grid {
        anyhow::ensure!(d > 0 && d <= 12, "lemma8 d must lie in 1..=12");
        let k_max = 2 * ((d as i64 + 1) / 2) - 2;
        for &eps in &lc.eps_grid {
            for k in (0..=k_max).step_by(2) {
                let (c, big, printed, mi) = lemma8_row(d, eps, k, lc.delta)?;
                let p = LemmaParams::new(d, lc.delta, 1.0).with_eps(eps).with_k(k);
                let bound = mi_lemma_value(MiLemma::L8, &p)?;
                if mi > bound * (1.0 + 1e-9) {
                    failures.push(format!(
                        "lemma8 d={d} eps={eps} k={k}: exact MI {mi} above {bound}"
                    ));
                }
                table.push(vec![
                    ("table", "lemma8".into()),
                    ("d", d.into()),
                    ("eps", eps.into()),
                    ("k", k.into()),
                    ("delta", lc.delta.into()),
                    ("c_d_k", Cell::Text(c.to_string())),
                    ("lemma8_delta", big.into()),
                    ("lemma8_delta_printed", printed.into()),
                    ("mi_exact", mi.into()),
                    ("mi_bound", bound.into()),
                ]);
            }
        }
    }
    Ok(BoundsOutput { table, failures })
}
