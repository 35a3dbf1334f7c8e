//! Acceptance suite. Prints one PASS/FAIL line per criterion.
//!
//! `cargo test -p privopt-cli --test acceptance -- 3 5` runs a subset.
//! A failing criterion makes the process exit non-zero unless it is listed in
//! `KNOWN_DEVIATIONS`; those still print FAIL, with the reason next to them.

use std::process::Command as Process;
use std::sync::OnceLock;
use std::time::Instant;

use anyhow::{ensure, Context, Result};

use privopt_cli::bias_demo::{bias_demo, BiasDemoConfig};
use privopt_cli::bounds::{bounds, BoundsConfig};
use privopt_cli::certify::{monte_carlo_mean_check, random_in_ball};
use privopt_cli::table::{Cell, Table};
use privopt_cli::tradeoff::{tradeoff, TradeoffConfig, TradeoffOutput};
use privopt_core::channels::{l1_gamma, Calibration};
use privopt_core::information::{
    binary_entropy_bits, l1_maxent_mi, mutual_information_exact, nats_to_bits,
};
use privopt_core::lp_oracle::{
    closed_form_solution, eps_star, locate_phase_transition, solve_dp_lp, DpLpInstance,
};
use privopt_core::minimax::{
    empirical_testing_error, fano_bound, lemma_instance, mi_lemma_value, two_level_mi_exact,
    LemmaParams, MiLemma,
};
use privopt_core::rng::{derive_seed, derived};
use privopt_core::{Channel, DiscreteDist, Vector};

const SEED: u64 = 20_130_101;

/// Criteria expected to fail, with the measured reason.
const KNOWN_DEVIATIONS: &[(u32, &str)] = &[(
    7,
    "private/non-private risk ratio tracks B·eps/(L·sqrt d) of the DP sampler, about 2.3-3.1",
)];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn channel_unbiasedness() -> Result<Verdict> {
    let start = Instant::now();
    let mut worst = Vec::new();
    let mut pass = true;
    let makers: [(&str, fn(usize) -> privopt_core::Result<Channel>); 5] = [
        ("linf_maxent", |d| Channel::linf_maxent(d, 1.0, 2.0)),
        ("l1_maxent", |d| Channel::l1_maxent(d, 1.0, 2.0)),
        ("dp_hypercube", |d| Channel::dp_hypercube(d, 1.0, 0.5)),
        ("dp_linf_sampler", |d| Channel::dp_linf_sampler(d, 1.0, 0.5)),
        ("dp_l2_sampler", |d| Channel::dp_l2_sampler(d, 1.0, 0.5)),
    ];
    for (k, (name, make)) in makers.iter().enumerate() {
        let mut max_z = 0.0f64;
        for (j, d) in [1usize, 2, 5, 10].into_iter().enumerate() {
            let ch = make(d)?;
            let mut rng = derived(SEED, (10 * k + j) as u64);
            let inputs: Vec<Vector> = (0..20)
                .map(|_| random_in_ball(ch.source, d, &mut rng))
                .collect();
            let check = monte_carlo_mean_check(
                &ch,
                &inputs,
                1_000_000,
                derive_seed(SEED, (100 + 10 * k + j) as u64),
            )?;
            max_z = max_z.max(check.max_z);
        }
        pass &= max_z <= 4.0;
        worst.push(format!("{name} {max_z:.2}"));
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        pass && secs < 120.0,
        format!("max z per channel: {}; {secs:.0}s", worst.join(", ")),
    )
}

fn linf_information_exact() -> Result<Verdict> {
    let mut worst_err = 0.0f64;
    let mut bound_ok = true;
    for d in 1..=6 {
        for ratio in [1.0, 1.5, 2.0, 4.0, 10.0] {
            let ch = Channel::linf_maxent(d, 1.0, ratio)?;
            let source = DiscreteDist::uniform(ch.source_extreme_points()?)?;
            let mi = mutual_information_exact(&source, &ch)?;
            let formula = d as f64 * (1.0 - binary_entropy_bits(0.5 + 0.5 / ratio)?);
            worst_err = worst_err.max((nats_to_bits(mi) - formula).abs());
            bound_ok &= mi <= d as f64 / (ratio * ratio) + 1e-12;
        }
    }
    verdict(
        worst_err <= 1e-10 && bound_ok,
        format!("max |exact − formula| = {worst_err:.1e} bits; nats bound holds: {bound_ok}"),
    )
}

fn l1_calibration_and_information() -> Result<Verdict> {
    let mut gamma_res = 0.0f64;
    for d in (1..=8).chain([50]) {
        for ratio in [1.5, 2.0, 4.0, 10.0, 100.0] {
            let g = l1_gamma(d, ratio);
            let (e, ei) = (g.exp(), (-g).exp());
            let lhs = (e - ei) / (e + ei + 2.0 * d as f64 - 2.0);
            gamma_res = gamma_res.max((lhs - 1.0 / ratio).abs());
        }
    }
    let mut mi_err = 0.0f64;
    for d in 1..=8 {
        for ratio in [1.5, 2.0, 4.0, 10.0] {
            let ch = Channel::l1_maxent(d, 1.0, ratio)?;
            let source = DiscreteDist::uniform(ch.source_extreme_points()?)?;
            let exact = mutual_information_exact(&source, &ch)?;
            mi_err = mi_err.max((exact - l1_maxent_mi(d, 1.0, ratio)).abs());
        }
    }
    let ch = Channel::l1_maxent(50, 1.0, 100.0)?;
    let source = DiscreteDist::uniform(ch.source_extreme_points()?)?;
    let exact = mutual_information_exact(&source, &ch)?;
    let asymptotic = 50.0 / (2.0 * 100.0 * 100.0);
    let rel = (exact / asymptotic - 1.0).abs();
    verdict(
        gamma_res <= 1e-12 && mi_err <= 1e-10 && rel <= 0.05,
        format!(
            "gamma residual {gamma_res:.1e}; max |exact − closed form| {mi_err:.1e}; d=50 M/L=100 relative gap {rel:.3}"
        ),
    )
}

fn dp_channel_optimality() -> Result<Verdict> {
    let mut atom_err = 0.0f64;
    let mut t_err = 0.0f64;
    let mut ratio_err = 0.0f64;
    let mut solves = 0;
    for d in 1..=5usize {
        let cap = eps_star(d).min(2.0);
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let eps = frac * cap;
            let ch = Channel::dp_hypercube(d, 1.0, eps)?;
            let Calibration::DpHypercube { t, .. } = ch.calibration else {
                unreachable!("dp_hypercube calibration");
            };
            let inst = DpLpInstance::new(d, eps)?;
            let ones = vec![1.0; d];
            let alternating: Vec<f64> = (0..d)
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect();
            for x in [ones, alternating] {
                let sol = solve_dp_lp(&inst, &x)?;
                let (t_cf, q_cf) = closed_form_solution(d, eps, &x);
                for (a, b) in sol.q.iter().zip(&q_cf) {
                    atom_err = atom_err.max((a - b).abs());
                }
                t_err = t_err
                    .max((sol.t_star - t_cf).abs())
                    .max((sol.t_star - t).abs());
                ratio_err = ratio_err.max((sol.max_ratio() - eps.exp()).abs());
                solves += 1;
            }
        }
    }
    let transition = locate_phase_transition(3, 1.0, 2.5, 1e-7)?;
    let eps3 = 5f64.ln();
    let transition_ok = (transition - eps3).abs() <= 1e-6;
    verdict(
        atom_err <= 1e-8 && t_err <= 1e-8 && ratio_err <= 1e-10 && transition_ok,
        format!(
            "{solves} LP solves: atom err {atom_err:.1e}, t err {t_err:.1e}, ratio err {ratio_err:.1e}; transition at {transition:.7} vs log 5 = {eps3:.7}"
        ),
    )
}

fn lemma_bounds() -> Result<Verdict> {
    let mut rng = derived(SEED, 5);
    let mut counts = std::collections::BTreeMap::new();
    let mut worst_ratio = 0.0f64;
    let mut record = |name: &str, exact: f64, bound: f64| {
        *counts.entry(name.to_string()).or_insert(0usize) += 1;
        worst_ratio = worst_ratio.max(if bound > 0.0 {
            exact / bound
        } else {
            f64::INFINITY
        });
    };
    for d in 1..=4usize {
        for delta in [0.2, 0.6] {
            for m in [1.0, 2.0, 4.0] {
                let p = LemmaParams::new(d, delta, 1.0).with_radius(m);
                for lemma in [MiLemma::L4, MiLemma::L5] {
                    if let Ok(inst) = lemma_instance(lemma, &p, &mut rng) {
                        record(
                            &format!("{lemma:?}"),
                            inst.mutual_information()?,
                            mi_lemma_value(lemma, &p)?,
                        );
                    }
                }
                if m > 1.0 {
                    let lemma = MiLemma::L6;
                    if let Ok(inst) = lemma_instance(lemma, &p, &mut rng) {
                        record("L6", inst.mutual_information()?, mi_lemma_value(lemma, &p)?);
                    }
                }
            }
            for eps in [0.25, 0.5, 1.0] {
                let p = LemmaParams::new(d, delta, 1.0).with_eps(eps);
                for lemma in [MiLemma::L7, MiLemma::L11] {
                    if let Ok(inst) = lemma_instance(lemma, &p, &mut rng) {
                        record(
                            &format!("{lemma:?}"),
                            inst.mutual_information()?,
                            mi_lemma_value(lemma, &p)?,
                        );
                    }
                }
                let k_max = 2 * ((d as i64 + 1) / 2) - 2;
                for k in (0..=k_max).step_by(2) {
                    let pk = p.with_k(k);
                    record(
                        "L8",
                        two_level_mi_exact(d, eps, k, delta)?,
                        mi_lemma_value(MiLemma::L8, &pk)?,
                    );
                }
            }
        }
    }
    let all_present = ["L4", "L5", "L6", "L7", "L8"]
        .iter()
        .all(|l| counts.get(*l).copied().unwrap_or(0) > 0);
    verdict(
        all_present && worst_ratio <= 1.0 + 1e-9,
        format!("instances {counts:?}; max exact/bound = {worst_ratio:.3}"),
    )
}

fn tradeoff_defaults() -> &'static (TradeoffOutput, f64) {
    static CELL: OnceLock<(TradeoffOutput, f64)> = OnceLock::new();
    CELL.get_or_init(|| {
        let start = Instant::now();
        let out = tradeoff(&TradeoffConfig::default(), SEED).expect("default tradeoff sweep");
        (out, start.elapsed().as_secs_f64())
    })
}

fn fit_rows(t: &Table, experiment: &str) -> Vec<(i64, f64, bool)> {
    t.rows_where("row", "fit")
        .filter(|r| matches!(t.get(*r, "experiment"), Some(Cell::Text(e)) if e == experiment))
        .map(|r| {
            let d = match t.get(r, "d") {
                Some(Cell::Int(d)) => *d,
                _ => 0,
            };
            let col = if experiment == "effective_sample" {
                "risk_ratio"
            } else {
                "slope"
            };
            let v = t.get(r, col).and_then(Cell::as_f64).unwrap_or(f64::NAN);
            let pass = matches!(t.get(r, "pass"), Some(Cell::Text(p)) if p == "true");
            (d, v, pass)
        })
        .collect()
}

fn convergence_rates() -> Result<Verdict> {
    let (out, secs) = tradeoff_defaults();
    let n_fits = fit_rows(&out.table, "rate_n");
    let e_fits = fit_rows(&out.table, "rate_eps");
    let fmt = |f: &[(i64, f64, bool)]| {
        f.iter()
            .map(|(d, v, _)| format!("d={d}: {v:.3}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let pass = !n_fits.is_empty()
        && !e_fits.is_empty()
        && n_fits.iter().chain(&e_fits).all(|f| f.2)
        && *secs < 600.0;
    verdict(
        pass,
        format!(
            "slope in n [{}]; slope in eps [{}]; sweep {secs:.0}s",
            fmt(&n_fits),
            fmt(&e_fits)
        ),
    )
}

fn effective_sample_size() -> Result<Verdict> {
    let (out, _) = tradeoff_defaults();
    let t = &out.table;
    let ratios: Vec<f64> = t
        .rows_where("experiment", "effective_sample")
        .filter(|r| matches!(t.get(*r, "row"), Some(Cell::Text(s)) if s == "cell"))
        .filter_map(|r| t.get(r, "risk_ratio").and_then(Cell::as_f64))
        .collect();
    ensure!(
        ratios.len() == 9,
        "expected a 9-cell grid, got {}",
        ratios.len()
    );
    let worst = ratios.iter().map(|q| q.max(1.0 / q)).fold(1.0, f64::max);
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    verdict(
        worst <= 2.0,
        format!(
            "private/matched non-private risk ratios in [{lo:.2}, {:.2}]; worst {worst:.2}",
            ratios.iter().cloned().fold(0.0, f64::max)
        ),
    )
}

fn sandwich_and_fano() -> Result<Verdict> {
    let b = bounds(&BoundsConfig::default())?;
    let (sweep, _) = tradeoff_defaults();
    let t = &sweep.table;
    let mut sandwich_ok = b.failures.is_empty();
    let mut rows = 0;
    for r in t.rows_where("row", "cell") {
        let lo = t.get(r, "lower_bound").and_then(Cell::as_f64);
        let up = t.get(r, "upper_bound").and_then(Cell::as_f64);
        if let (Some(lo), Some(up)) = (lo, up) {
            sandwich_ok &= lo <= up;
            rows += 1;
        }
    }
    rows += b.table.rows_where("table", "bound").count();

    let reps = 2000;
    let mut rng = derived(SEED, 8);
    let mut checked = 0;
    let mut nontrivial = 0;
    let mut fano_ok = true;
    let mut worst_margin = f64::INFINITY;
    for d in 1..=4usize {
        let cases = [
            (MiLemma::L4, LemmaParams::new(d, 0.5, 1.0).with_radius(2.0)),
            (MiLemma::L5, LemmaParams::new(d, 0.5, 1.0).with_radius(2.0)),
            (MiLemma::L6, LemmaParams::new(d, 0.5, 1.0).with_radius(2.0)),
            (MiLemma::L7, LemmaParams::new(d, 0.5, 1.0).with_eps(0.5)),
            (MiLemma::L11, LemmaParams::new(d, 0.5, 1.0).with_eps(0.5)),
        ];
        for (lemma, p) in cases {
            let Ok(inst) = lemma_instance(lemma, &p, &mut rng) else {
                continue;
            };
            let size = inst.packing.len();
            if size > 16 {
                continue;
            }
            let i1 = inst.mutual_information()?;
            let room = (size as f64).ln() - std::f64::consts::LN_2;
            let n = if i1 > 0.0 && room > 0.0 {
                ((0.5 * room / i1).floor() as usize).max(1)
            } else {
                1
            };
            let bound = fano_bound(n as f64 * i1, size)?;
            let err = empirical_testing_error(&inst, n, reps, &mut rng)?;
            let sigma = (err * (1.0 - err) / reps as f64).sqrt();
            let margin = err - (bound - 3.0 * sigma);
            worst_margin = worst_margin.min(margin);
            fano_ok &= margin >= 0.0;
            checked += 1;
            if bound > 0.0 {
                nontrivial += 1;
            }
        }
    }
    verdict(
        sandwich_ok && fano_ok && nontrivial > 0,
        format!(
            "lower ≤ upper on {rows} rows: {sandwich_ok}; Fano on {checked} instances ({nontrivial} non-trivial), min margin {worst_margin:.3}"
        ),
    )
}

fn bias_pathology() -> Result<Verdict> {
    let out = bias_demo(&BiasDemoConfig::default(), SEED)?;
    let t = &out.table;
    let summary: Vec<String> = (0..t.rows.len())
        .filter(|r| !matches!(t.get(*r, "run"), Some(Cell::Text(s)) if s == "zero_bias"))
        .map(|r| {
            let run = match t.get(r, "run") {
                Some(Cell::Text(s)) => s.clone(),
                _ => String::new(),
            };
            let n = t.get(r, "n").and_then(Cell::as_f64).unwrap_or(0.0);
            let gap = t
                .get(r, "gap_mean")
                .and_then(Cell::as_f64)
                .unwrap_or(f64::NAN);
            format!("{run}@{n}: {gap:.4}")
        })
        .collect();
    verdict(
        out.failures.is_empty(),
        format!(
            "sup−inf = 1; {}; zero bias identical: {}",
            summary.join(", "),
            out.zero_bias_identical
        ),
    )
}

fn run_binary(args: &[&str]) -> Result<i32> {
    let status = Process::new(env!("CARGO_BIN_EXE_privopt"))
        .args(args)
        .status()
        .context("launching privopt")?;
    Ok(status.code().unwrap_or(-1))
}

fn determinism() -> Result<Verdict> {
    let dir = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-determinism");
    std::fs::create_dir_all(&dir)?;
    let configs = [
        (
            "certify",
            "certify-l2",
            r#"{"kind": "dp_l2_sampler", "d": 3, "L": 1.0, "M_or_eps": 1.0, "inputs": 4, "draws": 20000}"#,
        ),
        (
            "certify",
            "certify-mc",
            r#"{"kind": "dp_linf_sampler", "d": 3, "L": 1.0, "M_or_eps": 1.0, "inputs": 4,
                "draws": 20000, "mi_samples": 20000, "monte_carlo_only": true}"#,
        ),
        (
            "tradeoff",
            "tradeoff",
            r#"{"reps": 3, "rate_n": {"d_grid": [4], "n_grid": [128, 512]},
                "rate_eps": {"d_grid": [4], "n": 256, "eps_grid": [0.5, 1.0]},
                "effective_sample": {"d_grid": [4], "n": 512, "eps_grid": [1.0]}}"#,
        ),
        (
            "bounds",
            "bounds",
            r#"{"d_grid": [2, 8], "n_grid": [256, 4096]}"#,
        ),
        (
            "bias-demo",
            "bias-demo",
            r#"{"n_grid": [500, 2000], "reps": 3}"#,
        ),
    ];
    let mut identical = 0;
    let mut seed_sensitive = 0;
    let mut notes = Vec::new();
    for (cmd, label, cfg) in configs {
        let cfg_path = dir.join(format!("{label}.json"));
        std::fs::write(&cfg_path, cfg)?;
        let mut outputs = Vec::new();
        for (run, seed) in [(0, "7"), (1, "7"), (2, "8")] {
            let out = dir.join(format!("{label}-{run}.out"));
            let code = run_binary(&[
                cmd,
                "--config",
                cfg_path.to_str().context("utf-8 path")?,
                "--seed",
                seed,
                "--out",
                out.to_str().context("utf-8 path")?,
            ])?;
            ensure!(code == 0, "{label} exited with {code}");
            outputs.push(std::fs::read(&out)?);
        }
        if outputs[0] == outputs[1] {
            identical += 1;
        } else {
            notes.push(format!("{label} differs between identical runs"));
        }
        // the bound tables involve no randomness
        if cmd == "bounds" || outputs[0] != outputs[2] {
            seed_sensitive += 1;
        } else {
            notes.push(format!("{label} ignores --seed"));
        }
    }
    verdict(
        identical == configs.len() && seed_sensitive == configs.len(),
        format!(
            "{identical}/{} runs byte-identical under a fixed seed{}",
            configs.len(),
            if notes.is_empty() {
                String::new()
            } else {
                format!("; {}", notes.join("; "))
            }
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Result<Verdict>); 10] = [
        (1, "channel unbiasedness", channel_unbiasedness),
        (
            2,
            "linf channel information is exact",
            linf_information_exact,
        ),
        (
            3,
            "l1 channel calibration and information",
            l1_calibration_and_information,
        ),
        (
            4,
            "DP channel matches the LP optimum",
            dp_channel_optimality,
        ),
        (5, "exact information below the lemma bounds", lemma_bounds),
        (6, "convergence rates in n and eps", convergence_rates),
        (7, "effective sample size n·eps²/d", effective_sample_size),
        (
            8,
            "bound sandwich and Fano testing error",
            sandwich_and_fano,
        ),
        (9, "biased gradients reach the worst point", bias_pathology),
        (10, "CLI determinism", determinism),
    ];
    let selected: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    let mut passed = 0;
    let mut ran = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let result = check();
        let secs = start.elapsed().as_secs_f64();
        let known = KNOWN_DEVIATIONS.iter().find(|(k, _)| *k == id);
        match result {
            Ok(v) if v.pass => {
                passed += 1;
                println!("PASS [{id:>2}] {name}: {} ({secs:.1}s)", v.detail);
            }
            Ok(v) => {
                if known.is_none() {
                    unexpected += 1;
                }
                let note = known.map_or(String::new(), |(_, why)| {
                    format!(" [known deviation: {why}]")
                });
                println!("FAIL [{id:>2}] {name}: {} ({secs:.1}s){note}", v.detail);
            }
            Err(e) => {
                unexpected += 1;
                println!("FAIL [{id:>2}] {name}: error: {e:#} ({secs:.1}s)");
            }
        }
    }
    println!("acceptance: {passed}/{ran} criteria pass");
    if unexpected > 0 {
        std::process::exit(1);
    }
}
