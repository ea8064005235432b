//! Built-in experiment cases with pass/fail checks.

use std::fmt::Write as _;
use std::path::Path;

use kdeverify_core::abstraction::Imdp;
use kdeverify_core::lipschitz::{estimate_lc_system, LcConfig, LipschitzReport, SearchSpace, Smoothness};
use kdeverify_core::systems::BuiltinSystem;
use serde::Serialize;

use crate::config::{
    builtin_system, AbstractionBlock, BandwidthSetting, LabelBlock, Method, RunConfig, SpecBlock, SystemBlock,
};
use crate::error::CliError;
use crate::output::{ensure_dir, heatmap, strategy_map, write_json, write_text};
use crate::pipeline::{build_imdp, verify_with_config, BuildManifest, VerifyOutcome};

pub const CASES: &[&str] = &["example5", "example6", "example7_case1", "case_study_1", "case_study_2"];

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub check: String,
    pub value: String,
    pub target: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub case: String,
    pub seed: u64,
    pub rows: Vec<Row>,
}

impl CaseReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn table(&self) -> String {
        let mut s = format!("# {}\n\n| check | value | target | result |\n|---|---|---|---|\n", self.case);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "| {} | {} | {} | {} |",
                r.check,
                r.value,
                r.target,
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        s
    }

    fn push(&mut self, check: impl Into<String>, value: impl Into<String>, target: impl Into<String>, pass: bool) {
        self.rows.push(Row {
            check: check.into(),
            value: value.into(),
            target: target.into(),
            pass,
        });
    }
}

/// Settings of one LC validation case.
pub struct LcCase {
    pub system: BuiltinSystem,
    pub config: LcConfig,
    /// Lipschitz constant of the true conditional density.
    pub true_l: f64,
    /// Acceptable range for the point estimate, when one is checked.
    pub l_hat_range: Option<(f64, f64)>,
    pub default_seeds: usize,
}

pub fn lc_case(case: &str) -> Option<LcCase> {
    let uni = Smoothness::Univariate {
        c_f: 1.0,
        c_b1: 0.5,
        c_b2: 0.5,
    };
    Some(match case {
        "example5" => LcCase {
            system: builtin_system(case)?,
            config: LcConfig::new(60_000, 20, uni),
            true_l: 0.1210,
            l_hat_range: Some((0.06, 0.17)),
            default_seeds: 20,
        },
        "example6" => LcCase {
            system: builtin_system(case)?,
            config: LcConfig::new(60_000, 20, uni),
            true_l: 0.0968,
            l_hat_range: Some((0.05, 0.15)),
            default_seeds: 20,
        },
        "example7_case1" => LcCase {
            system: builtin_system(case)?,
            config: LcConfig::new(
                30_000,
                20,
                Smoothness::Multivariate {
                    c_f: 0.5,
                    deriv_bound: 0.5,
                },
            ),
            true_l: 0.0588,
            l_hat_range: None,
            default_seeds: 5,
        },
        _ => return None,
    })
}

pub fn run_lc_case(c: &LcCase, seed: u64) -> Result<LipschitzReport, CliError> {
    let space = SearchSpace::of_system(&c.system);
    Ok(estimate_lc_system(&c.system, "a1", &space, &c.config, seed)?)
}

fn reproduce_lc(case: &str, c: &LcCase, seeds: usize, seed: u64, out: &Path) -> Result<CaseReport, CliError> {
    let mut rep = CaseReport {
        case: case.into(),
        seed,
        rows: Vec::new(),
    };
    let mut reports = Vec::with_capacity(seeds);
    let mut passed = 0;
    for s in 0..seeds as u64 {
        let r = run_lc_case(c, seed + s)?;
        let contains = r.interval.0 <= c.true_l && c.true_l <= r.interval.1;
        let in_range = c.l_hat_range.is_none_or(|(a, b)| (a..=b).contains(&r.overall));
        passed += usize::from(contains && in_range);
        rep.push(
            format!("seed {}: interval contains L", seed + s),
            format!("L_hat = {:.4}, [{:.4}, {:.4}]", r.overall, r.interval.0, r.interval.1),
            match c.l_hat_range {
                Some((a, b)) => format!("contains {}, L_hat in [{a}, {b}]", c.true_l),
                None => format!("contains {}", c.true_l),
            },
            contains && in_range,
        );
        reports.push(r);
    }
    let need = seeds - seeds / 20;
    rep.push(
        "seeds passing",
        format!("{passed}/{seeds}"),
        format!(">= {need}"),
        passed >= need,
    );
    let mean = reports.iter().map(|r| r.overall).sum::<f64>() / seeds as f64;
    let radius = reports
        .iter()
        .map(|r| r.eps3.iter().copied().fold(0.0, f64::max).sqrt())
        .fold(0.0, f64::max);
    rep.push(
        "mean L_hat within the bias envelope",
        format!("{mean:.4}"),
        format!("|mean - {}| <= {radius:.4}", c.true_l),
        (mean - c.true_l).abs() <= radius,
    );
    write_json(&out.join("lc_reports.json"), &reports)?;
    Ok(rep)
}

pub const OBSTACLE: [[f64; 2]; 2] = [[1.2, 2.0], [1.6, 2.0]];
pub const TARGET: [[f64; 2]; 2] = [[0.0, 0.8], [0.0, 0.4]];
pub const FORMULA: &str = "!O U<=3 D";
pub const NPE_SAMPLES: usize = 2000;

/// Config for one case-study build. The empirical method uses the global
/// accuracy on the coarse grid and a per-entry accuracy of 0.01 on the fine one,
/// where the global form would need about 3.6e8 samples per row.
pub fn case_study_config(system: &str, delta: f64, method: Method, seed: u64) -> RunConfig {
    let (eps_g, eps_bar) = if delta >= 0.4 - 1e-12 {
        (Some(0.2), None)
    } else {
        (None, Some(0.01))
    };
    RunConfig {
        seed,
        system: SystemBlock {
            builtin: Some(system.into()),
            ..Default::default()
        },
        abstraction: Some(AbstractionBlock {
            method,
            delta: Some(delta),
            closeness: None,
            eps_g: if method == Method::Empirical { eps_g } else { None },
            eps_bar: if method == Method::Empirical { eps_bar } else { None },
            beta_bar: (method == Method::Empirical).then_some(0.1),
            n: (method == Method::Npe).then_some(NPE_SAMPLES),
            bandwidth: (method == Method::Npe).then(|| BandwidthSetting::Named("scott".into())),
            x_grid: None,
            representative: None,
            budget_per_row: None,
            budget_total: None,
        }),
        spec: Some(SpecBlock {
            formula: FORMULA.into(),
            labels: vec![
                LabelBlock {
                    name: "O".into(),
                    regions: vec![OBSTACLE.to_vec()],
                },
                LabelBlock {
                    name: "D".into(),
                    regions: vec![TARGET.to_vec()],
                },
            ],
            mode: None,
            tol: None,
            max_iters: None,
        }),
        ..Default::default()
    }
}

pub struct CaseStudyRun {
    pub delta: f64,
    pub method: Method,
    pub imdp: Imdp,
    pub manifest: BuildManifest,
    pub outcome: VerifyOutcome,
}

impl CaseStudyRun {
    /// Mean `p_up - p_lo` over grid cells.
    pub fn mean_width(&self) -> f64 {
        let r = &self.outcome.result;
        let cells = self.imdp.n_states() - 1;
        (0..cells).map(|i| r.p_up[i] - r.p_lo[i]).sum::<f64>() / cells as f64
    }

    /// Largest `p_up` over states labelled `O`.
    pub fn max_obstacle_up(&self) -> f64 {
        self.imdp
            .labels()
            .iter()
            .zip(&self.outcome.result.p_up)
            .filter(|(l, _)| l.iter().any(|x| x == "O"))
            .map(|(_, &p)| p)
            .fold(0.0, f64::max)
    }

    pub fn obstacle_states(&self) -> usize {
        self.imdp.labels().iter().filter(|l| l.iter().any(|x| x == "O")).count()
    }
}

pub fn case_study_run(system: &str, delta: f64, method: Method, seed: u64) -> Result<CaseStudyRun, CliError> {
    let cfg = case_study_config(system, delta, method, seed);
    let (imdp, manifest) = build_imdp(&cfg, seed)?;
    let outcome = verify_with_config(&cfg, &imdp, None)?;
    Ok(CaseStudyRun {
        delta,
        method,
        imdp,
        manifest,
        outcome,
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Empirical => "empirical",
        Method::Npe => "npe",
        Method::ModelBased => "model_based",
    }
}

fn reproduce_case_study(case: &str, seed: u64, out: &Path) -> Result<CaseReport, CliError> {
    let mut rep = CaseReport {
        case: case.into(),
        seed,
        rows: Vec::new(),
    };
    let methods = [Method::ModelBased, Method::Empirical, Method::Npe];
    let mut runs = Vec::new();
    for delta in [0.4, 0.1] {
        for m in methods {
            let run = case_study_run(case, delta, m, seed)?;
            let dir = out.join(format!("{}_delta{delta}", method_name(m)));
            ensure_dir(&dir)?;
            write_json(&dir.join("manifest.json"), &run.manifest)?;
            write_json(&dir.join("result.json"), &run.outcome)?;
            if let Some(h) = heatmap(&run.imdp, &run.outcome) {
                write_json(&dir.join("heatmap.json"), &h)?;
            }
            if let Some(s) = strategy_map(&run.imdp, &run.outcome) {
                write_json(&dir.join("strategy_map.json"), &s)?;
            }
            runs.push(run);
        }
    }
    let find = |d: f64, m: Method| {
        runs.iter()
            .find(|r| (r.delta - d).abs() < 1e-12 && r.method == m)
            .expect("run exists")
    };
    for r in &runs {
        rep.push(
            format!("{} delta={}: mean bound width", method_name(r.method), r.delta),
            format!("{:.4}", r.mean_width()),
            "reported",
            true,
        );
        let ok = r
            .outcome
            .result
            .p_lo
            .iter()
            .zip(&r.outcome.result.p_up)
            .all(|(l, u)| 0.0 <= *l && l <= u && *u <= 1.0);
        rep.push(
            format!("{} delta={}: 0 <= p_lo <= p_up <= 1", method_name(r.method), r.delta),
            String::new(),
            "all states",
            ok,
        );
    }
    for m in methods {
        let r = find(0.1, m);
        rep.push(
            format!("{} delta=0.1: max p_up on O", method_name(m)),
            format!("{:.4} over {} states", r.max_obstacle_up(), r.obstacle_states()),
            "< 0.05",
            r.obstacle_states() > 0 && r.max_obstacle_up() < 0.05,
        );
    }
    let (coarse, fine) = (find(0.4, Method::Npe), find(0.1, Method::Npe));
    rep.push(
        "npe: mean bound width shrinks with delta",
        format!("{:.4} -> {:.4}", coarse.mean_width(), fine.mean_width()),
        "strictly smaller at 0.1",
        fine.mean_width() < coarse.mean_width(),
    );
    let (mb, npe) = (find(0.1, Method::ModelBased), find(0.1, Method::Npe));
    let cells = mb.imdp.n_states() - 1;
    let diff = (0..cells)
        .map(|i| (npe.outcome.result.p_up[i] - mb.outcome.result.p_up[i]).abs())
        .sum::<f64>()
        / cells as f64;
    rep.push(
        "delta=0.1: mean |npe p_up - model p_up|",
        format!("{diff:.4}"),
        "<= 0.15",
        diff <= 0.15,
    );
    if case == "case_study_2" {
        for r in &runs {
            let ok = strategy_map(&r.imdp, &r.outcome).is_some_and(|s| {
                s.first_step_max.len() == r.imdp.n_states() - 1
                    && s.first_step_max.iter().chain(&s.first_step_min).all(|a| s.actions.contains(a))
            });
            rep.push(
                format!("{} delta={}: strategy map", method_name(r.method), r.delta),
                String::new(),
                "one action per cell",
                ok,
            );
        }
    }
    Ok(rep)
}

/// Runs `case`, writing its artefacts and `table.md` / `results.json` under `out`.
pub fn reproduce(case: &str, seeds: Option<usize>, seed: u64, out: &Path) -> Result<CaseReport, CliError> {
    ensure_dir(out)?;
    let rep = if let Some(c) = lc_case(case) {
        let seeds = seeds.unwrap_or(c.default_seeds).max(1);
        reproduce_lc(case, &c, seeds, seed, out)?
    } else if case == "case_study_1" || case == "case_study_2" {
        reproduce_case_study(case, seed, out)?
    } else {
        return Err(CliError::Config {
            path: "case".into(),
            msg: format!("unknown case `{case}`; known: {}", CASES.join(", ")),
        });
    };
    write_json(&out.join("results.json"), &rep)?;
    write_text(&out.join("table.md"), &rep.table())?;
    Ok(rep)
}
