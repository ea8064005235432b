//! Result files: JSON reports, grid-aligned heatmaps, strategy maps, summaries.

use std::fmt::Write as _;
use std::path::Path;

use kdeverify_core::abstraction::{GridMeta, Imdp};
use kdeverify_core::verify::Verdict;
use serde::Serialize;

use crate::error::CliError;
use crate::pipeline::{BuildManifest, LcOutcome, VerifyOutcome};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Satisfaction bounds per grid cell. Cell `c` has multi-index `(c mod n₀, …)`,
/// so axis 0 varies fastest; for 2-D grids `values[c]` sits at column
/// `c mod n₀`, row `c / n₀`.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct Heatmap {
    pub grid: GridMeta,
    pub order: String,
    pub p_lo: Vec<f64>,
    pub p_up: Vec<f64>,
    pub verdicts: Option<Vec<Verdict>>,
    pub sink: [f64; 2],
}

pub const AXIS0_FASTEST: &str = "axis0_fastest";

pub fn heatmap(imdp: &Imdp, v: &VerifyOutcome) -> Option<Heatmap> {
    let grid = imdp.grid()?.clone();
    let cells: usize = grid.counts.iter().product();
    let r = &v.result;
    Some(Heatmap {
        grid,
        order: AXIS0_FASTEST.into(),
        p_lo: r.p_lo[..cells].to_vec(),
        p_up: r.p_up[..cells].to_vec(),
        verdicts: v.verdicts.as_ref().map(|x| x[..cells].to_vec()),
        sink: [r.p_lo[cells], r.p_up[cells]],
    })
}

/// Action chosen at the first step by each bound's recursion, per grid cell.
#[derive(Debug, Clone, Serialize, serde::Deserialize, PartialEq)]
pub struct StrategyMap {
    pub grid: GridMeta,
    pub order: String,
    pub actions: Vec<String>,
    pub first_step_max: Vec<String>,
    pub first_step_min: Vec<String>,
    /// Full time-indexed tables of action indices, `[τ][state]`.
    pub table_max: Vec<Vec<usize>>,
    pub table_min: Vec<Vec<usize>>,
}

pub fn strategy_map(imdp: &Imdp, v: &VerifyOutcome) -> Option<StrategyMap> {
    let grid = imdp.grid()?.clone();
    let s = v.strategy.as_ref()?;
    let cells: usize = grid.counts.iter().product();
    let names = |row: &[usize]| row[..cells].iter().map(|&a| imdp.actions()[a].clone()).collect();
    Some(StrategyMap {
        grid,
        order: AXIS0_FASTEST.into(),
        actions: imdp.actions().to_vec(),
        first_step_max: names(s.step0_max()),
        first_step_min: names(s.step0_min()),
        table_max: s.max.clone(),
        table_min: s.min.clone(),
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.6}"))
}

pub fn lc_summary(o: &LcOutcome) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "action: {}", o.action);
    for (i, r) in o.reports.iter().enumerate() {
        if o.compositional {
            let _ = writeln!(s, "factor {i}:");
        }
        let _ = writeln!(s, "  L_hat = {:.6} (dimension {})", r.overall, r.argmax_dimension);
        let _ = writeln!(s, "  interval = [{:.6}, {:.6}]", r.interval.0, r.interval.1);
        let _ = writeln!(
            s,
            "  n = {}, m = {}, grid = {}, h_x = {:?}, h_y = {:?}",
            r.n, r.m, r.grid_resolution, r.h_x, r.h_y
        );
    }
    let _ = writeln!(s, "L_hat (max) = {:.6}", o.l_hat);
    let _ = writeln!(s, "L upper bound = {:.6}", o.l_upper);
    let _ = writeln!(s, "suggested delta = {}", fmt_opt(o.suggested_delta));
    s
}

pub fn build_summary(m: &BuildManifest) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method: {:?}", m.method);
    let _ = writeln!(s, "delta: {:?}", m.delta);
    let _ = writeln!(s, "cells: {} (+ sink = {} states)", m.n_cells, m.n_states);
    let _ = writeln!(s, "actions: {}", m.actions.join(", "));
    if let (Some(e), Some(b), Some(n)) = (m.eps_bar, m.beta_bar, m.samples_per_row) {
        let _ = writeln!(s, "eps_bar = {e:e}, beta_bar = {b}, N per row = {n}");
    }
    if let (Some(n), Some(g)) = (&m.npe_samples, m.x_grid) {
        let _ = writeln!(s, "npe samples = {n:?}, x_grid = {g}, h_x = {:?}, h_y = {:?}", m.h_x, m.h_y);
    }
    let _ = writeln!(s, "mean interval width = {:.6}", m.mean_interval_width);
    for w in &m.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

pub fn verify_summary(v: &VerifyOutcome) -> String {
    let r = &v.result;
    let n = r.p_lo.len();
    let mean = |x: &[f64]| x.iter().sum::<f64>() / n as f64;
    let width = r.p_up.iter().zip(&r.p_lo).map(|(u, l)| u - l).sum::<f64>() / n as f64;
    let mut s = String::new();
    let _ = writeln!(s, "formula: {}", v.formula);
    let _ = writeln!(s, "mode: {:?}", r.mode);
    let _ = writeln!(s, "states: {n}, horizon used: {}, converged: {}", r.horizon_used, r.converged);
    let _ = writeln!(s, "mean p_lo = {:.6}, mean p_up = {:.6}, mean width = {:.6}", mean(&r.p_lo), mean(&r.p_up), width);
    if let Some((y, no, u)) = v.verdict_counts() {
        let _ = writeln!(s, "verdicts: yes = {y}, no = {no}, unknown = {u}");
    }
    s
}
