//! The estimate / build / verify steps shared by the commands and `reproduce`.

use std::collections::BTreeMap;

use kdeverify_core::abstraction::{
    build_grid, empirical_imdp, eps_bar_from_global, model_based_mdp, npe_imdp, GridPartition, Imdp,
};
use kdeverify_core::kde::{scott_bandwidth, theoretical_bandwidth, CondDensityEstimator, KernelSpec};
use kdeverify_core::lipschitz::{
    compositional_lc, estimate_lc, estimate_lc_system, partition_size, BandwidthPolicy, BlockPairs,
    LipschitzReport,
};
use kdeverify_core::pctl::{PathFormula, Query};
use kdeverify_core::systems::{generate_samples, BuiltinSystem, TransitionSampler, TransitionSamples};
use kdeverify_core::verify::{check_query, synthesize_strategy, Mode, Strategy, UnboundedOptions, VerificationResult, Verdict};
use kdeverify_core::Rect;
use serde::Serialize;

use crate::config::{bandwidth_policy, divisor_delta, rect_from, union_measure, AbstractionBlock, Method, RunConfig};
use crate::error::CliError;
use crate::samples::read_samples;

/// Default NPE query lattice per axis.
pub const DEFAULT_X_GRID: usize = 3;

fn field(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        msg: msg.into(),
    }
}

/// Sample files keyed by action, in file order of the config map.
pub fn load_sample_files(cfg: &RunConfig) -> Result<BTreeMap<String, TransitionSamples>, CliError> {
    let mut out = BTreeMap::new();
    if let Some(files) = &cfg.system.samples {
        for (action, path) in files {
            let data = read_samples(path)?;
            if data.action() != action {
                return Err(field(
                    &format!("system.samples.{action}"),
                    format!("file declares action `{}`", data.action()),
                ));
            }
            out.insert(action.clone(), data);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct LcOutcome {
    pub action: String,
    pub compositional: bool,
    pub reports: Vec<LipschitzReport>,
    /// Largest point estimate across reports.
    pub l_hat: f64,
    /// Largest interval upper end across reports.
    pub l_upper: f64,
    pub suggested_delta: Option<f64>,
}

pub fn run_lc(cfg: &RunConfig, seed: u64) -> Result<LcOutcome, CliError> {
    let lc = cfg.lc.as_ref().ok_or_else(|| field("lc", "missing"))?;
    let sys = cfg.simulator()?;
    let mut config = cfg.lc_config(lc)?;
    let space = cfg.search_space(lc, sys.as_ref())?;
    let (action, reports) = if let Some(sys) = &sys {
        let action = lc.action.clone().unwrap_or_else(|| sys.spec().actions()[0].clone());
        if lc.n.is_none() {
            return Err(field("lc.n", "required for simulated systems"));
        }
        let reports = if lc.compositional {
            compositional_lc(sys, &action, &space, lc.masks.as_deref(), &config, seed)?
        } else {
            vec![estimate_lc_system(sys, &action, &space, &config, seed)?]
        };
        (action, reports)
    } else {
        let files = load_sample_files(cfg)?;
        let action = match &lc.action {
            Some(a) => a.clone(),
            None => files.keys().next().cloned().ok_or_else(|| field("system.samples", "empty"))?,
        };
        let data = files
            .get(&action)
            .ok_or_else(|| field("lc.action", format!("no sample file for `{action}`")))?;
        if lc.n.is_none() {
            config.n = data.len() / config.m;
        }
        config.validate().map_err(|e| field("lc", e.to_string()))?;
        let reports = if lc.compositional {
            let d = data.y_dim();
            (0..d)
                .map(|i| {
                    let mask = match &lc.masks {
                        Some(ms) => ms.get(i).cloned().ok_or_else(|| field("lc.masks", "one mask per coordinate"))?,
                        None => (0..data.x_dim()).collect(),
                    };
                    let sub = kdeverify_core::lipschitz::SearchSpace {
                        x: space.x.project(&mask)?,
                        y: space.y.as_ref().map(|y| y.project(&[i])).transpose()?,
                        pin_x: mask.iter().map(|&c| space.pin_x.get(c).copied().flatten()).collect(),
                        pin_y: vec![space.pin_y.get(i).copied().flatten()],
                    };
                    Ok(estimate_lc(&BlockPairs::new(data.factor(&mask, i)?), &sub, &config, seed)?)
                })
                .collect::<Result<Vec<_>, CliError>>()?
        } else {
            vec![estimate_lc(&BlockPairs::new(data.clone()), &space, &config, seed)?]
        };
        (action, reports)
    };
    let l_hat = reports.iter().map(|r| r.overall).fold(0.0, f64::max);
    let l_upper = reports.iter().map(|r| r.interval.1).fold(0.0, f64::max);
    let suggested_delta = match cfg.abstraction.as_ref().and_then(|a| a.closeness.as_ref()) {
        Some(c) => {
            let leb = match c.lebesgue {
                Some(v) => v,
                None => union_measure(&all_regions(cfg)?),
            };
            partition_size(c.epsilon, c.horizon, l_upper, leb).ok()
        }
        None => None,
    };
    Ok(LcOutcome {
        action,
        compositional: lc.compositional,
        reports,
        l_hat,
        l_upper,
        suggested_delta,
    })
}

fn all_regions(cfg: &RunConfig) -> Result<Vec<Rect>, CliError> {
    Ok(cfg.label_regions()?.into_iter().flat_map(|(_, r)| r).collect())
}

fn state_domain(cfg: &RunConfig, sys: Option<&BuiltinSystem>) -> Result<Rect, CliError> {
    match (&cfg.domain.x, sys) {
        (Some(b), _) => rect_from("domain.x", b),
        (None, Some(s)) => Ok(s.spec().domain().clone()),
        (None, None) => Err(field("domain.x", "required")),
    }
}

/// Cell widths from `delta`, or from the closeness budget (which may run the LC estimator).
pub fn resolve_delta(cfg: &RunConfig, ab: &AbstractionBlock, domain: &Rect, seed: u64) -> Result<Vec<f64>, CliError> {
    if let Some(d) = ab.delta {
        if !(d > 0.0 && d.is_finite()) {
            return Err(field("abstraction.delta", "must be positive"));
        }
        return Ok(vec![d; domain.dim()]);
    }
    let c = ab.closeness.as_ref().expect("validated");
    let l = match c.lipschitz {
        Some(l) => l,
        None if cfg.lc.is_some() => run_lc(cfg, seed)?.l_upper,
        None => {
            return Err(field(
                "abstraction.closeness.lipschitz",
                "give a Lipschitz bound or an `lc` block to estimate one",
            ))
        }
    };
    let leb = match c.lebesgue {
        Some(v) => v,
        None => union_measure(&all_regions(cfg)?),
    };
    let delta = partition_size(c.epsilon, c.horizon, l, leb)
        .map_err(|e| field("abstraction.closeness", e.to_string()))?;
    Ok(divisor_delta(domain, delta))
}

pub fn partition(cfg: &RunConfig, seed: u64) -> Result<GridPartition, CliError> {
    let ab = cfg.abstraction.as_ref().ok_or_else(|| field("abstraction", "missing"))?;
    let sys = cfg.simulator()?;
    let domain = state_domain(cfg, sys.as_ref())?;
    let delta = resolve_delta(cfg, ab, &domain, seed)?;
    let mut part = build_grid(&domain, &delta, &cfg.label_regions()?)?;
    if let Some(t) = &ab.representative {
        part = part.with_representative(t).map_err(|e| field("abstraction.representative", e.to_string()))?;
    }
    Ok(part)
}

#[derive(Debug, Clone, Serialize)]
pub struct BuildManifest {
    pub method: Method,
    pub seed: u64,
    pub delta: Vec<f64>,
    pub n_cells: usize,
    pub n_states: usize,
    pub actions: Vec<String>,
    pub eps_bar: Option<f64>,
    pub beta_bar: Option<f64>,
    pub samples_per_row: Option<u64>,
    pub npe_samples: Option<Vec<usize>>,
    pub h_x: Option<Vec<Vec<f64>>>,
    pub h_y: Option<Vec<Vec<f64>>>,
    pub x_grid: Option<usize>,
    pub mean_interval_width: f64,
    pub warnings: Vec<String>,
    pub config: RunConfig,
}

fn horizon_of(q: &Query) -> Option<usize> {
    match q.path {
        PathFormula::BoundedUntil { k, .. } => Some(k),
        PathFormula::Next(_) => Some(1),
        PathFormula::Until { .. } => None,
    }
}

/// Kernel estimator over `data` with bandwidths from `policy`.
pub fn estimator_for(data: TransitionSamples, policy: &BandwidthPolicy) -> Result<CondDensityEstimator, CliError> {
    let (dx, dy) = (data.x_dim(), data.y_dim());
    let (h_x, h_y) = match policy {
        BandwidthPolicy::Theoretical => theoretical_bandwidth(data.len(), dx, dy)?,
        BandwidthPolicy::Scott => (scott_bandwidth(data.xs(), dx)?, scott_bandwidth(data.ys(), dy)?),
        BandwidthPolicy::Explicit { h_x, h_y } => (h_x.clone(), h_y.clone()),
    };
    Ok(CondDensityEstimator::new(data, KernelSpec::gaussian(h_x, h_y)?)?)
}

pub fn build_imdp(cfg: &RunConfig, seed: u64) -> Result<(Imdp, BuildManifest), CliError> {
    let ab = cfg.abstraction.as_ref().ok_or_else(|| field("abstraction", "missing"))?;
    let part = partition(cfg, seed)?;
    let sys = cfg.simulator()?;
    let mut manifest = BuildManifest {
        method: ab.method,
        seed,
        delta: part.delta().to_vec(),
        n_cells: part.n_cells(),
        n_states: part.n_states(),
        actions: Vec::new(),
        eps_bar: None,
        beta_bar: None,
        samples_per_row: None,
        npe_samples: None,
        h_x: None,
        h_y: None,
        x_grid: None,
        mean_interval_width: 0.0,
        warnings: part.warnings().to_vec(),
        config: cfg.clone(),
    };
    let imdp = match ab.method {
        Method::ModelBased => model_based_mdp(sys.as_ref().expect("validated"), &part)?,
        Method::Empirical => {
            let sys = sys.as_ref().expect("validated");
            let beta_bar = ab
                .beta_bar
                .ok_or_else(|| field("abstraction.beta_bar", "required for the empirical method"))?;
            let eps_bar = match (ab.eps_bar, ab.eps_g) {
                (Some(e), None) => e,
                (None, Some(g)) => {
                    let k = cfg.query().ok().as_ref().and_then(horizon_of).ok_or_else(|| {
                        field("abstraction.eps_g", "needs a bounded-horizon formula in `spec`")
                    })?;
                    eps_bar_from_global(g, k, part.n_cells())
                        .map_err(|e| field("abstraction.eps_g", e.to_string()))?
                }
                _ => return Err(field("abstraction", "give exactly one of `eps_bar` or `eps_g`")),
            };
            manifest.eps_bar = Some(eps_bar);
            manifest.beta_bar = Some(beta_bar);
            let m = empirical_imdp(sys, &part, &[], eps_bar, beta_bar, cfg.budget(), seed)?;
            if let kdeverify_core::abstraction::Provenance::Empirical { samples_per_row, .. } = m.provenance() {
                manifest.samples_per_row = Some(*samples_per_row);
            }
            m
        }
        Method::Npe => {
            let policy = match &ab.bandwidth {
                None => BandwidthPolicy::Scott,
                b => bandwidth_policy("abstraction.bandwidth", b.as_ref())?,
            };
            let x_grid = ab.x_grid.unwrap_or(DEFAULT_X_GRID);
            let (actions, data): (Vec<String>, Vec<TransitionSamples>) = match &sys {
                Some(sys) => {
                    let n = ab.n.ok_or_else(|| field("abstraction.n", "required for the npe method"))?;
                    let actions = sys.spec().actions().to_vec();
                    let data = actions
                        .iter()
                        .map(|a| generate_samples(sys, a, n, seed))
                        .collect::<Result<Vec<_>, _>>()?;
                    (actions, data)
                }
                None => load_sample_files(cfg)?.into_iter().unzip(),
            };
            let estimators = data
                .into_iter()
                .map(|d| estimator_for(d, &policy))
                .collect::<Result<Vec<_>, _>>()?;
            manifest.npe_samples = Some(estimators.iter().map(|e| e.samples().len()).collect());
            manifest.h_x = Some(estimators.iter().map(|e| e.kernel().h_x().to_vec()).collect());
            manifest.h_y = Some(estimators.iter().map(|e| e.kernel().h_y().to_vec()).collect());
            manifest.x_grid = Some(x_grid);
            npe_imdp(&estimators, &actions, &part, x_grid)?
        }
    };
    manifest.actions = imdp.actions().to_vec();
    manifest.mean_interval_width = imdp.mean_interval_width();
    Ok((imdp, manifest))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub formula: String,
    pub result: VerificationResult,
    pub verdicts: Option<Vec<Verdict>>,
    pub strategy: Option<Strategy>,
}

impl VerifyOutcome {
    pub fn verdict_counts(&self) -> Option<(usize, usize, usize)> {
        self.verdicts.as_ref().map(|v| {
            let c = |x: Verdict| v.iter().filter(|&&y| y == x).count();
            (c(Verdict::Yes), c(Verdict::No), c(Verdict::Unknown))
        })
    }
}

pub fn verify(imdp: &Imdp, query: &Query, formula: &str, mode: Mode, opts: UnboundedOptions) -> Result<VerifyOutcome, CliError> {
    query.path.check_declared(imdp.ap()).map_err(|e| field("spec.formula", e.to_string()))?;
    let (result, verdicts) = check_query(imdp, query, mode, opts)?;
    let strategy = if imdp.n_actions() > 1 {
        Some(synthesize_strategy(&result)?)
    } else {
        None
    };
    Ok(VerifyOutcome {
        formula: formula.to_string(),
        result,
        verdicts,
        strategy,
    })
}

pub fn verify_with_config(cfg: &RunConfig, imdp: &Imdp, mode: Option<Mode>) -> Result<VerifyOutcome, CliError> {
    let spec = cfg.spec.as_ref().ok_or_else(|| field("spec", "missing"))?;
    let query = cfg.query()?;
    let mut opts = UnboundedOptions::default();
    if let Some(t) = spec.tol {
        opts.tol = t;
    }
    if let Some(m) = spec.max_iters {
        opts.max_iters = m;
    }
    let mode = mode.or(spec.mode).unwrap_or_default();
    verify(imdp, &query, &spec.formula, mode, opts)
}
