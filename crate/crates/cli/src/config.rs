//! Run configuration (TOML or JSON) and its validation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use kdeverify_core::abstraction::{LabelRegion, SampleBudget};
use kdeverify_core::linalg::Matrix;
use kdeverify_core::lipschitz::{BandwidthPolicy, Eps3Variant, LcConfig, SearchSpace, Smoothness};
use kdeverify_core::pctl::{parse_query, Query};
use kdeverify_core::systems::{presets, BuiltinSystem, SystemKind, TransitionSampler};
use kdeverify_core::verify::Mode;
use kdeverify_core::Rect;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub type Bounds = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub system: SystemBlock,
    #[serde(default)]
    pub domain: DomainBlock,
    pub lc: Option<LcBlock>,
    pub abstraction: Option<AbstractionBlock>,
    pub spec: Option<SpecBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    /// One of the built-in system names.
    pub builtin: Option<String>,
    /// Linear Gaussian system `y = A_a x + w`, one matrix per action.
    pub linear: Option<LinearBlock>,
    /// Sample files per action.
    pub samples: Option<BTreeMap<String, PathBuf>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearBlock {
    pub actions: Vec<String>,
    pub a: Vec<Vec<Vec<f64>>>,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DomainBlock {
    /// `D_X`; defaults to the system's domain.
    pub x: Option<Bounds>,
    /// `D_Y`; defaults to the system's successor domain (built-ins) or data.
    pub y: Option<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthSetting {
    Named(String),
    Explicit { h_x: Vec<f64>, h_y: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LcBlock {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub grid_resolution: Option<usize>,
    pub bandwidth: Option<BandwidthSetting>,
    pub c_f: Option<f64>,
    pub c_b1: Option<f64>,
    pub c_b2: Option<f64>,
    pub deriv_bound: Option<f64>,
    /// Bias factor `A_i` supplied directly.
    pub a: Option<f64>,
    pub eps3_variant: Option<Eps3Variant>,
    #[serde(default)]
    pub refine: bool,
    /// Action whose samples are used; defaults to the first.
    pub action: Option<String>,
    /// `[coordinate, value]` pairs fixing search-grid axes.
    #[serde(default)]
    pub pin_x: Vec<(usize, f64)>,
    #[serde(default)]
    pub pin_y: Vec<(usize, f64)>,
    /// Estimate each successor coordinate separately.
    #[serde(default)]
    pub compositional: bool,
    pub masks: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Empirical,
    Npe,
    ModelBased,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Closeness {
    pub epsilon: f64,
    pub horizon: f64,
    /// Lebesgue measure of the specification set; defaults to the union of label regions.
    pub lebesgue: Option<f64>,
    /// Lipschitz upper bound; defaults to the upper end of an `lc` run.
    pub lipschitz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbstractionBlock {
    pub method: Method,
    pub delta: Option<f64>,
    pub closeness: Option<Closeness>,
    pub eps_g: Option<f64>,
    pub eps_bar: Option<f64>,
    pub beta_bar: Option<f64>,
    /// NPE samples per action.
    pub n: Option<usize>,
    pub bandwidth: Option<BandwidthSetting>,
    pub x_grid: Option<usize>,
    pub representative: Option<Vec<f64>>,
    pub budget_per_row: Option<u64>,
    pub budget_total: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelBlock {
    pub name: String,
    pub regions: Vec<Bounds>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecBlock {
    pub formula: String,
    #[serde(default)]
    pub labels: Vec<LabelBlock>,
    pub mode: Option<Mode>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn field(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.to_string(),
        msg: msg.into(),
    }
}

pub fn rect_from(path: &str, b: &Bounds) -> Result<Rect, CliError> {
    Rect::from_bounds(&b.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>())
        .map_err(|e| field(path, e.to_string()))
}

fn positive(path: &str, v: Option<f64>, name: &str) -> Result<f64, CliError> {
    match v {
        None => Err(field(path, format!("missing smoothness constant {name}"))),
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(field(path, format!("{name} must be positive, got {v}"))),
    }
}

pub fn builtin_system(name: &str) -> Option<BuiltinSystem> {
    Some(match name {
        "example5" => presets::example5(),
        "example6" => presets::example6(),
        "example7_case1" => presets::example7_case1(),
        "example7_case2" => presets::example7_case2(),
        "case_study_1" => presets::case_study_1(),
        "case_study_2" => presets::case_study_2(),
        "car7d" => presets::car7d(),
        _ => return None,
    })
}

pub const BUILTIN_NAMES: &[&str] = &[
    "example5",
    "example6",
    "example7_case1",
    "example7_case2",
    "case_study_1",
    "case_study_2",
    "car7d",
];

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut cfg = Self::parse(&text, path.extension().and_then(|e| e.to_str()))?;
        // Relative sample paths resolve against the config file.
        if let Some(base) = path.parent() {
            if let Some(files) = cfg.system.samples.as_mut() {
                for p in files.values_mut() {
                    if p.is_relative() {
                        *p = base.join(&p);
                    }
                }
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str, ext: Option<&str>) -> Result<Self, CliError> {
        let cfg: RunConfig = if ext == Some("json") {
            serde_json::from_str(text).map_err(|e| field("<root>", e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| field("<root>", e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let s = &self.system;
        let given = [s.builtin.is_some(), s.linear.is_some(), s.samples.is_some()]
            .iter()
            .filter(|b| **b)
            .count();
        if given != 1 {
            return Err(field("system", "give exactly one of `builtin`, `linear`, `samples`"));
        }
        if let Some(name) = &s.builtin {
            if builtin_system(name).is_none() {
                return Err(field(
                    "system.builtin",
                    format!("unknown system `{name}`; known: {}", BUILTIN_NAMES.join(", ")),
                ));
            }
        }
        if s.samples.is_some() && self.domain.x.is_none() {
            return Err(field("domain.x", "required when the system is given by sample files"));
        }
        if let Some(x) = &self.domain.x {
            rect_from("domain.x", x)?;
        }
        if let Some(y) = &self.domain.y {
            rect_from("domain.y", y)?;
        }
        if let Some(lc) = &self.lc {
            self.lc_config(lc)?;
        }
        if let Some(ab) = &self.abstraction {
            match (ab.delta, &ab.closeness) {
                (Some(_), None) | (None, Some(_)) => {}
                _ => {
                    return Err(field(
                        "abstraction",
                        "give exactly one of `delta` or `closeness`",
                    ))
                }
            }
            if ab.method != Method::Npe && s.samples.is_some() {
                return Err(field(
                    "abstraction.method",
                    "empirical and model_based need a simulator, not sample files",
                ));
            }
        }
        if let Some(spec) = &self.spec {
            let q = parse_query(&spec.formula).map_err(|e| field("spec.formula", e.to_string()))?;
            let mut ap: Vec<&str> = spec.labels.iter().map(|l| l.name.as_str()).collect();
            ap.push(kdeverify_core::abstraction::SINK_LABEL);
            q.path
                .check_declared(&ap)
                .map_err(|e| field("spec.formula", e.to_string()))?;
            for (i, l) in spec.labels.iter().enumerate() {
                for (k, r) in l.regions.iter().enumerate() {
                    rect_from(&format!("spec.labels[{i}].regions[{k}]"), r)?;
                }
            }
        }
        Ok(())
    }

    /// The simulator described by the `system` block, with domain overrides applied.
    pub fn simulator(&self) -> Result<Option<BuiltinSystem>, CliError> {
        let base = if let Some(name) = &self.system.builtin {
            builtin_system(name).expect("validated")
        } else if let Some(lin) = &self.system.linear {
            let dom = match &self.domain.x {
                Some(x) => rect_from("domain.x", x)?,
                None => return Err(field("domain.x", "required for a linear system")),
            };
            let mats: Vec<Matrix> = lin
                .a
                .iter()
                .map(|m| Matrix::from_rows(m).map_err(|e| field("system.linear.a", e.to_string())))
                .collect::<Result<_, _>>()?;
            if mats.len() != lin.actions.len() {
                return Err(field("system.linear.a", "need one matrix per action"));
            }
            let cov = Matrix::from_rows(&lin.cov).map_err(|e| field("system.linear.cov", e.to_string()))?;
            let kind = if mats.len() == 1 {
                SystemKind::LinearGaussian {
                    a: mats[0].clone(),
                    mean: lin.mean.clone(),
                    cov,
                }
            } else {
                SystemKind::SwitchedGaussian {
                    a: mats,
                    mean: lin.mean.clone(),
                    cov,
                }
            };
            BuiltinSystem::new(kind, lin.actions.clone(), dom)
                .map_err(|e| field("system.linear", e.to_string()))?
        } else {
            return Ok(None);
        };
        let mut sys = base;
        if let Some(x) = &self.domain.x {
            let dom = rect_from("domain.x", x)?;
            let succ = sys.spec().successor_domain().clone();
            sys = BuiltinSystem::new(sys.kind().clone(), sys.spec().actions().to_vec(), dom)
                .and_then(|s| if succ.dim() == s.spec().state_dim() { s.with_successor_domain(succ) } else { Ok(s) })
                .map_err(|e| field("domain.x", e.to_string()))?;
        }
        if let Some(y) = &self.domain.y {
            sys = sys
                .with_successor_domain(rect_from("domain.y", y)?)
                .map_err(|e| field("domain.y", e.to_string()))?;
        }
        Ok(Some(sys))
    }

    pub fn lc_config(&self, lc: &LcBlock) -> Result<LcConfig, CliError> {
        let c_f = positive("lc.c_f", lc.c_f, "C_f")?;
        let smoothness = if lc.a.is_some() {
            Smoothness::Curvature {
                c_f,
                a: positive("lc.a", lc.a, "A")?,
            }
        } else if lc.deriv_bound.is_some() {
            Smoothness::Multivariate {
                c_f,
                deriv_bound: positive("lc.deriv_bound", lc.deriv_bound, "deriv_bound")?,
            }
        } else if lc.c_b1.is_some() || lc.c_b2.is_some() {
            Smoothness::Univariate {
                c_f,
                c_b1: positive("lc.c_b1", lc.c_b1, "C_b1")?,
                c_b2: positive("lc.c_b2", lc.c_b2, "C_b2")?,
            }
        } else {
            return Err(field(
                "lc",
                "missing smoothness constants: give c_b1 and c_b2, deriv_bound, or a",
            ));
        };
        let mut cfg = LcConfig::new(lc.n.unwrap_or(0), lc.m.unwrap_or(20), smoothness);
        cfg.grid_resolution = lc.grid_resolution;
        cfg.refine = lc.refine;
        cfg.eps3_variant = lc.eps3_variant.unwrap_or_default();
        cfg.bandwidth = bandwidth_policy("lc.bandwidth", lc.bandwidth.as_ref())?;
        if lc.n.is_some() {
            cfg.validate().map_err(|e| field("lc", e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn search_space(&self, lc: &LcBlock, sys: Option<&BuiltinSystem>) -> Result<SearchSpace, CliError> {
        let x = match (&self.domain.x, sys) {
            (Some(b), _) => rect_from("domain.x", b)?,
            (None, Some(s)) => s.spec().domain().clone(),
            (None, None) => return Err(field("domain.x", "required")),
        };
        let y = match (&self.domain.y, sys) {
            (Some(b), _) => Some(rect_from("domain.y", b)?),
            (None, Some(s)) if self.system.builtin.is_some() => Some(s.spec().successor_domain().clone()),
            _ => None,
        };
        let mut space = SearchSpace::new(x, y);
        for &(j, v) in &lc.pin_x {
            space = space.with_pin_x(j, v);
        }
        for &(j, v) in &lc.pin_y {
            space = space.with_pin_y(j, v);
        }
        Ok(space)
    }

    pub fn label_regions(&self) -> Result<Vec<LabelRegion>, CliError> {
        let Some(spec) = &self.spec else {
            return Ok(Vec::new());
        };
        spec.labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let rects = l
                    .regions
                    .iter()
                    .enumerate()
                    .map(|(k, r)| rect_from(&format!("spec.labels[{i}].regions[{k}]"), r))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok((l.name.clone(), rects))
            })
            .collect()
    }

    pub fn query(&self) -> Result<Query, CliError> {
        let spec = self.spec.as_ref().ok_or_else(|| field("spec", "missing"))?;
        parse_query(&spec.formula).map_err(|e| field("spec.formula", e.to_string()))
    }

    pub fn budget(&self) -> SampleBudget {
        let mut b = SampleBudget::default();
        if let Some(ab) = &self.abstraction {
            if let Some(v) = ab.budget_per_row {
                b.per_row = v;
            }
            if let Some(v) = ab.budget_total {
                b.total = v;
            }
        }
        b
    }
}

pub fn bandwidth_policy(path: &str, b: Option<&BandwidthSetting>) -> Result<BandwidthPolicy, CliError> {
    Ok(match b {
        None => BandwidthPolicy::Theoretical,
        Some(BandwidthSetting::Named(s)) => match s.as_str() {
            "theoretical" => BandwidthPolicy::Theoretical,
            "scott" => BandwidthPolicy::Scott,
            other => return Err(field(path, format!("unknown bandwidth rule `{other}`"))),
        },
        Some(BandwidthSetting::Explicit { h_x, h_y }) => BandwidthPolicy::Explicit {
            h_x: h_x.clone(),
            h_y: h_y.clone(),
        },
    })
}

/// Exact Lebesgue measure of a union of boxes (coordinate compression).
pub fn union_measure(rects: &[Rect]) -> f64 {
    let Some(first) = rects.first() else {
        return 0.0;
    };
    let d = first.dim();
    let coords: Vec<Vec<f64>> = (0..d)
        .map(|j| {
            let mut c: Vec<f64> = rects.iter().flat_map(|r| [r.lo()[j], r.hi()[j]]).collect();
            c.sort_by(f64::total_cmp);
            c.dedup();
            c
        })
        .collect();
    let cells: usize = coords.iter().map(|c| c.len().saturating_sub(1)).product();
    let mut total = 0.0;
    let mut mid = vec![0.0; d];
    for idx in 0..cells {
        let mut rem = idx;
        let mut vol = 1.0;
        for j in 0..d {
            let n = coords[j].len() - 1;
            let k = rem % n;
            rem /= n;
            mid[j] = 0.5 * (coords[j][k] + coords[j][k + 1]);
            vol *= coords[j][k + 1] - coords[j][k];
        }
        if rects.iter().any(|r| r.contains(&mid)) {
            total += vol;
        }
    }
    total
}

/// Largest per-axis width `≤ delta` dividing the domain width.
pub fn divisor_delta(domain: &Rect, delta: f64) -> Vec<f64> {
    (0..domain.dim())
        .map(|j| {
            let w = domain.width(j);
            let k = (w / delta * (1.0 - 1e-12)).ceil().max(1.0);
            w / k
        })
        .collect()
}
