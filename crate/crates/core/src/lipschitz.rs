//! Lipschitz-constant estimation for the conditional density and its error envelope.
//!
//! [`estimate_lc`] repeats `m` independent iterations. Each draws `n` fresh pairs,
//! fits a [`CondDensityEstimator`] and takes the maximum of `|∂f̂/∂x_j|` over a
//! tensor grid on `D_X × D_Y`. The per-dimension maxima are averaged over the
//! iterations and the overall estimate is their maximum.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Rect, TensorGrid};
use crate::kde::{
    scott_bandwidth, theoretical_bandwidth, CondDensityEstimator, KernelSpec,
    DEFAULT_UNDERFLOW_FLOOR,
};
use crate::math::{self, G12, G20, G22};
use crate::par;
use crate::rng::{stream_rng, StreamRng, StreamTag};
use crate::systems::{draw_uniform_pairs, TransitionSampler, TransitionSamples};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum BandwidthPolicy {
    /// `h = n^{-1/(6 + d_x + d_y)}` in every coordinate.
    Theoretical,
    /// Scott's rule applied to the `x` and `y` samples separately.
    Scott,
    Explicit { h_x: Vec<f64>, h_y: Vec<f64> },
}

/// Which constant multiplies the variance term of the envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Eps3Variant {
    /// `C₁ = Vol(D_X) G₂₀ C_f`.
    #[default]
    MainText,
    /// `C₁ = Vol(D_X) G₂₀ G₂₂ C_f`.
    Appendix,
}

/// Smoothness constants of the true conditional density.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum Smoothness {
    /// Scalar `x` and `y`: density bound `c_f`, second-derivative bounds `c_b1` (in `y`)
    /// and `c_b2` (in `x`).
    Univariate { c_f: f64, c_b1: f64, c_b2: f64 },
    /// One bound shared by every mixed second derivative.
    Multivariate { c_f: f64, deriv_bound: f64 },
    /// The bias factor `A_i` supplied directly.
    Curvature { c_f: f64, a: f64 },
}

impl Smoothness {
    pub fn c_f(&self) -> f64 {
        match *self {
            Smoothness::Univariate { c_f, .. }
            | Smoothness::Multivariate { c_f, .. }
            | Smoothness::Curvature { c_f, .. } => c_f,
        }
    }

    fn validate(&self) -> Result<()> {
        let vals: &[(&'static str, f64)] = match self {
            Smoothness::Univariate { c_f, c_b1, c_b2 } => {
                &[("C_f", *c_f), ("C_b1", *c_b1), ("C_b2", *c_b2)]
            }
            Smoothness::Multivariate { c_f, deriv_bound } => {
                &[("C_f", *c_f), ("deriv_bound", *deriv_bound)]
            }
            Smoothness::Curvature { c_f, a } => &[("C_f", *c_f), ("A", *a)],
        };
        for &(name, v) in vals {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LcConfig {
    /// Samples per iteration.
    pub n: usize,
    /// Number of independent iterations.
    pub m: usize,
    /// Grid points per searched axis; `None` picks [`default_resolution`].
    pub grid_resolution: Option<usize>,
    pub bandwidth: BandwidthPolicy,
    pub smoothness: Smoothness,
    pub eps3_variant: Eps3Variant,
    /// Extra local search around each grid maximizer at half the grid spacing.
    pub refine: bool,
    pub underflow_floor: f64,
}

impl LcConfig {
    pub fn new(n: usize, m: usize, smoothness: Smoothness) -> Self {
        Self {
            n,
            m,
            grid_resolution: None,
            bandwidth: BandwidthPolicy::Theoretical,
            smoothness,
            eps3_variant: Eps3Variant::MainText,
            refine: false,
            underflow_floor: DEFAULT_UNDERFLOW_FLOOR,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::invalid("n", "need at least two samples per iteration"));
        }
        if self.m == 0 {
            return Err(Error::invalid("m", "need at least one iteration"));
        }
        if matches!(self.grid_resolution, Some(g) if g < 2) {
            return Err(Error::invalid("grid_resolution", "need at least two points per axis"));
        }
        if let BandwidthPolicy::Explicit { h_x, h_y } = &self.bandwidth {
            if h_x.iter().chain(h_y).any(|h| !(*h > 0.0 && h.is_finite())) {
                return Err(Error::invalid("bandwidth", "explicit bandwidths must be positive"));
            }
        }
        if !(self.underflow_floor >= 0.0) {
            return Err(Error::invalid("underflow_floor", "must be nonnegative"));
        }
        self.smoothness.validate()
    }
}

/// Grid points per axis when the caller does not fix one, from the number of
/// searched (unpinned) axes.
pub fn default_resolution(free_axes: usize) -> usize {
    match free_axes {
        0..=2 => 50,
        3..=4 => 15,
        k => (math::floor(math::powf(2.0e5, 1.0 / k as f64)) as usize).max(3),
    }
}

/// Where the derivative maximum is searched.
///
/// `pin_x[j] = Some(v)` restricts axis `j` of the search grid to the single value
/// `v`; samples are still drawn over all of `x`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SearchSpace {
    pub x: Rect,
    /// `None`: `[min - 3h_y, max + 3h_y]` of each iteration's successors.
    pub y: Option<Rect>,
    pub pin_x: Vec<Option<f64>>,
    pub pin_y: Vec<Option<f64>>,
}

impl SearchSpace {
    pub fn new(x: Rect, y: Option<Rect>) -> Self {
        let dx = x.dim();
        let dy = y.as_ref().map_or(0, Rect::dim);
        Self {
            x,
            y,
            pin_x: vec![None; dx],
            pin_y: vec![None; dy],
        }
    }

    /// Search box of a system's own `D_X × D_Y`.
    pub fn of_system<S: TransitionSampler + ?Sized>(system: &S) -> Self {
        let spec = system.spec();
        Self::new(spec.domain().clone(), Some(spec.successor_domain().clone()))
    }

    pub fn with_pin_x(mut self, j: usize, v: f64) -> Self {
        if self.pin_x.len() <= j {
            self.pin_x.resize(j + 1, None);
        }
        self.pin_x[j] = Some(v);
        self
    }

    pub fn with_pin_y(mut self, j: usize, v: f64) -> Self {
        if self.pin_y.len() <= j {
            self.pin_y.resize(j + 1, None);
        }
        self.pin_y[j] = Some(v);
        self
    }

    fn check(&self, dx: usize, dy: usize) -> Result<()> {
        if self.x.dim() != dx {
            return Err(Error::DimensionMismatch {
                what: "search domain D_X",
                expected: dx,
                got: self.x.dim(),
            });
        }
        if let Some(y) = &self.y {
            if y.dim() != dy {
                return Err(Error::DimensionMismatch {
                    what: "search domain D_Y",
                    expected: dy,
                    got: y.dim(),
                });
            }
            if !y.is_bounded() {
                return Err(Error::invalid("D_Y", "must be bounded"));
            }
        }
        if !self.x.is_bounded() {
            return Err(Error::invalid("D_X", "must be bounded"));
        }
        if self.pin_x.len() > dx || self.pin_y.len() > dy {
            return Err(Error::invalid("pin", "pinned coordinate out of range"));
        }
        Ok(())
    }

    fn free_axes(&self, dx: usize, dy: usize) -> usize {
        let pinned = |p: &[Option<f64>], j: usize| p.get(j).copied().flatten().is_some();
        (0..dx).filter(|&j| !pinned(&self.pin_x, j)).count()
            + (0..dy).filter(|&j| !pinned(&self.pin_y, j)).count()
    }
}

fn axes_for(rect: &Rect, pins: &[Option<f64>], g: usize) -> Vec<Vec<f64>> {
    (0..rect.dim())
        .map(|j| match pins.get(j).copied().flatten() {
            Some(v) => vec![v],
            None => math::linspace(rect.lo()[j], rect.hi()[j], g),
        })
        .collect()
}

/// Supplies one batch of pairs per iteration.
pub trait PairSource: Sync {
    fn x_dim(&self) -> usize;
    fn y_dim(&self) -> usize;
    fn draw(&self, iteration: usize, n: usize, rng: &mut StreamRng) -> Result<TransitionSamples>;
}

/// Pairs with `x` uniform on a box and `y` from a simulator.
pub struct SystemPairs<'a, S: ?Sized> {
    system: &'a S,
    action: usize,
    domain: Rect,
}

impl<'a, S: TransitionSampler + ?Sized> SystemPairs<'a, S> {
    pub fn new(system: &'a S, action: &str, domain: Rect) -> Result<Self> {
        let action = system.spec().action_index(action)?;
        if domain.dim() != system.spec().state_dim() {
            return Err(Error::DimensionMismatch {
                what: "sampling domain",
                expected: system.spec().state_dim(),
                got: domain.dim(),
            });
        }
        Ok(Self {
            system,
            action,
            domain,
        })
    }
}

impl<S: TransitionSampler + ?Sized> PairSource for SystemPairs<'_, S> {
    fn x_dim(&self) -> usize {
        self.system.spec().state_dim()
    }

    fn y_dim(&self) -> usize {
        self.system.spec().state_dim()
    }

    fn draw(&self, _iteration: usize, n: usize, rng: &mut StreamRng) -> Result<TransitionSamples> {
        draw_uniform_pairs(self.system, self.action, &self.domain, n, rng)
    }
}

/// One scalar successor coordinate against a subset of the state coordinates.
pub struct FactorPairs<'a, S: ?Sized> {
    inner: SystemPairs<'a, S>,
    mask: Vec<usize>,
    coord: usize,
}

impl<'a, S: TransitionSampler + ?Sized> FactorPairs<'a, S> {
    pub fn new(inner: SystemPairs<'a, S>, mask: Vec<usize>, coord: usize) -> Result<Self> {
        let d = inner.x_dim();
        if mask.is_empty() || coord >= d {
            return Err(Error::invalid("mask", "empty mask or successor coordinate out of range"));
        }
        if let Some(bad) = mask.iter().find(|&&c| c >= d) {
            return Err(Error::invalid(
                "mask",
                format!("coordinate {bad} out of range for dimension {d}"),
            ));
        }
        Ok(Self { inner, mask, coord })
    }
}

impl<S: TransitionSampler + ?Sized> PairSource for FactorPairs<'_, S> {
    fn x_dim(&self) -> usize {
        self.mask.len()
    }

    fn y_dim(&self) -> usize {
        1
    }

    fn draw(&self, iteration: usize, n: usize, rng: &mut StreamRng) -> Result<TransitionSamples> {
        self.inner.draw(iteration, n, rng)?.factor(&self.mask, self.coord)
    }
}

/// A fixed data set cut into consecutive blocks of `n`, one block per iteration.
pub struct BlockPairs {
    data: TransitionSamples,
}

impl BlockPairs {
    pub fn new(data: TransitionSamples) -> Self {
        Self { data }
    }
}

impl PairSource for BlockPairs {
    fn x_dim(&self) -> usize {
        self.data.x_dim()
    }

    fn y_dim(&self) -> usize {
        self.data.y_dim()
    }

    fn draw(&self, iteration: usize, n: usize, _rng: &mut StreamRng) -> Result<TransitionSamples> {
        let (start, end) = (iteration * n, (iteration + 1) * n);
        if end > self.data.len() {
            return Err(Error::invalid(
                "n",
                format!(
                    "iteration {iteration} needs rows {start}..{end} but the data has {}",
                    self.data.len()
                ),
            ));
        }
        let (dx, dy) = (self.x_dim(), self.y_dim());
        TransitionSamples::new(
            self.data.action(),
            dx,
            dy,
            self.data.xs()[start * dx..end * dx].to_vec(),
            self.data.ys()[start * dy..end * dy].to_vec(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LipschitzReport {
    /// Mean over iterations of the per-iteration maxima, one per `x` dimension.
    pub per_dimension: Vec<f64>,
    pub overall: f64,
    /// First dimension attaining `overall`.
    pub argmax_dimension: usize,
    /// `per_iteration[μ][j]`.
    pub per_iteration: Vec<Vec<f64>>,
    pub eps3: Vec<f64>,
    pub interval: (f64, f64),
    pub n: usize,
    pub m: usize,
    /// Bandwidths averaged over iterations (constant unless Scott's rule is used).
    pub h_x: Vec<f64>,
    pub h_y: Vec<f64>,
    pub grid_resolution: usize,
}

struct IterationResult {
    maxima: Vec<f64>,
    h_x: Vec<f64>,
    h_y: Vec<f64>,
}

/// Runs the estimator on a simulator with `x` drawn uniformly on `space.x`.
pub fn estimate_lc_system<S: TransitionSampler + ?Sized>(
    system: &S,
    action: &str,
    space: &SearchSpace,
    config: &LcConfig,
    seed: u64,
) -> Result<LipschitzReport> {
    let source = SystemPairs::new(system, action, space.x.clone())?;
    estimate_lc(&source, space, config, seed)
}

pub fn estimate_lc<P: PairSource + ?Sized>(
    source: &P,
    space: &SearchSpace,
    config: &LcConfig,
    seed: u64,
) -> Result<LipschitzReport> {
    estimate_lc_stream(source, space, config, seed, 0)
}

fn estimate_lc_stream<P: PairSource + ?Sized>(
    source: &P,
    space: &SearchSpace,
    config: &LcConfig,
    seed: u64,
    stream_base: u64,
) -> Result<LipschitzReport> {
    config.validate()?;
    let (dx, dy) = (source.x_dim(), source.y_dim());
    space.check(dx, dy)?;
    if let BandwidthPolicy::Explicit { h_x, h_y } = &config.bandwidth {
        if h_x.len() != dx || h_y.len() != dy {
            return Err(Error::DimensionMismatch {
                what: "explicit bandwidth",
                expected: dx + dy,
                got: h_x.len() + h_y.len(),
            });
        }
    }
    if matches!(config.smoothness, Smoothness::Univariate { .. }) && (dx != 1 || dy != 1) {
        return Err(Error::invalid(
            "smoothness",
            "univariate constants need scalar x and y; use a multivariate bound",
        ));
    }
    let g = config
        .grid_resolution
        .unwrap_or_else(|| default_resolution(space.free_axes(dx, dy)));

    let results = par::map_indexed(config.m, |mu| {
        let mut rng = stream_rng(seed, StreamTag::LcIteration, stream_base + mu as u64);
        run_iteration(source, space, config, g, mu, &mut rng)
    });
    let results: Vec<IterationResult> = results.into_iter().collect::<Result<_>>()?;

    let per_iteration: Vec<Vec<f64>> = results.iter().map(|r| r.maxima.clone()).collect();
    let column_mean = |f: &dyn Fn(&IterationResult) -> f64| {
        let col: Vec<f64> = results.iter().map(f).collect();
        math::mean(&col)
    };
    let per_dimension: Vec<f64> = (0..dx).map(|j| column_mean(&|r| r.maxima[j])).collect();
    let h_x: Vec<f64> = (0..dx).map(|j| column_mean(&|r| r.h_x[j])).collect();
    let h_y: Vec<f64> = (0..dy).map(|j| column_mean(&|r| r.h_y[j])).collect();

    let mut argmax_dimension = 0;
    for (j, v) in per_dimension.iter().enumerate() {
        if *v > per_dimension[argmax_dimension] {
            argmax_dimension = j;
        }
    }
    let overall = per_dimension[argmax_dimension];

    let vol = space.x.volume();
    let eps3: Vec<f64> = match config.smoothness {
        Smoothness::Univariate { c_f, c_b1, c_b2 } => vec![asymptotic_eps3_1d(
            config.n,
            h_x[0],
            h_y[0],
            c_f,
            c_b1,
            c_b2,
            vol,
            config.eps3_variant,
        )?],
        Smoothness::Multivariate { c_f, deriv_bound } => (0..dx)
            .map(|i| asymptotic_eps3_multi(config.n, &h_x, &h_y, c_f, deriv_bound, vol, i))
            .collect::<Result<_>>()?,
        Smoothness::Curvature { c_f, a } => (0..dx)
            .map(|i| eps3_with_bias_factor(config.n, &h_x, &h_y, c_f, a, vol, i))
            .collect::<Result<_>>()?,
    };
    let eps_max = eps3.iter().copied().fold(0.0, f64::max);
    let half = math::sqrt(eps_max);
    Ok(LipschitzReport {
        per_dimension,
        overall,
        argmax_dimension,
        per_iteration,
        eps3,
        interval: ((overall - half).max(0.0), overall + half),
        n: config.n,
        m: config.m,
        h_x,
        h_y,
        grid_resolution: g,
    })
}

fn run_iteration<P: PairSource + ?Sized>(
    source: &P,
    space: &SearchSpace,
    config: &LcConfig,
    g: usize,
    mu: usize,
    rng: &mut StreamRng,
) -> Result<IterationResult> {
    let (dx, dy) = (source.x_dim(), source.y_dim());
    let samples = source.draw(mu, config.n, rng)?;
    if samples.x_dim() != dx || samples.y_dim() != dy {
        return Err(Error::DimensionMismatch {
            what: "drawn samples",
            expected: dx + dy,
            got: samples.x_dim() + samples.y_dim(),
        });
    }
    let (h_x, h_y) = match &config.bandwidth {
        BandwidthPolicy::Theoretical => theoretical_bandwidth(samples.len(), dx, dy)?,
        BandwidthPolicy::Scott => (
            scott_bandwidth(samples.xs(), dx)?,
            scott_bandwidth(samples.ys(), dy)?,
        ),
        BandwidthPolicy::Explicit { h_x, h_y } => (h_x.clone(), h_y.clone()),
    };
    let y_rect = match &space.y {
        Some(r) => r.clone(),
        None => data_y_box(&samples, &h_y)?,
    };
    let est = CondDensityEstimator::new(samples, KernelSpec::gaussian(h_x.clone(), h_y.clone())?)?
        .with_underflow_floor(config.underflow_floor)?;

    let x_grid = TensorGrid::new(axes_for(&space.x, &space.pin_x, g))?;
    let y_grid = TensorGrid::new(axes_for(&y_rect, &space.pin_y, g))?;
    let eval = est.evaluate_grid(&x_grid, &y_grid)?;
    let mut maxima: Vec<f64> = Vec::with_capacity(dx);
    for (j, (best, p, q)) in eval.max_abs_partials().into_iter().enumerate() {
        let mut best = best;
        if config.refine {
            let xa = local_axes(&x_grid, &space.x, &x_grid.point(p));
            let ya = local_axes(&y_grid, &y_rect, &y_grid.point(q));
            let local = est.evaluate_grid(&TensorGrid::new(xa)?, &TensorGrid::new(ya)?)?;
            best = best.max(local.max_abs_partials()[j].0);
        }
        maxima.push(best);
    }
    Ok(IterationResult { maxima, h_x, h_y })
}

/// Three points per axis: the centre and its neighbours at half the grid spacing,
/// kept inside the box. Single-point (pinned) axes stay fixed.
fn local_axes(grid: &TensorGrid, rect: &Rect, centre: &[f64]) -> Vec<Vec<f64>> {
    grid.axes()
        .iter()
        .enumerate()
        .map(|(j, axis)| {
            if axis.len() < 2 {
                return vec![centre[j]];
            }
            let step = 0.5 * (axis[1] - axis[0]);
            let mut pts = vec![centre[j]];
            if centre[j] - step >= rect.lo()[j] {
                pts.push(centre[j] - step);
            }
            if centre[j] + step <= rect.hi()[j] {
                pts.push(centre[j] + step);
            }
            pts
        })
        .collect()
}

fn data_y_box(samples: &TransitionSamples, h_y: &[f64]) -> Result<Rect> {
    let dy = samples.y_dim();
    let mut lo = vec![f64::INFINITY; dy];
    let mut hi = vec![f64::NEG_INFINITY; dy];
    for i in 0..samples.len() {
        for (j, v) in samples.y(i).iter().enumerate() {
            lo[j] = lo[j].min(*v);
            hi[j] = hi[j].max(*v);
        }
    }
    for j in 0..dy {
        lo[j] -= 3.0 * h_y[j];
        hi[j] += 3.0 * h_y[j];
    }
    Rect::new(lo, hi)
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::invalid(name, format!("must be positive and finite, got {v}")))
    }
}

/// Asymptotic mean-square error bound `ε₃` of the derivative estimate for scalar
/// `x` and `y`:
///
/// ```text
/// ε₃ = C₁ / (n h_x³ h_y) + h_x⁴ A² / 4,   A = G₁₂ ((h_y/h_x)² C_b1 + C_b2)
/// ```
#[allow(clippy::too_many_arguments)]
pub fn asymptotic_eps3_1d(
    n: usize,
    h_x: f64,
    h_y: f64,
    c_f: f64,
    c_b1: f64,
    c_b2: f64,
    vol_dx: f64,
    variant: Eps3Variant,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    let h_x = positive("h_x", h_x)?;
    let h_y = positive("h_y", h_y)?;
    let c_f = positive("C_f", c_f)?;
    let c_b1 = positive("C_b1", c_b1)?;
    let c_b2 = positive("C_b2", c_b2)?;
    let vol = positive("vol_DX", vol_dx)?;
    let c1 = match variant {
        Eps3Variant::MainText => vol * G20 * c_f,
        Eps3Variant::Appendix => vol * G20 * G22 * c_f,
    };
    let a = G12 * ((h_y * h_y) / (h_x * h_x) * c_b1 + c_b2);
    let h4 = h_x * h_x * h_x * h_x;
    Ok(c1 / (n as f64 * h_x * h_x * h_x * h_y) + h4 * a * a / 4.0)
}

/// Multivariate envelope `ε₃ᵢ` for dimension `i` (0-based), every second-derivative
/// constant bounded by `deriv_bound`:
///
/// ```text
/// ε₃ᵢ = Ĉ / (n h_xi² Π h_xj Π h_yj) + h_xi⁴ A_i² / 4
/// A_i = Σ_j (h_yj/h_xi)² C + Σ_{s≠i} (h_xs/h_xi)² C,   Ĉ = Vol(D_X) G₂₀^{d_x+d_y-1} C_f
/// ```
pub fn asymptotic_eps3_multi(
    n: usize,
    h_x: &[f64],
    h_y: &[f64],
    c_f: f64,
    deriv_bound: f64,
    vol_dx: f64,
    i: usize,
) -> Result<f64> {
    let c = positive("deriv_bound", deriv_bound)?;
    check_bandwidths(h_x, h_y, i)?;
    let hxi2 = h_x[i] * h_x[i];
    let a = h_y.iter().map(|h| h * h / hxi2 * c).sum::<f64>()
        + h_x
            .iter()
            .enumerate()
            .filter(|&(s, _)| s != i)
            .map(|(_, h)| h * h / hxi2 * c)
            .sum::<f64>();
    eps3_with_bias_factor(n, h_x, h_y, c_f, G12 * a, vol_dx, i)
}

/// [`asymptotic_eps3_multi`] with the bias factor `A_i` given directly.
pub fn eps3_with_bias_factor(
    n: usize,
    h_x: &[f64],
    h_y: &[f64],
    c_f: f64,
    a: f64,
    vol_dx: f64,
    i: usize,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    check_bandwidths(h_x, h_y, i)?;
    let c_f = positive("C_f", c_f)?;
    let a = positive("A", a)?;
    let vol = positive("vol_DX", vol_dx)?;
    let c_hat = vol * math::powf(G20, (h_x.len() + h_y.len() - 1) as f64) * c_f;
    let prod: f64 = h_x.iter().chain(h_y).product();
    let hxi2 = h_x[i] * h_x[i];
    Ok(c_hat / (n as f64 * hxi2 * prod) + hxi2 * hxi2 * a * a / 4.0)
}

fn check_bandwidths(h_x: &[f64], h_y: &[f64], i: usize) -> Result<()> {
    if i >= h_x.len() {
        return Err(Error::invalid("i", format!("dimension {i} out of range")));
    }
    if h_y.is_empty() {
        return Err(Error::invalid("h_y", "must not be empty"));
    }
    for h in h_x.iter().chain(h_y) {
        positive("bandwidth", *h)?;
    }
    Ok(())
}

/// One report per successor coordinate `T_i(y_i | x)`.
///
/// `masks[i]` lists the state coordinates factor `i` depends on (all of them when
/// `masks` is `None`). Pins in `space` refer to full-state coordinates.
pub fn compositional_lc<S: TransitionSampler + ?Sized>(
    system: &S,
    action: &str,
    space: &SearchSpace,
    masks: Option<&[Vec<usize>]>,
    config: &LcConfig,
    seed: u64,
) -> Result<Vec<LipschitzReport>> {
    let d = system.spec().state_dim();
    if let Some(ms) = masks {
        if ms.len() != d {
            return Err(Error::DimensionMismatch {
                what: "dependency masks",
                expected: d,
                got: ms.len(),
            });
        }
    }
    space.check(d, space.y.as_ref().map_or(d, Rect::dim))?;
    (0..d)
        .map(|i| {
            let mask: Vec<usize> = match masks {
                Some(ms) => ms[i].clone(),
                None => (0..d).collect(),
            };
            let source = FactorPairs::new(SystemPairs::new(system, action, space.x.clone())?, mask.clone(), i)?;
            let sub = SearchSpace {
                x: space.x.project(&mask)?,
                y: space.y.as_ref().map(|y| y.project(&[i])).transpose()?,
                pin_x: mask.iter().map(|&c| space.pin_x.get(c).copied().flatten()).collect(),
                pin_y: vec![space.pin_y.get(i).copied().flatten()],
            };
            estimate_lc_stream(&source, &sub, config, seed, (i as u64 + 1) << 32)
        })
        .collect()
}

/// Grid width `δ = ε / (T L 𝔏)` that keeps the abstraction within `ε` of the true
/// satisfaction probability over horizon `T`.
pub fn partition_size(epsilon: f64, horizon: f64, lc: f64, leb: f64) -> Result<f64> {
    let e = positive("epsilon", epsilon)?;
    let t = positive("horizon", horizon)?;
    let l = positive("L", lc)?;
    let m = positive("measure", leb)?;
    Ok(e / (t * l * m))
}
