//! Product-kernel conditional density estimation of `f(y | x)`.
//!
//! The estimator is the ratio of a joint and a marginal product-kernel estimate,
//!
//! ```text
//! f̂(y | x) = Σ_i K_hx(x - X_i) K_hy(y - Y_i) / Σ_j K_hx(x - X_j) = Σ_i w_i(x) K_hy(y - Y_i),
//! ```
//!
//! so for every query the weights `w_i(x)` are nonnegative and sum to one, and
//! `f̂(· | x)` integrates to one exactly. Derivatives in `x` and integrals over
//! rectangles in `y` are evaluated in closed form for the Gaussian kernel.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{Rect, TensorGrid};
use crate::linalg::gemm_acc_strided;
use crate::math::{self, INV_SQRT_2PI};
use crate::systems::TransitionSamples;

/// Gaussian kernel terms beyond this many bandwidths are dropped (`< 1e-14` relative).
pub const GAUSSIAN_TRUNCATION: f64 = 8.0;

/// Default floor on the unnormalized weight sum `Σ_j K_hx(x - X_j)`.
pub const DEFAULT_UNDERFLOW_FLOOR: f64 = 1e-300;

const CHUNK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum KernelFamily {
    Gaussian,
    Uniform,
    Triangle,
    Epanechnikov,
    Quartic,
    Triweight,
}

impl KernelFamily {
    pub const ALL: [KernelFamily; 6] = [
        KernelFamily::Gaussian,
        KernelFamily::Uniform,
        KernelFamily::Triangle,
        KernelFamily::Epanechnikov,
        KernelFamily::Quartic,
        KernelFamily::Triweight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelFamily::Gaussian => "gaussian",
            KernelFamily::Uniform => "uniform",
            KernelFamily::Triangle => "triangle",
            KernelFamily::Epanechnikov => "epanechnikov",
            KernelFamily::Quartic => "quartic",
            KernelFamily::Triweight => "triweight",
        }
    }

    /// Canonical bandwidth `δ₀`; bandwidths transfer between families as
    /// `h_B = h_A · δ₀(B) / δ₀(A)`.
    pub fn canonical_bandwidth(self) -> f64 {
        match self {
            KernelFamily::Uniform => 1.3510,
            KernelFamily::Triangle => 1.8890,
            KernelFamily::Epanechnikov => 1.7188,
            KernelFamily::Quartic => 2.0362,
            KernelFamily::Triweight => 2.3122,
            KernelFamily::Gaussian => 0.7764,
        }
    }

    /// Univariate kernel `k(u)`.
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        let a = math::abs(u);
        match self {
            KernelFamily::Gaussian => {
                if a > GAUSSIAN_TRUNCATION {
                    0.0
                } else {
                    INV_SQRT_2PI * math::exp(-0.5 * u * u)
                }
            }
            _ if a > 1.0 => 0.0,
            KernelFamily::Uniform => 0.5,
            KernelFamily::Triangle => 1.0 - a,
            KernelFamily::Epanechnikov => 0.75 * (1.0 - u * u),
            KernelFamily::Quartic => {
                let t = 1.0 - u * u;
                15.0 / 16.0 * t * t
            }
            KernelFamily::Triweight => {
                let t = 1.0 - u * u;
                35.0 / 32.0 * t * t * t
            }
        }
    }
}

fn check_bandwidths(name: &'static str, h: &[f64]) -> Result<()> {
    if h.is_empty() {
        return Err(Error::invalid(name, "empty bandwidth vector"));
    }
    if h.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid(name, "bandwidths must be finite and positive"));
    }
    Ok(())
}

/// `∏_j k(u_j / h_j) / h_j`.
pub fn kernel_product(family: KernelFamily, u: &[f64], h: &[f64]) -> Result<f64> {
    check_bandwidths("h", h)?;
    if u.len() != h.len() {
        return Err(Error::DimensionMismatch {
            what: "kernel argument",
            expected: h.len(),
            got: u.len(),
        });
    }
    Ok(u.iter()
        .zip(h)
        .map(|(u, h)| family.eval(u / h) / h)
        .product())
}

/// Kernel family with bandwidths for the conditioning (`h_x`) and successor (`h_y`) variables.
///
/// Bandwidths are stated on the Gaussian scale; other families evaluate with the
/// canonically adjusted bandwidths (see [`KernelSpec::effective_h_x`]).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KernelSpec {
    family: KernelFamily,
    h_x: Vec<f64>,
    h_y: Vec<f64>,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, h_x: Vec<f64>, h_y: Vec<f64>) -> Result<Self> {
        check_bandwidths("h_x", &h_x)?;
        check_bandwidths("h_y", &h_y)?;
        Ok(Self { family, h_x, h_y })
    }

    pub fn gaussian(h_x: Vec<f64>, h_y: Vec<f64>) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, h_x, h_y)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn canonical_bandwidth(&self) -> f64 {
        self.family.canonical_bandwidth()
    }

    pub fn h_x(&self) -> &[f64] {
        &self.h_x
    }

    pub fn h_y(&self) -> &[f64] {
        &self.h_y
    }

    fn adjustment(&self) -> f64 {
        self.family.canonical_bandwidth() / KernelFamily::Gaussian.canonical_bandwidth()
    }

    pub fn effective_h_x(&self) -> Vec<f64> {
        let s = self.adjustment();
        self.h_x.iter().map(|h| h * s).collect()
    }

    pub fn effective_h_y(&self) -> Vec<f64> {
        let s = self.adjustment();
        self.h_y.iter().map(|h| h * s).collect()
    }
}

/// Values and `x`-partials of `f̂` on the product of an `x` grid and a `y` grid.
///
/// Entry `(p, q)` (x-point `p`, y-point `q`) is stored at `p * y_grid.len() + q`.
#[derive(Debug, Clone)]
pub struct GridEvaluation {
    pub x_grid: TensorGrid,
    pub y_grid: TensorGrid,
    pub density: Vec<f64>,
    /// One array per `x` dimension.
    pub partials: Vec<Vec<f64>>,
}

impl GridEvaluation {
    /// `(|∂f̂/∂x_j|` maximum, x-point index, y-point index)` per dimension; the
    /// first grid point wins ties.
    pub fn max_abs_partials(&self) -> Vec<(f64, usize, usize)> {
        let py = self.y_grid.len();
        self.partials
            .iter()
            .map(|vals| {
                let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
                for (k, v) in vals.iter().enumerate() {
                    let a = math::abs(*v);
                    if a > best.0 {
                        best = (a, k / py, k % py);
                    }
                }
                best
            })
            .collect()
    }
}

/// Kernel estimator of the conditional density `f(y | x)`.
#[derive(Debug, Clone)]
pub struct CondDensityEstimator {
    samples: TransitionSamples,
    kernel: KernelSpec,
    hx: Vec<f64>,
    hy: Vec<f64>,
    floor: f64,
}

impl CondDensityEstimator {
    pub fn new(samples: TransitionSamples, kernel: KernelSpec) -> Result<Self> {
        if kernel.h_x.len() != samples.x_dim() {
            return Err(Error::DimensionMismatch {
                what: "h_x",
                expected: samples.x_dim(),
                got: kernel.h_x.len(),
            });
        }
        if kernel.h_y.len() != samples.y_dim() {
            return Err(Error::DimensionMismatch {
                what: "h_y",
                expected: samples.y_dim(),
                got: kernel.h_y.len(),
            });
        }
        let hx = kernel.effective_h_x();
        let hy = kernel.effective_h_y();
        Ok(Self {
            samples,
            kernel,
            hx,
            hy,
            floor: DEFAULT_UNDERFLOW_FLOOR,
        })
    }

    pub fn with_underflow_floor(mut self, floor: f64) -> Result<Self> {
        if !(floor >= 0.0 && floor.is_finite()) {
            return Err(Error::invalid("underflow_floor", "must be finite and nonnegative"));
        }
        self.floor = floor;
        Ok(self)
    }

    pub fn samples(&self) -> &TransitionSamples {
        &self.samples
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn x_dim(&self) -> usize {
        self.samples.x_dim()
    }

    pub fn y_dim(&self) -> usize {
        self.samples.y_dim()
    }

    fn require_gaussian(&self, operation: &'static str) -> Result<()> {
        if self.kernel.family != KernelFamily::Gaussian {
            return Err(Error::UnsupportedKernel {
                operation,
                family: self.kernel.family.name(),
            });
        }
        Ok(())
    }

    fn check_dims(&self, x: &[f64], y: Option<&[f64]>) -> Result<()> {
        if x.len() != self.x_dim() {
            return Err(Error::DimensionMismatch {
                what: "query x",
                expected: self.x_dim(),
                got: x.len(),
            });
        }
        if let Some(y) = y {
            if y.len() != self.y_dim() {
                return Err(Error::DimensionMismatch {
                    what: "query y",
                    expected: self.y_dim(),
                    got: y.len(),
                });
            }
        }
        Ok(())
    }

    #[inline]
    fn kernel_at(&self, q: &[f64], centre: &[f64], h: &[f64]) -> f64 {
        let f = self.kernel.family;
        let mut v = 1.0;
        for ((q, c), h) in q.iter().zip(centre).zip(h) {
            v *= f.eval((q - c) / h) / h;
            if v == 0.0 {
                break;
            }
        }
        v
    }

    /// Normalized weights `w_i(x)`.
    pub fn weights(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x, None)?;
        let mut w: Vec<f64> = (0..self.samples.len())
            .map(|i| self.kernel_at(x, self.samples.x(i), &self.hx))
            .collect();
        let total = math::pairwise_sum(&w);
        if !(total > self.floor) {
            return Err(Error::DenominatorUnderflow { point: x.to_vec() });
        }
        for v in &mut w {
            *v /= total;
        }
        Ok(w)
    }

    pub fn conditional_density(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dims(x, Some(y))?;
        let w = self.weights(x)?;
        Ok(w.iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| w * self.kernel_at(y, self.samples.y(i), &self.hy))
            .sum())
    }

    /// `∂f̂/∂x_j` at `(x, y)`, exact quotient-rule derivative.
    pub fn conditional_density_partial(&self, x: &[f64], y: &[f64], j: usize) -> Result<f64> {
        if j >= self.x_dim() {
            return Err(Error::invalid("j", "dimension index out of range"));
        }
        Ok(self.gradient_x(x, y)?[j])
    }

    /// All `x`-partials of `f̂` at `(x, y)`.
    ///
    /// Uses `∂f̂/∂x_j = Σ_i w_i K_hy(y - Y_i) (s_ij - s̄_j)` with
    /// `s_ij = -(x_j - X_ij) / h_j²` and `s̄_j = Σ_i w_i s_ij`.
    pub fn gradient_x(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.require_gaussian("conditional_density_partial")?;
        self.check_dims(x, Some(y))?;
        let w = self.weights(x)?;
        let dx = self.x_dim();
        let mut s_bar = vec![0.0; dx];
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            for (j, sb) in s_bar.iter_mut().enumerate() {
                *sb += wi * -(x[j] - self.samples.x(i)[j]) / (self.hx[j] * self.hx[j]);
            }
        }
        let mut grad = vec![0.0; dx];
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            let ky = self.kernel_at(y, self.samples.y(i), &self.hy);
            if ky == 0.0 {
                continue;
            }
            for (j, g) in grad.iter_mut().enumerate() {
                let s = -(x[j] - self.samples.x(i)[j]) / (self.hx[j] * self.hx[j]);
                *g += wi * ky * (s - s_bar[j]);
            }
        }
        Ok(grad)
    }

    /// `∫_cell f̂(y | x) dy` in closed form; cell bounds may be infinite.
    pub fn cell_integral(&self, x: &[f64], cell: &Rect) -> Result<f64> {
        self.require_gaussian("cell_integral")?;
        self.check_dims(x, None)?;
        if cell.dim() != self.y_dim() {
            return Err(Error::DimensionMismatch {
                what: "cell",
                expected: self.y_dim(),
                got: cell.dim(),
            });
        }
        let w = self.weights(x)?;
        let mut total = 0.0;
        for (i, wi) in w.iter().enumerate() {
            if *wi == 0.0 {
                continue;
            }
            let yi = self.samples.y(i);
            let mut p = 1.0;
            for j in 0..self.y_dim() {
                let h = self.hy[j];
                p *= math::std_normal_interval((cell.lo()[j] - yi[j]) / h, (cell.hi()[j] - yi[j]) / h);
            }
            total += wi * p;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// Per-axis Gaussian kernel values and score factors `-(g - c)/h²` on one axis.
    fn axis_terms(axis: &[f64], centre: f64, h: f64, k: &mut [f64], s: &mut [f64]) {
        for ((g, kv), sv) in axis.iter().zip(k.iter_mut()).zip(s.iter_mut()) {
            let u = (g - centre) / h;
            *kv = KernelFamily::Gaussian.eval(u) / h;
            *sv = -u / h;
        }
    }

    /// Density and all `x`-partials on `x_grid × y_grid`.
    ///
    /// The sums over samples are formed as blocked matrix products, which is what
    /// makes exhaustive grid maximization affordable at large `n`.
    pub fn evaluate_grid(&self, x_grid: &TensorGrid, y_grid: &TensorGrid) -> Result<GridEvaluation> {
        self.require_gaussian("evaluate_grid")?;
        let (dx, dy) = (self.x_dim(), self.y_dim());
        if x_grid.dim() != dx || y_grid.dim() != dy {
            return Err(Error::DimensionMismatch {
                what: "evaluation grid",
                expected: dx,
                got: x_grid.dim(),
            });
        }
        let px = x_grid.len();
        let py = y_grid.len();
        let rows = (dx + 1) * px;
        let x_index = grid_index_table(x_grid);
        let y_index = grid_index_table(y_grid);

        let mut acc = vec![0.0; rows * py];
        let mut dsum = vec![0.0; rows];
        let mut at = vec![0.0; CHUNK * rows];
        let mut bt = vec![0.0; CHUNK * py];
        let mut kx: Vec<Vec<f64>> = x_grid.axes().iter().map(|a| vec![0.0; a.len()]).collect();
        let mut sx = kx.clone();
        let mut ky: Vec<Vec<f64>> = y_grid.axes().iter().map(|a| vec![0.0; a.len()]).collect();
        let mut sy = ky.clone();

        let n = self.samples.len();
        let mut start = 0;
        while start < n {
            let cn = CHUNK.min(n - start);
            for c in 0..cn {
                let i = start + c;
                let xi = self.samples.x(i);
                for j in 0..dx {
                    Self::axis_terms(&x_grid.axes()[j], xi[j], self.hx[j], &mut kx[j], &mut sx[j]);
                }
                let row = &mut at[c * rows..(c + 1) * rows];
                for p in 0..px {
                    let ix = &x_index[p * dx..(p + 1) * dx];
                    let mut v = 1.0;
                    for (j, &k) in ix.iter().enumerate() {
                        v *= kx[j][k];
                    }
                    row[p] = v;
                    for (j, &k) in ix.iter().enumerate() {
                        row[(1 + j) * px + p] = v * sx[j][k];
                    }
                }
                let yi = self.samples.y(i);
                for j in 0..dy {
                    Self::axis_terms(&y_grid.axes()[j], yi[j], self.hy[j], &mut ky[j], &mut sy[j]);
                }
                let brow = &mut bt[c * py..(c + 1) * py];
                for (q, b) in brow.iter_mut().enumerate() {
                    let iy = &y_index[q * dy..(q + 1) * dy];
                    *b = iy.iter().enumerate().map(|(j, &k)| ky[j][k]).product();
                }
            }
            gemm_acc_strided(rows, cn, py, &at, 1, rows, &bt[..cn * py], &mut acc);
            for c in 0..cn {
                for (d, a) in dsum.iter_mut().zip(&at[c * rows..(c + 1) * rows]) {
                    *d += a;
                }
            }
            start += cn;
        }

        let mut density = vec![0.0; px * py];
        let mut partials = vec![vec![0.0; px * py]; dx];
        for p in 0..px {
            let d = dsum[p];
            if !(d > self.floor) {
                return Err(Error::DenominatorUnderflow {
                    point: x_grid.point(p),
                });
            }
            for q in 0..py {
                let f = acc[p * py + q] / d;
                density[p * py + q] = f;
                for (j, part) in partials.iter_mut().enumerate() {
                    let r = (1 + j) * px + p;
                    part[p * py + q] = (acc[r * py + q] - f * dsum[r]) / d;
                }
            }
        }
        Ok(GridEvaluation {
            x_grid: x_grid.clone(),
            y_grid: y_grid.clone(),
            density,
            partials,
        })
    }

    /// `∫_{cell} f̂(y | x_p) dy` for many query points and a tensor partition of `y`.
    ///
    /// `edges[j]` lists the increasing cell boundaries of axis `j`; cell index runs
    /// with axis 0 fastest. Entry `(p, cell)` is at `p * n_cells + cell`.
    pub fn cell_integrals_batch(&self, points: &[Vec<f64>], edges: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.require_gaussian("cell_integral")?;
        let (dx, dy) = (self.x_dim(), self.y_dim());
        if edges.len() != dy || edges.iter().any(|e| e.len() < 2) {
            return Err(Error::invalid("edges", "need at least two boundaries per successor axis"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != dx) {
            return Err(Error::DimensionMismatch {
                what: "query x",
                expected: dx,
                got: p.len(),
            });
        }
        let np = points.len();
        let counts: Vec<usize> = edges.iter().map(|e| e.len() - 1).collect();
        let ncells: usize = counts.iter().product();
        let cell_grid = TensorGrid::new(counts.iter().map(|&c| vec![0.0; c]).collect())?;
        let cell_index = grid_index_table(&cell_grid);

        let mut acc = vec![0.0; np * ncells];
        let mut dsum = vec![0.0; np];
        let mut at = vec![0.0; CHUNK * np];
        let mut bt = vec![0.0; CHUNK * ncells];
        let mut pax: Vec<Vec<f64>> = counts.iter().map(|&c| vec![0.0; c]).collect();
        let n = self.samples.len();
        let mut start = 0;
        while start < n {
            let cn = CHUNK.min(n - start);
            for c in 0..cn {
                let i = start + c;
                let xi = self.samples.x(i);
                for (p, x) in points.iter().enumerate() {
                    at[c * np + p] = self.kernel_at(x, xi, &self.hx);
                }
                let yi = self.samples.y(i);
                for j in 0..dy {
                    let h = self.hy[j];
                    for (k, v) in pax[j].iter_mut().enumerate() {
                        *v = math::std_normal_interval(
                            (edges[j][k] - yi[j]) / h,
                            (edges[j][k + 1] - yi[j]) / h,
                        );
                    }
                }
                let brow = &mut bt[c * ncells..(c + 1) * ncells];
                for (cell, b) in brow.iter_mut().enumerate() {
                    let ix = &cell_index[cell * dy..(cell + 1) * dy];
                    *b = ix.iter().enumerate().map(|(j, &k)| pax[j][k]).product();
                }
            }
            gemm_acc_strided(np, cn, ncells, &at, 1, np, &bt[..cn * ncells], &mut acc);
            for c in 0..cn {
                for (d, a) in dsum.iter_mut().zip(&at[c * np..(c + 1) * np]) {
                    *d += a;
                }
            }
            start += cn;
        }
        for p in 0..np {
            let d = dsum[p];
            if !(d > self.floor) {
                return Err(Error::DenominatorUnderflow {
                    point: points[p].clone(),
                });
            }
            for v in &mut acc[p * ncells..(p + 1) * ncells] {
                *v = (*v / d).clamp(0.0, 1.0);
            }
        }
        Ok(acc)
    }
}

fn grid_index_table(grid: &TensorGrid) -> Vec<usize> {
    let d = grid.dim();
    let mut table = vec![0usize; grid.len() * d];
    for p in 0..grid.len() {
        grid.unravel(p, &mut table[p * d..(p + 1) * d]);
    }
    table
}

/// Equal bandwidths `n^{-1/(6 + d_x + d_y)}` balancing the variance and bias of the
/// derivative estimate; `n^{-1/(6+2d)}` for full-state samples.
pub fn theoretical_bandwidth(n: usize, x_dim: usize, y_dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n < 2 {
        return Err(Error::invalid("n", "need at least two samples"));
    }
    if x_dim == 0 || y_dim == 0 {
        return Err(Error::invalid("dimension", "must be positive"));
    }
    let h = math::powf(n as f64, -1.0 / (6 + x_dim + y_dim) as f64);
    Ok((vec![h; x_dim], vec![h; y_dim]))
}

/// Scott's rule per dimension: `h_j = n^{-1/(d+4)} σ̂_j`, `σ̂_j` with divisor `n`.
///
/// `data` is row-major with `d` columns.
pub fn scott_bandwidth(data: &[f64], d: usize) -> Result<Vec<f64>> {
    if d == 0 || data.len() % d != 0 {
        return Err(Error::invalid("data", "length not a multiple of the dimension"));
    }
    let n = data.len() / d;
    if n < 2 {
        return Err(Error::invalid("n", "need at least two samples"));
    }
    let factor = math::powf(n as f64, -1.0 / (d + 4) as f64);
    (0..d)
        .map(|j| {
            let col: Vec<f64> = data.iter().skip(j).step_by(d).copied().collect();
            let mean = math::mean(&col);
            let dev: Vec<f64> = col.iter().map(|v| (v - mean) * (v - mean)).collect();
            let var = math::pairwise_sum(&dev) / n as f64;
            if !(var > 0.0) {
                return Err(Error::ZeroVariance(j));
            }
            Ok(factor * math::sqrt(var))
        })
        .collect()
}

/// Least-squares cross-validation score for a diagonal Gaussian bandwidth `h`:
///
/// ```text
/// CV(H) = 1/(n²|H|) Σ_i Σ_j K⋆K(H⁻¹(X_j - X_i)) - 2/(n(n-1)|H|) Σ_{i≠j} K(H⁻¹(X_j - X_i))
/// ```
///
/// with `K⋆K` the `N(0, 2)` density per coordinate.
pub fn cv_objective(data: &[f64], d: usize, h: &[f64]) -> Result<f64> {
    check_bandwidths("h", h)?;
    if h.len() != d || data.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            what: "bandwidth",
            expected: d,
            got: h.len(),
        });
    }
    let n = data.len() / d;
    if n < 2 {
        return Err(Error::invalid("n", "need at least two samples"));
    }
    let det: f64 = h.iter().product();
    let conv_norm = math::powf(1.0 / math::sqrt(4.0 * core::f64::consts::PI), d as f64);
    let kern_norm = math::powf(INV_SQRT_2PI, d as f64);
    let mut conv = 0.0;
    let mut cross = 0.0;
    for i in 0..n {
        let xi = &data[i * d..(i + 1) * d];
        // diagonal term of the double sum: K⋆K(0)
        conv += conv_norm;
        for j in (i + 1)..n {
            let xj = &data[j * d..(j + 1) * d];
            let q: f64 = xi
                .iter()
                .zip(xj)
                .zip(h)
                .map(|((a, b), h)| {
                    let u = (a - b) / h;
                    u * u
                })
                .sum();
            conv += 2.0 * conv_norm * math::exp(-0.25 * q);
            cross += 2.0 * kern_norm * math::exp(-0.5 * q);
        }
    }
    let nf = n as f64;
    Ok(conv / (nf * nf * det) - 2.0 * cross / (nf * (nf - 1.0) * det))
}

/// Evaluates [`cv_objective`] at `h · 1` for each candidate; returns the minimizer
/// (first on ties) and all scores.
pub fn cv_grid_search(data: &[f64], d: usize, candidates: &[f64]) -> Result<(f64, Vec<f64>)> {
    if candidates.is_empty() {
        return Err(Error::invalid("candidates", "empty"));
    }
    let scores = candidates
        .iter()
        .map(|&h| cv_objective(data, d, &vec![h; d]))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = k;
        }
    }
    Ok((candidates[best], scores))
}
