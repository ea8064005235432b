//! Grid partitions and interval MDP construction.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::kde::CondDensityEstimator;
use crate::math;
use crate::par;
use crate::rng::{stream_rng, StreamTag};
use crate::systems::{BuiltinSystem, TransitionSampler};

/// Label carried by the absorbing out-of-domain state.
pub const SINK_LABEL: &str = "out";

/// Tolerance for `Σ lo ≤ 1 ≤ Σ up`.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Uniform axis-aligned grid over a box plus one absorbing sink state.
///
/// Cells are numbered with axis 0 fastest; the sink has index `n_cells()`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPartition {
    domain: Rect,
    counts: Vec<usize>,
    delta: Vec<f64>,
    /// Fractional in-cell position of the representative point.
    offset: Vec<f64>,
    ap: Vec<String>,
    labels: Vec<Vec<String>>,
    warnings: Vec<String>,
}

/// Labelled region: proposition name and the boxes where it holds.
pub type LabelRegion = (String, Vec<Rect>);

pub fn build_grid(domain: &Rect, delta: &[f64], regions: &[LabelRegion]) -> Result<GridPartition> {
    let d = domain.dim();
    if !domain.is_bounded() {
        return Err(Error::invalid("domain", "must be bounded"));
    }
    let delta: Vec<f64> = match delta.len() {
        1 => vec![delta[0]; d],
        l if l == d => delta.to_vec(),
        l => {
            return Err(Error::DimensionMismatch {
                what: "delta",
                expected: d,
                got: l,
            })
        }
    };
    let mut counts = Vec::with_capacity(d);
    for (j, &dl) in delta.iter().enumerate() {
        if !(dl > 0.0 && dl.is_finite()) {
            return Err(Error::invalid("delta", "must be positive"));
        }
        let k = domain.width(j) / dl;
        let r = math::round(k);
        if r < 1.0 || math::abs(k - r) > 1e-9 * k {
            return Err(Error::NonDivisibleGrid { dim: j, delta: dl });
        }
        counts.push(r as usize);
    }
    let mut grid = GridPartition {
        domain: domain.clone(),
        delta: (0..d).map(|j| domain.width(j) / counts[j] as f64).collect(),
        counts,
        offset: vec![0.5; d],
        ap: Vec::new(),
        labels: Vec::new(),
        warnings: Vec::new(),
    };
    grid.assign_labels(regions)?;
    Ok(grid)
}

impl GridPartition {
    fn assign_labels(&mut self, regions: &[LabelRegion]) -> Result<()> {
        let n = self.n_cells();
        let mut labels = vec![Vec::new(); n + 1];
        let mut ap: Vec<String> = Vec::new();
        let scale = (0..self.dim()).map(|j| self.domain.width(j)).fold(0.0, f64::max);
        let tol = 1e-9 * scale;
        for (name, rects) in regions {
            if name == SINK_LABEL {
                return Err(Error::ReservedLabel(name.clone()));
            }
            if !ap.contains(name) {
                ap.push(name.clone());
            }
            if let Some(r) = rects.iter().find(|r| r.dim() != self.dim()) {
                return Err(Error::DimensionMismatch {
                    what: "label region",
                    expected: self.dim(),
                    got: r.dim(),
                });
            }
            let mut partial = 0usize;
            for (i, cell_labels) in labels.iter_mut().enumerate().take(n) {
                let cell = self.cell(i);
                if rects.iter().any(|r| r.contains_rect(&cell, tol)) {
                    if !cell_labels.contains(name) {
                        cell_labels.push(name.clone());
                    }
                } else if rects.iter().any(|r| r.overlaps(&cell, tol)) {
                    partial += 1;
                }
            }
            if partial > 0 {
                self.warnings.push(format!(
                    "{partial} cell(s) partially overlap region `{name}` and were left unlabelled"
                ));
            }
        }
        ap.push(SINK_LABEL.to_string());
        labels[n].push(SINK_LABEL.to_string());
        self.ap = ap;
        self.labels = labels;
        Ok(())
    }

    /// Moves every representative point to fractional position `t ∈ [0, 1]^d` in its cell.
    pub fn with_representative(mut self, t: &[f64]) -> Result<Self> {
        if t.len() != self.dim() || t.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("representative", "need one offset in [0, 1] per axis"));
        }
        self.offset = t.to_vec();
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn n_cells(&self) -> usize {
        self.counts.iter().product()
    }

    /// Cells plus the sink.
    pub fn n_states(&self) -> usize {
        self.n_cells() + 1
    }

    pub fn sink(&self) -> usize {
        self.n_cells()
    }

    pub fn ap(&self) -> &[String] {
        &self.ap
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn cell_index(&self, i: usize) -> Vec<usize> {
        let mut rem = i;
        self.counts
            .iter()
            .map(|&c| {
                let k = rem % c;
                rem /= c;
                k
            })
            .collect()
    }

    /// Boundary of cell index `k` along axis `j`; the last boundary is exactly `hi`.
    fn edge(&self, j: usize, k: usize) -> f64 {
        if k == self.counts[j] {
            self.domain.hi()[j]
        } else {
            self.domain.lo()[j] + k as f64 * self.delta[j]
        }
    }

    pub fn cell(&self, i: usize) -> Rect {
        let idx = self.cell_index(i);
        Rect::new(
            idx.iter().enumerate().map(|(j, &k)| self.edge(j, k)).collect(),
            idx.iter().enumerate().map(|(j, &k)| self.edge(j, k + 1)).collect(),
        )
        .expect("cells have positive width")
    }

    pub fn representative(&self, i: usize) -> Vec<f64> {
        self.cell(i).point_at(&self.offset)
    }

    /// Per-axis cell boundaries, `counts[j] + 1` values each.
    pub fn edges(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|j| (0..=self.counts[j]).map(|k| self.edge(j, k)).collect())
            .collect()
    }

    /// Cell containing `y`; cells are half-open except on the upper domain face.
    pub fn locate(&self, y: &[f64]) -> Option<usize> {
        let mut idx = 0;
        let mut stride = 1;
        for (j, v) in y.iter().enumerate() {
            let (lo, hi) = (self.domain.lo()[j], self.domain.hi()[j]);
            if !(*v >= lo && *v <= hi) {
                return None;
            }
            let c = self.counts[j];
            let k = (math::floor((v - lo) / self.delta[j]) as usize).min(c - 1);
            idx += k * stride;
            stride *= c;
        }
        Some(idx)
    }
}

/// Grid description carried by an IMDP built on a [`GridPartition`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridMeta {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridMeta {
    pub fn of(partition: &GridPartition) -> Self {
        Self {
            lo: partition.domain().lo().to_vec(),
            hi: partition.domain().hi().to_vec(),
            counts: partition.counts().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "method"))]
pub enum Provenance {
    Empirical {
        eps_bar: f64,
        beta_bar: f64,
        samples_per_row: u64,
    },
    Npe {
        n: Vec<usize>,
        h_x: Vec<f64>,
        h_y: Vec<f64>,
        x_grid: usize,
    },
    ModelBased,
    Custom,
}

/// Interval MDP with dense per-action bound matrices (row-major, `n × n`).
#[derive(Debug, Clone, PartialEq)]
pub struct Imdp {
    n: usize,
    actions: Vec<String>,
    lo: Vec<Vec<f64>>,
    up: Vec<Vec<f64>>,
    ap: Vec<String>,
    labels: Vec<Vec<String>>,
    provenance: Provenance,
    grid: Option<GridMeta>,
}

impl Imdp {
    /// Validates all invariants: `0 ≤ lo ≤ up ≤ 1`, `Σ lo ≤ 1 ≤ Σ up` per row, labels
    /// drawn from `ap`, and every state labelled [`SINK_LABEL`] absorbing.
    pub fn new(
        actions: Vec<String>,
        lo: Vec<Vec<f64>>,
        up: Vec<Vec<f64>>,
        ap: Vec<String>,
        labels: Vec<Vec<String>>,
        provenance: Provenance,
    ) -> Result<Self> {
        let n = labels.len();
        let imdp = Self {
            n,
            actions,
            lo,
            up,
            ap,
            labels,
            provenance,
            grid: None,
        };
        imdp.validate()?;
        Ok(imdp)
    }

    pub fn with_grid(mut self, grid: GridMeta) -> Result<Self> {
        let cells: usize = grid.counts.iter().product();
        if cells + 1 != self.n && cells != self.n {
            return Err(Error::InvalidImdp(format!(
                "grid has {cells} cells but the IMDP has {} states",
                self.n
            )));
        }
        self.grid = Some(grid);
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let bad = |m: String| Err(Error::InvalidImdp(m));
        if n == 0 {
            return bad("no states".into());
        }
        if self.actions.is_empty() {
            return bad("no actions".into());
        }
        if self.lo.len() != self.actions.len() || self.up.len() != self.actions.len() {
            return bad("one lower and one upper matrix per action required".into());
        }
        for (s, ls) in self.labels.iter().enumerate() {
            if let Some(l) = ls.iter().find(|l| !self.ap.contains(l)) {
                return bad(format!("state {s} carries undeclared label `{l}`"));
            }
        }
        for a in 0..self.actions.len() {
            if self.lo[a].len() != n * n || self.up[a].len() != n * n {
                return bad(format!("action {a}: matrices must be {n} x {n}"));
            }
            for s in 0..n {
                let (lo, up) = self.row(a, s);
                for (t, (l, u)) in lo.iter().zip(up).enumerate() {
                    if !(0.0 <= *l && l <= u && *u <= 1.0) {
                        return bad(format!(
                            "action {a}, entry ({s}, {t}): need 0 <= lo <= up <= 1, got [{l}, {u}]"
                        ));
                    }
                }
                let sl = math::pairwise_sum(lo);
                let su = math::pairwise_sum(up);
                if sl > 1.0 + ROW_SUM_TOL || su < 1.0 - ROW_SUM_TOL {
                    return Err(Error::InfeasibleRow {
                        state: s,
                        action: a,
                        reason: format!("sum lo = {sl}, sum up = {su}"),
                    });
                }
                if self.labels[s].iter().any(|l| l == SINK_LABEL)
                    && !(lo[s] == 1.0 && up[s] == 1.0)
                {
                    return bad(format!("sink state {s} is not absorbing under action {a}"));
                }
            }
        }
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn n_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn lo(&self, action: usize) -> &[f64] {
        &self.lo[action]
    }

    pub fn up(&self, action: usize) -> &[f64] {
        &self.up[action]
    }

    pub fn row(&self, action: usize, state: usize) -> (&[f64], &[f64]) {
        let r = state * self.n..(state + 1) * self.n;
        (&self.lo[action][r.clone()], &self.up[action][r])
    }

    pub fn ap(&self) -> &[String] {
        &self.ap
    }

    pub fn labels(&self) -> &[Vec<String>] {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn grid(&self) -> Option<&GridMeta> {
        self.grid.as_ref()
    }

    /// True when `lo == up` everywhere.
    pub fn is_degenerate(&self) -> bool {
        self.lo == self.up
    }

    /// Mean of `up - lo` over all entries with `up > 0`, every action.
    pub fn mean_interval_width(&self) -> f64 {
        let widths: Vec<f64> = self
            .lo
            .iter()
            .zip(&self.up)
            .flat_map(|(l, u)| l.iter().zip(u).filter(|p| *p.1 > 0.0).map(|(l, u)| u - l))
            .collect();
        if widths.is_empty() {
            0.0
        } else {
            math::mean(&widths)
        }
    }
}

/// Sample limits for the empirical builder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SampleBudget {
    pub per_row: u64,
    pub total: u64,
}

impl Default for SampleBudget {
    fn default() -> Self {
        Self {
            per_row: 10_000_000,
            total: 100_000_000,
        }
    }
}

/// Smallest `N ≥ 1 / (4 β̄ ε̄²)`.
pub fn chebyshev_sample_size(eps_bar: f64, beta_bar: f64) -> Result<u64> {
    if !(eps_bar > 0.0 && eps_bar <= 1.0) {
        return Err(Error::invalid("eps_bar", format!("must lie in (0, 1], got {eps_bar}")));
    }
    if !(beta_bar > 0.0 && beta_bar < 1.0) {
        return Err(Error::invalid("beta_bar", format!("must lie in (0, 1), got {beta_bar}")));
    }
    let raw = 1.0 / (4.0 * beta_bar * eps_bar * eps_bar);
    if !(raw < 1.8e19) {
        return Err(Error::BudgetExceeded {
            required: u64::MAX,
            budget: u64::MAX,
        });
    }
    // Absorb representation error so that exact quotients are not bumped up by one.
    let r = math::round(raw);
    let n = if math::abs(raw - r) <= 1e-9 * raw { r } else { math::ceil(raw) };
    Ok((n as u64).max(1))
}

/// Per-entry accuracy `ε̄ = ε_g / (2 k n_Q)` that keeps `k`-step probabilities within `ε_g`.
pub fn eps_bar_from_global(eps_g: f64, k: usize, n_q: usize) -> Result<f64> {
    if !(eps_g > 0.0 && eps_g < 1.0) {
        return Err(Error::invalid("eps_g", format!("must lie in (0, 1), got {eps_g}")));
    }
    if k == 0 || n_q == 0 {
        return Err(Error::invalid("k, n_Q", "must be at least 1"));
    }
    Ok(eps_g / (2.0 * k as f64 * n_q as f64))
}

fn action_indices<S: TransitionSampler + ?Sized>(system: &S, actions: &[String]) -> Result<Vec<usize>> {
    if actions.is_empty() {
        return Ok((0..system.spec().actions().len()).collect());
    }
    actions.iter().map(|a| system.spec().action_index(a)).collect()
}

fn check_partition<S: TransitionSampler + ?Sized>(system: &S, partition: &GridPartition) -> Result<()> {
    if system.spec().state_dim() != partition.dim() {
        return Err(Error::DimensionMismatch {
            what: "partition",
            expected: system.spec().state_dim(),
            got: partition.dim(),
        });
    }
    Ok(())
}

fn sink_row(n: usize) -> Vec<f64> {
    let mut r = vec![0.0; n];
    r[n - 1] = 1.0;
    r
}

/// Frequencies of `N` successors drawn from the representative point, widened by
/// `± ε̄`. Successors outside the domain count toward the sink. `actions` empty
/// means every action of the system.
pub fn empirical_imdp<S: TransitionSampler + ?Sized>(
    system: &S,
    partition: &GridPartition,
    actions: &[String],
    eps_bar: f64,
    beta_bar: f64,
    budget: SampleBudget,
    seed: u64,
) -> Result<Imdp> {
    check_partition(system, partition)?;
    let acts = action_indices(system, actions)?;
    let big_n = chebyshev_sample_size(eps_bar, beta_bar)?;
    if big_n > budget.per_row {
        return Err(Error::BudgetExceeded {
            required: big_n,
            budget: budget.per_row,
        });
    }
    let n_cells = partition.n_cells();
    let total = big_n.saturating_mul((n_cells * acts.len()) as u64);
    if total > budget.total {
        return Err(Error::BudgetExceeded {
            required: total,
            budget: budget.total,
        });
    }
    let n = partition.n_states();
    let d = partition.dim();
    let rows = par::map_indexed(acts.len() * n_cells, |r| {
        let (ai, cell) = (r / n_cells, r % n_cells);
        let a = acts[ai];
        let mut rng = stream_rng(seed, StreamTag::EmpiricalRow, (a * n + cell) as u64);
        let x = partition.representative(cell);
        let mut counts = vec![0u64; n];
        let mut y = vec![0.0; d];
        for _ in 0..big_n {
            system.sample_into(&x, a, &mut rng, &mut y);
            counts[partition.locate(&y).unwrap_or(n - 1)] += 1;
        }
        let mut lo = vec![0.0; n];
        let mut up = vec![0.0; n];
        for t in 0..n {
            let p = counts[t] as f64 / big_n as f64;
            lo[t] = (p - eps_bar).max(0.0);
            up[t] = (p + eps_bar).min(1.0);
        }
        (lo, up)
    });
    let mut lo = vec![Vec::with_capacity(n * n); acts.len()];
    let mut up = lo.clone();
    for (r, (l, u)) in rows.into_iter().enumerate() {
        let ai = r / n_cells;
        lo[ai].extend(l);
        up[ai].extend(u);
        if (r + 1) % n_cells == 0 {
            lo[ai].extend(sink_row(n));
            up[ai].extend(sink_row(n));
        }
    }
    finish(
        system.spec().actions(),
        &acts,
        lo,
        up,
        partition,
        Provenance::Empirical {
            eps_bar,
            beta_bar,
            samples_per_row: big_n,
        },
    )
}

fn finish(
    names: &[String],
    acts: &[usize],
    lo: Vec<Vec<f64>>,
    up: Vec<Vec<f64>>,
    partition: &GridPartition,
    provenance: Provenance,
) -> Result<Imdp> {
    Imdp::new(
        acts.iter().map(|&a| names[a].clone()).collect(),
        lo,
        up,
        partition.ap().to_vec(),
        partition.labels().to_vec(),
        provenance,
    )?
    .with_grid(GridMeta::of(partition))
}

/// Query points used for the min/max over a cell: the centre alone for `g = 1`,
/// otherwise the corners plus a `g^d` interior lattice at `lo + k w / (g + 1)`.
pub fn cell_query_points(cell: &Rect, g: usize) -> Vec<Vec<f64>> {
    if g <= 1 {
        return vec![cell.center()];
    }
    let d = cell.dim();
    let mut pts = cell.corners();
    let total = g.pow(d as u32);
    for idx in 0..total {
        let mut rem = idx;
        let t: Vec<f64> = (0..d)
            .map(|_| {
                let k = rem % g;
                rem /= g;
                (k + 1) as f64 / (g + 1) as f64
            })
            .collect();
        pts.push(cell.point_at(&t));
    }
    pts
}

/// Interval bounds from kernel estimates, one estimator per action in action order.
///
/// Entry `(i, j)` spans the min and max over [`cell_query_points`] of cell `i` of
/// `∫_{cell j} f̂(y | x) dy`; the sink column takes `[1 - Σ up, 1 - Σ lo]`.
pub fn npe_imdp(
    estimators: &[CondDensityEstimator],
    actions: &[String],
    partition: &GridPartition,
    x_grid: usize,
) -> Result<Imdp> {
    if estimators.is_empty() || estimators.len() != actions.len() {
        return Err(Error::invalid("estimators", "need exactly one estimator per action"));
    }
    let d = partition.dim();
    for e in estimators {
        if e.x_dim() != d || e.y_dim() != d {
            return Err(Error::DimensionMismatch {
                what: "estimator",
                expected: d,
                got: e.x_dim(),
            });
        }
    }
    if x_grid == 0 {
        return Err(Error::invalid("x_grid", "must be at least 1"));
    }
    let n_cells = partition.n_cells();
    let n = partition.n_states();
    let edges = partition.edges();
    const CELLS_PER_TASK: usize = 32;
    let tasks = n_cells.div_ceil(CELLS_PER_TASK);

    let mut lo_all = Vec::with_capacity(estimators.len());
    let mut up_all = Vec::with_capacity(estimators.len());
    for est in estimators {
        let blocks = par::map_indexed(tasks, |t| -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
            let cells = t * CELLS_PER_TASK..((t + 1) * CELLS_PER_TASK).min(n_cells);
            let mut points = Vec::new();
            let mut spans = Vec::new();
            for i in cells {
                let pts = cell_query_points(&partition.cell(i), x_grid);
                spans.push((points.len(), pts.len()));
                points.extend(pts);
            }
            let vals = est.cell_integrals_batch(&points, &edges)?;
            Ok(spans
                .into_iter()
                .map(|(start, len)| {
                    let mut lo = vec![f64::INFINITY; n];
                    let mut up = vec![0.0f64; n];
                    for p in start..start + len {
                        let v = &vals[p * n_cells..(p + 1) * n_cells];
                        for j in 0..n_cells {
                            lo[j] = lo[j].min(v[j]);
                            up[j] = up[j].max(v[j]);
                        }
                    }
                    let sl = math::pairwise_sum(&lo[..n_cells]);
                    let su = math::pairwise_sum(&up[..n_cells]);
                    lo[n - 1] = (1.0 - su).clamp(0.0, 1.0);
                    up[n - 1] = (1.0 - sl).clamp(0.0, 1.0);
                    (lo, up)
                })
                .collect())
        });
        let mut lo = Vec::with_capacity(n * n);
        let mut up = Vec::with_capacity(n * n);
        for b in blocks {
            for (l, u) in b? {
                lo.extend(l);
                up.extend(u);
            }
        }
        lo.extend(sink_row(n));
        up.extend(sink_row(n));
        lo_all.push(lo);
        up_all.push(up);
    }
    let acts: Vec<usize> = (0..actions.len()).collect();
    finish(
        actions,
        &acts,
        lo_all,
        up_all,
        partition,
        Provenance::Npe {
            n: estimators.iter().map(|e| e.samples().len()).collect(),
            h_x: estimators[0].kernel().h_x().to_vec(),
            h_y: estimators[0].kernel().h_y().to_vec(),
            x_grid,
        },
    )
}

/// Exact transition probabilities from each representative point (point intervals).
pub fn model_based_mdp(system: &BuiltinSystem, partition: &GridPartition) -> Result<Imdp> {
    check_partition(system, partition)?;
    let acts: Vec<usize> = (0..system.spec().actions().len()).collect();
    let n_cells = partition.n_cells();
    let n = partition.n_states();
    let edges = partition.edges();
    let counts = partition.counts().to_vec();
    let d = partition.dim();
    let mut mats = Vec::with_capacity(acts.len());
    for &a in &acts {
        let rows = par::map_indexed(n_cells, |i| -> Result<Vec<f64>> {
            let x = partition.representative(i);
            let mut row = vec![0.0; n];
            for comp in system.successor_law(&x, a)? {
                if comp.std.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::NoClosedForm("degenerate (zero-variance) noise"));
                }
                let axis: Vec<Vec<f64>> = (0..d)
                    .map(|j| {
                        (0..counts[j])
                            .map(|k| {
                                math::std_normal_interval(
                                    (edges[j][k] - comp.mean[j]) / comp.std[j],
                                    (edges[j][k + 1] - comp.mean[j]) / comp.std[j],
                                )
                            })
                            .collect()
                    })
                    .collect();
                let mut idx = vec![0usize; d];
                for (cell, r) in row.iter_mut().enumerate().take(n_cells) {
                    let mut rem = cell;
                    for (j, v) in idx.iter_mut().enumerate() {
                        *v = rem % counts[j];
                        rem /= counts[j];
                    }
                    let p: f64 = idx.iter().enumerate().map(|(j, &k)| axis[j][k]).product();
                    *r += comp.weight * p;
                }
            }
            let inside = math::pairwise_sum(&row[..n_cells]);
            row[n - 1] = (1.0 - inside).clamp(0.0, 1.0);
            Ok(row)
        });
        let mut m = Vec::with_capacity(n * n);
        for r in rows {
            m.extend(r?);
        }
        m.extend(sink_row(n));
        mats.push(m);
    }
    finish(
        system.spec().actions(),
        &acts,
        mats.clone(),
        mats,
        partition,
        Provenance::ModelBased,
    )
}
