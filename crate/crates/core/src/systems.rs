//! Black-box system interface, the built-in benchmark systems and sample generation.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::Rect;
use crate::linalg::Matrix;
use crate::math;
use crate::rng::{stream_rng, StreamRng, StreamTag};

/// State space, action set and the domains `D_X`, `D_Y` of a system.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SystemSpec {
    state_dim: usize,
    actions: Vec<String>,
    domain: Rect,
    successor_domain: Rect,
}

impl SystemSpec {
    pub fn new(actions: Vec<String>, domain: Rect, successor_domain: Rect) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::invalid("action_set", "must not be empty"));
        }
        if domain.dim() != successor_domain.dim() {
            return Err(Error::DimensionMismatch {
                what: "successor domain",
                expected: domain.dim(),
                got: successor_domain.dim(),
            });
        }
        if !domain.is_bounded() {
            return Err(Error::invalid("domain", "must be bounded"));
        }
        Ok(Self {
            state_dim: domain.dim(),
            actions,
            domain,
            successor_domain,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn actions(&self) -> &[String] {
        &self.actions
    }

    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    pub fn successor_domain(&self) -> &Rect {
        &self.successor_domain
    }

    pub fn action_index(&self, action: &str) -> Result<usize> {
        self.actions
            .iter()
            .position(|a| a == action)
            .ok_or_else(|| Error::UnknownAction(action.to_string()))
    }
}

/// Paired observations `(x_i, y_i)` for one action, stored flat and row-major.
///
/// `x_dim` and `y_dim` coincide for full-state samples; they differ for the
/// per-coordinate factors used by compositional estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionSamples {
    action: String,
    x_dim: usize,
    y_dim: usize,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl TransitionSamples {
    pub fn new(
        action: impl Into<String>,
        x_dim: usize,
        y_dim: usize,
        xs: Vec<f64>,
        ys: Vec<f64>,
    ) -> Result<Self> {
        if x_dim == 0 || y_dim == 0 {
            return Err(Error::invalid("samples", "dimensions must be positive"));
        }
        if xs.len() % x_dim != 0 || ys.len() % y_dim != 0 {
            return Err(Error::invalid("samples", "flat length not a multiple of the dimension"));
        }
        let n = xs.len() / x_dim;
        if ys.len() / y_dim != n {
            return Err(Error::DimensionMismatch {
                what: "successor count",
                expected: n,
                got: ys.len() / y_dim,
            });
        }
        if n == 0 {
            return Err(Error::NoSamples);
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::invalid("samples", "non-finite value"));
        }
        Ok(Self {
            action: action.into(),
            x_dim,
            y_dim,
            xs,
            ys,
        })
    }

    pub fn from_pairs(action: impl Into<String>, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Self> {
        let first = pairs.first().ok_or(Error::NoSamples)?;
        let (dx, dy) = (first.0.len(), first.1.len());
        let mut xs = Vec::with_capacity(pairs.len() * dx);
        let mut ys = Vec::with_capacity(pairs.len() * dy);
        for (x, y) in pairs {
            if x.len() != dx || y.len() != dy {
                return Err(Error::DimensionMismatch {
                    what: "sample pair",
                    expected: dx,
                    got: x.len(),
                });
            }
            xs.extend_from_slice(x);
            ys.extend_from_slice(y);
        }
        Self::new(action, dx, dy, xs, ys)
    }

    pub fn action(&self) -> &str {
        &self.action
    }

    pub fn len(&self) -> usize {
        self.xs.len() / self.x_dim
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn x_dim(&self) -> usize {
        self.x_dim
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.x_dim..(i + 1) * self.x_dim]
    }

    pub fn y(&self, i: usize) -> &[f64] {
        &self.ys[i * self.y_dim..(i + 1) * self.y_dim]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Keeps the `x` coordinates in `x_coords` and the single successor coordinate `y_coord`.
    pub fn factor(&self, x_coords: &[usize], y_coord: usize) -> Result<Self> {
        if x_coords.is_empty() || x_coords.iter().any(|&c| c >= self.x_dim) || y_coord >= self.y_dim
        {
            return Err(Error::invalid("mask", "coordinate out of range"));
        }
        let n = self.len();
        let mut xs = Vec::with_capacity(n * x_coords.len());
        let mut ys = Vec::with_capacity(n);
        for i in 0..n {
            let x = self.x(i);
            xs.extend(x_coords.iter().map(|&c| x[c]));
            ys.push(self.y(i)[y_coord]);
        }
        Self::new(self.action.clone(), x_coords.len(), 1, xs, ys)
    }
}

/// A system that can be queried for successor states.
pub trait TransitionSampler: Sync {
    fn spec(&self) -> &SystemSpec;

    /// Writes one draw of `f(x, a, w)` into `out`. `x` is not range-checked here.
    fn sample_into(&self, x: &[f64], action: usize, rng: &mut StreamRng, out: &mut [f64]);

    /// One successor of `x` under the named action.
    fn sample_transition(&self, x: &[f64], action: &str, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let spec = self.spec();
        let a = spec.action_index(action)?;
        if x.len() != spec.state_dim() {
            return Err(Error::DimensionMismatch {
                what: "state",
                expected: spec.state_dim(),
                got: x.len(),
            });
        }
        if !spec.domain().contains(x) {
            return Err(Error::OutsideDomain { point: x.to_vec() });
        }
        let mut out = vec![0.0; spec.state_dim()];
        self.sample_into(x, a, rng, &mut out);
        Ok(out)
    }
}

/// Draws `n` pairs with `x` uniform on `domain` and `y ~ f(x, action, ·)`.
pub fn draw_uniform_pairs<S: TransitionSampler + ?Sized>(
    system: &S,
    action: usize,
    domain: &Rect,
    n: usize,
    rng: &mut StreamRng,
) -> Result<TransitionSamples> {
    let spec = system.spec();
    let d = spec.state_dim();
    if domain.dim() != d {
        return Err(Error::DimensionMismatch {
            what: "sampling domain",
            expected: d,
            got: domain.dim(),
        });
    }
    let name = spec
        .actions()
        .get(action)
        .ok_or_else(|| Error::UnknownAction(format!("#{action}")))?
        .clone();
    if n == 0 {
        return Err(Error::NoSamples);
    }
    let mut xs = vec![0.0; n * d];
    let mut ys = vec![0.0; n * d];
    for i in 0..n {
        let x = &mut xs[i * d..(i + 1) * d];
        for (j, v) in x.iter_mut().enumerate() {
            let u: f64 = rng.random();
            *v = domain.lo()[j] + u * domain.width(j);
        }
        system.sample_into(&xs[i * d..(i + 1) * d], action, rng, &mut ys[i * d..(i + 1) * d]);
    }
    TransitionSamples::new(name, d, d, xs, ys)
}

/// `n` transitions with `x` uniform on the system domain, reproducible from `seed`.
pub fn generate_samples<S: TransitionSampler + ?Sized>(
    system: &S,
    action: &str,
    n: usize,
    seed: u64,
) -> Result<TransitionSamples> {
    let a = system.spec().action_index(action)?;
    let mut rng = stream_rng(seed, StreamTag::Samples, a as u64);
    draw_uniform_pairs(system, a, system.spec().domain(), n, &mut rng)
}

/// One Gaussian component with diagonal covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub weight: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Parameters of the 7-state single-track vehicle model.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CarParams {
    pub l_wb: f64,
    pub mass: f64,
    pub mu: f64,
    pub l_f: f64,
    pub l_r: f64,
    pub h_cg: f64,
    pub i_z: f64,
    pub c_sf: f64,
    pub c_sr: f64,
    pub tau: f64,
    pub gravity: f64,
    /// Steering-rate input `v_1`.
    pub v1: f64,
    /// Acceleration input `v_2`.
    pub v2: f64,
    /// Clamp bound for the steering-rate input.
    pub sat1_bound: f64,
    /// Clamp bound for the acceleration input.
    pub sat2_bound: f64,
    pub noise_scale: f64,
}

impl Default for CarParams {
    fn default() -> Self {
        Self {
            l_wb: 2.5789,
            mass: 1093.3,
            mu: 1.0489,
            l_f: 1.156,
            l_r: 1.422,
            h_cg: 0.574,
            i_z: 1791.6,
            c_sf: 20.89,
            c_sr: 20.89,
            tau: 0.001,
            gravity: 9.81,
            v1: 0.0,
            v2: 0.0,
            sat1_bound: 0.4,
            sat2_bound: 11.5,
            noise_scale: 0.5,
        }
    }
}

impl CarParams {
    /// Noise-free successor.
    pub fn drift(&self, x: &[f64], out: &mut [f64]) {
        let (x3, x4, x5, x6, x7) = (x[2], x[3], x[4], x[5], x[6]);
        let tau = self.tau;
        let sat1 = self.v1.clamp(-self.sat1_bound, self.sat1_bound);
        let sat2 = self.v2.clamp(-self.sat2_bound, self.sat2_bound);
        let rates: [f64; 5] = if math::abs(x4) < 0.1 {
            let c3 = math::cos(x3);
            [
                x4 * math::cos(x5),
                x4 * math::sin(x5),
                x4 / self.l_wb * math::tan(x3),
                self.v2 / self.l_wb * math::tan(x3) + x4 / (self.l_wb * c3 * c3) * self.v1,
                0.0,
            ]
        } else {
            let g = self.gravity;
            let front = g * self.l_r - self.v2 * self.h_cg;
            let rear = g * self.l_f + self.v2 * self.h_cg;
            let b6 = self.mu * self.mass / (self.i_z * (self.l_r + self.l_f))
                * (self.l_f * self.c_sf * front * x3
                    + (self.l_r * self.c_sr * rear - self.l_f * self.c_sf * front) * x7
                    - (self.l_f * self.l_f * self.c_sf * front
                        + self.l_r * self.l_r * self.c_sr * rear)
                        * x6
                        / x4);
            let b7 = self.mu / (x4 * (self.l_r + self.l_f))
                * (self.c_sf * front * x3
                    - (self.c_sr * rear + self.c_sf * front) * x7
                    - (self.l_f * self.c_sf * front - self.l_r * self.c_sr * rear) * x6 / x4)
                - x6;
            [
                x4 * math::cos(x5 + x7),
                x4 * math::sin(x5 + x7),
                x6,
                b6,
                b7,
            ]
        };
        out[0] = x[0] + tau * rates[0];
        out[1] = x[1] + tau * rates[1];
        out[2] = x3 + tau * sat1;
        out[3] = x4 + tau * sat2;
        out[4] = x5 + tau * rates[2];
        out[5] = x6 + tau * rates[3];
        out[6] = x7 + tau * rates[4];
    }
}

/// Closed-form system families used for validation and case studies.
#[derive(Debug, Clone, PartialEq)]
pub enum SystemKind {
    /// `y = A x + w`, `w ~ N(mean, cov)`.
    LinearGaussian { a: Matrix, mean: Vec<f64>, cov: Matrix },
    /// One linear map per action, shared Gaussian noise.
    SwitchedGaussian {
        a: Vec<Matrix>,
        mean: Vec<f64>,
        cov: Matrix,
    },
    /// `y = a x + w` with `w` a two-component Gaussian mixture (weight `p` on the first).
    UnivariateMixture {
        a: f64,
        mu1: f64,
        mu2: f64,
        sigma1: f64,
        sigma2: f64,
        p: f64,
    },
    /// Two-dimensional `y = A x + w`.
    BivariateGaussian { a: Matrix, mean: Vec<f64>, cov: Matrix },
    Car7d(CarParams),
}

impl SystemKind {
    pub fn name(&self) -> &'static str {
        match self {
            SystemKind::LinearGaussian { .. } => "linear_gaussian",
            SystemKind::SwitchedGaussian { .. } => "switched_gaussian",
            SystemKind::UnivariateMixture { .. } => "univariate_mixture",
            SystemKind::BivariateGaussian { .. } => "bivariate_gaussian",
            SystemKind::Car7d(_) => "car7d",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BuiltinSystem {
    kind: SystemKind,
    spec: SystemSpec,
    noise_factor: Option<Matrix>,
    zero_noise: bool,
}

fn check_linear(a: &Matrix, mean: &[f64], cov: &Matrix, d: usize) -> Result<Matrix> {
    if a.rows() != d || a.cols() != d {
        return Err(Error::DimensionMismatch {
            what: "system matrix",
            expected: d,
            got: a.rows(),
        });
    }
    if mean.len() != d || cov.rows() != d || cov.cols() != d {
        return Err(Error::DimensionMismatch {
            what: "noise parameters",
            expected: d,
            got: mean.len(),
        });
    }
    cov.cholesky()
}

impl BuiltinSystem {
    pub fn new(kind: SystemKind, actions: Vec<String>, domain: Rect) -> Result<Self> {
        let d = domain.dim();
        let noise_factor = match &kind {
            SystemKind::LinearGaussian { a, mean, cov } => Some(check_linear(a, mean, cov, d)?),
            SystemKind::BivariateGaussian { a, mean, cov } => {
                if d != 2 {
                    return Err(Error::DimensionMismatch {
                        what: "bivariate system",
                        expected: 2,
                        got: d,
                    });
                }
                Some(check_linear(a, mean, cov, d)?)
            }
            SystemKind::SwitchedGaussian { a, mean, cov } => {
                if a.len() != actions.len() {
                    return Err(Error::DimensionMismatch {
                        what: "switched modes",
                        expected: actions.len(),
                        got: a.len(),
                    });
                }
                let mut l = None;
                for m in a {
                    l = Some(check_linear(m, mean, cov, d)?);
                }
                l
            }
            SystemKind::UnivariateMixture {
                sigma1, sigma2, p, ..
            } => {
                if d != 1 {
                    return Err(Error::DimensionMismatch {
                        what: "mixture system",
                        expected: 1,
                        got: d,
                    });
                }
                if !(0.0..=1.0).contains(p) {
                    return Err(Error::invalid("p", "mixture weight must lie in [0, 1]"));
                }
                if *sigma1 <= 0.0 || *sigma2 <= 0.0 {
                    return Err(Error::NotPositiveDefinite);
                }
                None
            }
            SystemKind::Car7d(_) => {
                if d != 7 {
                    return Err(Error::DimensionMismatch {
                        what: "car model",
                        expected: 7,
                        got: d,
                    });
                }
                None
            }
        };
        let spec = SystemSpec::new(actions, domain.clone(), domain)?;
        Ok(Self {
            kind,
            spec,
            noise_factor,
            zero_noise: false,
        })
    }

    pub fn with_successor_domain(mut self, successor_domain: Rect) -> Result<Self> {
        self.spec = SystemSpec::new(
            self.spec.actions.clone(),
            self.spec.domain.clone(),
            successor_domain,
        )?;
        Ok(self)
    }

    /// Test hook: every noise term is replaced by zero.
    pub fn with_zero_noise(mut self, zero_noise: bool) -> Self {
        self.zero_noise = zero_noise;
        self
    }

    pub fn kind(&self) -> &SystemKind {
        &self.kind
    }

    fn linear_parts(&self, action: usize) -> Option<(&Matrix, &[f64])> {
        match &self.kind {
            SystemKind::LinearGaussian { a, mean, .. }
            | SystemKind::BivariateGaussian { a, mean, .. } => Some((a, mean)),
            SystemKind::SwitchedGaussian { a, mean, .. } => Some((&a[action], mean)),
            _ => None,
        }
    }

    /// Exact successor law at `x` as a mixture of diagonal Gaussians.
    pub fn successor_law(&self, x: &[f64], action: usize) -> Result<Vec<GaussianComponent>> {
        let d = self.spec.state_dim();
        if let Some((a, mean)) = self.linear_parts(action) {
            let cov = match &self.kind {
                SystemKind::LinearGaussian { cov, .. }
                | SystemKind::BivariateGaussian { cov, .. }
                | SystemKind::SwitchedGaussian { cov, .. } => cov,
                _ => unreachable!(),
            };
            if !cov.is_diagonal() {
                return Err(Error::NonDiagonalCovariance);
            }
            let mut m = vec![0.0; d];
            a.mul_vec(x, &mut m);
            for (v, mu) in m.iter_mut().zip(mean) {
                *v += mu;
            }
            let std = cov.diagonal().into_iter().map(math::sqrt).collect();
            return Ok(vec![GaussianComponent {
                weight: 1.0,
                mean: m,
                std,
            }]);
        }
        match &self.kind {
            SystemKind::UnivariateMixture {
                a,
                mu1,
                mu2,
                sigma1,
                sigma2,
                p,
            } => Ok(vec![
                GaussianComponent {
                    weight: *p,
                    mean: vec![a * x[0] + mu1],
                    std: vec![*sigma1],
                },
                GaussianComponent {
                    weight: 1.0 - p,
                    mean: vec![a * x[0] + mu2],
                    std: vec![*sigma2],
                },
            ]),
            SystemKind::Car7d(params) => {
                let mut m = vec![0.0; 7];
                params.drift(x, &mut m);
                Ok(vec![GaussianComponent {
                    weight: 1.0,
                    mean: m,
                    std: vec![params.noise_scale; 7],
                }])
            }
            _ => unreachable!(),
        }
    }
}

impl TransitionSampler for BuiltinSystem {
    fn spec(&self) -> &SystemSpec {
        &self.spec
    }

    fn sample_into(&self, x: &[f64], action: usize, rng: &mut StreamRng, out: &mut [f64]) {
        let d = self.spec.state_dim();
        if let Some((a, mean)) = self.linear_parts(action) {
            a.mul_vec(x, out);
            if self.zero_noise {
                return;
            }
            let l = self.noise_factor.as_ref().expect("validated at construction");
            let mut z = [0.0f64; 16];
            let mut zv;
            let z = if d <= 16 {
                &mut z[..d]
            } else {
                zv = vec![0.0; d];
                &mut zv[..]
            };
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for i in 0..d {
                let row = l.row(i);
                out[i] += mean[i] + (0..=i).map(|k| row[k] * z[k]).sum::<f64>();
            }
            return;
        }
        match &self.kind {
            SystemKind::UnivariateMixture {
                a,
                mu1,
                mu2,
                sigma1,
                sigma2,
                p,
            } => {
                out[0] = a * x[0];
                if !self.zero_noise {
                    let first = rng.random::<f64>() < *p;
                    let z: f64 = rng.sample(StandardNormal);
                    out[0] += if first { mu1 + sigma1 * z } else { mu2 + sigma2 * z };
                }
            }
            SystemKind::Car7d(params) => {
                params.drift(x, out);
                if !self.zero_noise {
                    for v in out.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *v += params.noise_scale * z;
                    }
                }
            }
            _ => unreachable!(),
        }
    }
}

/// The validation and case-study systems with their reference parameters.
pub mod presets {
    use super::*;

    fn single() -> Vec<String> {
        vec!["a1".to_string()]
    }

    fn rect(b: &[(f64, f64)]) -> Rect {
        Rect::from_bounds(b).expect("static bounds")
    }

    fn mat(rows: &[&[f64]]) -> Matrix {
        Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("static")
    }

    /// `Y = 0.5 X + N(0, 1)` on `D_X = [-1, 1]`, `D_Y = [-4.38, 4.24]`.
    pub fn example5() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::LinearGaussian {
                a: mat(&[&[0.5]]),
                mean: vec![0.0],
                cov: mat(&[&[1.0]]),
            },
            single(),
            rect(&[(-1.0, 1.0)]),
        )
        .and_then(|s| s.with_successor_domain(rect(&[(-4.38, 4.24)])))
        .expect("static system")
    }

    /// `Y = 0.5 X + w`, `w ~ 0.8 N(3, 1) + 0.2 N(-3, 1)`.
    pub fn example6() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::UnivariateMixture {
                a: 0.5,
                mu1: 3.0,
                mu2: -3.0,
                sigma1: 1.0,
                sigma2: 1.0,
                p: 0.8,
            },
            single(),
            rect(&[(-1.0, 1.0)]),
        )
        .and_then(|s| s.with_successor_domain(rect(&[(-7.177, 6.965)])))
        .expect("static system")
    }

    /// `Y = X + N(0, I)` on `D_X = D_Y = [-0.2, 0.2]²`.
    pub fn example7_case1() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::BivariateGaussian {
                a: Matrix::identity(2),
                mean: vec![0.0, 0.0],
                cov: Matrix::identity(2),
            },
            single(),
            rect(&[(-0.2, 0.2), (-0.2, 0.2)]),
        )
        .expect("static system")
    }

    /// `Y = X + N(0, 0.2 I)` on `D_X = [0, 0.2]²`, `D_Y = [-0.2, -0.1]²`.
    pub fn example7_case2() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::BivariateGaussian {
                a: Matrix::identity(2),
                mean: vec![0.0, 0.0],
                cov: mat(&[&[0.2, 0.0], &[0.0, 0.2]]),
            },
            single(),
            rect(&[(0.0, 0.2), (0.0, 0.2)]),
        )
        .and_then(|s| s.with_successor_domain(rect(&[(-0.2, -0.1), (-0.2, -0.1)])))
        .expect("static system")
    }

    /// Autonomous linear system of the verification case study on `[0, 2]²`.
    pub fn case_study_1() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::LinearGaussian {
                a: mat(&[&[0.4, 0.1], &[0.0, 0.5]]),
                mean: vec![0.0, 0.0],
                cov: Matrix::identity(2),
            },
            single(),
            rect(&[(0.0, 2.0), (0.0, 2.0)]),
        )
        .expect("static system")
    }

    /// Switched system of the synthesis case study, actions `a1`, `a2`.
    pub fn case_study_2() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::SwitchedGaussian {
                a: vec![
                    mat(&[&[0.4, 0.1], &[0.0, 0.5]]),
                    mat(&[&[0.4, 0.1], &[-0.2, 0.5]]),
                ],
                mean: vec![0.0, 0.0],
                cov: Matrix::identity(2),
            },
            vec!["a1".to_string(), "a2".to_string()],
            rect(&[(0.0, 2.0), (0.0, 2.0)]),
        )
        .expect("static system")
    }

    /// Vehicle model on the box used for factor-wise LC estimation.
    pub fn car7d() -> BuiltinSystem {
        BuiltinSystem::new(
            SystemKind::Car7d(CarParams::default()),
            single(),
            rect(&[
                (0.8, 1.2),
                (0.8, 1.2),
                (0.0, 0.3),
                (0.0, 0.1),
                (0.0, 0.1),
                (0.5, 1.0),
                (0.0, 0.2),
            ]),
        )
        .expect("static system")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> StreamRng {
        stream_rng(11, StreamTag::Scratch, 0)
    }

    #[test]
    fn zero_noise_linear_is_matrix_product() {
        let sys = presets::case_study_1().with_zero_noise(true);
        let y = sys.sample_transition(&[0.0, 0.0], "a1", &mut rng()).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
        let y = sys.sample_transition(&[1.0, 2.0], "a1", &mut rng()).unwrap();
        assert!((y[0] - 0.6).abs() < 1e-15 && (y[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn switched_second_action() {
        let sys = presets::case_study_2().with_zero_noise(true);
        let y = sys.sample_transition(&[1.0, 1.0], "a2", &mut rng()).unwrap();
        assert!((y[0] - 0.5).abs() < 1e-15);
        assert!((y[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn rejects_unknown_action_and_outside_state() {
        let sys = presets::case_study_1();
        assert_eq!(
            sys.sample_transition(&[0.5, 0.5], "a9", &mut rng()),
            Err(Error::UnknownAction("a9".into()))
        );
        assert!(matches!(
            sys.sample_transition(&[2.5, 0.5], "a1", &mut rng()),
            Err(Error::OutsideDomain { .. })
        ));
    }

    #[test]
    fn mixture_weight_validated() {
        let bad = BuiltinSystem::new(
            SystemKind::UnivariateMixture {
                a: 0.5,
                mu1: 0.0,
                mu2: 0.0,
                sigma1: 1.0,
                sigma2: 1.0,
                p: 1.5,
            },
            vec!["a1".into()],
            Rect::from_bounds(&[(-1.0, 1.0)]).unwrap(),
        );
        assert!(bad.is_err());
    }

    #[test]
    fn indefinite_covariance_rejected() {
        let bad = BuiltinSystem::new(
            SystemKind::LinearGaussian {
                a: Matrix::identity(2),
                mean: vec![0.0, 0.0],
                cov: Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap(),
            },
            vec!["a1".into()],
            Rect::from_bounds(&[(0.0, 1.0), (0.0, 1.0)]).unwrap(),
        );
        assert_eq!(bad.err(), Some(Error::NotPositiveDefinite));
    }

    #[test]
    fn generate_samples_contained_and_deterministic() {
        let sys = presets::case_study_1();
        let s = generate_samples(&sys, "a1", 5, 3).unwrap();
        assert_eq!(s.len(), 5);
        for i in 0..5 {
            assert!(sys.spec().domain().contains(s.x(i)));
        }
        assert_eq!(s, generate_samples(&sys, "a1", 5, 3).unwrap());
        assert_ne!(s, generate_samples(&sys, "a1", 5, 4).unwrap());
    }

    #[test]
    fn car_fixed_point_drift() {
        let p = CarParams::default();
        let x = [1.0, 1.0, 0.05, 0.05, 0.05, 0.8, 0.1];
        let mut y = [0.0; 7];
        p.drift(&x, &mut y);
        assert!((y[0] - (1.0 + 0.001 * 0.05 * math::cos(0.05))).abs() < 1e-15);
        assert_eq!(y[2], 0.05);
        assert_eq!(y[3], 0.05);
        assert_eq!(y[6], 0.1);
    }

    #[test]
    fn samples_factor_projection() {
        let s = TransitionSamples::from_pairs(
            "a1",
            &[(vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0])],
        )
        .unwrap();
        let f = s.factor(&[0, 2], 1).unwrap();
        assert_eq!(f.x(0), &[1.0, 3.0]);
        assert_eq!(f.y(0), &[5.0]);
        assert!(s.factor(&[3], 0).is_err());
    }
}
