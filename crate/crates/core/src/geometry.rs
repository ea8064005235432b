use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Axis-aligned hyper-rectangle `[lo_1, hi_1] × … × [lo_d, hi_d]`.
///
/// Bounds may be infinite, which is how unbounded integration boxes are expressed.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Rect {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Rect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch {
                what: "rectangle bounds",
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::invalid("rect", "zero-dimensional rectangle"));
        }
        for (j, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if l.is_nan() || h.is_nan() || l >= h {
                return Err(Error::invalid(
                    "rect",
                    format!("dimension {j}: need lo < hi, got [{l}, {h}]"),
                ));
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            bounds.iter().map(|b| b.0).collect(),
            bounds.iter().map(|b| b.1).collect(),
        )
    }

    /// `ℝ^d`.
    pub fn unbounded(d: usize) -> Self {
        Self {
            lo: alloc::vec![f64::NEG_INFINITY; d],
            hi: alloc::vec![f64::INFINITY; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn width(&self, j: usize) -> f64 {
        self.hi[j] - self.lo[j]
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.iter().chain(&self.hi).all(|v| v.is_finite())
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|j| self.width(j)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| 0.5 * (l + h))
            .collect()
    }

    /// Point at fractional position `t_j ∈ [0, 1]` along each axis.
    pub fn point_at(&self, t: &[f64]) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .zip(t)
            .map(|((l, h), t)| l + t * (h - l))
            .collect()
    }

    /// Closed containment.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// `other ⊆ self`, with absolute slack `tol` on every face.
    pub fn contains_rect(&self, other: &Rect, tol: f64) -> bool {
        other.dim() == self.dim()
            && (0..self.dim())
                .all(|j| other.lo[j] >= self.lo[j] - tol && other.hi[j] <= self.hi[j] + tol)
    }

    /// Interiors intersect.
    pub fn overlaps(&self, other: &Rect, tol: f64) -> bool {
        other.dim() == self.dim()
            && (0..self.dim())
                .all(|j| other.lo[j] < self.hi[j] - tol && other.hi[j] > self.lo[j] + tol)
    }

    /// Keeps only the listed coordinates.
    pub fn project(&self, coords: &[usize]) -> Result<Rect> {
        if let Some(&bad) = coords.iter().find(|&&c| c >= self.dim()) {
            return Err(Error::invalid(
                "mask",
                format!("coordinate {bad} out of range for dimension {}", self.dim()),
            ));
        }
        Rect::new(
            coords.iter().map(|&c| self.lo[c]).collect(),
            coords.iter().map(|&c| self.hi[c]).collect(),
        )
    }

    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|j| if mask >> j & 1 == 1 { self.hi[j] } else { self.lo[j] })
                    .collect()
            })
            .collect()
    }
}

/// Cartesian product of per-axis point lists; flat index runs with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.iter().any(Vec::is_empty) {
            return Err(Error::invalid("grid", "every axis needs at least one point"));
        }
        Ok(Self { axes })
    }

    /// `resolution` evenly spaced points per axis, endpoints included.
    pub fn uniform(rect: &Rect, resolution: usize) -> Result<Self> {
        if !rect.is_bounded() {
            return Err(Error::invalid("grid", "rectangle must be bounded"));
        }
        Self::new(
            (0..rect.dim())
                .map(|j| crate::math::linspace(rect.lo()[j], rect.hi()[j], resolution))
                .collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn axis_mut(&mut self, j: usize) -> &mut Vec<f64> {
        &mut self.axes[j]
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-axis indices of flat point `idx`.
    pub fn unravel(&self, mut idx: usize, out: &mut [usize]) {
        for (o, axis) in out.iter_mut().zip(&self.axes) {
            *o = idx % axis.len();
            idx /= axis.len();
        }
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let mut ix = alloc::vec![0; self.dim()];
        self.unravel(idx, &mut ix);
        ix.iter().zip(&self.axes).map(|(&k, a)| a[k]).collect()
    }
}
