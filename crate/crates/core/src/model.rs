//! Shared domain types and the regularized objective.
//!
//! A line through the origin is described by a direction `v`; every point
//! `x_i` is projected to `v * alpha_i`. The objective charges the L1 distance
//! of each point to its projection plus `lambda * ||v||_1`, where the norm
//! runs over every coordinate, the preserved one included.

use crate::error::{FitError, Result};

/// Absolute tolerance used when comparing objective values.
pub const OBJECTIVE_TOL: f64 = 1e-9;

/// `n` points in `m` dimensions, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    m: usize,
    cols: Vec<f64>,
}

impl DataMatrix {
    /// Builds a matrix from row-major point coordinates.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(FitError::TooFewPoints(0));
        }
        let m = rows[0].as_ref().len();
        let mut cols = vec![0.0; n * m];
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != m {
                return Err(FitError::DimensionMismatch {
                    what: "row length",
                    expected: m,
                    actual: row.len(),
                });
            }
            for (j, &x) in row.iter().enumerate() {
                cols[j * n + i] = x;
            }
        }
        Self::from_columns(n, m, cols)
    }

    /// Builds a matrix from a column-major buffer of length `n * m`.
    pub fn from_columns(n: usize, m: usize, cols: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(FitError::TooFewPoints(n));
        }
        if m < 2 {
            return Err(FitError::TooFewDimensions(m));
        }
        if cols.len() != n * m {
            return Err(FitError::DimensionMismatch {
                what: "buffer length",
                expected: n * m,
                actual: cols.len(),
            });
        }
        if let Some(k) = cols.iter().position(|x| !x.is_finite()) {
            return Err(FitError::NonFinite {
                row: k % n,
                col: k / n,
            });
        }
        Ok(Self { n, m, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cols[j * self.n + i]
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.cols[j * self.n..(j + 1) * self.n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.m).map(|j| self.get(i, j)).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i)).collect()
    }

    /// True when every entry of column `j` is exactly zero.
    pub fn column_is_zero(&self, j: usize) -> bool {
        self.column(j).iter().all(|&x| x == 0.0)
    }

    /// Sum of absolute values of every entry.
    pub fn l1_mass(&self) -> f64 {
        self.cols.iter().map(|x| x.abs()).sum()
    }

    pub(crate) fn check_index(&self, j: usize) -> Result<()> {
        if j < self.m {
            Ok(())
        } else {
            Err(FitError::IndexOutOfRange { index: j, m: self.m })
        }
    }
}

/// A fitted line at one penalty level.
#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    /// Direction; `v[preserved] == 1` unless this is the zero line.
    pub v: Vec<f64>,
    /// Preserved coordinate, `None` for the zero line.
    pub preserved: Option<usize>,
    /// Projection coefficients, `alpha[i] = x[i][preserved]`.
    pub alpha: Vec<f64>,
    /// Objective value at `lambda`.
    pub z: f64,
    pub lambda: f64,
}

impl LineFit {
    pub fn is_zero_line(&self) -> bool {
        self.preserved.is_none()
    }

    pub fn l1_norm(&self) -> f64 {
        l1_norm(&self.v)
    }

    /// Builds the fit for direction `v` preserving `preserved`, evaluating `z`.
    pub fn with_preserved(data: &DataMatrix, v: Vec<f64>, preserved: usize, lambda: f64) -> Result<Self> {
        let alpha = data.column(preserved).to_vec();
        let z = evaluate_objective(data, &v, &alpha, lambda)?;
        Ok(Self {
            v,
            preserved: Some(preserved),
            alpha,
            z,
            lambda,
        })
    }

    pub fn zero_line(data: &DataMatrix, lambda: f64) -> Self {
        Self {
            v: vec![0.0; data.m()],
            preserved: None,
            alpha: vec![0.0; data.n()],
            z: data.l1_mass(),
            lambda,
        }
    }
}

/// Upper end of a penalty interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UpperBound {
    Finite(f64),
    Unbounded,
}

impl UpperBound {
    pub fn is_unbounded(&self) -> bool {
        matches!(self, UpperBound::Unbounded)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            UpperBound::Finite(x) => Some(x),
            UpperBound::Unbounded => None,
        }
    }

    /// `lambda <= self`.
    pub fn admits(&self, lambda: f64) -> bool {
        match *self {
            UpperBound::Finite(hi) => lambda <= hi,
            UpperBound::Unbounded => true,
        }
    }

    /// `lambda < self`.
    pub fn exceeds(&self, lambda: f64) -> bool {
        match *self {
            UpperBound::Finite(hi) => lambda < hi,
            UpperBound::Unbounded => true,
        }
    }
}

/// A penalty range on which the optimal line does not change.
///
/// On the interval, `z*(lambda) = error_intercept + lambda * l1_slope`.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyInterval {
    pub lo: f64,
    pub hi: UpperBound,
    pub v_star: Vec<f64>,
    pub preserved: Option<usize>,
    pub error_intercept: f64,
    pub l1_slope: f64,
}

impl PenaltyInterval {
    pub fn objective_at(&self, lambda: f64) -> f64 {
        self.error_intercept + lambda * self.l1_slope
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda > self.lo && self.hi.admits(lambda)
    }
}

/// The optimal line as a piecewise-constant function of the penalty.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionPath {
    pub intervals: Vec<PenaltyInterval>,
    /// Elementary intervals `(lo, hi)` of the merge in which the winning
    /// preserved coordinate changed more than once.
    pub multi_crossing: Vec<(f64, UpperBound)>,
}

impl SolutionPath {
    /// Finite breakpoints strictly inside `(0, inf)`, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.intervals
            .iter()
            .map(|iv| iv.lo)
            .filter(|&lo| lo > 0.0)
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.intervals.first().map_or(0, |iv| iv.v_star.len())
    }

    /// Index of the interval `(lo, hi]` containing `lambda`; `lambda = 0`
    /// maps to the first interval.
    pub fn locate(&self, lambda: f64) -> usize {
        // first interval whose upper bound admits lambda
        self.intervals
            .partition_point(|iv| !iv.hi.admits(lambda))
            .min(self.intervals.len().saturating_sub(1))
    }

    /// Index of the interval `[lo, hi)` containing `lambda`.
    pub fn locate_right(&self, lambda: f64) -> usize {
        self.intervals
            .partition_point(|iv| !iv.hi.exceeds(lambda))
            .min(self.intervals.len().saturating_sub(1))
    }

    /// Checks contiguity, coverage and slope monotonicity.
    pub fn validate(&self) -> Result<()> {
        let first = self
            .intervals
            .first()
            .ok_or_else(|| FitError::InvalidPath("no intervals".into()))?;
        if first.lo != 0.0 {
            return Err(FitError::InvalidPath(format!("path starts at {}", first.lo)));
        }
        for pair in self.intervals.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if a.hi != UpperBound::Finite(b.lo) {
                return Err(FitError::InvalidPath(format!(
                    "gap between {:?} and {}",
                    a.hi, b.lo
                )));
            }
            if b.l1_slope > a.l1_slope + OBJECTIVE_TOL {
                return Err(FitError::InvalidPath(format!(
                    "slope increases at {}: {} -> {}",
                    b.lo, a.l1_slope, b.l1_slope
                )));
            }
        }
        for iv in &self.intervals {
            if let UpperBound::Finite(hi) = iv.hi {
                if hi <= iv.lo {
                    return Err(FitError::InvalidPath(format!("empty interval at {}", iv.lo)));
                }
            }
        }
        if !self.intervals.last().is_some_and(|iv| iv.hi.is_unbounded()) {
            return Err(FitError::InvalidPath("last interval is bounded".into()));
        }
        Ok(())
    }
}

pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `sum_i ||x_i - v * alpha_i||_1 + lambda * ||v||_1`.
pub fn evaluate_objective(data: &DataMatrix, v: &[f64], alpha: &[f64], lambda: f64) -> Result<f64> {
    crate::error::check_lambda(lambda)?;
    if v.len() != data.m() {
        return Err(FitError::DimensionMismatch {
            what: "direction length",
            expected: data.m(),
            actual: v.len(),
        });
    }
    if alpha.len() != data.n() {
        return Err(FitError::DimensionMismatch {
            what: "coefficient count",
            expected: data.n(),
            actual: alpha.len(),
        });
    }
    Ok(projection_error(data, v, alpha) + lambda * l1_norm(v))
}

pub(crate) fn projection_error(data: &DataMatrix, v: &[f64], alpha: &[f64]) -> f64 {
    let mut total = 0.0;
    for (j, &vj) in v.iter().enumerate() {
        total += data
            .column(j)
            .iter()
            .zip(alpha)
            .map(|(&x, &a)| (x - vj * a).abs())
            .sum::<f64>();
    }
    total
}

/// Row-wise projections `v * alpha_i`.
pub fn reconstruct(data: &DataMatrix, fit: &LineFit) -> Result<DataMatrix> {
    check_fit_shape(data, fit)?;
    let (n, m) = (data.n(), data.m());
    let mut cols = Vec::with_capacity(n * m);
    for &vj in &fit.v {
        cols.extend(fit.alpha.iter().map(|&a| vj * a));
    }
    DataMatrix::from_columns(n, m, cols)
}

/// `data - reconstruct(data, fit)`.
pub fn residual(data: &DataMatrix, fit: &LineFit) -> Result<DataMatrix> {
    check_fit_shape(data, fit)?;
    let (n, m) = (data.n(), data.m());
    let mut cols = Vec::with_capacity(n * m);
    for (j, &vj) in fit.v.iter().enumerate() {
        cols.extend(data.column(j).iter().zip(&fit.alpha).map(|(&x, &a)| x - vj * a));
    }
    DataMatrix::from_columns(n, m, cols)
}

fn check_fit_shape(data: &DataMatrix, fit: &LineFit) -> Result<()> {
    if fit.v.len() != data.m() {
        return Err(FitError::DimensionMismatch {
            what: "direction length",
            expected: data.m(),
            actual: fit.v.len(),
        });
    }
    if fit.alpha.len() != data.n() {
        return Err(FitError::DimensionMismatch {
            what: "coefficient count",
            expected: data.n(),
            actual: fit.alpha.len(),
        });
    }
    Ok(())
}

/// `1 - |<v/|v|, w/|w|>|` with L2 normalization; 0 for identical lines,
/// 1 for orthogonal ones.
pub fn discordance(v: &[f64], v_true: &[f64]) -> Result<f64> {
    if v.len() != v_true.len() {
        return Err(FitError::DimensionMismatch {
            what: "vector length",
            expected: v_true.len(),
            actual: v.len(),
        });
    }
    let (a, b) = (l2_norm(v), l2_norm(v_true));
    if a == 0.0 || b == 0.0 {
        return Err(FitError::ZeroVector);
    }
    let dot: f64 = v.iter().zip(v_true).map(|(x, y)| x * y).sum();
    Ok((1.0 - (dot / (a * b)).abs()).clamp(0.0, 1.0))
}

/// Number of coordinates with `|v_j| > tol`.
pub fn l0_count(v: &[f64], tol: f64) -> usize {
    v.iter().filter(|x| x.abs() > tol).count()
}
