//! Best regularized line at a single penalty: try every preserved
//! coordinate, solve each remaining coordinate by the median scan, keep the
//! smallest objective.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::coordinate::{solve_subproblem, RatioList};
use crate::error::{check_lambda, FitError, Result};
use crate::model::{DataMatrix, LineFit, OBJECTIVE_TOL};

/// Fits the line with `v[preserved] = 1`.
pub fn fit_line_preserving(data: &DataMatrix, preserved: usize, lambda: f64) -> Result<LineFit> {
    check_lambda(lambda)?;
    data.check_index(preserved)?;
    if data.column_is_zero(preserved) {
        return Err(FitError::DegenerateColumn(preserved));
    }
    let lists = (0..data.m())
        .filter(|&j| j != preserved)
        .map(|j| RatioList::new(data, preserved, j))
        .collect::<Result<Vec<_>>>()?;
    fit_from_lists(data, preserved, &lists, lambda)
}

fn fit_from_lists(data: &DataMatrix, preserved: usize, lists: &[RatioList], lambda: f64) -> Result<LineFit> {
    let mut v = vec![0.0; data.m()];
    v[preserved] = 1.0;
    for list in lists {
        v[list.target] = solve_subproblem(list, lambda)?.value;
    }
    LineFit::with_preserved(data, v, preserved, lambda)
}

/// Smallest objective wins; equal objectives (within tolerance) keep the
/// smaller preserved index.
fn select_best(candidates: impl IntoIterator<Item = LineFit>) -> Option<LineFit> {
    let mut best: Option<LineFit> = None;
    for fit in candidates {
        match &best {
            Some(b) if fit.z >= b.z - OBJECTIVE_TOL => {}
            _ => best = Some(fit),
        }
    }
    best
}

/// Best line over all usable preserved coordinates. Columns that are all
/// zero are never preserved; if every column is zero the zero line is
/// returned.
pub fn fit_line(data: &DataMatrix, lambda: f64) -> Result<LineFit> {
    check_lambda(lambda)?;
    let fits = (0..data.m())
        .into_par_iter()
        .filter(|&p| !data.column_is_zero(p))
        .map(|p| fit_line_preserving(data, p, lambda))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_best(fits).unwrap_or_else(|| LineFit::zero_line(data, lambda)))
}

/// Repeated fits on fixed data. Ratio lists are sorted once per
/// (preserved, target) pair on first use and reused for every penalty.
///
/// Memory grows as `m^2 * n`; prefer [`fit_line`] for one-off fits on large
/// inputs.
pub struct LineFitter<'a> {
    data: &'a DataMatrix,
    lists: Vec<OnceLock<Vec<RatioList>>>,
}

impl<'a> LineFitter<'a> {
    pub fn new(data: &'a DataMatrix) -> Self {
        Self {
            data,
            lists: (0..data.m()).map(|_| OnceLock::new()).collect(),
        }
    }

    pub fn data(&self) -> &DataMatrix {
        self.data
    }

    /// Ratio lists for every target of `preserved`, built on first access.
    pub fn ratio_lists(&self, preserved: usize) -> Result<&[RatioList]> {
        self.data.check_index(preserved)?;
        if let Some(lists) = self.lists[preserved].get() {
            return Ok(lists);
        }
        let built = (0..self.data.m())
            .filter(|&j| j != preserved)
            .map(|j| RatioList::new(self.data, preserved, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.lists[preserved].get_or_init(|| built))
    }

    pub fn fit_preserving(&self, preserved: usize, lambda: f64) -> Result<LineFit> {
        check_lambda(lambda)?;
        self.data.check_index(preserved)?;
        if self.data.column_is_zero(preserved) {
            return Err(FitError::DegenerateColumn(preserved));
        }
        fit_from_lists(self.data, preserved, self.ratio_lists(preserved)?, lambda)
    }

    pub fn fit(&self, lambda: f64) -> Result<LineFit> {
        check_lambda(lambda)?;
        let fits = (0..self.data.m())
            .into_par_iter()
            .filter(|&p| !self.data.column_is_zero(p))
            .map(|p| self.fit_preserving(p, lambda))
            .collect::<Result<Vec<_>>>()?;
        Ok(select_best(fits).unwrap_or_else(|| LineFit::zero_line(self.data, lambda)))
    }
}
