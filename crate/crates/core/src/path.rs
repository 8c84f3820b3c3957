//! Full solution path over the penalty.
//!
//! For a fixed preserved coordinate every other coordinate is an adjusted
//! weighted median whose selected entry changes only at finitely many
//! penalties. Entry `k` of a sorted ratio list is optimal on the window
//!
//! ```text
//! [lo_k, lo_k + 2 w_k],  lo_k = sgn(r_k) * (W_above - W_below) - w_k
//! ```
//!
//! and zero is optimal beyond the largest window end. Collecting those
//! window starts gives each preserved coordinate a piecewise-constant
//! direction and a concave piecewise-linear objective. Merging the per
//! coordinate objectives by their lower envelope yields the path, including
//! crossings that fall strictly between the per-coordinate breakpoints.

use rayon::prelude::*;

use crate::coordinate::{solve_subproblem, RatioList};
use crate::error::{check_lambda, FitError, Result};
use crate::model::{
    l1_norm, projection_error, DataMatrix, LineFit, PenaltyInterval, SolutionPath, UpperBound,
    OBJECTIVE_TOL,
};

/// Breakpoints closer than this are treated as one.
pub const BREAKPOINT_TOL: f64 = 1e-9;
const SLOPE_TOL: f64 = 1e-12;

/// Penalty window on which sorted entry `k` is the optimal value.
pub fn penalty_window(list: &RatioList, k: usize) -> (f64, f64) {
    let e = &list.entries[k];
    let lo = e.sign() * (list.weight_above(k) - list.weight_below(k)) - e.weight;
    (lo, lo + 2.0 * e.weight)
}

/// `v_j` for one target as a step function of the penalty: on
/// `[starts[k], starts[k+1])` it equals `values[k]` and contributes
/// `errors[k]` to the fit error.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateSteps {
    pub target: usize,
    pub starts: Vec<f64>,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Penalty from which the coordinate stays at zero.
    pub zero_from: f64,
}

impl CoordinateSteps {
    fn build(list: &RatioList, raw: &mut Vec<f64>) -> Result<Self> {
        // (start, zero step?, sorted position)
        let mut assigned: Vec<(f64, bool, usize)> = Vec::new();
        let mut zero_from = 0.0f64;
        for k in 0..list.len() {
            let (lo, hi) = penalty_window(list, k);
            if hi > 0.0 {
                raw.push(lo);
                assigned.push((lo.max(0.0), false, k));
            }
            if hi > zero_from {
                zero_from = hi;
            }
        }
        raw.push(zero_from);
        assigned.push((zero_from, true, usize::MAX));
        assigned.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

        let mut steps = Self {
            target: list.target,
            starts: Vec::with_capacity(assigned.len()),
            values: Vec::with_capacity(assigned.len()),
            errors: Vec::with_capacity(assigned.len()),
            zero_from,
        };
        for (start, is_zero, k) in assigned {
            let (value, error) = if is_zero {
                (0.0, list.fit_error_at_zero())
            } else {
                (list.entries[k].ratio, list.fit_error_at_entry(k))
            };
            let error = error + list.excluded_mass;
            // a later start within tolerance supersedes a zero-width step
            if let Some(&last) = steps.starts.last() {
                if start - last <= BREAKPOINT_TOL {
                    let i = steps.starts.len() - 1;
                    steps.values[i] = value;
                    steps.errors[i] = error;
                    continue;
                }
            }
            steps.starts.push(start);
            steps.values.push(value);
            steps.errors.push(error);
        }
        if steps.starts[0] > BREAKPOINT_TOL {
            // the window straddling zero was lost to rounding; recover it
            let s = solve_subproblem(list, 0.5 * steps.starts[0])?;
            let error = match s.position {
                Some(k) => list.fit_error_at_entry(k),
                None => list.fit_error_at_zero(),
            } + list.excluded_mass;
            steps.starts.insert(0, 0.0);
            steps.values.insert(0, s.value);
            steps.errors.insert(0, error);
        }
        steps.starts[0] = 0.0;
        Ok(steps)
    }

    fn index_at(&self, lambda: f64) -> usize {
        self.starts.partition_point(|&s| s <= lambda).saturating_sub(1)
    }

    /// `v_j` on the step containing `lambda` (left-closed).
    pub fn value_at(&self, lambda: f64) -> f64 {
        self.values[self.index_at(lambda)]
    }
}

/// One linear piece of a per-coordinate objective, valid from `lo` to the
/// next segment's `lo`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSegment {
    pub lo: f64,
    pub intercept: f64,
    pub slope: f64,
}

impl LineSegment {
    pub fn objective_at(&self, lambda: f64) -> f64 {
        self.intercept + lambda * self.slope
    }
}

/// Direction and objective of one preserved coordinate across all penalties.
#[derive(Debug, Clone, PartialEq)]
pub struct PerCoordinatePath {
    pub preserved: usize,
    /// Nonnegative penalties produced by the window scan, ascending.
    pub breakpoints: Vec<f64>,
    pub steps: Vec<CoordinateSteps>,
    pub segments: Vec<LineSegment>,
    m: usize,
}

impl PerCoordinatePath {
    pub fn dimension(&self) -> usize {
        self.m
    }

    fn segment_index(&self, lambda: f64) -> usize {
        self.segments.partition_point(|s| s.lo <= lambda).saturating_sub(1)
    }

    /// Segment in force at `lambda` (left-closed).
    pub fn segment_at(&self, lambda: f64) -> &LineSegment {
        &self.segments[self.segment_index(lambda)]
    }

    pub fn segment_hi(&self, k: usize) -> UpperBound {
        self.segments
            .get(k + 1)
            .map_or(UpperBound::Unbounded, |s| UpperBound::Finite(s.lo))
    }

    pub fn objective_at(&self, lambda: f64) -> f64 {
        self.segment_at(lambda).objective_at(lambda)
    }

    /// `v^pres(lambda)` on the step containing `lambda` (left-closed).
    pub fn direction_at(&self, lambda: f64) -> Vec<f64> {
        let mut v = vec![0.0; self.m];
        v[self.preserved] = 1.0;
        for s in &self.steps {
            v[s.target] = s.value_at(lambda);
        }
        v
    }

    /// Representative penalty strictly inside segment `k`.
    fn interior_of(&self, k: usize) -> f64 {
        let lo = self.segments[k].lo;
        match self.segment_hi(k) {
            UpperBound::Finite(hi) => 0.5 * (lo + hi),
            UpperBound::Unbounded => 2.0 * lo + 1.0,
        }
    }
}

/// Enumerates every penalty at which the optimal direction for `preserved`
/// changes, with the direction and objective line on each piece.
pub fn breakpoints_for_preserved(data: &DataMatrix, preserved: usize) -> Result<PerCoordinatePath> {
    data.check_index(preserved)?;
    if data.column_is_zero(preserved) {
        return Err(FitError::DegenerateColumn(preserved));
    }
    let m = data.m();
    let mut raw = Vec::new();
    let mut steps = Vec::with_capacity(m - 1);
    for j in (0..m).filter(|&j| j != preserved) {
        let list = RatioList::new(data, preserved, j)?;
        steps.push(CoordinateSteps::build(&list, &mut raw)?);
    }

    let mut breakpoints: Vec<f64> = raw.into_iter().filter(|&l| l >= 0.0).collect();
    breakpoints.sort_by(f64::total_cmp);
    dedup_within(&mut breakpoints, BREAKPOINT_TOL);

    // sweep all step starts; each group of coinciding starts opens a segment
    let mut events: Vec<(f64, usize, usize)> = steps
        .iter()
        .enumerate()
        .flat_map(|(t, s)| s.starts.iter().enumerate().skip(1).map(move |(k, &lo)| (lo, t, k)))
        .collect();
    events.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut current: Vec<usize> = vec![0; steps.len()];
    let line = |current: &[usize], lo: f64| {
        let intercept = steps.iter().zip(current).map(|(s, &k)| s.errors[k]).sum();
        let slope = 1.0 + steps.iter().zip(current).map(|(s, &k)| s.values[k].abs()).sum::<f64>();
        LineSegment { lo, intercept, slope }
    };
    let mut segments = vec![line(&current, 0.0)];
    let mut e = 0;
    while e < events.len() {
        let lo = events[e].0;
        while e < events.len() && events[e].0 - lo <= BREAKPOINT_TOL {
            let (_, t, k) = events[e];
            current[t] = k;
            e += 1;
        }
        let seg = line(&current, lo);
        if lo <= BREAKPOINT_TOL {
            segments[0] = LineSegment { lo: 0.0, ..seg };
        } else {
            segments.push(seg);
        }
    }

    Ok(PerCoordinatePath {
        preserved,
        breakpoints,
        steps,
        segments,
        m,
    })
}

fn dedup_within(values: &mut Vec<f64>, tol: f64) {
    values.dedup_by(|b, a| *b - *a <= tol);
}

/// A stretch of the envelope won by one per-coordinate segment.
#[derive(Debug, Clone, Copy)]
struct Piece {
    lo: f64,
    path: usize,
    segment: usize,
}

/// Lower envelope of the per-coordinate objectives.
///
/// At each union breakpoint `lambda_k` the winner is the line that is
/// lowest at `lambda_k` and, among equal values, flattest, then smallest
/// preserved index: the line whose crossing window `[beta_L, beta_U]`
/// contains zero. The next winner is the flatter line with the earliest
/// crossing `lambda_k + beta_U`, kept while that crossing precedes
/// `lambda_{k+1}`. Slopes strictly decrease along that chain, so it ends
/// after at most `m` steps.
pub fn merge_path(data: &DataMatrix, per_coordinate: &[PerCoordinatePath]) -> Result<SolutionPath> {
    let m = data.m();
    if per_coordinate.is_empty() {
        return Ok(SolutionPath {
            intervals: vec![PenaltyInterval {
                lo: 0.0,
                hi: UpperBound::Unbounded,
                v_star: vec![0.0; m],
                preserved: None,
                error_intercept: data.l1_mass(),
                l1_slope: 0.0,
            }],
            multi_crossing: Vec::new(),
        });
    }
    validate_inputs(data, per_coordinate)?;

    let mut grid: Vec<f64> = per_coordinate
        .iter()
        .flat_map(|p| p.segments.iter().map(|s| s.lo))
        .collect();
    grid.sort_by(f64::total_cmp);
    dedup_within(&mut grid, BREAKPOINT_TOL);

    let count = per_coordinate.len();
    let mut cursor = vec![0usize; count];
    let mut z = vec![0.0; count];
    let mut slope = vec![0.0; count];
    let mut pieces: Vec<Piece> = Vec::new();
    let mut multi_crossing = Vec::new();

    for (k, &lo) in grid.iter().enumerate() {
        let hi = grid.get(k + 1).copied();
        for (c, p) in per_coordinate.iter().enumerate() {
            while cursor[c] + 1 < p.segments.len() && p.segments[cursor[c] + 1].lo <= lo + BREAKPOINT_TOL {
                cursor[c] += 1;
            }
            let seg = &p.segments[cursor[c]];
            z[c] = seg.objective_at(lo);
            slope[c] = seg.slope;
        }

        let mut at = lo;
        let mut crossings = 0;
        let mut winner = lowest_at(&z, &slope);
        loop {
            push_piece(
                &mut pieces,
                Piece {
                    lo: at,
                    path: winner,
                    segment: cursor[winner],
                },
            );
            let Some((offset, next)) = next_crossing(&z, &slope, winner, at - lo) else {
                break;
            };
            let cross_at = lo + offset;
            if hi.is_some_and(|h| cross_at >= h - BREAKPOINT_TOL) {
                break;
            }
            crossings += 1;
            at = cross_at.max(at);
            winner = next;
        }
        if crossings > 1 {
            multi_crossing.push((lo, hi.map_or(UpperBound::Unbounded, UpperBound::Finite)));
        }
    }

    // identical consecutive directions are one interval
    let directions: Vec<Vec<f64>> = pieces
        .par_iter()
        .map(|pc| {
            let p = &per_coordinate[pc.path];
            p.direction_at(p.interior_of(pc.segment))
        })
        .collect();
    let mut lines: Vec<(f64, usize, Vec<f64>, f64, f64)> = Vec::new();
    for (pc, v) in pieces.iter().zip(directions) {
        if let Some(last) = lines.last() {
            if same_direction(&last.2, &v) {
                continue;
            }
        }
        let p = &per_coordinate[pc.path];
        let seg = &p.segments[pc.segment];
        lines.push((pc.lo, p.preserved, v, seg.intercept, seg.slope));
    }

    // exact lines where the preserved coordinate switches
    let switch: Vec<bool> = (0..lines.len())
        .map(|k| {
            let differs = |a: usize, b: usize| lines.get(b).is_some_and(|l| l.1 != lines[a].1);
            (k > 0 && differs(k, k - 1)) || differs(k, k + 1)
        })
        .collect();
    lines.par_iter_mut().zip(switch).filter(|(_, s)| *s).for_each(|(line, _)| {
        line.3 = projection_error(data, &line.2, data.column(line.1));
        line.4 = l1_norm(&line.2);
    });
    refine_crossings(&mut lines);

    let bounds: Vec<UpperBound> = (0..lines.len())
        .map(|i| lines.get(i + 1).map_or(UpperBound::Unbounded, |n| UpperBound::Finite(n.0)))
        .collect();
    let intervals = lines
        .into_iter()
        .zip(bounds)
        .map(|((lo, preserved, v_star, error_intercept, l1_slope), hi)| PenaltyInterval {
            lo,
            hi,
            v_star,
            preserved: Some(preserved),
            error_intercept,
            l1_slope,
        })
        .collect();

    Ok(SolutionPath {
        intervals,
        multi_crossing,
    })
}

/// Where the winning preserved coordinate switches, recompute the crossing
/// from the directly evaluated intercepts, which are more accurate than the
/// prefix-sum lines used during the sweep.
fn refine_crossings(lines: &mut [(f64, usize, Vec<f64>, f64, f64)]) {
    for k in 1..lines.len() {
        let (lo, preserved, _, intercept, slope) = lines[k];
        let (prev_lo, prev_preserved, _, prev_intercept, prev_slope) = lines[k - 1];
        if preserved == prev_preserved || prev_slope - slope <= SLOPE_TOL {
            continue;
        }
        let crossing = (intercept - prev_intercept) / (prev_slope - slope);
        let next_lo = lines.get(k + 1).map_or(f64::INFINITY, |n| n.0);
        if (crossing - lo).abs() <= 1e-7 * lo.max(1.0) && crossing > prev_lo && crossing < next_lo {
            lines[k].0 = crossing;
        }
    }
}

fn validate_inputs(data: &DataMatrix, per_coordinate: &[PerCoordinatePath]) -> Result<()> {
    let mut seen = vec![false; data.m()];
    for p in per_coordinate {
        if p.m != data.m() || p.preserved >= data.m() {
            return Err(FitError::InvalidPath(format!(
                "per-coordinate path for {} does not match {} dimensions",
                p.preserved,
                data.m()
            )));
        }
        if std::mem::replace(&mut seen[p.preserved], true) {
            return Err(FitError::InvalidPath(format!("duplicate preserved coordinate {}", p.preserved)));
        }
        match p.segments.first() {
            Some(s) if s.lo == 0.0 => {}
            _ => {
                return Err(FitError::InvalidPath(format!(
                    "segments for {} do not start at zero",
                    p.preserved
                )))
            }
        }
        if p.segments.windows(2).any(|w| w[1].lo <= w[0].lo) {
            return Err(FitError::InvalidPath(format!("segments for {} are not ascending", p.preserved)));
        }
    }
    Ok(())
}

fn push_piece(pieces: &mut Vec<Piece>, piece: Piece) {
    if let Some(last) = pieces.last_mut() {
        if last.path == piece.path && last.segment == piece.segment {
            return;
        }
        if piece.lo - last.lo <= BREAKPOINT_TOL {
            *last = piece;
            return;
        }
    }
    pieces.push(piece);
}

/// Lowest value, then flattest slope, then first index.
fn lowest_at(z: &[f64], slope: &[f64]) -> usize {
    let zmin = z.iter().copied().fold(f64::INFINITY, f64::min);
    let mut best = usize::MAX;
    for c in 0..z.len() {
        if z[c] <= zmin + OBJECTIVE_TOL && (best == usize::MAX || slope[c] < slope[best] - SLOPE_TOL) {
            best = c;
        }
    }
    best
}

/// Earliest offset (from the elementary interval start) at which a flatter
/// line drops to the current winner, and that line. `z` holds values at the
/// interval start.
fn next_crossing(z: &[f64], slope: &[f64], winner: usize, from: f64) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for c in 0..z.len() {
        if slope[c] >= slope[winner] - SLOPE_TOL {
            continue;
        }
        let offset = ((z[c] - z[winner]) / (slope[winner] - slope[c])).max(from);
        let better = match best {
            None => true,
            Some((o, b)) => {
                offset < o - BREAKPOINT_TOL || (offset <= o + BREAKPOINT_TOL && slope[c] < slope[b] - SLOPE_TOL)
            }
        };
        if better {
            best = Some((offset, c));
        }
    }
    best
}

fn same_direction(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0))
}

/// Per-coordinate paths for every usable preserved coordinate.
pub fn per_coordinate_paths(data: &DataMatrix) -> Result<Vec<PerCoordinatePath>> {
    (0..data.m())
        .into_par_iter()
        .filter(|&p| !data.column_is_zero(p))
        .map(|p| breakpoints_for_preserved(data, p))
        .collect()
}

/// The complete solution path of the data.
pub fn solution_path(data: &DataMatrix) -> Result<SolutionPath> {
    merge_path(data, &per_coordinate_paths(data)?)
}

/// The solution path together with the per-coordinate paths it merged.
pub fn solution_path_with_parts(data: &DataMatrix) -> Result<(SolutionPath, Vec<PerCoordinatePath>)> {
    let parts = per_coordinate_paths(data)?;
    let path = merge_path(data, &parts)?;
    Ok((path, parts))
}

fn fit_from_interval(data: &DataMatrix, iv: &PenaltyInterval, lambda: f64) -> LineFit {
    let alpha = match iv.preserved {
        Some(p) => data.column(p).to_vec(),
        None => vec![0.0; data.n()],
    };
    LineFit {
        v: iv.v_star.clone(),
        preserved: iv.preserved,
        alpha,
        z: iv.objective_at(lambda),
        lambda,
    }
}

/// The path's solution at `lambda`, looked up on half-open `(lo, hi]`
/// intervals.
pub fn query_path(data: &DataMatrix, path: &SolutionPath, lambda: f64) -> Result<LineFit> {
    check_lambda(lambda)?;
    check_path_shape(data, path)?;
    Ok(fit_from_interval(data, &path.intervals[path.locate(lambda)], lambda))
}

/// Like [`query_path`] but on `[lo, hi)`: at a breakpoint this returns the
/// solution that starts there.
pub fn query_path_right(data: &DataMatrix, path: &SolutionPath, lambda: f64) -> Result<LineFit> {
    check_lambda(lambda)?;
    check_path_shape(data, path)?;
    Ok(fit_from_interval(data, &path.intervals[path.locate_right(lambda)], lambda))
}

fn check_path_shape(data: &DataMatrix, path: &SolutionPath) -> Result<()> {
    if path.intervals.is_empty() {
        return Err(FitError::InvalidPath("no intervals".into()));
    }
    if path.dimension() != data.m() {
        return Err(FitError::DimensionMismatch {
            what: "path dimension",
            expected: data.m(),
            actual: path.dimension(),
        });
    }
    Ok(())
}
