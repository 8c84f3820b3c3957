//! One-coordinate subproblem: with `v[preserved] = 1` fixed, each remaining
//! coordinate `v_j` minimizes
//!
//! ```text
//! f(t) = sum_i |x_i,pres| * |x_ij / x_i,pres - t| + lambda * |t|
//! ```
//!
//! independently. The minimizer is an adjusted weighted median of the ratios,
//! found by one scan over the sorted list. Points whose preserved coordinate
//! is zero add the constant `|x_ij|` and are left out of the scan.

use crate::error::{check_lambda, FitError, Result};
use crate::model::DataMatrix;

/// Slack allowed in the median condition, scaled by the total weight.
const CONDITION_TOL: f64 = 1e-12;
/// Slack allowed when checking a certificate, scaled by the problem size.
const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioEntry {
    /// `x_ij / x_i,pres`.
    pub ratio: f64,
    /// `|x_i,pres|`, strictly positive.
    pub weight: f64,
    /// Source point.
    pub point: usize,
}

impl RatioEntry {
    /// Sign with `sgn(0) = +1`.
    pub fn sign(&self) -> f64 {
        if self.ratio < 0.0 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Ratios for one (preserved, target) pair, sorted ascending with ties in
/// point order.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioList {
    pub preserved: usize,
    pub target: usize,
    pub entries: Vec<RatioEntry>,
    /// Sum of `|x_ij|` over points with `x_i,pres = 0`.
    pub excluded_mass: f64,
    // prefix_weight[k] = sum of weights at sorted positions < k
    prefix_weight: Vec<f64>,
    prefix_weighted_ratio: Vec<f64>,
}

impl RatioList {
    pub fn new(data: &DataMatrix, preserved: usize, target: usize) -> Result<Self> {
        data.check_index(preserved)?;
        data.check_index(target)?;
        if preserved == target {
            return Err(FitError::SameCoordinate(preserved));
        }
        let base = data.column(preserved);
        let col = data.column(target);
        let mut entries = Vec::with_capacity(base.len());
        let mut excluded_mass = 0.0;
        for (point, (&b, &x)) in base.iter().zip(col).enumerate() {
            if b == 0.0 {
                excluded_mass += x.abs();
            } else {
                entries.push(RatioEntry {
                    ratio: x / b + 0.0,
                    weight: b.abs(),
                    point,
                });
            }
        }
        entries.sort_unstable_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.point.cmp(&b.point)));
        Ok(Self::from_sorted(preserved, target, entries, excluded_mass))
    }

    /// Builds a list from raw `(ratio, weight)` pairs; point indices follow
    /// input order. Weights must be positive.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Self {
        let mut entries: Vec<RatioEntry> = pairs
            .iter()
            .enumerate()
            .map(|(point, &(ratio, weight))| {
                assert!(weight > 0.0, "weights must be positive");
                RatioEntry { ratio, weight, point }
            })
            .collect();
        entries.sort_unstable_by(|a, b| a.ratio.total_cmp(&b.ratio).then(a.point.cmp(&b.point)));
        Self::from_sorted(0, 1, entries, 0.0)
    }

    fn from_sorted(preserved: usize, target: usize, entries: Vec<RatioEntry>, excluded_mass: f64) -> Self {
        let mut prefix_weight = Vec::with_capacity(entries.len() + 1);
        let mut prefix_weighted_ratio = Vec::with_capacity(entries.len() + 1);
        let (mut w, mut wr) = (0.0, 0.0);
        prefix_weight.push(0.0);
        prefix_weighted_ratio.push(0.0);
        for e in &entries {
            w += e.weight;
            wr += e.weight * e.ratio;
            prefix_weight.push(w);
            prefix_weighted_ratio.push(wr);
        }
        Self {
            preserved,
            target,
            entries,
            excluded_mass,
            prefix_weight,
            prefix_weighted_ratio,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        *self.prefix_weight.last().unwrap_or(&0.0)
    }

    /// Weight at sorted positions strictly before `k`.
    pub fn weight_below(&self, k: usize) -> f64 {
        self.prefix_weight[k]
    }

    /// Weight at sorted positions strictly after `k`.
    pub fn weight_above(&self, k: usize) -> f64 {
        self.total_weight() - self.prefix_weight[k + 1]
    }

    /// `sum_i w_i |r_i - t|` over the scanned entries (no penalty, no
    /// excluded mass).
    pub fn fit_error(&self, t: f64) -> f64 {
        self.entries.iter().map(|e| e.weight * (e.ratio - t).abs()).sum()
    }

    /// `fit_error(r_k)` in O(1) via prefix sums.
    pub fn fit_error_at_entry(&self, k: usize) -> f64 {
        let r = self.entries[k].ratio;
        let below_w = self.prefix_weight[k];
        let below_wr = self.prefix_weighted_ratio[k];
        let above_w = self.total_weight() - self.prefix_weight[k + 1];
        let above_wr = self.prefix_weighted_ratio[self.len()] - self.prefix_weighted_ratio[k + 1];
        (r * below_w - below_wr) + (above_wr - r * above_w)
    }

    /// `sum_i w_i |r_i|`, the error of `t = 0`.
    pub fn fit_error_at_zero(&self) -> f64 {
        self.entries.iter().map(|e| e.weight * e.ratio.abs()).sum()
    }

    /// Subproblem objective `f(t) = fit_error(t) + lambda |t|`.
    pub fn objective(&self, t: f64, lambda: f64) -> f64 {
        self.fit_error(t) + lambda * t.abs()
    }

    /// `sgn(r_k) * lambda + W_below - W_above`; entry `k` is optimal when
    /// its magnitude does not exceed `w_k`.
    pub fn condition_offset(&self, k: usize, lambda: f64) -> f64 {
        self.entries[k].sign() * lambda + self.weight_below(k) - self.weight_above(k)
    }

    fn condition_tol(&self) -> f64 {
        CONDITION_TOL * self.total_weight().max(1.0)
    }
}

/// Result of the median scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Subsolution {
    pub value: f64,
    /// Sorted position of the selected entry, `None` when `value` is the
    /// zero fallback.
    pub position: Option<usize>,
}

impl Subsolution {
    pub fn point(&self, ratios: &RatioList) -> Option<usize> {
        self.position.map(|k| ratios.entries[k].point)
    }
}

/// Scans the sorted ratios and returns the first entry satisfying the
/// adjusted weighted-median condition, or zero if none does.
pub fn solve_subproblem(ratios: &RatioList, lambda: f64) -> Result<Subsolution> {
    check_lambda(lambda)?;
    let tol = ratios.condition_tol();
    for (k, e) in ratios.entries.iter().enumerate() {
        if ratios.condition_offset(k, lambda).abs() <= e.weight + tol {
            return Ok(Subsolution {
                value: e.ratio,
                position: Some(k),
            });
        }
    }
    Ok(Subsolution {
        value: 0.0,
        position: None,
    })
}

/// Brute-force minimizer of `f` over its kinks `{0} ∪ ratios`. Ties go to
/// the smaller `|t|`, then to the smaller `t`.
pub fn oracle_subproblem(ratios: &RatioList, lambda: f64) -> (f64, f64) {
    let mut candidates: Vec<f64> = ratios.entries.iter().map(|e| e.ratio).collect();
    candidates.push(0.0);
    candidates.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    let mut best: Option<(f64, f64)> = None;
    for t in candidates {
        let f = ratios.objective(t, lambda);
        match best {
            Some((_, g)) if f >= g - 1e-12 * g.abs().max(1.0) => {}
            _ => best = Some((t, f)),
        }
    }
    best.unwrap_or((0.0, 0.0))
}

/// Multipliers for the dual of the one-coordinate LP:
/// `max sum_i r_i pi_i` subject to `sum_i pi_i + gamma = 0`,
/// `|pi_i| <= w_i`, `|gamma| <= lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualCertificate {
    /// Indexed by sorted position.
    pub pi: Vec<f64>,
    pub gamma: f64,
}

impl DualCertificate {
    pub fn dual_objective(&self, ratios: &RatioList) -> f64 {
        ratios
            .entries
            .iter()
            .zip(&self.pi)
            .map(|(e, p)| e.ratio * p)
            .sum()
    }

    /// Checks dual feasibility and equality with the primal value of
    /// `value`. Returns the dual objective.
    pub fn verify(&self, ratios: &RatioList, lambda: f64, value: f64) -> Result<f64> {
        let scale = (ratios.total_weight() + lambda).max(1.0);
        let tol = CERTIFICATE_TOL * scale;
        if self.pi.len() != ratios.len() {
            return Err(FitError::CertificateInfeasible(format!(
                "{} multipliers for {} entries",
                self.pi.len(),
                ratios.len()
            )));
        }
        let balance: f64 = self.pi.iter().sum::<f64>() + self.gamma;
        if balance.abs() > tol {
            return Err(FitError::CertificateInfeasible(format!(
                "sum(pi) + gamma = {balance}"
            )));
        }
        for (k, (e, p)) in ratios.entries.iter().zip(&self.pi).enumerate() {
            if p.abs() > e.weight + tol {
                return Err(FitError::CertificateInfeasible(format!(
                    "|pi| = {} exceeds weight {} at position {k}",
                    p.abs(),
                    e.weight
                )));
            }
        }
        if self.gamma.abs() > lambda + tol {
            return Err(FitError::CertificateInfeasible(format!(
                "|gamma| = {} exceeds lambda {lambda}",
                self.gamma.abs()
            )));
        }
        let dual = self.dual_objective(ratios);
        let primal = ratios.objective(value, lambda);
        let gap_tol = CERTIFICATE_TOL * primal.abs().max(scale);
        if (dual - primal).abs() > gap_tol {
            return Err(FitError::CertificateInfeasible(format!(
                "dual objective {dual} differs from primal {primal}"
            )));
        }
        Ok(dual)
    }
}

/// Builds the dual certificate for a scan result and verifies it.
pub fn build_dual_certificate(
    ratios: &RatioList,
    lambda: f64,
    solution: &Subsolution,
) -> Result<DualCertificate> {
    check_lambda(lambda)?;
    let cert = match solution.position {
        Some(chosen) => {
            if chosen >= ratios.len() {
                return Err(FitError::CertificateInfeasible(format!(
                    "position {chosen} out of range"
                )));
            }
            let gamma = -ratios.entries[chosen].sign() * lambda;
            let mut pi: Vec<f64> = ratios
                .entries
                .iter()
                .enumerate()
                .map(|(k, e)| match k.cmp(&chosen) {
                    std::cmp::Ordering::Less => -e.weight,
                    std::cmp::Ordering::Greater => e.weight,
                    std::cmp::Ordering::Equal => 0.0,
                })
                .collect();
            let others: f64 = pi.iter().sum();
            pi[chosen] = -gamma - others;
            DualCertificate { pi, gamma }
        }
        None => {
            let pi: Vec<f64> = ratios.entries.iter().map(|e| e.sign() * e.weight).collect();
            let gamma = -pi.iter().sum::<f64>();
            DualCertificate { pi, gamma }
        }
    };
    let value = match solution.position {
        Some(k) => ratios.entries[k].ratio,
        None => 0.0,
    };
    if value != solution.value {
        return Err(FitError::CertificateInfeasible(format!(
            "solution value {} does not match entry value {value}",
            solution.value
        )));
    }
    cert.verify(ratios, lambda, value)?;
    Ok(cert)
}
