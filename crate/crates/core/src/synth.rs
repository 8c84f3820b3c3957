//! Synthetic line data with sparse gross contamination, and the replication
//! study comparing the regularized L1 fit with the least-squares baseline.
//!
//! Point `i` is `alpha_i * v_true + eps_i` with `alpha_i ~ 10 * N(0, 1)` and
//! Laplace noise `eps_ij`. A random set of `contaminated_points` rows then has
//! the same random `contaminated_dims` columns overwritten with values of
//! magnitude in `[outlier_scale / 2, outlier_scale]` and random sign.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::baseline::{l2_best_fit_line, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{FitError, Result};
use crate::fixed::fit_line;
use crate::model::{discordance, l0_count, DataMatrix, SolutionPath};
use crate::path::{query_path_right, solution_path_with_parts, PerCoordinatePath, BREAKPOINT_TOL};

const COEFFICIENT_SCALE: f64 = 10.0;
const CONTAMINATION_STREAM: u64 = 0x0c0f_fee0_dead_beef;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n: usize,
    pub m: usize,
    pub contaminated_points: usize,
    pub contaminated_dims: usize,
    pub noise_scale: f64,
    pub outlier_scale: f64,
    pub seed: u64,
}

impl SimConfig {
    /// Config with unit noise scale and outliers fifty times larger.
    pub fn new(n: usize, m: usize, contaminated_points: usize, contaminated_dims: usize, seed: u64) -> Self {
        Self {
            n,
            m,
            contaminated_points,
            contaminated_dims,
            noise_scale: 1.0,
            outlier_scale: 50.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FitError::InvalidConfig(msg));
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.m < 2 {
            return bad("m must be at least 2".into());
        }
        if self.contaminated_points > self.n {
            return bad(format!("{} contaminated points exceed n = {}", self.contaminated_points, self.n));
        }
        if self.contaminated_dims > self.m {
            return bad(format!("{} contaminated dims exceed m = {}", self.contaminated_dims, self.m));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return bad(format!("noise scale {} must be positive", self.noise_scale));
        }
        if !(self.outlier_scale.is_finite() && self.outlier_scale > 0.0) {
            return bad(format!("outlier scale {} must be positive", self.outlier_scale));
        }
        Ok(())
    }

    /// The same design with seed `seed + rep`.
    pub fn replication(&self, rep: usize) -> Self {
        Self {
            seed: self.seed.wrapping_add(rep as u64),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Synthetic {
    pub data: DataMatrix,
    pub v_true: Vec<f64>,
    /// `(point, dim)` of every overwritten entry.
    pub contaminated: Vec<(usize, usize)>,
}

fn laplace(rng: &mut impl Rng, scale: f64) -> f64 {
    let u: f64 = rng.random::<f64>() - 0.5;
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn generate(config: &SimConfig) -> Result<Synthetic> {
    config.validate()?;
    let (n, m) = (config.n, config.m);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut v_true: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v_true.iter().map(|x| x * x).sum::<f64>().sqrt();
    v_true.iter_mut().for_each(|x| *x /= norm);

    let alpha: Vec<f64> = (0..n)
        .map(|_| COEFFICIENT_SCALE * rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut rows: Vec<Vec<f64>> = alpha
        .iter()
        .map(|&a| v_true.iter().map(|&v| a * v + laplace(&mut rng, config.noise_scale)).collect())
        .collect();

    // separate stream so the clean draw does not depend on the contamination
    let mut crng = ChaCha8Rng::seed_from_u64(config.seed ^ CONTAMINATION_STREAM);
    let points = sample(&mut crng, n, config.contaminated_points).into_vec();
    let dims = sample(&mut crng, m, config.contaminated_dims).into_vec();
    let mut contaminated = Vec::with_capacity(points.len() * dims.len());
    let half = 0.5 * config.outlier_scale;
    for &i in &points {
        for &j in &dims {
            let magnitude = crng.random_range(half..=config.outlier_scale);
            let sign = if crng.random::<bool>() { 1.0 } else { -1.0 };
            rows[i][j] = sign * magnitude;
            contaminated.push((i, j));
        }
    }
    contaminated.sort_unstable();

    Ok(Synthetic {
        data: DataMatrix::from_rows(&rows)?,
        v_true,
        contaminated,
    })
}

/// Smallest, mean and largest breakpoint used to pick study penalties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSummary {
    pub min: f64,
    pub avg: f64,
    pub max: f64,
    /// No finite positive breakpoint was available; all three are zero.
    pub degenerate: bool,
}

/// Summary of the finite breakpoints in `values`, ignoring zero.
pub fn summarize_breakpoints(values: &[f64]) -> LambdaSummary {
    let inner: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0 && x.is_finite()).collect();
    if inner.is_empty() {
        return LambdaSummary {
            min: 0.0,
            avg: 0.0,
            max: 0.0,
            degenerate: true,
        };
    }
    let min = inner.iter().copied().fold(f64::INFINITY, f64::min);
    let max = inner.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let avg = inner.iter().sum::<f64>() / inner.len() as f64;
    LambdaSummary {
        min,
        avg,
        max,
        degenerate: false,
    }
}

/// Summary over the merged path's interior breakpoints.
pub fn lambda_summaries(path: &SolutionPath) -> LambdaSummary {
    summarize_breakpoints(&path.breakpoints())
}

/// Distinct positive breakpoints of all per-coordinate paths.
pub fn union_breakpoints(parts: &[PerCoordinatePath]) -> Vec<f64> {
    let mut all: Vec<f64> = parts
        .iter()
        .flat_map(|p| p.breakpoints.iter().copied())
        .filter(|&x| x > 0.0)
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup_by(|b, a| *b - *a <= BREAKPOINT_TOL);
    all
}

/// Which breakpoints feed the study penalties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BreakpointSource {
    #[default]
    Merged,
    Union,
}

/// Sparsity and accuracy of one estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub l0: usize,
    pub discordance: f64,
}

/// Labels of the penalties evaluated per replication.
pub const PENALTY_LABELS: [&str; 4] = ["lambda_0", "lambda_min", "lambda_avg", "lambda_max"];

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub baseline: Score,
    pub baseline_converged: bool,
    /// Penalties in [`PENALTY_LABELS`] order.
    pub lambdas: [f64; 4],
    pub regularized: [Score; 4],
    pub summary: LambdaSummary,
}

/// Runs one replication. Penalty zero is fitted directly; the breakpoint
/// penalties read the solution that starts at the breakpoint.
pub fn run_replication(config: &SimConfig, source: BreakpointSource, l0_tol: f64) -> Result<Replication> {
    let sim = generate(config)?;
    let data = &sim.data;
    let score = |v: &[f64]| -> Result<Score> {
        Ok(Score {
            l0: l0_count(v, l0_tol),
            discordance: discordance(v, &sim.v_true)?,
        })
    };

    let l2 = l2_best_fit_line(data, DEFAULT_MAX_ITER, DEFAULT_TOL)?;
    let baseline = score(&l2.direction)?;

    let (path, parts) = solution_path_with_parts(data)?;
    let summary = match source {
        BreakpointSource::Merged => lambda_summaries(&path),
        BreakpointSource::Union => summarize_breakpoints(&union_breakpoints(&parts)),
    };
    drop(parts);

    let lambdas = [0.0, summary.min, summary.avg, summary.max];
    let at_zero = fit_line(data, 0.0)?;
    let mut regularized = [score(&at_zero.v)?; 4];
    for k in 1..4 {
        let fit = query_path_right(data, &path, lambdas[k])?;
        regularized[k] = score(&fit.v)?;
    }
    Ok(Replication {
        baseline,
        baseline_converged: l2.converged,
        lambdas,
        regularized,
        summary,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
}

impl Moments {
    /// Mean and sample standard deviation (zero for a single value).
    pub fn of(values: &[f64]) -> Self {
        let k = values.len() as f64;
        let mean = values.iter().sum::<f64>() / k;
        let sd = if values.len() > 1 {
            (values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { mean, sd }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub label: &'static str,
    pub l0: Moments,
    pub discordance: Moments,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub config: SimConfig,
    pub replications: Vec<Replication>,
    /// Baseline first, then the penalties in [`PENALTY_LABELS`] order.
    pub methods: Vec<MethodSummary>,
}

/// Runs `reps` replications (seeds `seed, seed + 1, ...`) in parallel.
pub fn run_simulation(config: &SimConfig, reps: usize, source: BreakpointSource, l0_tol: f64) -> Result<SimulationSummary> {
    config.validate()?;
    if reps == 0 {
        return Err(FitError::InvalidConfig("need at least one replication".into()));
    }
    let replications = (0..reps)
        .into_par_iter()
        .map(|r| run_replication(&config.replication(r), source, l0_tol))
        .collect::<Result<Vec<_>>>()?;

    let summarize = |label, scores: Vec<Score>| MethodSummary {
        label,
        l0: Moments::of(&scores.iter().map(|s| s.l0 as f64).collect::<Vec<_>>()),
        discordance: Moments::of(&scores.iter().map(|s| s.discordance).collect::<Vec<_>>()),
    };
    let mut methods = vec![summarize("baseline", replications.iter().map(|r| r.baseline).collect())];
    for (k, label) in PENALTY_LABELS.iter().enumerate() {
        methods.push(summarize(label, replications.iter().map(|r| r.regularized[k]).collect()));
    }
    Ok(SimulationSummary {
        config: config.clone(),
        replications,
        methods,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_points;
    use crate::path::solution_path;

    #[test]
    fn deterministic_for_seed() {
        let cfg = SimConfig::new(40, 6, 5, 2, 17);
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = generate(&cfg.replication(1)).unwrap();
        assert_ne!(generate(&cfg).unwrap().data, other.data);
    }

    #[test]
    fn contamination_leaves_clean_entries_alone() {
        let clean = generate(&SimConfig::new(50, 8, 0, 0, 3)).unwrap();
        assert!(clean.contaminated.is_empty());
        let dirty = generate(&SimConfig::new(50, 8, 7, 3, 3)).unwrap();
        assert_eq!(dirty.v_true, clean.v_true);
        assert_eq!(dirty.contaminated.len(), 21);
        for i in 0..50 {
            for j in 0..8 {
                let hit = dirty.contaminated.binary_search(&(i, j)).is_ok();
                let (a, b) = (clean.data.get(i, j), dirty.data.get(i, j));
                if hit {
                    assert!((25.0..=50.0).contains(&b.abs()));
                } else {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(SimConfig::new(10, 4, 11, 1, 0).validate().is_err());
        assert!(SimConfig::new(10, 4, 1, 5, 0).validate().is_err());
        assert!(SimConfig::new(10, 1, 0, 0, 0).validate().is_err());
        let mut cfg = SimConfig::new(10, 4, 0, 0, 0);
        cfg.noise_scale = 0.0;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn unit_truth() {
        let s = generate(&SimConfig::new(5, 30, 0, 0, 9)).unwrap();
        let norm: f64 = s.v_true.iter().map(|x| x * x).sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn summaries() {
        let path = solution_path(&example_points()).unwrap();
        let s = lambda_summaries(&path);
        assert_eq!((s.min, s.max, s.degenerate), (3.0, 11.0, false));
        assert!((s.avg - 35.0 / 6.0).abs() < 1e-12);
        let one = summarize_breakpoints(&[0.0, 5.0]);
        assert_eq!((one.min, one.avg, one.max), (5.0, 5.0, 5.0));
        let none = summarize_breakpoints(&[0.0]);
        assert!(none.degenerate);
        assert_eq!((none.min, none.avg, none.max), (0.0, 0.0, 0.0));
    }

    #[test]
    fn union_source() {
        let (_, parts) = solution_path_with_parts(&example_points()).unwrap();
        assert_eq!(union_breakpoints(&parts), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 11.0]);
    }

    #[test]
    fn moments() {
        let m = Moments::of(&[1.0, 2.0, 3.0]);
        assert_eq!((m.mean, m.sd), (2.0, 1.0));
        assert_eq!(Moments::of(&[4.0]).sd, 0.0);
    }

    #[test]
    fn small_study_runs() {
        let summary = run_simulation(&SimConfig::new(60, 5, 6, 2, 1), 3, BreakpointSource::Merged, 1e-12).unwrap();
        assert_eq!(summary.methods.len(), 5);
        assert_eq!(summary.replications.len(), 3);
        assert_eq!(summary.methods[4].l0.mean, 1.0);
    }
}
