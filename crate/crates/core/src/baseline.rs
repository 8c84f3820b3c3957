//! Classical least-squares best-fit line (first principal direction) by
//! power iteration on the Gram matrix, used as the comparison baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FitError, Result};
use crate::model::DataMatrix;

pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_TOL: f64 = 1e-10;
const RESTART_SEED: u64 = 0x5eed_1e55;

#[derive(Debug, Clone, PartialEq)]
pub struct L2Fit {
    /// Unit L2 direction, first nonzero coordinate positive.
    pub direction: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iter` ran out; `direction` is then the last iterate.
    pub converged: bool,
    /// Rayleigh quotient of every iterate.
    pub rayleigh: Vec<f64>,
}

fn gram(data: &DataMatrix) -> Vec<f64> {
    let m = data.m();
    let mut g = vec![0.0; m * m];
    for a in 0..m {
        let ca = data.column(a);
        for b in a..m {
            let s: f64 = ca.iter().zip(data.column(b)).map(|(x, y)| x * y).sum();
            g[a * m + b] = s;
            g[b * m + a] = s;
        }
    }
    g
}

fn mat_vec(g: &[f64], v: &[f64]) -> Vec<f64> {
    let m = v.len();
    (0..m)
        .map(|r| g[r * m..(r + 1) * m].iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = dot(v, v).sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

fn fix_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Dominant right singular vector of the data matrix.
pub fn l2_best_fit_line(data: &DataMatrix, max_iter: usize, tol: f64) -> Result<L2Fit> {
    if data.l1_mass() == 0.0 {
        return Err(FitError::ZeroData);
    }
    let m = data.m();
    let g = gram(data);
    let mut rng = ChaCha8Rng::seed_from_u64(RESTART_SEED);
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let trace: f64 = (0..m).map(|i| g[i * m + i]).sum();
    let mut rayleigh = vec![dot(&v, &mat_vec(&g, &v))];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        iterations += 1;
        let mut next = mat_vec(&g, &v);
        if normalize(&mut next) <= 1e-14 * trace {
            // start is (numerically) orthogonal to the column space
            v = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
            normalize(&mut v);
            continue;
        }
        if dot(&next, &v) < 0.0 {
            next.iter_mut().for_each(|x| *x = -*x);
        }
        let step = next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        rayleigh.push(dot(&next, &mat_vec(&g, &next)));
        v = next;
        if step < tol {
            converged = true;
            break;
        }
    }
    fix_sign(&mut v);
    Ok(L2Fit {
        direction: v,
        iterations,
        converged,
        rayleigh,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::example_points;

    /// Cyclic Jacobi rotations on a symmetric matrix; returns the
    /// eigenvector of the largest eigenvalue.
    fn jacobi_top_eigenvector(mut a: Vec<f64>, m: usize) -> Vec<f64> {
        let mut vecs = vec![0.0; m * m];
        for i in 0..m {
            vecs[i * m + i] = 1.0;
        }
        for _ in 0..100 {
            let off: f64 = (0..m)
                .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| a[i * m + j] * a[i * m + j])
                .sum();
            if off < 1e-26 {
                break;
            }
            for p in 0..m {
                for q in p + 1..m {
                    let apq = a[p * m + q];
                    if apq.abs() < 1e-300 {
                        continue;
                    }
                    let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..m {
                        let akp = a[k * m + p];
                        let akq = a[k * m + q];
                        a[k * m + p] = c * akp - s * akq;
                        a[k * m + q] = s * akp + c * akq;
                    }
                    for k in 0..m {
                        let apk = a[p * m + k];
                        let aqk = a[q * m + k];
                        a[p * m + k] = c * apk - s * aqk;
                        a[q * m + k] = s * apk + c * aqk;
                    }
                    for k in 0..m {
                        let vkp = vecs[k * m + p];
                        let vkq = vecs[k * m + q];
                        vecs[k * m + p] = c * vkp - s * vkq;
                        vecs[k * m + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
        let top = (0..m).max_by(|&i, &j| a[i * m + i].total_cmp(&a[j * m + j])).unwrap();
        let mut v: Vec<f64> = (0..m).map(|k| vecs[k * m + top]).collect();
        fix_sign(&mut v);
        v
    }

    #[test]
    fn axis_aligned_points() {
        let data = DataMatrix::from_rows(&[[1.0, 0.0], [-3.0, 0.0], [2.0, 0.0]]).unwrap();
        let fit = l2_best_fit_line(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(fit.converged);
        assert!((fit.direction[0] - 1.0).abs() < 1e-9);
        assert!(fit.direction[1].abs() < 1e-9);
    }

    #[test]
    fn rank_one_diagonal() {
        let data = DataMatrix::from_rows(&[[1.0, 1.0], [2.0, 2.0], [-1.0, -1.0]]).unwrap();
        let fit = l2_best_fit_line(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert!((fit.direction[0] - h).abs() < 1e-9 && (fit.direction[1] - h).abs() < 1e-9);
    }

    #[test]
    fn matches_jacobi_on_example() {
        let data = example_points();
        let fit = l2_best_fit_line(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        let oracle = jacobi_top_eigenvector(gram(&data), data.m());
        for (a, b) in fit.direction.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6, "{:?} vs {:?}", fit.direction, oracle);
        }
        assert!((dot(&fit.direction, &fit.direction) - 1.0).abs() < 1e-12);
        for w in fit.rayleigh.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
    }

    #[test]
    fn orthogonal_start_restarts() {
        // column space is spanned by (1, -1), orthogonal to the all-ones start
        let data = DataMatrix::from_rows(&[[1.0, -1.0], [-2.0, 2.0]]).unwrap();
        let fit = l2_best_fit_line(&data, DEFAULT_MAX_ITER, DEFAULT_TOL).unwrap();
        assert!(fit.converged);
        let h = 1.0 / 2f64.sqrt();
        assert!((fit.direction[0] - h).abs() < 1e-9 && (fit.direction[1] + h).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let data = example_points();
        let fit = l2_best_fit_line(&data, 2, 1e-300).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn zero_data_rejected() {
        let data = DataMatrix::from_rows(&[[0.0, 0.0]]).unwrap();
        assert_eq!(l2_best_fit_line(&data, 10, 1e-9), Err(FitError::ZeroData));
    }
}
