//! Binary soft-margin SVM trained by sequential minimal optimization.
//!
//! Solves the dual
//!
//! ```text
//! max  sum(a) - 1/2 a' Q a      Q_ij = y_i y_j K(x_i, x_j)
//! s.t. 0 <= a_i <= C,  y' a = 0
//! ```
//!
//! by repeatedly optimizing one pair of multipliers in closed form. The pair
//! is chosen with second-order working-set selection (the maximal violating
//! index plus the partner with the largest guaranteed objective gain), and the
//! loop stops once the maximal KKT violation drops below `tol`. Indefinite
//! kernels (sigmoid) get a small positive curvature in the pair update so the
//! step stays bounded; for those the result is a local optimum of the dual.

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::kernel::KernelConfig;
use super::SvmConfig;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;
/// Floor of the default iteration budget. Small problems with a large `C` can
/// need far more than `10 n^2` pair updates.
const MIN_ITERATIONS: usize = 1_000_000;
/// Upper bound on cached kernel rows, in f64 entries.
const CACHE_ENTRIES: usize = 64 << 20;

/// A trained two-class decision function `f(x) = sum c_i K(s_i, x) + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub kernel: KernelConfig,
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
}

impl BinaryMachine {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval_unchecked(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Solver output: the machine plus the full dual state.
#[derive(Debug, Clone)]
pub struct BinaryTraining {
    pub machine: BinaryMachine,
    /// One multiplier per training sample.
    pub alpha: Vec<f64>,
    /// Dual objective `sum(a) - 1/2 a' Q a` at the returned iterate.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct QMatrix<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    kernel: KernelConfig,
    rows: Vec<Option<Arc<Vec<f64>>>>,
    order: VecDeque<usize>,
    capacity: usize,
}

impl<'a> QMatrix<'a> {
    fn new(x: &'a [Vec<f64>], y: &'a [f64], kernel: KernelConfig) -> Self {
        let n = x.len();
        QMatrix {
            x,
            y,
            kernel,
            rows: vec![None; n],
            order: VecDeque::new(),
            capacity: (CACHE_ENTRIES / n.max(1)).max(2),
        }
    }

    fn row(&mut self, i: usize) -> Arc<Vec<f64>> {
        if let Some(r) = &self.rows[i] {
            return r.clone();
        }
        let xi = &self.x[i];
        let yi = self.y[i];
        let row: Vec<f64> = self
            .x
            .iter()
            .zip(self.y)
            .map(|(xj, yj)| yi * yj * self.kernel.eval_unchecked(xi, xj))
            .collect();
        let row = Arc::new(row);
        if self.order.len() >= self.capacity {
            if let Some(old) = self.order.pop_front() {
                self.rows[old] = None;
            }
        }
        self.rows[i] = Some(row.clone());
        self.order.push_back(i);
        row
    }
}

/// Trains one binary machine on standardized rows `x` with labels `y` in {-1, +1}.
///
/// Hitting the iteration cap is not an error: the best iterate is returned with
/// `converged = false` and a warning is logged.
pub fn train_binary(x: &[Vec<f64>], y: &[f64], cfg: &SvmConfig) -> Result<BinaryTraining> {
    cfg.validate()?;
    let n = x.len();
    if y.len() != n {
        return Err(Error::Shape {
            expected: n,
            actual: y.len(),
        });
    }
    if let Some(bad) = y.iter().find(|v| **v != 1.0 && **v != -1.0) {
        return Err(Error::Config(format!("binary labels must be +1 or -1, got {bad}")));
    }
    if !y.contains(&1.0) || !y.contains(&-1.0) {
        return Err(Error::DegenerateData("binary training needs both classes".into()));
    }
    let dim = x[0].len();
    if let Some(r) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::Shape {
            expected: dim,
            actual: r.len(),
        });
    }

    let c = cfg.c;
    let eps = cfg.tol;
    let max_iter = match cfg.max_passes {
        Some(p) => p.saturating_mul(n).max(1),
        None => (10 * n).saturating_mul(n).max(MIN_ITERATIONS),
    };

    let mut q = QMatrix::new(x, y, cfg.kernel);
    let qd: Vec<f64> = x.iter().map(|xi| cfg.kernel.eval_unchecked(xi, xi)).collect();
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];

    let is_upper = |a: f64| a >= c;
    let is_lower = |a: f64| a <= 0.0;

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // Working set selection.
        let mut gmax = f64::NEG_INFINITY;
        let mut gmax_idx = None;
        for t in 0..n {
            if y[t] > 0.0 {
                if !is_upper(alpha[t]) && -grad[t] >= gmax {
                    gmax = -grad[t];
                    gmax_idx = Some(t);
                }
            } else if !is_lower(alpha[t]) && grad[t] >= gmax {
                gmax = grad[t];
                gmax_idx = Some(t);
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut gmin_idx = None;
        let mut obj_diff_min = f64::INFINITY;
        if let Some(i) = gmax_idx {
            let q_i = q.row(i);
            for j in 0..n {
                let (grad_diff, quad) = if y[j] > 0.0 {
                    if is_lower(alpha[j]) {
                        continue;
                    }
                    gmax2 = gmax2.max(grad[j]);
                    (gmax + grad[j], qd[i] + qd[j] - 2.0 * y[i] * q_i[j])
                } else {
                    if is_upper(alpha[j]) {
                        continue;
                    }
                    gmax2 = gmax2.max(-grad[j]);
                    (gmax - grad[j], qd[i] + qd[j] + 2.0 * y[i] * q_i[j])
                };
                if grad_diff > 0.0 {
                    let obj_diff = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj_diff <= obj_diff_min {
                        gmin_idx = Some(j);
                        obj_diff_min = obj_diff;
                    }
                }
            }
        }
        let (i, j) = match (gmax_idx, gmin_idx) {
            (Some(i), Some(j)) if gmax + gmax2 >= eps => (i, j),
            _ => {
                converged = true;
                break;
            }
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let q_i = q.row(i);
        let q_j = q.row(j);
        let (old_ai, old_aj) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_ai, old_aj);
        if y[i] != y[j] {
            let quad = positive(qd[i] + qd[j] + 2.0 * q_i[j]);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let quad = positive(qd[i] + qd[j] - 2.0 * q_i[j]);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (ai - old_ai, aj - old_aj);
        for k in 0..n {
            grad[k] += q_i[k] * dai + q_j[k] * daj;
        }
    }

    if !converged {
        log::warn!(
            "SMO stopped after {iterations} iterations without reaching tol {eps}; \
             returning the last iterate"
        );
    }

    // Bias from the free multipliers, or the middle of the feasible range.
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut free = 0usize;
    let mut sum_free = 0.0;
    for t in 0..n {
        let yg = y[t] * grad[t];
        if is_upper(alpha[t]) {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if is_lower(alpha[t]) {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

    let objective = alpha
        .iter()
        .zip(&grad)
        .map(|(a, g)| a - 0.5 * a * (g + 1.0))
        .sum();

    let (support_vectors, coefficients) = alpha
        .iter()
        .enumerate()
        .filter(|(_, a)| **a > 0.0)
        .map(|(t, a)| (x[t].clone(), a * y[t]))
        .unzip();

    Ok(BinaryTraining {
        machine: BinaryMachine {
            kernel: cfg.kernel,
            support_vectors,
            coefficients,
            bias: -rho,
        },
        alpha,
        objective,
        iterations,
        converged,
    })
}

fn positive(quad: f64) -> f64 {
    if quad > 0.0 {
        quad
    } else {
        TAU
    }
}

/// Dual objective `sum(a) - 1/2 a' Q a` for an arbitrary multiplier vector.
pub fn dual_objective(x: &[Vec<f64>], y: &[f64], kernel: &KernelConfig, alpha: &[f64]) -> f64 {
    let n = x.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * kernel.eval_unchecked(&x[i], &x[j]);
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// Largest KKT violation of a trained machine on its training set:
/// `y f(x) >= 1` where `a = 0`, `y f(x) <= 1` where `a = C`, `y f(x) = 1`
/// otherwise.
pub fn kkt_violation(training: &BinaryTraining, x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    x.iter()
        .zip(y)
        .zip(&training.alpha)
        .map(|((xi, yi), &a)| {
            let margin = yi * training.machine.decision(xi);
            if a <= 0.0 {
                (1.0 - margin).max(0.0)
            } else if a >= c {
                (margin - 1.0).max(0.0)
            } else {
                (margin - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::{KernelKind, Reduction};

    fn cfg(c: f64, kernel: KernelConfig) -> SvmConfig {
        SvmConfig {
            c,
            kernel,
            reduction: Reduction::OneVsRest,
            tol: 1e-3,
            max_passes: None,
        }
    }

    fn xor() -> (Vec<Vec<f64>>, Vec<f64>) {
        (
            vec![vec![1.0, 1.0], vec![-1.0, -1.0], vec![1.0, -1.0], vec![-1.0, 1.0]],
            vec![1.0, 1.0, -1.0, -1.0],
        )
    }

    fn accuracy(t: &BinaryTraining, x: &[Vec<f64>], y: &[f64]) -> f64 {
        let ok = x
            .iter()
            .zip(y)
            .filter(|(xi, yi)| (t.machine.decision(xi) > 0.0) == (**yi > 0.0))
            .count();
        ok as f64 / y.len() as f64
    }

    #[test]
    fn separable_clusters() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let d = (i as f64 * 0.37).sin() * 0.3;
            x.push(vec![2.0 + d, 2.0 - d]);
            y.push(1.0);
            x.push(vec![-2.0 - d, -2.0 + d * 0.5]);
            y.push(-1.0);
        }
        let t = train_binary(&x, &y, &cfg(1.0, KernelConfig::linear())).unwrap();
        assert!(t.converged);
        assert_eq!(accuracy(&t, &x, &y), 1.0);
        assert!(kkt_violation(&t, &x, &y, 1.0) <= 1e-3);
        let sum: f64 = t.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(sum.abs() <= 1e-3);
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        // Oracle: every sign pattern a linear rule sign(w.x + b) can produce on
        // the four XOR points misclassifies at least one point.
        let (x, y) = xor();
        let mut best = 0;
        for w0 in -4..=4 {
            for w1 in -4..=4 {
                for b in -4..=4 {
                    let ok = x
                        .iter()
                        .zip(&y)
                        .filter(|(p, l)| {
                            let f = w0 as f64 * p[0] + w1 as f64 * p[1] + b as f64 * 0.5;
                            (f > 0.0) == (**l > 0.0)
                        })
                        .count();
                    best = best.max(ok);
                }
            }
        }
        assert_eq!(best, 3);

        let t = train_binary(&x, &y, &cfg(1.0, KernelConfig::linear())).unwrap();
        assert!(accuracy(&t, &x, &y) <= 0.75);
    }

    #[test]
    fn xor_with_rbf_matches_grid_oracle() {
        let (x, y) = xor();
        let kernel = KernelConfig::rbf(1.0);
        let t = train_binary(&x, &y, &cfg(100.0, kernel)).unwrap();
        assert_eq!(accuracy(&t, &x, &y), 1.0);

        // Brute-force dual: grid over (a1, a2, a3) with a4 fixed by y'a = 0.
        let steps = 120;
        let hi = 3.0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..=steps {
            for j in 0..=steps {
                for k in 0..=steps {
                    let a = [
                        hi * i as f64 / steps as f64,
                        hi * j as f64 / steps as f64,
                        hi * k as f64 / steps as f64,
                    ];
                    let a4 = a[0] + a[1] - a[2];
                    if !(0.0..=100.0).contains(&a4) {
                        continue;
                    }
                    let alpha = [a[0], a[1], a[2], a4];
                    best = best.max(dual_objective(&x, &y, &kernel, &alpha));
                }
            }
        }
        assert!(t.objective >= best - 1e-6, "smo {} < grid {}", t.objective, best);
        assert!((t.objective - best).abs() / best < 1e-2);
        assert!((t.objective - dual_objective(&x, &y, &kernel, &t.alpha)).abs() < 1e-9);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = vec![vec![0.0], vec![1.0]];
        let err = train_binary(&x, &[1.0, 1.0], &cfg(1.0, KernelConfig::linear()));
        assert!(matches!(err, Err(Error::DegenerateData(_))));
        assert!(train_binary(&x, &[1.0, 0.0], &cfg(1.0, KernelConfig::linear())).is_err());
    }

    #[test]
    fn iteration_cap_returns_best_iterate() {
        let (x, y) = xor();
        let mut c = cfg(100.0, KernelConfig::new(KernelKind::Rbf, 1.0));
        c.max_passes = Some(0);
        let t = train_binary(&x, &y, &c).unwrap();
        assert!(!t.converged);
        assert!(t.alpha.iter().all(|a| (0.0..=100.0).contains(a)));
    }
}
