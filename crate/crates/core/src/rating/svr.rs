//! Epsilon-SVR with an RBF kernel, trained by sequential minimal
//! optimization.
//!
//! The dual is solved over signed coefficients `beta_i = alpha_i −
//! alpha_i*` in `[-C, C]` with `Σ beta = 0`. Each step picks a KKT-violating
//! point and a seeded-random partner, then minimizes the exact piecewise
//! quadratic one-dimensional subproblem along `beta_i + beta_j = const`
//! (the epsilon-insensitive term makes it piecewise, with breakpoints where
//! either coefficient crosses zero). Pair updates preserve the equality
//! constraint, so dual feasibility holds by construction.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step acceptance threshold on the dual objective decrease.
const MIN_DECREASE: f64 = 1e-12;

/// SVR hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub cost: f64,
    pub epsilon: f64,
    pub gamma: f64,
    /// KKT violation tolerance for the stopping rule.
    pub tol: f64,
    /// Upper bound on full passes over the training set.
    pub max_passes: u32,
    /// Seed for partner selection.
    pub seed: u64,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            cost: 1.0,
            epsilon: 0.1,
            gamma: 1.0,
            tol: 1e-3,
            max_passes: 200,
            seed: 42,
        }
    }
}

/// A fitted epsilon-SVR model. Only support vectors (nonzero dual
/// coefficients) are stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support_vectors: Vec<Vec<f64>>,
    pub dual_coefs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
    pub cost: f64,
    pub epsilon: f64,
    pub dim: usize,
    pub converged: bool,
}

/// `exp(-gamma * ||a - b||^2)`.
pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "rbf_kernel length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("rbf_kernel gamma must be positive"));
    }
    let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((-gamma * sq).exp())
}

/// KKT violation of one coefficient given its error `e = f(x) - y`.
fn kkt_violation(beta: f64, e: f64, epsilon: f64, cost: f64) -> f64 {
    let bnd = 1e-9 * cost.max(1.0);
    if beta >= cost - bnd {
        (e + epsilon).max(0.0)
    } else if beta <= -cost + bnd {
        (epsilon - e).max(0.0)
    } else if beta.abs() <= bnd {
        (e.abs() - epsilon).max(0.0)
    } else if beta > 0.0 {
        (e + epsilon).abs()
    } else {
        (e - epsilon).abs()
    }
}

/// Bias from the KKT conditions: average over free (interior, nonzero)
/// coefficients, or the midpoint of the feasible interval when none are
/// free.
fn compute_bias(beta: &[f64], u: &[f64], y: &[f64], epsilon: f64, cost: f64) -> f64 {
    let bnd = 1e-9 * cost.max(1.0);
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..beta.len() {
        if beta[i] > bnd && beta[i] < cost - bnd {
            sum += y[i] - u[i] - epsilon;
            count += 1;
        } else if beta[i] < -bnd && beta[i] > -cost + bnd {
            sum += y[i] - u[i] + epsilon;
            count += 1;
        }
    }
    if count > 0 {
        return sum / count as f64;
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..beta.len() {
        let base = y[i] - u[i];
        if beta[i].abs() <= bnd {
            lo = lo.max(base - epsilon);
            hi = hi.min(base + epsilon);
        } else if beta[i] >= cost - bnd {
            hi = hi.min(base - epsilon);
        } else {
            lo = lo.max(base + epsilon);
        }
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

/// Exact objective change for moving `delta` from `beta_j` to `beta_i`.
fn objective_delta(
    delta: f64,
    eta: f64,
    grad_diff: f64,
    beta_i: f64,
    beta_j: f64,
    epsilon: f64,
) -> f64 {
    0.5 * eta * delta * delta
        + grad_diff * delta
        + epsilon * ((beta_i + delta).abs() - beta_i.abs() + (beta_j - delta).abs() - beta_j.abs())
}

struct PairStep {
    delta: f64,
}

/// Minimizes the 1-D piecewise quadratic over the pair (i, j).
fn best_pair_step(
    i: usize,
    j: usize,
    kernel: &[f64],
    n: usize,
    beta: &[f64],
    u: &[f64],
    y: &[f64],
    epsilon: f64,
    cost: f64,
) -> Option<PairStep> {
    let eta = (kernel[i * n + i] + kernel[j * n + j] - 2.0 * kernel[i * n + j]).max(1e-12);
    let zeta = beta[i] + beta[j];
    let lower = (-cost).max(zeta - cost);
    let upper = cost.min(zeta + cost);
    if upper - lower < 1e-12 {
        return None;
    }
    // E_i - E_j; the bias cancels.
    let grad_diff = (u[i] - y[i]) - (u[j] - y[j]);

    let mut candidates = [0.0f64; 8];
    let mut n_cand = 0;
    // Unconstrained minimizers for each sign segment of (beta_i, beta_j).
    for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        candidates[n_cand] = beta[i] - (grad_diff + epsilon * (si - sj)) / eta;
        n_cand += 1;
    }
    // Segment breakpoints (either coefficient hits zero) and box corners.
    candidates[n_cand] = 0.0;
    candidates[n_cand + 1] = zeta;
    candidates[n_cand + 2] = lower;
    candidates[n_cand + 3] = upper;
    n_cand += 4;

    let mut best_delta = 0.0;
    let mut best_decrease = -MIN_DECREASE;
    for &cand in &candidates[..n_cand] {
        let new_beta_i = cand.clamp(lower, upper);
        let delta = new_beta_i - beta[i];
        let d = objective_delta(delta, eta, grad_diff, beta[i], beta[j], epsilon);
        if d < best_decrease {
            best_decrease = d;
            best_delta = delta;
        }
    }
    if best_decrease < -MIN_DECREASE {
        Some(PairStep { delta: best_delta })
    } else {
        None
    }
}

/// Fits epsilon-SVR by SMO; deterministic given `params.seed`.
pub fn train_svr(features: &[Vec<f64>], targets: &[f64], params: &SvrParams) -> Result<SvrModel> {
    let n = features.len();
    if n < 2 {
        return Err(Error::invalid("SVR needs at least 2 training samples"));
    }
    if targets.len() != n {
        return Err(Error::invalid(format!(
            "{} feature rows but {} targets",
            n,
            targets.len()
        )));
    }
    if !(params.cost > 0.0) {
        return Err(Error::invalid("SVR cost must be positive"));
    }
    if params.epsilon < 0.0 {
        return Err(Error::invalid("SVR epsilon must be non-negative"));
    }
    let dim = features[0].len();
    for (idx, row) in features.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::invalid(format!(
                "feature row {idx} has dimension {} != {dim}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("feature row {idx} contains a non-finite value")));
        }
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("targets contain a non-finite value"));
    }

    let mut kernel = vec![0.0f64; n * n];
    for i in 0..n {
        for j in i..n {
            let k = rbf_kernel(&features[i], &features[j], params.gamma)?;
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }

    let cost = params.cost;
    let epsilon = params.epsilon;
    let mut beta = vec![0.0f64; n];
    let mut u = vec![0.0f64; n]; // u_i = Σ_j beta_j K_ij
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut converged = false;

    for _pass in 0..params.max_passes {
        let bias = compute_bias(&beta, &u, targets, epsilon, cost);
        let max_violation = (0..n)
            .map(|i| kkt_violation(beta[i], u[i] + bias - targets[i], epsilon, cost))
            .fold(0.0f64, f64::max);
        if max_violation < params.tol {
            converged = true;
            break;
        }
        for i in 0..n {
            let bias = compute_bias(&beta, &u, targets, epsilon, cost);
            let e_i = u[i] + bias - targets[i];
            if kkt_violation(beta[i], e_i, epsilon, cost) <= params.tol {
                continue;
            }
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            if let Some(step) = best_pair_step(i, j, &kernel, n, &beta, &u, targets, epsilon, cost) {
                beta[i] += step.delta;
                beta[j] -= step.delta;
                // Numerical hygiene at the box boundary.
                beta[i] = beta[i].clamp(-cost, cost);
                beta[j] = beta[j].clamp(-cost, cost);
                for k in 0..n {
                    u[k] += step.delta * (kernel[i * n + k] - kernel[j * n + k]);
                }
            }
        }
    }

    let bias = compute_bias(&beta, &u, targets, epsilon, cost);
    let mut support_vectors = Vec::new();
    let mut dual_coefs = Vec::new();
    for i in 0..n {
        if beta[i].abs() > 1e-12 {
            support_vectors.push(features[i].clone());
            dual_coefs.push(beta[i]);
        }
    }
    Ok(SvrModel {
        support_vectors,
        dual_coefs,
        bias,
        gamma: params.gamma,
        cost,
        epsilon,
        dim,
        converged,
    })
}

impl SvrModel {
    /// Raw regression output `Σ coef_i · k(sv_i, x) + bias`.
    pub fn predict_raw(&self, feature: &[f64]) -> Result<f64> {
        if feature.len() != self.dim {
            return Err(Error::invalid(format!(
                "feature has dimension {} but the model was trained on {}",
                feature.len(),
                self.dim
            )));
        }
        let mut out = self.bias;
        for (sv, coef) in self.support_vectors.iter().zip(&self.dual_coefs) {
            out += coef * rbf_kernel(sv, feature, self.gamma)?;
        }
        Ok(out)
    }

    /// Prediction clamped to the rating scale [1, 5].
    pub fn predict_rating(&self, feature: &[f64]) -> Result<f64> {
        Ok(self.predict_raw(feature)?.clamp(1.0, 5.0))
    }

    pub fn coef_sum(&self) -> f64 {
        self.dual_coefs.iter().sum()
    }

    /// Dual feasibility: `Σ coefs = 0 ± 1e-6` and `|coef| ≤ C`.
    pub fn kkt_feasible(&self) -> bool {
        self.coef_sum().abs() <= 1e-6
            && self
                .dual_coefs
                .iter()
                .all(|c| c.abs() <= self.cost + 1e-12)
    }
}
