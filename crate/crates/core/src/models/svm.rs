//! Soft-margin RBF support vector classifier.
//!
//! Each pair of classes gets a binary machine trained on its dual problem
//!
//! ```text
//! min_α  ½ αᵀQα − eᵀα    s.t.  0 ≤ α ≤ C,  yᵀα = 0,   Q_ij = y_i y_j k(x_i, x_j)
//! ```
//!
//! by sequential minimal optimization: every step moves the maximal
//! KKT-violating pair analytically until the violation drops below `tol`.
//! Multi-class prediction is a one-vs-one vote.

use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::corpus::PainClass;
use crate::error::{Error, Result};

const TAU: f64 = 1e-12;

/// RBF width: a fixed value, or `1 / (n_features · Var(X))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: Gamma,
    /// Stopping threshold on the maximal KKT violation.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 1.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

pub fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum();
    (-gamma * d2).exp()
}

pub fn rbf_matrix(a: ArrayView2<f64>, b: ArrayView2<f64>, gamma: f64) -> Array2<f64> {
    let mut k = Array2::zeros((a.nrows(), b.nrows()));
    for (i, ra) in a.rows().into_iter().enumerate() {
        for (j, rb) in b.rows().into_iter().enumerate() {
            let d2: f64 = ra.iter().zip(rb.iter()).map(|(u, v)| (u - v).powi(2)).sum();
            k[[i, j]] = (-gamma * d2).exp();
        }
    }
    k
}

/// `1 / (n_features · Var(X))` over all entries of `x`.
pub fn scale_gamma(x: ArrayView2<f64>) -> Result<f64> {
    let var = x.var(0.0);
    if !(var > 0.0) || x.ncols() == 0 {
        return Err(Error::NonPositiveGamma);
    }
    Ok(1.0 / (x.ncols() as f64 * var))
}

/// Solution of one binary dual problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// `½ αᵀQα − eᵀα` at the solution.
    pub objective: f64,
    /// Maximal KKT violation `m(α) − M(α)` at termination.
    pub violation: f64,
    pub iterations: usize,
}

fn in_up(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha < c) || (y < 0.0 && alpha > 0.0)
}

fn in_low(alpha: f64, y: f64, c: f64) -> bool {
    (y > 0.0 && alpha > 0.0) || (y < 0.0 && alpha < c)
}

/// Solve the binary dual for a precomputed kernel matrix and labels `y ∈ {±1}`.
pub fn solve_dual(k: &Array2<f64>, y: &[f64], c: f64, tol: f64, max_iter: usize) -> DualSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[[i, j]];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut iterations = 0;
    let mut violation;

    loop {
        // Maximal violating pair.
        let (mut i, mut gmax) = (usize::MAX, f64::NEG_INFINITY);
        let (mut j, mut gmin) = (usize::MAX, f64::INFINITY);
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t], c) && v > gmax {
                gmax = v;
                i = t;
            }
            if in_low(alpha[t], y[t], c) && v < gmin {
                gmin = v;
                j = t;
            }
        }
        violation = if i == usize::MAX || j == usize::MAX {
            0.0
        } else {
            gmax - gmin
        };
        if violation < tol || iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        let qij = q(i, j);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    let objective = 0.5
        * alpha
            .iter()
            .zip(&grad)
            .map(|(a, g)| a * (g - 1.0))
            .sum::<f64>();
    DualSolution {
        rho: compute_rho(&alpha, &grad, y, c),
        alpha,
        objective,
        violation,
        iterations,
    }
}

fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum, mut n_free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum += yg;
        }
    }
    if n_free > 0 {
        sum / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}

/// One binary machine of the one-vs-one ensemble; `positive` wins when the
/// decision value is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinarySvm {
    pub positive: PainClass,
    pub negative: PainClass,
    #[serde(skip)]
    pub support_vectors: Array2<f64>,
    /// `α_i y_i` for each support vector.
    pub dual_coef: Vec<f64>,
    pub rho: f64,
    pub solution: DualSolution,
    /// `+1` for `positive`, `−1` for `negative`, per training row of the pair.
    pub y: Vec<f64>,
}

impl BinarySvm {
    pub fn decision(&self, row: &[f64], gamma: f64) -> f64 {
        let s: f64 = self
            .support_vectors
            .rows()
            .into_iter()
            .zip(&self.dual_coef)
            .map(|(sv, coef)| coef * rbf(sv.as_slice().unwrap(), row, gamma))
            .sum();
        s - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SvmModel {
    pub classes: Vec<PainClass>,
    pub machines: Vec<BinarySvm>,
    pub gamma: f64,
    pub c: f64,
}

impl SvmModel {
    pub fn fit(x: ArrayView2<f64>, y: &[PainClass], params: SvmParams) -> Result<Self> {
        if y.is_empty() || x.nrows() == 0 {
            return Err(Error::EmptyTrainingSet);
        }
        if x.nrows() != y.len() {
            return Err(Error::invalid("svm: X and y lengths differ"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("svm training input"));
        }
        if !(params.c > 0.0) {
            return Err(Error::invalid("svm: C must be positive"));
        }
        let mut classes: Vec<PainClass> = y.to_vec();
        classes.sort();
        classes.dedup();
        if classes.len() < 2 {
            return Err(Error::SingleClass);
        }
        let gamma = match params.gamma {
            Gamma::Scale => scale_gamma(x)?,
            Gamma::Value(g) if g > 0.0 => g,
            Gamma::Value(_) => return Err(Error::NonPositiveGamma),
        };
        let x = x.as_standard_layout().into_owned();
        let kernel = rbf_matrix(x.view(), x.view(), gamma);

        let mut machines = Vec::new();
        for (a, &pos) in classes.iter().enumerate() {
            for &neg in &classes[a + 1..] {
                let rows: Vec<usize> = (0..y.len())
                    .filter(|&i| y[i] == pos || y[i] == neg)
                    .collect();
                let yy: Vec<f64> = rows
                    .iter()
                    .map(|&i| if y[i] == pos { 1.0 } else { -1.0 })
                    .collect();
                let k = kernel.select(Axis(0), &rows).select(Axis(1), &rows);
                let sol = solve_dual(&k, &yy, params.c, params.tol, params.max_iter);
                let sv: Vec<usize> = (0..rows.len()).filter(|&t| sol.alpha[t] > 0.0).collect();
                let sv_rows: Vec<usize> = sv.iter().map(|&t| rows[t]).collect();
                machines.push(BinarySvm {
                    positive: pos,
                    negative: neg,
                    support_vectors: x.select(Axis(0), &sv_rows),
                    dual_coef: sv.iter().map(|&t| sol.alpha[t] * yy[t]).collect(),
                    rho: sol.rho,
                    solution: sol,
                    y: yy,
                });
            }
        }
        Ok(SvmModel {
            classes,
            machines,
            gamma,
            c: params.c,
        })
    }

    pub fn predict_one(&self, row: &[f64]) -> PainClass {
        let mut votes = [0usize; 3];
        for m in &self.machines {
            let winner = if m.decision(row, self.gamma) > 0.0 {
                m.positive
            } else {
                m.negative
            };
            votes[winner.index()] += 1;
        }
        let mut best = self.classes[0];
        for &c in &self.classes[1..] {
            if votes[c.index()] > votes[best.index()] {
                best = c;
            }
        }
        best
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<PainClass> {
        x.rows()
            .into_iter()
            .map(|r| self.predict_one(&r.to_vec()))
            .collect()
    }
}
