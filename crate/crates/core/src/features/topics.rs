//! Topic distribution features from a non-negative factorization of the
//! document-term TF-IDF matrix, `V ≈ W·H`, fitted by Lee-Seung multiplicative
//! updates on the Frobenius objective.

use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NmfParams {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once the relative objective decrease falls below this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for NmfParams {
    fn default() -> Self {
        NmfParams {
            k: 12,
            max_iter: 200,
            tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicModel {
    pub k: usize,
    /// `k × |vocab|`, nonnegative.
    #[serde(skip)]
    pub topic_term: Array2<f64>,
    /// Squared Frobenius reconstruction error, initial value first.
    pub objective_trace: Vec<f64>,
    transform_iter: usize,
    tol: f64,
}

fn objective(v: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let r = v - &w.dot(h);
    r.iter().map(|x| x * x).sum()
}

fn update_h(v: &Array2<f64>, w: &Array2<f64>, h: &mut Array2<f64>) {
    let num = w.t().dot(v);
    let den = w.t().dot(w).dot(&*h);
    ndarray::Zip::from(h)
        .and(&num)
        .and(&den)
        .for_each(|h, &n, &d| {
            if d > 0.0 {
                *h *= n / d;
            }
        });
}

fn update_w(v: &Array2<f64>, w: &mut Array2<f64>, h: &Array2<f64>) {
    let num = v.dot(&h.t());
    let den = w.dot(&h.dot(&h.t()));
    ndarray::Zip::from(w)
        .and(&num)
        .and(&den)
        .for_each(|w, &n, &d| {
            if d > 0.0 {
                *w *= n / d;
            }
        });
}

fn init_scale(v: &Array2<f64>, k: usize) -> f64 {
    let mean = v.mean().unwrap_or(0.0);
    if mean > 0.0 {
        (mean / k as f64).sqrt()
    } else {
        1.0
    }
}

pub fn topic_fit(v: &Array2<f64>, params: NmfParams) -> Result<TopicModel> {
    let (n, m) = v.dim();
    if params.k < 2 {
        return Err(Error::invalid("topic model needs k >= 2"));
    }
    if params.k > m {
        return Err(Error::invalid(format!(
            "k = {} exceeds vocabulary size {m}",
            params.k
        )));
    }
    if n == 0 {
        return Err(Error::invalid("topic model needs at least one document"));
    }
    if v.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(Error::invalid(
            "topic model input must be finite and nonnegative",
        ));
    }
    let scale = init_scale(v, params.k);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut w = Array2::from_shape_simple_fn((n, params.k), || rng.random_range(0.01..1.0) * scale);
    let mut h = Array2::from_shape_simple_fn((params.k, m), || rng.random_range(0.01..1.0) * scale);

    let mut trace = vec![objective(v, &w, &h)];
    for _ in 0..params.max_iter {
        update_h(v, &w, &mut h);
        update_w(v, &mut w, &h);
        let cur = objective(v, &w, &h);
        let prev = *trace.last().unwrap();
        trace.push(cur);
        if prev <= 0.0 || (prev - cur) / prev < params.tol {
            break;
        }
    }
    Ok(TopicModel {
        k: params.k,
        topic_term: h,
        objective_trace: trace,
        transform_iter: params.max_iter,
        tol: params.tol,
    })
}

impl TopicModel {
    /// Document-topic weights against the frozen topic-term matrix, each row
    /// normalized to sum to one (all-zero rows become uniform).
    pub fn transform(&self, v: &Array2<f64>) -> Result<Array2<f64>> {
        if v.ncols() != self.topic_term.ncols() {
            return Err(Error::invalid("topic transform: vocabulary size mismatch"));
        }
        let scale = init_scale(v, self.k);
        let mut w = Array2::from_elem((v.nrows(), self.k), scale);
        let mut prev = objective(v, &w, &self.topic_term);
        for _ in 0..self.transform_iter {
            update_w(v, &mut w, &self.topic_term);
            let cur = objective(v, &w, &self.topic_term);
            if prev <= 0.0 || (prev - cur) / prev < self.tol {
                break;
            }
            prev = cur;
        }
        let uniform = 1.0 / self.k as f64;
        for mut row in w.axis_iter_mut(Axis(0)) {
            let s = row.sum();
            if s > 0.0 {
                row /= s;
            } else {
                row.fill(uniform);
            }
        }
        Ok(w)
    }
}
