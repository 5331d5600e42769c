//! Weighted logistic regression via full-batch gradient descent.
//!
//! The loss is normalized by the total sample weight, so rescaling all
//! weights by a positive constant leaves the optimization trajectory
//! unchanged. Features are standardized with weighted moments for the
//! same reason (and so zero-weight rows cannot influence the fit).

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::{clamp_probability, sigmoid, LearnerSpec};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticModel {
    pub(crate) coefficients: Vec<f64>,
    pub(crate) intercept: f64,
    pub(crate) feature_means: Vec<f64>,
    pub(crate) feature_scales: Vec<f64>,
    pub(crate) spec: LearnerSpec,
}

impl LogisticModel {
    pub(crate) fn fit(
        spec: &LearnerSpec,
        x: ArrayView2<'_, f64>,
        y: &[u8],
        weights: Option<&[f64]>,
    ) -> Result<LogisticModel> {
        let LearnerSpec::LogisticRegression {
            learning_rate,
            epochs,
            l2,
            ..
        } = spec
        else {
            return Err(Error::Validation("expected a logistic spec".into()));
        };
        let n = x.nrows();
        let d = x.ncols();
        let w = |i: usize| weights.map_or(1.0, |w| w[i]);
        let total_weight: f64 = (0..n).map(w).sum();
        if total_weight <= 0.0 {
            return Err(Error::Validation("total sample weight must be positive".into()));
        }

        // Weighted standardization; constant columns standardize to zero.
        let mut means = vec![0.0; d];
        let mut scales = vec![1.0; d];
        for j in 0..d {
            let mean = (0..n).map(|i| w(i) * x[(i, j)]).sum::<f64>() / total_weight;
            let var = (0..n)
                .map(|i| {
                    let c = x[(i, j)] - mean;
                    w(i) * c * c
                })
                .sum::<f64>()
                / total_weight;
            means[j] = mean;
            let sd = var.sqrt();
            scales[j] = if sd > 1e-12 { sd } else { 1.0 };
        }
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..d).map(|j| (x[(i, j)] - means[j]) / scales[j]).collect())
            .collect();
        let wn: Vec<f64> = (0..n).map(|i| w(i) / total_weight).collect();
        let yf: Vec<f64> = y.iter().map(|v| f64::from(*v)).collect();

        let mut coef = vec![0.0; d];
        let mut intercept = 0.0;
        let mut grad = vec![0.0; d];
        for _ in 0..*epochs {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut grad_b = 0.0;
            for i in 0..n {
                if wn[i] == 0.0 {
                    continue;
                }
                let z = dot(&coef, &xs[i]) + intercept;
                let r = wn[i] * (sigmoid(z) - yf[i]);
                for j in 0..d {
                    grad[j] += r * xs[i][j];
                }
                grad_b += r;
            }
            for j in 0..d {
                coef[j] -= learning_rate * (grad[j] + l2 * coef[j]);
            }
            intercept -= learning_rate * grad_b;
        }

        Ok(LogisticModel {
            coefficients: coef,
            intercept,
            feature_means: means,
            feature_scales: scales,
            spec: spec.clone(),
        })
    }

    pub(crate) fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let d = self.coefficients.len();
        (0..x.nrows())
            .map(|i| {
                let mut z = self.intercept;
                for j in 0..d {
                    z += self.coefficients[j] * (x[(i, j)] - self.feature_means[j])
                        / self.feature_scales[j];
                }
                clamp_probability(sigmoid(z))
            })
            .collect()
    }

    pub(crate) fn n_features(&self) -> usize {
        self.coefficients.len()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Weight-normalized logistic loss with L2 penalty on the coefficients
/// (intercept unpenalized). Shared by the gradient finite-difference test.
#[cfg(test)]
pub(crate) fn loss(
    coef: &[f64],
    intercept: f64,
    xs: &[Vec<f64>],
    y: &[u8],
    wn: &[f64],
    l2: f64,
) -> f64 {
    let mut total = 0.0;
    for i in 0..xs.len() {
        let z = dot(coef, &xs[i]) + intercept;
        let p = clamp_probability(sigmoid(z));
        let yf = f64::from(y[i]);
        total -= wn[i] * (yf * p.ln() + (1.0 - yf) * (1.0 - p).ln());
    }
    total + 0.5 * l2 * coef.iter().map(|c| c * c).sum::<f64>()
}

#[cfg(test)]
pub(crate) fn gradient(
    coef: &[f64],
    intercept: f64,
    xs: &[Vec<f64>],
    y: &[u8],
    wn: &[f64],
    l2: f64,
) -> (Vec<f64>, f64) {
    let d = coef.len();
    let mut grad = vec![0.0; d];
    let mut grad_b = 0.0;
    for i in 0..xs.len() {
        let z = dot(coef, &xs[i]) + intercept;
        let r = wn[i] * (sigmoid(z) - f64::from(y[i]));
        for j in 0..d {
            grad[j] += r * xs[i][j];
        }
        grad_b += r;
    }
    for j in 0..d {
        grad[j] += l2 * coef[j];
    }
    (grad, grad_b)
}
