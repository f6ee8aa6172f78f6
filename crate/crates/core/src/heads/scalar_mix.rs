//! Scalar mix over frozen per-head CLS segments.
//!
//! `s = Σ_i softmax(λ)_i · c_i`, logits `W′ᵀ s`, cross-entropy loss,
//! trained by full-batch gradient descent from `λ = 0`, `W′ = 0`.

use serde::{Deserialize, Serialize};

use super::HeadError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarMixHyper {
    pub learning_rate: f64,
    pub epochs: usize,
}

impl Default for ScalarMixHyper {
    fn default() -> Self {
        ScalarMixHyper { learning_rate: 0.1, epochs: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarMixModel {
    /// Pre-normalization head weights, one per head.
    pub lambdas: Vec<f64>,
    /// `l × m` mix classifier.
    pub w_prime: Vec<Vec<f64>>,
    pub hyper: ScalarMixHyper,
    /// Recorded for provenance; full-batch training does not consume it.
    pub seed: u64,
    /// Training loss before the first step and after each epoch.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_history: Vec<f64>,
}

pub(crate) fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

impl ScalarMixModel {
    pub fn heads(&self) -> usize {
        self.lambdas.len()
    }

    pub fn normalized(&self) -> Vec<f64> {
        softmax(&self.lambdas)
    }

    /// 1-based head with the largest normalized weight, lowest index on ties.
    pub fn head(&self) -> usize {
        let w = self.normalized();
        let mut best = 0;
        for (i, &v) in w.iter().enumerate() {
            if v > w[best] {
                best = i;
            }
        }
        best + 1
    }
}

struct Problem<'a> {
    data: &'a [(Vec<f64>, usize)],
    a: usize,
    l: usize,
    m: usize,
}

impl Problem<'_> {
    fn mix(&self, cls: &[f64], alpha: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.l];
        for (i, seg) in cls.chunks(self.l).enumerate() {
            for (k, v) in seg.iter().enumerate() {
                s[k] += alpha[i] * v;
            }
        }
        s
    }

    fn logits(&self, s: &[f64], w: &[Vec<f64>]) -> Vec<f64> {
        (0..self.m).map(|c| (0..self.l).map(|k| w[k][c] * s[k]).sum()).collect()
    }

    fn loss(&self, lambdas: &[f64], w: &[Vec<f64>]) -> f64 {
        let alpha = softmax(lambdas);
        let total: f64 = self
            .data
            .iter()
            .map(|(cls, y)| {
                let z = self.logits(&self.mix(cls, &alpha), w);
                let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + z.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - z[*y]
            })
            .sum();
        total / self.data.len() as f64
    }

    /// Gradients with respect to `λ` and `W′`.
    fn gradients(&self, lambdas: &[f64], w: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let alpha = softmax(lambdas);
        let n = self.data.len() as f64;
        let mut g_w = vec![vec![0.0; self.m]; self.l];
        let mut g_alpha = vec![0.0; self.a];
        for (cls, y) in self.data {
            let s = self.mix(cls, &alpha);
            let mut delta = softmax(&self.logits(&s, w));
            delta[*y] -= 1.0;
            let mut g_s = vec![0.0; self.l];
            for k in 0..self.l {
                for c in 0..self.m {
                    g_w[k][c] += s[k] * delta[c] / n;
                    g_s[k] += w[k][c] * delta[c] / n;
                }
            }
            for (i, seg) in cls.chunks(self.l).enumerate() {
                g_alpha[i] += seg.iter().zip(&g_s).map(|(c, g)| c * g).sum::<f64>();
            }
        }
        let mean: f64 = alpha.iter().zip(&g_alpha).map(|(a, g)| a * g).sum();
        let g_lambda = alpha.iter().zip(&g_alpha).map(|(a, g)| a * (g - mean)).collect();
        (g_lambda, g_w)
    }
}

/// Trains λ and `W′` on `(cls, gold class)` pairs. Every class in `0..classes`
/// needs at least one example.
pub fn scalar_mix_train(
    data: &[(Vec<f64>, usize)],
    heads: usize,
    classes: usize,
    hyper: ScalarMixHyper,
    seed: u64,
) -> Result<ScalarMixModel, HeadError> {
    let n = data.first().map(|(c, _)| c.len()).ok_or(HeadError::NoData)?;
    if heads == 0 || n % heads != 0 {
        return Err(HeadError::Config(format!("cls length {n} not divisible by {heads} heads")));
    }
    if let Some(i) = data.iter().position(|(c, _)| c.len() != n) {
        return Err(HeadError::Config(format!("example {i} has cls length {} instead of {n}", data[i].0.len())));
    }
    for k in 0..classes {
        if !data.iter().any(|(_, y)| *y == k) {
            return Err(HeadError::MissingClass(k));
        }
    }
    if let Some((_, y)) = data.iter().find(|(_, y)| *y >= classes) {
        return Err(HeadError::Config(format!("class {y} out of range for {classes} classes")));
    }
    let p = Problem { data, a: heads, l: n / heads, m: classes };
    let mut lambdas = vec![0.0; heads];
    let mut w = vec![vec![0.0; classes]; p.l];
    let lr = hyper.learning_rate;
    let mut history = vec![p.loss(&lambdas, &w)];
    for _ in 0..hyper.epochs {
        let (g_l, g_w) = p.gradients(&lambdas, &w);
        for (l, g) in lambdas.iter_mut().zip(&g_l) {
            *l -= lr * g;
        }
        for (row, g_row) in w.iter_mut().zip(&g_w) {
            for (v, g) in row.iter_mut().zip(g_row) {
                *v -= lr * g;
            }
        }
        let loss = p.loss(&lambdas, &w);
        if !loss.is_finite() {
            return Err(HeadError::Divergence { learning_rate: lr });
        }
        history.push(loss);
    }
    Ok(ScalarMixModel { lambdas, w_prime: w, hyper, seed, loss_history: history })
}
