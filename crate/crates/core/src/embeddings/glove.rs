use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{CoocMatrix, EmbeddingTable};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GloveParams {
    pub dim: usize,
    pub iters: usize,
    pub x_max: f64,
    pub alpha: f64,
    pub learning_rate: f64,
}

impl Default for GloveParams {
    fn default() -> Self {
        GloveParams {
            dim: 50,
            iters: 20,
            x_max: 100.0,
            alpha: 0.75,
            learning_rate: 0.05,
        }
    }
}

/// Trained table plus the weighted objective before training and after each
/// pass.
#[derive(Debug, Clone, PartialEq)]
pub struct GloveFit {
    pub table: EmbeddingTable,
    pub objective: Vec<f64>,
}

fn weight(x: f64, p: &GloveParams) -> f64 {
    if x < p.x_max {
        (x / p.x_max).powf(p.alpha)
    } else {
        1.0
    }
}

struct State {
    dim: usize,
    w: Vec<f64>,
    wc: Vec<f64>,
    b: Vec<f64>,
    bc: Vec<f64>,
}

impl State {
    fn residual(&self, i: usize, j: usize, x: f64) -> f64 {
        let (d, wi, wj) = (self.dim, i * self.dim, j * self.dim);
        let dot: f64 = (0..d).map(|k| self.w[wi + k] * self.wc[wj + k]).sum();
        dot + self.b[i] + self.bc[j] - x.ln()
    }

    fn objective(&self, cooc: &CoocMatrix, p: &GloveParams) -> f64 {
        cooc.entries
            .iter()
            .map(|&(i, j, x)| {
                let r = self.residual(i as usize, j as usize, x);
                weight(x, p) * r * r
            })
            .sum()
    }
}

/// Weighted least-squares factorization of `log X` with AdaGrad updates.
///
/// The returned table holds `w_i + w̃_i` per word. Training visits the
/// non-zero cells in a seeded random order each pass and is single-threaded,
/// so results are bit-reproducible for a fixed seed.
pub fn train_embeddings(cooc: &CoocMatrix, params: &GloveParams, seed: u64) -> Result<GloveFit> {
    if cooc.vocab.is_empty() {
        return Err(Error::EmptyVocabulary { min_count: 0 });
    }
    if params.dim == 0 || !(params.x_max > 0.0) || !(params.learning_rate > 0.0) {
        return Err(Error::InvalidInput("GloVe needs dim ≥ 1 and positive x_max / learning rate".into()));
    }
    let (v, d) = (cooc.vocab.len(), params.dim);
    let mut rng = seed::derived_rng(seed, seed::STREAM_GLOVE, 0);
    let mut init = |len: usize| -> Vec<f64> { (0..len).map(|_| (rng.random::<f64>() - 0.5) / d as f64).collect() };
    let mut s = State {
        dim: d,
        w: init(v * d),
        wc: init(v * d),
        b: init(v),
        bc: init(v),
    };
    let mut gw = vec![1.0_f64; v * d];
    let mut gwc = vec![1.0_f64; v * d];
    let mut gb = vec![1.0_f64; v];
    let mut gbc = vec![1.0_f64; v];

    let mut objective = vec![s.objective(cooc, params)];
    let mut order: Vec<usize> = (0..cooc.entries.len()).collect();
    let eta = params.learning_rate;
    for iter in 0..params.iters {
        order.shuffle(&mut rng);
        for &e in &order {
            let (i, j, x) = cooc.entries[e];
            let (i, j) = (i as usize, j as usize);
            let fdiff = weight(x, params) * s.residual(i, j, x);
            if !fdiff.is_finite() {
                return Err(Error::Numeric(format!("GloVe loss diverged in iteration {}", iter + 1)));
            }
            for k in 0..d {
                let (a, c) = (i * d + k, j * d + k);
                let g1 = fdiff * s.wc[c];
                let g2 = fdiff * s.w[a];
                s.w[a] -= eta * g1 / gw[a].sqrt();
                s.wc[c] -= eta * g2 / gwc[c].sqrt();
                gw[a] += g1 * g1;
                gwc[c] += g2 * g2;
            }
            s.b[i] -= eta * fdiff / gb[i].sqrt();
            s.bc[j] -= eta * fdiff / gbc[j].sqrt();
            gb[i] += fdiff * fdiff;
            gbc[j] += fdiff * fdiff;
        }
        let j = s.objective(cooc, params);
        if !j.is_finite() {
            return Err(Error::Numeric(format!("GloVe loss diverged in iteration {}", iter + 1)));
        }
        objective.push(j);
    }
    let vectors: Vec<f64> = s.w.iter().zip(&s.wc).map(|(a, b)| a + b).collect();
    Ok(GloveFit {
        table: EmbeddingTable::new(cooc.vocab.clone(), d, vectors)?,
        objective,
    })
}
