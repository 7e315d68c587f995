use serde::{Deserialize, Serialize};

use super::Design;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbtParams {
    pub n_rounds: usize,
    pub max_depth: usize,
    pub eta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            n_rounds: 200,
            max_depth: 4,
            eta: 0.1,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta <= 1.0) || !(self.lambda >= 0.0) || self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(Error::Config(
                "gbt needs 0 < eta <= 1, lambda >= 0 and gamma >= 0".into(),
            ));
        }
        if !(self.min_child_weight >= 0.0) {
            return Err(Error::Config("gbt min_child_weight must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum GNode {
    Leaf {
        value: f64,
    },
    /// `threshold: None` splits present values (left) from missing ones.
    Split {
        feature: usize,
        threshold: Option<f64>,
        default_left: bool,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GTree {
    pub nodes: Vec<GNode>,
}

impl GTree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                GNode::Leaf { value } => return *value,
                GNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() {
                        *default_left
                    } else {
                        threshold.is_none_or(|t| v <= t)
                    };
                    k = if go_left { *left } else { *right };
                }
            }
        }
    }
}

/// Logistic gradient-boosted trees. Prediction margin is `base_score` plus
/// the sum of tree outputs (learning rate already folded into the leaves).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub n_features: usize,
    pub base_score: f64,
    pub trees: Vec<GTree>,
    /// Total split gain per feature.
    pub gain: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct GbtFit {
    pub model: GbtModel,
    /// Mean log-loss on the training rows before boosting and after each round.
    pub loss: Vec<f64>,
}

fn sigmoid(f: f64) -> f64 {
    1.0 / (1.0 + (-f).exp())
}

fn logloss(margin: &[f64], y: &[bool]) -> f64 {
    let s: f64 = margin
        .iter()
        .zip(y)
        .map(|(&f, &t)| {
            // log(1 + e^f) - t·f, computed without overflow.
            let softplus = if f > 0.0 { f + (-f).exp().ln_1p() } else { f.exp().ln_1p() };
            softplus - if t { f } else { 0.0 }
        })
        .sum();
    s / margin.len() as f64
}

#[derive(Clone, Copy)]
struct Candidate {
    gain: f64,
    feature: usize,
    threshold: Option<f64>,
    default_left: bool,
}

const NONE: usize = usize::MAX;

struct Presorted {
    sorted: Vec<Vec<usize>>,
    missing: Vec<Vec<usize>>,
}

impl Presorted {
    fn new(x: &Design) -> Self {
        let mut sorted = Vec::with_capacity(x.n_cols());
        let mut missing = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let col = x.col(j);
            let (mut s, m): (Vec<usize>, Vec<usize>) = (0..x.n_rows()).partition(|&i| !col[i].is_nan());
            s.sort_by(|&a, &b| col[a].total_cmp(&col[b]).then(a.cmp(&b)));
            sorted.push(s);
            missing.push(m);
        }
        Presorted { sorted, missing }
    }
}

struct TreeBuilder<'a> {
    x: &'a Design,
    pre: &'a Presorted,
    params: &'a GbtParams,
    g: &'a [f64],
    h: &'a [f64],
}

impl TreeBuilder<'_> {
    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.lambda)
    }

    fn gain(&self, gl: f64, hl: f64, gr: f64, hr: f64) -> Option<f64> {
        let mcw = self.params.min_child_weight;
        if hl < mcw || hr < mcw {
            return None;
        }
        let gain = 0.5 * (self.score(gl, hl) + self.score(gr, hr) - self.score(gl + gr, hl + hr)) - self.params.gamma;
        Some(gain)
    }

    /// Grows one tree level by level; returns it with each row's leaf.
    fn build(&self, gain_acc: &mut [f64]) -> (GTree, Vec<usize>) {
        let n = self.x.n_rows();
        let mut node_of = vec![0usize; n];
        let mut nodes = vec![GNode::Leaf { value: 0.0 }];
        let (g0, h0) = (self.g.iter().sum::<f64>(), self.h.iter().sum::<f64>());
        let mut stats = vec![(g0, h0)];
        let mut active = vec![0usize];
        for _depth in 0..self.params.max_depth {
            if active.is_empty() {
                break;
            }
            let mut slot_of = vec![NONE; nodes.len()];
            for (s, &k) in active.iter().enumerate() {
                slot_of[k] = s;
            }
            let best = self.best_splits(&active, &slot_of, &stats, &node_of);
            let mut next = Vec::new();
            let mut children = vec![(NONE, NONE); active.len()];
            for (s, &k) in active.iter().enumerate() {
                let Some(c) = best[s] else { continue };
                let (l, r) = (nodes.len(), nodes.len() + 1);
                nodes.push(GNode::Leaf { value: 0.0 });
                nodes.push(GNode::Leaf { value: 0.0 });
                stats.push((0.0, 0.0));
                stats.push((0.0, 0.0));
                nodes[k] = GNode::Split {
                    feature: c.feature,
                    threshold: c.threshold,
                    default_left: c.default_left,
                    left: l,
                    right: r,
                };
                gain_acc[c.feature] += c.gain;
                children[s] = (l, r);
                next.extend([l, r]);
            }
            for i in 0..n {
                let s = slot_of[node_of[i]];
                if s == NONE || children[s].0 == NONE {
                    continue;
                }
                let GNode::Split {
                    feature,
                    threshold,
                    default_left,
                    ..
                } = nodes[node_of[i]]
                else {
                    unreachable!()
                };
                let v = self.x.get(i, feature);
                let go_left = if v.is_nan() { default_left } else { threshold.is_none_or(|t| v <= t) };
                let child = if go_left { children[s].0 } else { children[s].1 };
                node_of[i] = child;
                stats[child].0 += self.g[i];
                stats[child].1 += self.h[i];
            }
            active = next;
        }
        for (k, node) in nodes.iter_mut().enumerate() {
            if let GNode::Leaf { value } = node {
                let (g, h) = stats[k];
                *value = -self.params.eta * g / (h + self.params.lambda);
            }
        }
        (GTree { nodes }, node_of)
    }

    fn best_splits(
        &self,
        active: &[usize],
        slot_of: &[usize],
        stats: &[(f64, f64)],
        node_of: &[usize],
    ) -> Vec<Option<Candidate>> {
        let m = active.len();
        let mut best: Vec<Option<Candidate>> = vec![None; m];
        let mut miss = vec![(0.0, 0.0); m];
        let mut run = vec![(0.0, 0.0); m];
        let mut last = vec![f64::NAN; m];
        for j in 0..self.x.n_cols() {
            let col = self.x.col(j);
            miss.iter_mut().for_each(|v| *v = (0.0, 0.0));
            run.iter_mut().for_each(|v| *v = (0.0, 0.0));
            last.iter_mut().for_each(|v| *v = f64::NAN);
            for &i in &self.pre.missing[j] {
                let s = slot_of[node_of[i]];
                if s != NONE {
                    miss[s].0 += self.g[i];
                    miss[s].1 += self.h[i];
                }
            }
            let consider = |s: usize, c: Candidate, best: &mut Vec<Option<Candidate>>| {
                if c.gain > 0.0 && best[s].is_none_or(|b| c.gain > b.gain) {
                    best[s] = Some(c);
                }
            };
            for &i in &self.pre.sorted[j] {
                let s = slot_of[node_of[i]];
                if s == NONE {
                    continue;
                }
                let v = col[i];
                if !last[s].is_nan() && v > last[s] {
                    let (g, h) = stats[active[s]];
                    let (gm, hm) = miss[s];
                    let (gl, hl) = run[s];
                    let (gr, hr) = (g - gm - gl, h - hm - hl);
                    let mut t = last[s] + 0.5 * (v - last[s]);
                    if t >= v {
                        t = last[s];
                    }
                    if let Some(gain) = self.gain(gl, hl, gr + gm, hr + hm) {
                        consider(s, Candidate { gain, feature: j, threshold: Some(t), default_left: false }, &mut best);
                    }
                    if hm > 0.0 {
                        if let Some(gain) = self.gain(gl + gm, hl + hm, gr, hr) {
                            consider(s, Candidate { gain, feature: j, threshold: Some(t), default_left: true }, &mut best);
                        }
                    }
                }
                run[s].0 += self.g[i];
                run[s].1 += self.h[i];
                last[s] = v;
            }
            for s in 0..m {
                let (gm, hm) = miss[s];
                if hm > 0.0 && !last[s].is_nan() {
                    let (gl, hl) = run[s];
                    if let Some(gain) = self.gain(gl, hl, gm, hm) {
                        consider(s, Candidate { gain, feature: j, threshold: None, default_left: false }, &mut best);
                    }
                }
            }
        }
        best
    }
}

/// Second-order boosting of depth-limited regression trees on the logistic
/// loss. Splits are exact (every distinct value) and learn which side
/// missing values go to.
pub fn fit_gbt(x: &Design, y: &[bool], params: &GbtParams) -> Result<GbtFit> {
    params.validate()?;
    let n = x.n_rows();
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if x.columns().iter().flatten().any(|v| v.is_infinite()) {
        return Err(Error::Numeric("gbt input has an infinite value".into()));
    }
    let pos = y.iter().filter(|&&t| t).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }
    let rate = pos as f64 / n as f64;
    let base_score = (rate / (1.0 - rate)).ln();
    let pre = Presorted::new(x);
    let mut margin = vec![base_score; n];
    let mut loss = vec![logloss(&margin, y)];
    let mut trees = Vec::with_capacity(params.n_rounds);
    let mut gain = vec![0.0; x.n_cols()];
    let (mut g, mut h) = (vec![0.0; n], vec![0.0; n]);
    for round in 0..params.n_rounds {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            g[i] = p - f64::from(u8::from(y[i]));
            h[i] = p * (1.0 - p);
        }
        let tb = TreeBuilder { x, pre: &pre, params, g: &g, h: &h };
        let (tree, leaf_of) = tb.build(&mut gain);
        for i in 0..n {
            let GNode::Leaf { value } = tree.nodes[leaf_of[i]] else { unreachable!() };
            margin[i] += value;
        }
        let l = logloss(&margin, y);
        if !l.is_finite() {
            return Err(Error::Numeric(format!("boosting loss diverged in round {}", round + 1)));
        }
        loss.push(l);
        trees.push(tree);
    }
    Ok(GbtFit {
        model: GbtModel {
            n_features: x.n_cols(),
            base_score,
            trees,
            gain,
        },
        loss,
    })
}

impl GbtModel {
    pub fn margin_row(&self, row: &[f64]) -> f64 {
        self.base_score + self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>()
    }

    /// Probability of the positive class.
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        sigmoid(self.margin_row(row))
    }

    pub fn predict_proba(&self, x: &Design) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                actual: x.n_cols(),
            });
        }
        Ok((0..x.n_rows()).map(|i| self.predict_proba_row(&x.row(i))).collect())
    }
}
