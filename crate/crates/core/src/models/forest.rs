use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Design;
use crate::error::{Error, Result};
use crate::evaluation::{mean, std_dev};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per split; `None` means `ceil(sqrt(p))`.
    pub mtry: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_depth: Option<usize>,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 300,
            mtry: None,
            min_samples_leaf: 1,
            max_depth: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf { p: f64 },
    // NaN goes right.
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    nodes: Vec<Node>,
}

impl ClassTree {
    fn leaf_p(&self, get: impl Fn(usize) -> f64) -> f64 {
        let mut k = 0;
        loop {
            match self.nodes[k] {
                Node::Leaf { p } => return p,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => k = if get(feature) <= threshold { left } else { right },
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.leaf_p(|j| row[j])
    }

    fn used_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

/// Bagged Gini CART classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub n_features: usize,
    pub trees: Vec<ClassTree>,
    /// Out-of-bag permutation importance, `[tree][feature]`: accuracy drop
    /// on the tree's OOB rows after shuffling the feature among them.
    #[serde(skip)]
    pub importance: Vec<Vec<f64>>,
    /// Per-tree out-of-bag masks over the training rows.
    #[serde(skip)]
    pub oob: Vec<Vec<bool>>,
}

struct Builder<'a> {
    x: &'a Design,
    y: &'a [bool],
    mtry: usize,
    params: &'a ForestParams,
    nodes: Vec<Node>,
}

fn gini_cost(pos: f64, n: f64) -> f64 {
    // n * Gini impurity.
    if n == 0.0 {
        0.0
    } else {
        2.0 * pos * (n - pos) / n
    }
}

impl Builder<'_> {
    fn leaf(&mut self, idx: &[usize]) -> usize {
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        self.nodes.push(Node::Leaf {
            p: pos as f64 / idx.len().max(1) as f64,
        });
        self.nodes.len() - 1
    }

    fn build(&mut self, idx: &mut [usize], depth: usize, rng: &mut seed::Rng) -> usize {
        let n = idx.len();
        let pos = idx.iter().filter(|&&i| self.y[i]).count();
        let msl = self.params.min_samples_leaf.max(1);
        if pos == 0 || pos == n || n < 2 * msl || self.params.max_depth.is_some_and(|d| depth >= d) {
            return self.leaf(idx);
        }
        let parent = gini_cost(pos as f64, n as f64);
        let p = self.x.n_cols();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut vals: Vec<(f64, bool)> = Vec::with_capacity(n);
        for j in index::sample(rng, p, self.mtry.min(p)).into_iter() {
            vals.clear();
            let col = self.x.col(j);
            let mut miss_pos = 0usize;
            for &i in idx.iter() {
                let v = col[i];
                if v.is_nan() {
                    miss_pos += usize::from(self.y[i]);
                } else {
                    vals.push((v, self.y[i]));
                }
            }
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (mut ln, mut lp) = (0usize, 0usize);
            let tot_pos = pos - miss_pos;
            for k in 0..vals.len().saturating_sub(1) {
                ln += 1;
                lp += usize::from(vals[k].1);
                if vals[k].0 == vals[k + 1].0 {
                    continue;
                }
                let rn = n - ln;
                if ln < msl || rn < msl {
                    continue;
                }
                let rp = tot_pos - lp + miss_pos;
                let cost = gini_cost(lp as f64, ln as f64) + gini_cost(rp as f64, rn as f64);
                if best.is_none_or(|b| cost < b.0) {
                    best = Some((cost, j, 0.5 * (vals[k].0 + vals[k + 1].0)));
                }
            }
        }
        let Some((cost, feature, threshold)) = best else {
            return self.leaf(idx);
        };
        if parent - cost <= 1e-12 {
            return self.leaf(idx);
        }
        let col = self.x.col(feature);
        let mut split = 0;
        for k in 0..n {
            if col[idx[k]] <= threshold {
                idx.swap(k, split);
                split += 1;
            }
        }
        let me = self.nodes.len();
        self.nodes.push(Node::Leaf { p: 0.0 });
        let (l, r) = idx.split_at_mut(split);
        let left = self.build(l, depth + 1, rng);
        let right = self.build(r, depth + 1, rng);
        self.nodes[me] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        me
    }
}

fn tree_accuracy(tree: &ClassTree, x: &Design, y: &[bool], rows: &[usize], swap: Option<(usize, &[f64])>) -> f64 {
    let correct = rows
        .iter()
        .enumerate()
        .filter(|&(k, &i)| {
            let p = tree.leaf_p(|j| match swap {
                Some((f, vals)) if f == j => vals[k],
                _ => x.get(i, j),
            });
            (p > 0.5) == y[i]
        })
        .count();
    correct as f64 / rows.len() as f64
}

/// Fits `n_trees` CART trees on bootstrap samples, with per-tree OOB
/// permutation importance. Trees are built in parallel from per-tree seeds,
/// so the result depends only on `seed`.
pub fn fit_forest(x: &Design, y: &[bool], params: &ForestParams, seed: u64) -> Result<RandomForest> {
    let (n, p) = (x.n_rows(), x.n_cols());
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, actual: y.len() });
    }
    if n == 0 || p == 0 || params.n_trees == 0 {
        return Err(Error::InvalidInput("forest needs rows, features and trees".into()));
    }
    let pos = y.iter().filter(|&&t| t).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }
    let mtry = params.mtry.unwrap_or_else(|| (p as f64).sqrt().ceil() as usize).clamp(1, p);
    let fitted: Vec<(ClassTree, Vec<f64>, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::derived_rng(seed, seed::STREAM_FOREST, t as u64);
            let mut in_bag = vec![false; n];
            let mut idx: Vec<usize> = (0..n)
                .map(|_| {
                    let i = rng.random_range(0..n);
                    in_bag[i] = true;
                    i
                })
                .collect();
            let mut b = Builder {
                x,
                y,
                mtry,
                params,
                nodes: Vec::new(),
            };
            b.build(&mut idx, 0, &mut rng);
            let tree = ClassTree { nodes: b.nodes };
            let oob: Vec<usize> = (0..n).filter(|&i| !in_bag[i]).collect();
            let mut imp = vec![0.0; p];
            if !oob.is_empty() {
                let base = tree_accuracy(&tree, x, y, &oob, None);
                for j in tree.used_features() {
                    let mut vals: Vec<f64> = oob.iter().map(|&i| x.get(i, j)).collect();
                    vals.shuffle(&mut rng);
                    imp[j] = base - tree_accuracy(&tree, x, y, &oob, Some((j, &vals)));
                }
            }
            let mask = in_bag.iter().map(|b| !b).collect();
            (tree, imp, mask)
        })
        .collect();
    let mut f = RandomForest {
        n_features: p,
        trees: Vec::with_capacity(fitted.len()),
        importance: Vec::with_capacity(fitted.len()),
        oob: Vec::with_capacity(fitted.len()),
    };
    for (t, imp, mask) in fitted {
        f.trees.push(t);
        f.importance.push(imp);
        f.oob.push(mask);
    }
    Ok(f)
}

impl RandomForest {
    /// Mean leaf probability of the positive class.
    pub fn predict_proba_row(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / self.trees.len() as f64
    }

    pub fn predict_proba(&self, x: &Design) -> Vec<f64> {
        (0..x.n_rows()).map(|i| self.predict_proba_row(&x.row(i))).collect()
    }

    /// Mean importance over trees divided by its standard deviation; 0 when
    /// the deviation is 0.
    pub fn importance_z(&self) -> Vec<f64> {
        (0..self.n_features)
            .map(|j| {
                let v: Vec<f64> = self.importance.iter().map(|t| t[j]).collect();
                let sd = std_dev(&v);
                if sd > 0.0 {
                    mean(&v) / sd
                } else {
                    0.0
                }
            })
            .collect()
    }
}
