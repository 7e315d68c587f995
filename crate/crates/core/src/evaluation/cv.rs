use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed;

/// Splits `n` sample positions into `k` disjoint folds.
///
/// Positions are shuffled with a seeded RNG. With `stratify_on`, each class
/// is shuffled separately and dealt round-robin, continuing from where the
/// previous class stopped, so fold sizes differ by at most one and each
/// fold's class count is within one of its proportional share.
pub fn kfold_split(n: usize, k: usize, stratify_on: Option<&[u8]>, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!("cannot split {n} samples into {k} folds")));
    }
    let mut rng = seed::derived_rng(seed, seed::STREAM_FOLDS, 0);
    let groups: Vec<Vec<usize>> = match stratify_on {
        None => vec![(0..n).collect()],
        Some(labels) => {
            if labels.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: labels.len(),
                });
            }
            let mut classes: Vec<u8> = labels.to_vec();
            classes.sort_unstable();
            classes.dedup();
            classes
                .iter()
                .map(|c| (0..n).filter(|&i| labels[i] == *c).collect())
                .collect()
        }
    };
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    let mut slot = 0;
    for mut g in groups {
        g.shuffle(&mut rng);
        for i in g {
            folds[slot].push(i);
            slot = (slot + 1) % k;
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

/// Complement of fold `f` within `0..n`, ascending.
pub fn train_indices(folds: &[Vec<usize>], f: usize) -> Vec<usize> {
    let mut out: Vec<usize> = folds
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != f)
        .flat_map(|(_, idx)| idx.iter().copied())
        .collect();
    out.sort_unstable();
    out
}
