use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::kmeans::{select_k, ClusterModel, SelectKParams};
use crate::corpus::{Corpus, DeliveryStatus, ProjectRecord};
use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};
use crate::seed;
use crate::text::{TokenStream, Tokenizer};

pub const SEMANTIC_FORMAT: &str = "fulfillkit.semantic_model";
pub const SEMANTIC_VERSION: u32 = 1;

/// Word-cluster counts of a reward description: component `j` is the number
/// of tokens whose vector is nearest to word cluster `j`. Tokens without a
/// vector are ignored.
pub fn reward_to_cluster_vector(stream: &TokenStream, word_model: &ClusterModel, table: &EmbeddingTable) -> Vec<f64> {
    let mut v = vec![0.0; word_model.k];
    for t in &stream.tokens {
        if let Some(x) = table.get(t) {
            v[word_model.assign(x)] += 1.0;
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SemanticMode {
    /// Each reward contributes its backer count.
    Backers,
    /// Each reward contributes 1.
    RewardCount,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemanticParams {
    pub k1_min: usize,
    pub k1_max: usize,
    pub k2_min: usize,
    pub k2_max: usize,
    pub select: SelectKParams,
}

impl Default for SemanticParams {
    fn default() -> Self {
        SemanticParams {
            k1_min: 1,
            k1_max: 100,
            k2_min: 1,
            k2_max: 30,
            select: SelectKParams::default(),
        }
    }
}

/// Word clusters over embedding rows plus reward clusters over word-cluster
/// count vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemanticModel {
    pub format: String,
    pub version: u32,
    pub word_model: ClusterModel,
    pub reward_model: ClusterModel,
    /// Word cluster of every embedded word.
    pub word_clusters: BTreeMap<String, usize>,
    pub word_bic: Vec<(usize, f64)>,
    pub reward_bic: Vec<(usize, f64)>,
}

impl SemanticModel {
    pub fn k1(&self) -> usize {
        self.word_model.k
    }

    pub fn k2(&self) -> usize {
        self.reward_model.k
    }

    /// Same result as [`reward_to_cluster_vector`] using the cached word
    /// assignments.
    pub fn reward_vector(&self, stream: &TokenStream) -> Vec<f64> {
        let mut v = vec![0.0; self.word_model.k];
        for t in &stream.tokens {
            if let Some(&c) = self.word_clusters.get(t) {
                v[c] += 1.0;
            }
        }
        v
    }

    pub fn reward_cluster(&self, description: &str, tokenizer: &Tokenizer) -> usize {
        self.reward_model.assign(&self.reward_vector(&tokenizer.tokenize(description)))
    }

    /// Reward cluster of each of the project's rewards, in reward order.
    pub fn project_reward_clusters(&self, project: &ProjectRecord, tokenizer: &Tokenizer) -> Vec<usize> {
        project
            .rewards
            .iter()
            .map(|r| self.reward_cluster(&r.description, tokenizer))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("semantic model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: SemanticModel = serde_json::from_str(text)?;
        if m.format != SEMANTIC_FORMAT || m.version != SEMANTIC_VERSION {
            return Err(Error::SchemaMismatch(format!(
                "expected {SEMANTIC_FORMAT} v{SEMANTIC_VERSION}, found {} v{}",
                m.format, m.version
            )));
        }
        if m.reward_model.dim != m.word_model.k {
            return Err(Error::SchemaMismatch("reward model dimension differs from word cluster count".into()));
        }
        Ok(m)
    }
}

/// Builds both cluster levels: words by their vectors, then every reward of
/// the corpus by its word-cluster counts. Upper k bounds are clamped to the
/// number of points.
pub fn build_semantic_model(
    corpus: &Corpus,
    table: &EmbeddingTable,
    tokenizer: &Tokenizer,
    params: &SemanticParams,
    seed: u64,
) -> Result<SemanticModel> {
    if table.is_empty() {
        return Err(Error::InvalidInput("embedding table is empty".into()));
    }
    let words = table.rows();
    let k1_max = params.k1_max.min(words.len());
    let k1 = select_k(
        &words,
        params.k1_min.min(k1_max),
        k1_max,
        seed::derive(seed, seed::STREAM_SEMANTIC, 1),
        &params.select,
    )?;
    let word_clusters: BTreeMap<String, usize> = table
        .words()
        .iter()
        .enumerate()
        .map(|(i, w)| (w.clone(), k1.model.assign(table.row(i))))
        .collect();
    let reward_vectors: Vec<Vec<f64>> = corpus
        .projects
        .iter()
        .flat_map(|p| &p.rewards)
        .map(|r| {
            let s = tokenizer.tokenize(&r.description);
            let mut v = vec![0.0; k1.k];
            for t in &s.tokens {
                if let Some(&c) = word_clusters.get(t) {
                    v[c] += 1.0;
                }
            }
            v
        })
        .collect();
    if reward_vectors.is_empty() {
        return Err(Error::InvalidInput("corpus has no rewards to cluster".into()));
    }
    let k2_max = params.k2_max.min(reward_vectors.len());
    let k2 = select_k(
        &reward_vectors,
        params.k2_min.min(k2_max),
        k2_max,
        seed::derive(seed, seed::STREAM_SEMANTIC, 2),
        &params.select,
    )?;
    Ok(SemanticModel {
        format: SEMANTIC_FORMAT.into(),
        version: SEMANTIC_VERSION,
        word_model: k1.model,
        reward_model: k2.model,
        word_clusters,
        word_bic: k1.scores,
        reward_bic: k2.scores,
    })
}

/// Per reward cluster, the sum of backer counts (or of rewards) over the
/// project's rewards in that cluster.
pub fn project_semantic_features(
    project: &ProjectRecord,
    model: &SemanticModel,
    tokenizer: &Tokenizer,
    mode: SemanticMode,
) -> Vec<f64> {
    let mut v = vec![0.0; model.k2()];
    for (r, c) in project.rewards.iter().zip(model.project_reward_clusters(project, tokenizer)) {
        v[c] += match mode {
            SemanticMode::Backers => r.backer_count as f64,
            SemanticMode::RewardCount => 1.0,
        };
    }
    v
}

/// Cluster holding most of the project's rewards; ties go to the lowest
/// cluster index.
pub fn major_cluster(reward_clusters: &[usize], k2: usize) -> usize {
    let mut counts = vec![0usize; k2];
    for &c in reward_clusters {
        counts[c] += 1;
    }
    let mut best = 0;
    for c in 1..k2 {
        if counts[c] > counts[best] {
            best = c;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterDifficulty {
    pub cluster: usize,
    /// Projects whose major cluster is this one.
    pub projects: usize,
    pub on_time: usize,
    /// `P(c_i)`: share of labeled projects with this major cluster.
    pub prior: f64,
    /// `P(on_time | M = c_i)`; `None` when no project has this major cluster.
    pub p_on_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyReport {
    pub clusters: Vec<ClusterDifficulty>,
}

impl DifficultyReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cluster,count,on_time,prior,probability\n");
        for c in &self.clusters {
            let p = c.p_on_time.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{},{},{}", c.cluster, c.projects, c.on_time, c.prior, p);
        }
        out
    }
}

/// On-time probability per major reward cluster, computed with Bayes' rule
/// `P(on | M=c) = P(M=c | on) · P(on) / P(M=c)`.
pub fn cluster_difficulty(
    projects: &[(&ProjectRecord, DeliveryStatus)],
    model: &SemanticModel,
    tokenizer: &Tokenizer,
) -> Result<DifficultyReport> {
    if projects.is_empty() {
        return Err(Error::InvalidInput("cluster difficulty needs at least one labeled project".into()));
    }
    let majors: Vec<(usize, bool)> = projects
        .iter()
        .map(|(p, s)| {
            let m = major_cluster(&model.project_reward_clusters(p, tokenizer), model.k2());
            (m, *s == DeliveryStatus::OnTime)
        })
        .collect();
    Ok(difficulty_from_majors(&majors, model.k2()))
}

pub(crate) fn difficulty_from_majors(majors: &[(usize, bool)], k2: usize) -> DifficultyReport {
    let n = majors.len() as f64;
    let n_on = majors.iter().filter(|(_, on)| *on).count();
    let clusters = (0..k2)
        .map(|c| {
            let projects = majors.iter().filter(|(m, _)| *m == c).count();
            let on_time = majors.iter().filter(|(m, on)| *m == c && *on).count();
            let prior = projects as f64 / n;
            let p_on_time = (projects > 0).then(|| {
                if n_on == 0 {
                    return 0.0;
                }
                let likelihood = on_time as f64 / n_on as f64;
                let p_on = n_on as f64 / n;
                (likelihood * p_on / prior).min(1.0)
            });
            ClusterDifficulty {
                cluster: c,
                projects,
                on_time,
                prior,
                p_on_time,
            }
        })
        .collect();
    DifficultyReport { clusters }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{RewardRecord, WordPools};
    use crate::embeddings::{build_cooccurrence, train_embeddings, GloveParams};
    use crate::text::StopWords;
    use proptest::prelude::*;

    fn stream(ws: &[&str]) -> TokenStream {
        TokenStream {
            tokens: ws.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn line_table() -> (EmbeddingTable, ClusterModel) {
        let t = EmbeddingTable::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            1,
            vec![0.0, 10.0, 20.0, 30.0],
        )
        .unwrap();
        let m = ClusterModel {
            k: 4,
            dim: 1,
            centers: vec![0.0, 10.0, 20.0, 30.0],
        };
        (t, m)
    }

    #[test]
    fn reward_vector_examples() {
        let (t, m) = line_table();
        assert_eq!(reward_to_cluster_vector(&stream(&["x", "y"]), &m, &t), vec![0.0; 4]);
        assert_eq!(
            reward_to_cluster_vector(&stream(&["c", "c", "c"]), &m, &t),
            vec![0.0, 0.0, 3.0, 0.0]
        );
    }

    fn fixed_model(reward_clusters: &[(&str, usize)], k2: usize) -> SemanticModel {
        // One word per reward cluster; word i sits in word cluster i and
        // reward cluster i is centered on the unit vector e_i.
        let k1 = k2;
        let mut word_clusters = BTreeMap::new();
        for (w, c) in reward_clusters {
            word_clusters.insert(w.to_string(), *c);
        }
        let mut centers = vec![0.0; k2 * k1];
        for c in 0..k2 {
            centers[c * k1 + c] = 1.0;
        }
        SemanticModel {
            format: SEMANTIC_FORMAT.into(),
            version: SEMANTIC_VERSION,
            word_model: ClusterModel { k: k1, dim: 1, centers: (0..k1).map(|i| i as f64).collect() },
            reward_model: ClusterModel { k: k2, dim: k1, centers },
            word_clusters,
            word_bic: vec![],
            reward_bic: vec![],
        }
    }

    fn project_with(rewards: &[(&str, u32)]) -> ProjectRecord {
        let mut p = crate::corpus::tests::project("p", 1000.0);
        p.rewards = rewards
            .iter()
            .enumerate()
            .map(|(i, (d, b))| RewardRecord {
                id: format!("r{i}"),
                description: d.to_string(),
                pledge_amount: 10.0,
                estimated_delivery_ts: p.deadline_ts,
                backer_count: *b,
            })
            .collect();
        p
    }

    #[test]
    fn semantic_feature_modes() {
        let m = fixed_model(&[("w3", 3), ("w7", 7)], 14);
        let tk = Tokenizer::new(StopWords::empty());
        let p = project_with(&[("w3", 10), ("w3", 5), ("w7", 2)]);
        let b = project_semantic_features(&p, &m, &tk, SemanticMode::Backers);
        assert_eq!((b[3], b[7], b.iter().sum::<f64>()), (15.0, 2.0, 17.0));
        let r = project_semantic_features(&p, &m, &tk, SemanticMode::RewardCount);
        assert_eq!((r[3], r[7], r.iter().sum::<f64>()), (2.0, 1.0, 3.0));
        let zero = project_with(&[("w3", 0), ("w7", 0)]);
        assert!(project_semantic_features(&zero, &m, &tk, SemanticMode::Backers)
            .iter()
            .all(|x| *x == 0.0));
    }

    #[test]
    fn difficulty_examples() {
        let all_on = vec![(0, true), (0, true), (2, true)];
        let r = difficulty_from_majors(&all_on, 3);
        assert_eq!(r.clusters[0].p_on_time, Some(1.0));
        assert_eq!(r.clusters[1].p_on_time, None);
        assert_eq!(r.clusters[2].p_on_time, Some(1.0));
        let third = vec![(1, true), (1, false), (1, false), (0, true)];
        let r = difficulty_from_majors(&third, 2);
        assert!((r.clusters[1].p_on_time.unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(major_cluster(&[2, 1, 1, 2], 3), 1);
    }

    proptest! {
        #[test]
        fn bayes_form_equals_frequency(majors in prop::collection::vec((0usize..5, any::<bool>()), 1..60)) {
            let r = difficulty_from_majors(&majors, 5);
            let prior_sum: f64 = r.clusters.iter().map(|c| c.prior).sum();
            prop_assert!((prior_sum - 1.0).abs() < 1e-12);
            for c in &r.clusters {
                if let Some(p) = c.p_on_time {
                    let freq = c.on_time as f64 / c.projects as f64;
                    prop_assert!((p - freq).abs() < 1e-12);
                    prop_assert!((0.0..=1.0).contains(&p));
                }
            }
        }
    }

    #[test]
    fn pure_pools_give_three_reward_clusters() {
        use rand::seq::IndexedRandom;
        let pools = WordPools::default();
        let levels = [&pools.easy, &pools.medium, &pools.hard];
        let mut rng = seed::rng(5);
        let mut corpus = Corpus::default();
        let mut truth = Vec::new();
        for i in 0..900 {
            let level = i % 3;
            let descs: Vec<String> = (0..4)
                .map(|_| {
                    levels[level]
                        .choose_multiple(&mut rng, 4)
                        .cloned()
                        .collect::<Vec<_>>()
                        .join(" ")
                })
                .collect();
            let rewards: Vec<(&str, u32)> = descs.iter().map(|d| (d.as_str(), 1)).collect();
            let mut p = project_with(&rewards);
            p.id = format!("p{i}");
            corpus.projects.push(p);
            truth.extend([level; 4]);
        }
        let tk = Tokenizer::default();
        let streams: Vec<TokenStream> = corpus
            .projects
            .iter()
            .flat_map(|p| &p.rewards)
            .map(|r| tk.tokenize(&r.description))
            .collect();
        let cooc = build_cooccurrence(&streams, 15, 5).unwrap();
        let table = train_embeddings(&cooc, &GloveParams { dim: 5, ..Default::default() }, 5)
            .unwrap()
            .table;
        let params = SemanticParams { k1_max: 10, k2_max: 10, ..Default::default() };
        let model = build_semantic_model(&corpus, &table, &tk, &params, 5).unwrap();
        assert_eq!(model.k2(), 3, "word bic {:?}, reward bic {:?}", model.word_bic, model.reward_bic);

        let clusters: Vec<usize> = corpus
            .projects
            .iter()
            .flat_map(|p| model.project_reward_clusters(p, &tk))
            .collect();
        // Purity: share of rewards whose cluster is the majority cluster of their pool.
        let mut agree = 0;
        for level in 0..3 {
            let mut counts = [0usize; 3];
            for (c, t) in clusters.iter().zip(&truth) {
                if *t == level {
                    counts[*c] += 1;
                }
            }
            agree += counts.iter().max().unwrap();
        }
        assert!(agree as f64 / clusters.len() as f64 >= 0.9);
        let again = build_semantic_model(&corpus, &table, &tk, &params, 5).unwrap();
        assert_eq!(again, model);
    }

    #[test]
    fn single_reward_corpus_has_one_cluster() {
        let mut corpus = Corpus::default();
        corpus.projects.push(project_with(&[("alpha beta", 3)]));
        let table = EmbeddingTable::new(vec!["alpha".into(), "beta".into()], 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let tk = Tokenizer::new(StopWords::empty());
        let m = build_semantic_model(&corpus, &table, &tk, &SemanticParams::default(), 1).unwrap();
        assert_eq!(m.k2(), 1);
        let back = SemanticModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
