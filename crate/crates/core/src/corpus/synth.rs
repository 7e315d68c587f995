//! Labeled synthetic corpora with planted delivery signal.
//!
//! Every project gets a latent creator diligence `a ∈ [0,1]` and a latent
//! difficulty `d ∈ [0,1]` built from its reward word pools, category and
//! backer load. The slowness score `z = 4d − 2a` decides the label (late iff
//! `z ≥ τ`, then flipped with probability `noise`) and drives the actual
//! delivery duration. Diligence shows up only through activity: update
//! frequency, reply latency and the wording of updates and comments.

use std::collections::BTreeMap;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Exp, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{
    ActivityEvent, Category, Corpus, DeliveryLabel, DeliveryStatus, EventKind, ProjectRecord,
    RewardRecord, Role, SECONDS_PER_DAY,
};
use crate::error::{Error, Result};
use crate::seed::{self, Rng};

const DAY: i64 = 86_400;
const BASE_TS: i64 = 1_325_376_000; // 2012-01-01
const CALIBRATION_SAMPLES: usize = 20_000;
const CALIBRATION_SEED: u64 = 0x5EED_CA11;

/// Per-category difficulty in [0,1], in [`Category::ALL`] order.
const CATEGORY_DIFFICULTY: [f64; 15] = [
    0.2, 0.4, 0.5, 0.1, 0.8, 0.6, 0.3, 0.5, 0.8, 0.1, 0.2, 0.3, 0.4, 1.0, 0.1,
];

/// Reward description vocabularies, one per difficulty level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WordPools {
    pub easy: Vec<String>,
    pub medium: Vec<String>,
    pub hard: Vec<String>,
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|s| s.to_string()).collect()
}

impl Default for WordPools {
    fn default() -> Self {
        WordPools {
            easy: words(&[
                "digital", "download", "wallpaper", "sticker", "postcard", "shoutout", "ebook",
                "pdf", "desktop", "email", "mention", "credits", "website", "listing", "soundtrack",
            ]),
            medium: words(&[
                "shirt", "poster", "print", "mug", "tote", "hoodie", "signed", "paperback",
                "vinyl", "button", "patch", "bookmark", "notebook", "calendar", "cap",
            ]),
            hard: words(&[
                "custom", "prototype", "handcrafted", "engraved", "sculpture", "hardware",
                "device", "circuit", "leather", "bronze", "wooden", "assembled", "electronics",
                "figurine", "cabinet",
            ]),
        }
    }
}

impl WordPools {
    fn pool(&self, level: usize) -> &[String] {
        match level {
            0 => &self.easy,
            1 => &self.medium,
            _ => &self.hard,
        }
    }
}

/// Probability of a reward's dominant pool being easy / medium / hard.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolMix {
    pub easy: f64,
    pub medium: f64,
    pub hard: f64,
}

impl Default for PoolMix {
    fn default() -> Self {
        PoolMix {
            easy: 0.45,
            medium: 0.35,
            hard: 0.20,
        }
    }
}

impl PoolMix {
    fn weights(&self) -> [f64; 3] {
        [self.easy, self.medium, self.hard]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_projects: usize,
    /// Late share of the labels under the default pool and category mix.
    pub late_rate: f64,
    /// Probability that a label is flipped.
    pub noise: f64,
    pub seed_pools: WordPools,
    pub pool_mix: PoolMix,
    /// Relative category weights in [`Category::ALL`] order; uniform if empty.
    pub category_mix: Vec<f64>,
    /// Probability that a reward uses its project's dominant pool.
    pub reward_purity: f64,
    /// Words sprinkled into reward descriptions regardless of pool.
    pub filler_words: Vec<String>,
    pub filler_rate: f64,
    /// Share of projects whose actual delivery duration is known.
    pub duration_coverage: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_projects: 2000,
            late_rate: 0.5436,
            noise: 0.1,
            seed_pools: WordPools::default(),
            pool_mix: PoolMix::default(),
            category_mix: Vec::new(),
            reward_purity: 0.75,
            filler_words: words(&["reward", "includes", "exclusive", "edition", "bundle", "pack"]),
            filler_rate: 0.5,
            duration_coverage: 0.727,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.n_projects == 0 {
            return bad("n_projects must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.late_rate) {
            return bad(format!("late_rate must be in [0,1], got {}", self.late_rate));
        }
        if !(0.0..0.5).contains(&self.noise) {
            return bad(format!("noise must be in [0,0.5), got {}", self.noise));
        }
        for (name, pool) in [
            ("easy", &self.seed_pools.easy),
            ("medium", &self.seed_pools.medium),
            ("hard", &self.seed_pools.hard),
        ] {
            if pool.is_empty() {
                return bad(format!("word pool `{name}` is empty"));
            }
            if pool.iter().any(|w| w.split_whitespace().count() != 1) {
                return bad(format!("word pool `{name}` must hold single words"));
            }
        }
        let w = self.pool_mix.weights();
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || w.iter().sum::<f64>() <= 0.0 {
            return bad("pool_mix weights must be non-negative with a positive sum".into());
        }
        if !self.category_mix.is_empty() {
            if self.category_mix.len() != Category::ALL.len() {
                return bad(format!(
                    "category_mix needs {} weights, got {}",
                    Category::ALL.len(),
                    self.category_mix.len()
                ));
            }
            if self.category_mix.iter().any(|x| !(x.is_finite() && *x >= 0.0))
                || self.category_mix.iter().sum::<f64>() <= 0.0
            {
                return bad("category_mix weights must be non-negative with a positive sum".into());
            }
        }
        for (name, v) in [
            ("reward_purity", self.reward_purity),
            ("filler_rate", self.filler_rate),
            ("duration_coverage", self.duration_coverage),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be in [0,1], got {v}"));
            }
        }
        if self.filler_rate > 0.0 && self.filler_words.is_empty() {
            return bad("filler_rate > 0 needs filler_words".into());
        }
        Ok(())
    }
}

/// Latent draw for one project; shared by calibration and generation so the
/// threshold matches the generated population.
struct Latent {
    diligence: f64,
    category: Category,
    /// Difficulty level (0, 1, 2) per reward.
    reward_levels: Vec<usize>,
    dominant: usize,
    total_backers: u64,
    difficulty: f64,
}

fn weighted_index(rng: &mut Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

fn draw_latent(rng: &mut Rng, pool_mix: &PoolMix, category_mix: &[f64], purity: f64) -> Latent {
    let diligence: f64 = rng.random();
    let category = if category_mix.is_empty() {
        Category::ALL[rng.random_range(0..Category::ALL.len())]
    } else {
        Category::ALL[weighted_index(rng, category_mix)]
    };
    let weights = pool_mix.weights();
    let dominant = weighted_index(rng, &weights);
    let n_rewards = rng.random_range(2..=8);
    let reward_levels: Vec<usize> = (0..n_rewards)
        .map(|_| {
            if rng.random::<f64>() < purity {
                dominant
            } else {
                weighted_index(rng, &weights)
            }
        })
        .collect();
    let backers = LogNormal::new(4.5_f64, 1.0).unwrap().sample(rng).round().max(1.0) as u64;
    let pool_mean =
        reward_levels.iter().map(|&l| l as f64 / 2.0).sum::<f64>() / reward_levels.len() as f64;
    let load = ((1.0 + backers as f64).ln() / (5001f64).ln()).min(1.0);
    let difficulty =
        0.75 * pool_mean + 0.125 * CATEGORY_DIFFICULTY[category.index()] + 0.125 * load;
    Latent {
        diligence,
        category,
        reward_levels,
        dominant,
        total_backers: backers,
        difficulty,
    }
}

fn slowness(l: &Latent) -> f64 {
    4.0 * l.difficulty - 2.0 * l.diligence
}

/// Threshold on the slowness score giving `late_rate` after label flips,
/// computed on a fixed reference population with the default mixes.
fn calibrate_threshold(late_rate: f64, noise: f64, purity: f64) -> f64 {
    let target = ((late_rate - noise) / (1.0 - 2.0 * noise)).clamp(0.0, 1.0);
    let mut rng = seed::rng(CALIBRATION_SEED);
    let mix = PoolMix::default();
    let mut scores: Vec<f64> = (0..CALIBRATION_SAMPLES)
        .map(|_| slowness(&draw_latent(&mut rng, &mix, &[], purity)))
        .collect();
    scores.sort_by(f64::total_cmp);
    // Late iff z >= τ, so τ sits at the (1 − target) quantile.
    let q = ((1.0 - target) * CALIBRATION_SAMPLES as f64).round() as usize;
    if q >= CALIBRATION_SAMPLES {
        f64::INFINITY
    } else {
        scores[q]
    }
}

const GOOD_UPDATE: &[&str] = &[
    "finished", "completed", "progress", "production", "shipping", "schedule", "ready", "tested",
    "packed", "week", "thanks", "great", "excited", "achieved", "working",
];
const BAD_UPDATE: &[&str] = &[
    "sorry", "delay", "problem", "issue", "hope", "maybe", "waiting", "unfortunately",
    "difficult", "late", "perhaps", "trouble", "apologize", "unexpected",
];
const HAPPY_COMMENT: &[&str] = &[
    "love", "great", "excited", "backed", "awesome", "cool", "good", "luck", "beautiful", "amazing",
];
const QUESTION: &[&str] = &[
    "reward", "ship", "arrive", "update", "status", "tracking", "package", "delivery", "estimate",
];
const ANGRY: &[&str] = &["still", "waiting", "refund", "disappointed", "nothing", "months", "late"];
const REPLY: &[&str] = &["thanks", "shipping", "soon", "week", "working", "checking", "sorry", "update"];
const PROJECT_WORDS: &[&str] = &[
    "innovative", "community", "experience", "beautiful", "project", "create", "design", "story",
    "original", "collection", "independent", "artistic", "support", "together", "world",
    "everyone", "quality", "limited", "unique", "journey",
];
const BIO_WORDS: &[&str] = &[
    "creator", "designer", "artist", "years", "experience", "studio", "team", "passionate",
    "professional", "background", "engineering", "illustrator", "based", "family",
];

/// Space-joined sentences of random words, `sentences` of them.
fn babble(rng: &mut Rng, banks: &[(&[&str], f64)], sentences: usize, len: (usize, usize)) -> String {
    let weights: Vec<f64> = banks.iter().map(|(_, w)| *w).collect();
    let mut out = Vec::with_capacity(sentences);
    for _ in 0..sentences {
        let n = rng.random_range(len.0..=len.1);
        let ws: Vec<&str> = (0..n)
            .map(|_| {
                let bank = banks[weighted_index(rng, &weights)].0;
                *bank.choose(rng).unwrap()
            })
            .collect();
        let mut s = ws.join(" ");
        if let Some(first) = s.get_mut(0..1) {
            first.make_ascii_uppercase();
        }
        out.push(s);
    }
    out.join(". ") + "."
}

fn poisson(rng: &mut Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).unwrap().sample(rng) as u64
}

fn uniform_ts(rng: &mut Rng, lo: i64, hi: i64) -> i64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

/// Time in `[lo, hi)` skewed toward `lo` as `diligence` falls: diligent
/// creators stay active until the deadline, others front-load.
fn front_loaded_ts(rng: &mut Rng, lo: i64, hi: i64, diligence: f64) -> i64 {
    if hi <= lo {
        return lo;
    }
    let u = rng.random::<f64>().powf(1.0 + 3.0 * (1.0 - diligence));
    (lo + (u * (hi - lo) as f64) as i64).min(hi - 1)
}

/// Generates a labeled corpus. Pure function of `(config, seed)`.
pub fn generate_synthetic(config: &SynthConfig, master_seed: u64) -> Result<Corpus> {
    config.validate()?;
    let tau = calibrate_threshold(config.late_rate, config.noise, config.reward_purity);
    let width = config.n_projects.to_string().len().max(4);
    let mut corpus = Corpus::default();
    for i in 0..config.n_projects {
        let mut rng = seed::derived_rng(master_seed, seed::STREAM_SYNTH, i as u64);
        let id = format!("p{i:0width$}");
        let lat = draw_latent(&mut rng, &config.pool_mix, &config.category_mix, config.reward_purity);
        let a = lat.diligence;

        let launch = BASE_TS + rng.random_range(0..3 * 365) * DAY + rng.random_range(0..DAY);
        let deadline = launch + rng.random_range(20..=60) * DAY;
        let (wlo, whi) = [(30.0, 90.0), (60.0, 180.0), (120.0, 360.0)][lat.dominant];
        let window_days: f64 = rng.random_range(wlo..whi);

        // Rewards, cheapest first; backers split with a Dirichlet-like draw.
        let shares: Vec<f64> = lat
            .reward_levels
            .iter()
            .map(|_| Exp::new(1.0).unwrap().sample(&mut rng))
            .collect();
        let share_sum: f64 = shares.iter().sum();
        let mut rewards = Vec::with_capacity(lat.reward_levels.len());
        let mut assigned = 0u64;
        let last = lat.reward_levels.len() - 1;
        for (r, &level) in lat.reward_levels.iter().enumerate() {
            let backers = if r == last {
                lat.total_backers.saturating_sub(assigned)
            } else {
                let b = (lat.total_backers as f64 * shares[r] / share_sum).floor() as u64;
                b.min(lat.total_backers - assigned)
            };
            assigned += backers;
            let pool = config.seed_pools.pool(level);
            let n_words = rng.random_range(3..=6).min(pool.len());
            let mut desc: Vec<String> = pool.choose_multiple(&mut rng, n_words).cloned().collect();
            if rng.random::<f64>() < config.filler_rate {
                let f = config.filler_words.choose(&mut rng).unwrap().clone();
                let at = rng.random_range(0..=desc.len());
                desc.insert(at, f);
            }
            let frac = (r as f64 + 1.0) / lat.reward_levels.len() as f64;
            let delivery_days = window_days * (0.6 + 0.4 * frac);
            let est = if r == last {
                deadline + (window_days * SECONDS_PER_DAY) as i64
            } else {
                deadline + (delivery_days * SECONDS_PER_DAY) as i64
            };
            rewards.push(RewardRecord {
                id: format!("{id}-r{r}"),
                description: desc.join(" "),
                pledge_amount: (5.0 * (1.0 + r as f64).powf(1.6) * (1.0 + level as f64)).round(),
                estimated_delivery_ts: est,
                backer_count: backers.min(u32::MAX as u64) as u32,
            });
        }
        let ledd = rewards.iter().map(|r| r.estimated_delivery_ts).max().unwrap();
        let window = ledd - deadline;
        let tp4 = deadline + window / 20;

        let goal = (LogNormal::new(8.3, 0.8).unwrap().sample(&mut rng) * (1.0 + lat.difficulty))
            .round()
            .max(100.0);
        let pledged = (goal * rng.random_range(1.0..3.0)).round();

        let image_rate = 2.0 + 6.0 * rng.random::<f64>();
        let images_count = poisson(&mut rng, image_rate) as u32;
        let n_sentences = rng.random_range(3..=12);
        let project_description = babble(&mut rng, &[(PROJECT_WORDS, 1.0)], n_sentences, (4, 14));
        let n_sentences = rng.random_range(1..=4);
        let bio_description = babble(&mut rng, &[(BIO_WORDS, 1.0)], n_sentences, (3, 10));
        let project = ProjectRecord {
            id: id.clone(),
            category: lat.category,
            goal,
            pledged,
            successful: true,
            launch_ts: launch,
            deadline_ts: deadline,
            images_count,
            faqs_count: poisson(&mut rng, 1.0) as u32,
            project_description,
            bio_description,
            rewards,
            creator_backed_count: poisson(&mut rng, 2.0 + 4.0 * a) as u32,
            creator_created_count: poisson(&mut rng, 0.3 + 1.0 * a) as u32,
        };

        let mut events = Vec::new();
        let creator_id = format!("c{i}");
        let n_backer_ids = lat.total_backers.max(1);
        let push = |events: &mut Vec<ActivityEvent>, role: Role, kind, ts: i64, text: String, author: String| {
            events.push(ActivityEvent {
                project_id: id.clone(),
                author_role: role,
                author_id: Some(author),
                kind,
                ts,
                text,
            });
        };
        let update_text = |rng: &mut Rng| {
            let n = rng.random_range(2..=5);
            babble(rng, &[(GOOD_UPDATE, 0.2 + a), (BAD_UPDATE, 1.2 - a)], n, (5, 12))
        };

        // Fundraising phase.
        let load = (1.0 + lat.total_backers as f64).ln();
        for _ in 0..poisson(&mut rng, 0.5 + 5.0 * a) {
            let ts = front_loaded_ts(&mut rng, launch, deadline, a);
            let text = update_text(&mut rng);
            push(&mut events, Role::Creator, EventKind::Update, ts, text, creator_id.clone());
        }
        for _ in 0..poisson(&mut rng, 0.5 + 3.0 * a) {
            let ts = front_loaded_ts(&mut rng, launch, deadline, a);
            let text = babble(&mut rng, &[(REPLY, 1.0), (HAPPY_COMMENT, 1.0)], 1, (3, 8));
            push(&mut events, Role::Creator, EventKind::Comment, ts, text, creator_id.clone());
        }
        for _ in 0..poisson(&mut rng, 1.0 + 1.2 * load) {
            let ts = uniform_ts(&mut rng, launch, deadline);
            let text = babble(&mut rng, &[(HAPPY_COMMENT, 1.0)], 1, (3, 8)) + "!";
            let who = format!("b{i}_{}", rng.random_range(0..n_backer_ids));
            push(&mut events, Role::Backer, EventKind::Comment, ts, text, who);
        }

        // First 5% of the delivery window, then a tail beyond it.
        for (lo, hi, scale) in [(deadline, tp4, 1.0), (tp4, ledd + window / 2, 4.0)] {
            for _ in 0..poisson(&mut rng, scale * (0.3 + 3.0 * a)) {
                let ts = uniform_ts(&mut rng, lo + 1, hi + 1);
                let text = update_text(&mut rng);
                push(&mut events, Role::Creator, EventKind::Update, ts, text, creator_id.clone());
            }
            for _ in 0..poisson(&mut rng, scale * (1.0 + 3.0 * (1.0 - a) + 0.3 * load)) {
                let ts = uniform_ts(&mut rng, lo + 1, hi + 1);
                let who = format!("b{i}_{}", rng.random_range(0..n_backer_ids));
                let asks = rng.random::<f64>() < 0.3 + 0.5 * (1.0 - a);
                let text = if asks {
                    babble(&mut rng, &[(QUESTION, 1.0), (ANGRY, 1.0 - a)], 1, (3, 8))
                        .trim_end_matches('.')
                        .to_string()
                        + "?"
                } else {
                    babble(&mut rng, &[(HAPPY_COMMENT, a), (ANGRY, 1.0 - a)], 1, (3, 8))
                };
                push(&mut events, Role::Backer, EventKind::Comment, ts, text, who);
                if asks && rng.random::<f64>() < 0.2 + 0.7 * a {
                    let mean_secs = 3600.0 + 48.0 * 3600.0 * (1.0 - a);
                    let lag = Exp::new(1.0 / mean_secs).unwrap().sample(&mut rng).ceil() as i64;
                    let text = babble(&mut rng, &[(REPLY, 1.0)], 1, (3, 8));
                    push(&mut events, Role::Creator, EventKind::Comment, ts + lag.max(1), text, creator_id.clone());
                }
            }
        }
        events.sort_by_key(|e| e.ts);

        let z = slowness(&lat);
        let mut late = z >= tau;
        if rng.random::<f64>() < config.noise {
            late = !late;
        }
        let ratio = (0.3 * (z - tau) + Normal::new(0.0, 0.1).unwrap().sample(&mut rng)).exp();
        let duration = (window as f64 / SECONDS_PER_DAY * ratio).max(1.0);
        let known = rng.random::<f64>() < config.duration_coverage;

        corpus.labels.insert(
            id.clone(),
            DeliveryLabel {
                project_id: id.clone(),
                status: if late { DeliveryStatus::Late } else { DeliveryStatus::OnTime },
                actual_duration_days: known.then_some((duration * 1e3).round() / 1e3),
            },
        );
        if !events.is_empty() {
            corpus.events.insert(id.clone(), events);
        }
        corpus.projects.push(project);
    }
    Ok(corpus)
}

/// Counts of labels by status, for quick reporting.
pub fn label_counts(corpus: &Corpus) -> BTreeMap<&'static str, usize> {
    let mut out = BTreeMap::new();
    for l in corpus.labels.values() {
        let k = match l.status {
            DeliveryStatus::OnTime => "on_time",
            DeliveryStatus::Late => "late",
        };
        *out.entry(k).or_insert(0) += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn late_share(c: &Corpus) -> f64 {
        label_counts(c).get("late").copied().unwrap_or(0) as f64 / c.labels.len() as f64
    }

    #[test]
    fn same_seed_same_bytes() {
        let cfg = SynthConfig {
            n_projects: 50,
            ..SynthConfig::default()
        };
        let a = generate_synthetic(&cfg, 1).unwrap();
        let b = generate_synthetic(&cfg, 1).unwrap();
        assert_eq!(a.projects_jsonl(), b.projects_jsonl());
        assert_eq!(a.events_jsonl(), b.events_jsonl());
        assert_eq!(a.labels_jsonl(), b.labels_jsonl());
        let c = generate_synthetic(&cfg, 2).unwrap();
        assert_ne!(a.projects_jsonl(), c.projects_jsonl());
    }

    #[test]
    fn hard_only_noise_free_is_all_late() {
        let cfg = SynthConfig {
            n_projects: 300,
            noise: 0.0,
            pool_mix: PoolMix {
                easy: 0.0,
                medium: 0.0,
                hard: 1.0,
            },
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg, 4).unwrap();
        assert!(c.labels.values().all(|l| l.status == DeliveryStatus::Late));
    }

    #[test]
    fn default_late_rate_is_calibrated() {
        let cfg = SynthConfig::default();
        for seed in [1, 2] {
            let c = generate_synthetic(&cfg, seed).unwrap();
            assert!((late_share(&c) - cfg.late_rate).abs() < 0.05, "{}", late_share(&c));
        }
    }

    #[test]
    fn generated_corpus_round_trips_through_loader() {
        let cfg = SynthConfig {
            n_projects: 40,
            ..SynthConfig::default()
        };
        let c = generate_synthetic(&cfg, 7).unwrap();
        let back = Corpus::from_jsonl(
            ("corpus.jsonl", &c.projects_jsonl()),
            Some(("events.jsonl", &c.events_jsonl())),
            Some(("labels.jsonl", &c.labels_jsonl())),
        )
        .unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_invalid_configs() {
        let mut cfg = SynthConfig {
            n_projects: 0,
            ..SynthConfig::default()
        };
        assert!(generate_synthetic(&cfg, 0).is_err());
        cfg.n_projects = 5;
        cfg.seed_pools.hard.clear();
        assert!(matches!(generate_synthetic(&cfg, 0), Err(Error::Config(_))));
    }
}
