use proptest::prelude::*;

use super::*;
use crate::corpus::tests::project;
use crate::corpus::{generate_synthetic, SynthConfig};
use crate::text::StopWords;

const DAY: i64 = 86_400;

fn ev(ts: i64, role: Role, kind: EventKind, text: &str, author: &str) -> ActivityEvent {
    ActivityEvent {
        project_id: "p".into(),
        author_role: role,
        author_id: Some(author.into()),
        kind,
        ts,
        text: text.into(),
    }
}

fn ctx() -> FeatureContext {
    FeatureContext::new(Tokenizer::new(StopWords::english()), CategoryDictionary::bundled(), None)
}

#[test]
fn cutoffs_follow_the_project_timeline() {
    let p = project("p", 500.0);
    let launch = p.launch_ts;
    assert_eq!(TimePoint::TP1.cutoff(&p), launch);
    assert_eq!(TimePoint::TP2.cutoff(&p), launch + 15 * DAY);
    assert_eq!(TimePoint::TP3.cutoff(&p), launch + 30 * DAY);
    // 5% of the 90-day delivery window.
    assert_eq!(TimePoint::TP4.cutoff(&p), launch + 30 * DAY + 388_800);
}

#[test]
fn time_point_parses_and_displays() {
    for tp in TimePoint::ALL {
        assert_eq!(tp.to_string().parse::<TimePoint>().unwrap(), tp);
    }
    assert!("TP5".parse::<TimePoint>().is_err());
}

#[test]
fn comment_on_day_three_of_thirty_lands_in_slot_two() {
    let c = |d: f64| ev((d * DAY as f64) as i64, Role::Backer, EventKind::Comment, "hi", "b");
    let events = vec![c(3.0), c(29.99), c(30.0), ev(DAY, Role::Creator, EventKind::Update, "u", "c")];
    let s = temporal_slots(&events, 0, 30 * DAY, 30 * DAY, 20).unwrap();
    assert_eq!(s[2], 1.0);
    assert_eq!(s[19], 1.0);
    assert_eq!(s.iter().sum::<f64>(), 2.0);
    let early = temporal_slots(&events, 0, 30 * DAY, 15 * DAY, 20).unwrap();
    assert_eq!(early.iter().sum::<f64>(), 1.0);
    assert!(temporal_slots(&events, 5, 5, 5, 20).is_err());
}

#[test]
fn latency_pairs_each_question_with_the_next_creator_comment() {
    let events = vec![
        ev(100, Role::Backer, EventKind::Comment, "when?", "b1"),
        ev(100, Role::Creator, EventKind::Comment, "same second", "c"),
        ev(160, Role::Creator, EventKind::Comment, "soon", "c"),
        ev(200, Role::Backer, EventKind::Comment, "thanks", "b2"),
        ev(300, Role::Backer, EventKind::Comment, "where?", "b2"),
        ev(400, Role::Creator, EventKind::Update, "shipping", "c"),
    ];
    assert_eq!(response_latency(&events), Some(60.0));
    assert_eq!(response_latency(&events[3..]), None);
}

#[test]
fn update_interval_averages_consecutive_gaps() {
    let u = |d: i64| ev(d * DAY, Role::Creator, EventKind::Update, "u", "c");
    assert_eq!(average_update_interval_days(&[u(0), u(2), u(4), u(9)]), Some(3.0));
    assert_eq!(average_update_interval_days(&[u(1)]), None);
}

#[test]
fn schema_only_grows_with_the_time_point() {
    let c = ctx();
    let mut prev: Vec<String> = Vec::new();
    for tp in TimePoint::ALL {
        let names: Vec<String> = c.schema(tp).names().iter().map(|s| s.to_string()).collect();
        assert!(names.len() > prev.len() || tp == TimePoint::TP3);
        assert_eq!(&names[..prev.len()], &prev[..], "{tp}");
        prev = names;
    }
    let tp1 = c.schema(TimePoint::TP1);
    assert_eq!(tp1.len(), 3 + 15 + 5 + 3);
    assert!(tp1.features.iter().all(|f| f.availability == TimePoint::TP1));
}

#[test]
fn event_counts_never_decrease_across_time_points() {
    let corpus = generate_synthetic(&SynthConfig { n_projects: 60, ..Default::default() }, 4).unwrap();
    let c = ctx();
    let mats: Vec<FeatureMatrix> = TimePoint::ALL.iter().map(|&tp| extract_matrix(&corpus, &c, tp).unwrap()).collect();
    for w in mats.windows(2) {
        for (j, f) in w[0].schema.features.iter().enumerate() {
            let k = w[1].schema.index_of(&f.name).unwrap();
            if f.event_count {
                for i in 0..w[0].n_rows() {
                    assert!(w[1].get(i, k) >= w[0].get(i, j), "{} row {i}", f.name);
                }
            }
        }
    }
}

#[test]
fn extracted_values_match_hand_counts() {
    let p = project("p", 500.0);
    let t0 = p.launch_ts;
    let events = vec![
        ev(t0 + DAY, Role::Backer, EventKind::Comment, "Love it", "b1"),
        ev(t0 + 2 * DAY, Role::Backer, EventKind::Comment, "Me too", "b1"),
        ev(t0 + 3 * DAY, Role::Creator, EventKind::Update, "Thanks all", "c"),
        ev(t0 + 20 * DAY, Role::Backer, EventKind::Comment, "Any news?", "b2"),
        ev(t0 + 31 * DAY, Role::Creator, EventKind::Comment, "Yes soon", "c"),
        ev(t0 + 32 * DAY, Role::Creator, EventKind::Update, "Shipping now", "c"),
        ev(t0 + 40 * DAY, Role::Creator, EventKind::Update, "After cutoff", "c"),
    ];
    let c = ctx();
    let s = c.schema(TimePoint::TP4);
    let v = extract_features(&p, &events, &c, TimePoint::TP4).unwrap();
    let at = |n: &str| v[s.index_of(n).unwrap()];
    assert_eq!(at("goal"), 500.0);
    assert_eq!(at("category_games"), 1.0);
    assert_eq!(at("rewards"), 1.0);
    assert_eq!(at("fundraising_days"), 30.0);
    assert_eq!(at("ledd_days"), 90.0);
    assert_eq!(at("backers"), 2.0);
    assert_eq!(at("comments"), 3.0);
    assert_eq!(at("creator_updates"), 1.0);
    assert_eq!(at("creator_comments_tp4"), 1.0);
    assert_eq!(at("creator_updates_tp4"), 1.0);
    assert_eq!(at("avg_update_interval_days"), 29.0);
    assert_eq!(at("avg_response_latency_secs"), (11 * DAY) as f64);
    assert_eq!(at("backer_comments"), 3.0);
    assert_eq!(at("distinct_commenting_backers"), 2.0);
    assert_eq!(at("backer_questions"), 1.0);

    let v2 = extract_features(&p, &events, &c, TimePoint::TP2).unwrap();
    let s2 = c.schema(TimePoint::TP2);
    assert_eq!(v2[s2.index_of("comments").unwrap()], 2.0);
    assert_eq!(v2.len(), s2.len());
}

#[test]
fn unsorted_events_are_rejected() {
    let p = project("p", 500.0);
    let events = vec![
        ev(p.launch_ts + 10, Role::Backer, EventKind::Comment, "a", "b"),
        ev(p.launch_ts, Role::Backer, EventKind::Comment, "b", "b"),
    ];
    assert!(extract_features(&p, &events, &ctx(), TimePoint::TP3).is_err());
}

#[test]
fn missing_values_are_nan() {
    let mut p = project("p", 500.0);
    p.bio_description = String::new();
    let c = ctx();
    let v = extract_features(&p, &[], &c, TimePoint::TP4).unwrap();
    let s = c.schema(TimePoint::TP4);
    assert!(v[s.index_of("smog_bio").unwrap()].is_nan());
    assert!(v[s.index_of("avg_response_latency_secs").unwrap()].is_nan());
    assert!(v[s.index_of("avg_update_interval_days").unwrap()].is_nan());
}

fn small_matrix() -> FeatureMatrix {
    let c = ctx();
    let corpus = generate_synthetic(&SynthConfig { n_projects: 12, ..Default::default() }, 8).unwrap();
    extract_matrix(&corpus, &c, TimePoint::TP4).unwrap()
}

#[test]
fn log1p_skips_exempt_columns_and_refuses_a_second_pass() {
    let m = small_matrix();
    let t = log1p_matrix(&m).unwrap();
    assert!(t.transformed);
    for (j, f) in m.schema.features.iter().enumerate() {
        for i in 0..m.n_rows() {
            let (a, b) = (m.get(i, j), t.get(i, j));
            if a.is_nan() {
                assert!(b.is_nan());
            } else if f.log_transform {
                assert_eq!(b, a.ln_1p());
            } else {
                assert_eq!(a, b);
            }
        }
    }
    assert!(log1p_matrix(&t).is_err());
    let neg = FeatureMatrix::new(vec!["x".into()], m.schema.clone(), {
        let mut v = m.row(0).to_vec();
        v[0] = -1.0;
        v
    })
    .unwrap();
    let e = log1p_matrix(&neg).unwrap_err().to_string();
    assert!(e.contains("images"), "{e}");
}

#[test]
fn csv_round_trip_is_exact() {
    let m = log1p_matrix(&small_matrix()).unwrap();
    let csv = format!("# tool 0.1.0\n{}", m.to_csv().unwrap());
    let back = FeatureMatrix::from_csv(&csv, &m.schema_json().unwrap()).unwrap();
    assert_eq!(back.ids, m.ids);
    assert_eq!(back.schema, m.schema);
    assert!(back.transformed);
    for (a, b) in back.values().iter().zip(m.values()) {
        assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
    }
}

#[test]
fn csv_header_must_match_schema() {
    let m = small_matrix();
    let other = m.select_columns(&[1, 0]);
    assert!(FeatureMatrix::from_csv(&m.to_csv().unwrap(), &other.schema_json().unwrap()).is_err());
}

#[test]
fn imputation_uses_column_medians() {
    let schema = FeatureSchema {
        features: vec![FeatureSpec::new("a", TimePoint::TP1, FeatureGroup::Project)],
    };
    let mut m = FeatureMatrix::new(vec!["1".into(), "2".into(), "3".into(), "4".into()], schema, vec![1.0, f64::NAN, 3.0, 10.0]).unwrap();
    let med = m.column_medians();
    assert_eq!(med, vec![3.0]);
    m.fill_missing(&med);
    assert_eq!(m.column(0), vec![1.0, 3.0, 3.0, 10.0]);
}

#[test]
fn baseline_has_eight_columns_once_outcomes_are_known() {
    let corpus = generate_synthetic(&SynthConfig { n_projects: 5, ..Default::default() }, 1).unwrap();
    let ps: Vec<&ProjectRecord> = corpus.projects.iter().collect();
    assert_eq!(baseline8_matrix(&ps, TimePoint::TP4, false).unwrap().n_cols(), 8);
    assert_eq!(baseline8_matrix(&ps, TimePoint::TP2, false).unwrap().n_cols(), 6);
    assert_eq!(baseline8_matrix(&ps, TimePoint::TP4, true).unwrap().n_cols(), 22);
}

proptest! {
    #[test]
    fn slots_partition_window_comments(ts in proptest::collection::vec(0i64..30 * DAY, 0..40), n in 1usize..25) {
        let events: Vec<ActivityEvent> = ts.iter().map(|&t| ev(t, Role::Backer, EventKind::Comment, "x", "b")).collect();
        let s = temporal_slots(&events, 0, 30 * DAY, 30 * DAY, n).unwrap();
        prop_assert_eq!(s.iter().sum::<f64>(), ts.len() as f64);
    }

    #[test]
    fn log1p_is_inverted_by_expm1(x in 0.0f64..1e9) {
        let schema = FeatureSchema { features: vec![FeatureSpec::new("a", TimePoint::TP1, FeatureGroup::Project)] };
        let m = FeatureMatrix::new(vec!["r".into()], schema, vec![x]).unwrap();
        let t = log1p_matrix(&m).unwrap();
        prop_assert!((t.get(0, 0).exp_m1() - x).abs() <= 1e-12 * x.max(1.0));
    }
}
