use crate::corpus::{ActivityEvent, EventKind, Role};
use crate::error::{Error, Result};

/// Comment counts in `n_slots` equal slices of `[launch, deadline)`, using
/// only comments with `ts <= cutoff`. Slot `i` covers
/// `[launch + i·d/n, launch + (i+1)·d/n)` with `d = deadline - launch`.
pub fn temporal_slots(events: &[ActivityEvent], launch: i64, deadline: i64, cutoff: i64, n_slots: usize) -> Result<Vec<f64>> {
    if deadline <= launch {
        return Err(Error::InvalidInput("deadline must follow launch".into()));
    }
    let mut slots = vec![0.0; n_slots];
    if n_slots == 0 {
        return Ok(slots);
    }
    let d = (deadline - launch) as i128;
    for e in events {
        if e.kind != EventKind::Comment || e.ts > cutoff || e.ts < launch || e.ts >= deadline {
            continue;
        }
        let i = ((e.ts - launch) as i128 * n_slots as i128 / d) as usize;
        slots[i.min(n_slots - 1)] += 1.0;
    }
    Ok(slots)
}

/// Mean seconds from each backer question (a comment containing `?`) to
/// the earliest strictly later creator comment. Unanswered questions are
/// skipped; `None` if no question was answered.
pub fn response_latency(events: &[ActivityEvent]) -> Option<f64> {
    let mut replies: Vec<i64> = events
        .iter()
        .filter(|e| e.author_role == Role::Creator && e.kind == EventKind::Comment)
        .map(|e| e.ts)
        .collect();
    replies.sort_unstable();
    let mut total = 0.0;
    let mut n = 0usize;
    for q in events
        .iter()
        .filter(|e| e.author_role == Role::Backer && e.kind == EventKind::Comment && e.text.contains('?'))
    {
        let k = replies.partition_point(|&t| t <= q.ts);
        if let Some(&r) = replies.get(k) {
            total += (r - q.ts) as f64;
            n += 1;
        }
    }
    (n > 0).then(|| total / n as f64)
}

/// Mean gap in days between consecutive creator updates; `None` below two
/// updates.
pub fn average_update_interval_days(events: &[ActivityEvent]) -> Option<f64> {
    let mut ts: Vec<i64> = events
        .iter()
        .filter(|e| e.author_role == Role::Creator && e.kind == EventKind::Update)
        .map(|e| e.ts)
        .collect();
    if ts.len() < 2 {
        return None;
    }
    ts.sort_unstable();
    Some((ts[ts.len() - 1] - ts[0]) as f64 / 86_400.0 / (ts.len() - 1) as f64)
}
