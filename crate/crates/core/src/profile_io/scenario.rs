//! Scenario JSON files.
//!
//! ```json
//! {
//!   "name": "severe_loss",
//!   "workload": { "rate_hz": 30, "payload_bytes": 231000, "count": 300 },
//!   "link": { "per": 0.2, "capacity_bps": 433e6, "mtu": 1500, "prop_delay_s": 0.001, "outages": [] },
//!   "qos": { "max_message_bytes": 1472, "retx_rate_hz": 60, "history_capacity": 140,
//!            "reliability": "RELIABLE", "history": "KEEP_ALL" },
//!   "duration_s": 13.4,
//!   "seed": 1
//! }
//! ```
//!
//! `per` is the packet error rate (delivery probability is `1 - per`) and
//! `capacity_bps` is in bits per second. `history_capacity` may be a count,
//! `"unbounded"` or `null`. Optional keys: `name`, `workload.start_s`,
//! `qos.history_depth` (required for `KEEP_LAST`), `qos.blocked_publish`
//! (`"defer"` or `"drop"`).

use serde::{Deserialize, Serialize};

use crate::analytic::DEFAULT_MTU_BYTES;
use crate::error::{Error, Result};
use crate::sim::{
    BlockedPublish, History, LinkModel, OutageWindow, QosProfile, Reliability, ScenarioSpec, WorkloadSpec,
};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    workload: WorkloadFile,
    link: LinkFile,
    qos: QosFile,
    duration_s: f64,
    seed: u64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadFile {
    rate_hz: f64,
    payload_bytes: u64,
    count: u64,
    #[serde(default)]
    start_s: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkFile {
    per: f64,
    capacity_bps: f64,
    #[serde(default = "default_mtu")]
    mtu: u64,
    #[serde(default)]
    prop_delay_s: f64,
    #[serde(default)]
    outages: Vec<[f64; 2]>,
}

fn default_mtu() -> u64 {
    DEFAULT_MTU_BYTES
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum Capacity {
    Count(u64),
    Word(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
enum HistoryKind {
    KeepAll,
    KeepLast,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QosFile {
    max_message_bytes: u64,
    retx_rate_hz: f64,
    history_capacity: Option<Capacity>,
    reliability: Reliability,
    history: HistoryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    history_depth: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    blocked_publish: Option<BlockedPublish>,
}

fn bad(key: &str, what: &str) -> Error {
    Error::Scenario(format!("{key} {what}"))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(bad(key, "must be positive"))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        if path == "." {
            Error::Scenario(e.into_inner().to_string())
        } else {
            Error::Scenario(format!("{path}: {}", e.into_inner()))
        }
    })?;
    build(file)
}

fn build(f: ScenarioFile) -> Result<ScenarioSpec> {
    let w = &f.workload;
    let workload = WorkloadSpec {
        publish_rate_hz: positive("workload.rate_hz", w.rate_hz)?,
        sample_size_bytes: if w.payload_bytes > 0 { w.payload_bytes } else { return Err(bad("workload.payload_bytes", "must be positive")) },
        sample_count: if w.count > 0 { w.count } else { return Err(bad("workload.count", "must be positive")) },
        start_time_s: if w.start_s >= 0.0 && w.start_s.is_finite() { w.start_s } else { return Err(bad("workload.start_s", "must be non-negative")) },
    };

    let l = &f.link;
    if !(0.0..=1.0).contains(&l.per) {
        return Err(bad("link.per", "out of range"));
    }
    let capacity = positive("link.capacity_bps", l.capacity_bps)? / 8.0;
    if l.mtu == 0 {
        return Err(bad("link.mtu", "must be positive"));
    }
    if !(l.prop_delay_s >= 0.0 && l.prop_delay_s.is_finite()) {
        return Err(bad("link.prop_delay_s", "must be non-negative"));
    }
    let mut outages = Vec::with_capacity(l.outages.len());
    for [s, e] in &l.outages {
        outages.push(OutageWindow::new(*s, *e).map_err(|_| bad("link.outages", "contain an empty or negative window"))?);
    }
    if outages.windows(2).any(|p| p[1].start_s < p[0].end_s) {
        return Err(bad("link.outages", "overlap or are unsorted"));
    }
    let link = LinkModel {
        delivery_prob: 1.0 - l.per,
        capacity_bytes_per_s: capacity,
        mtu_bytes: l.mtu,
        propagation_delay_s: l.prop_delay_s,
        outage_windows: outages,
    };

    let q = &f.qos;
    if q.max_message_bytes == 0 {
        return Err(bad("qos.max_message_bytes", "must be positive"));
    }
    let history_cache_capacity = match &q.history_capacity {
        None => None,
        Some(Capacity::Count(0)) => return Err(bad("qos.history_capacity", "must be at least 1")),
        Some(Capacity::Count(n)) => Some(*n),
        Some(Capacity::Word(w)) if w.eq_ignore_ascii_case("unbounded") => None,
        Some(Capacity::Word(_)) => return Err(bad("qos.history_capacity", "must be a count or \"unbounded\"")),
    };
    let history = match (q.history, q.history_depth) {
        (HistoryKind::KeepAll, None) => History::KeepAll,
        (HistoryKind::KeepAll, Some(_)) => return Err(bad("qos.history_depth", "only applies to KEEP_LAST")),
        (HistoryKind::KeepLast, Some(d)) if d > 0 => History::KeepLast(d),
        (HistoryKind::KeepLast, _) => return Err(bad("qos.history_depth", "must be given and positive for KEEP_LAST")),
    };
    let qos = QosProfile {
        max_rtps_message_bytes: q.max_message_bytes,
        retransmission_rate_hz: positive("qos.retx_rate_hz", q.retx_rate_hz)?,
        history_cache_capacity,
        reliability: q.reliability,
        history,
        blocked_publish: q.blocked_publish.unwrap_or_default(),
    };

    if !(f.duration_s > workload.start_time_s && f.duration_s.is_finite()) {
        return Err(bad("duration_s", "must extend past workload.start_s"));
    }
    let spec = ScenarioSpec {
        name: f.name.unwrap_or_else(|| "scenario".into()),
        workload,
        link,
        qos,
        duration_s: f.duration_s,
        rng_seed: f.seed,
    };
    spec.validate().map_err(|e| Error::Scenario(e.to_string()))?;
    Ok(spec)
}

/// Inverse of [`parse_scenario`], used to generate fixtures.
pub fn render_scenario(spec: &ScenarioSpec) -> Result<String> {
    spec.validate()?;
    let (history, history_depth) = match spec.qos.history {
        History::KeepAll => (HistoryKind::KeepAll, None),
        History::KeepLast(d) => (HistoryKind::KeepLast, Some(d)),
    };
    let file = ScenarioFile {
        name: Some(spec.name.clone()),
        workload: WorkloadFile {
            rate_hz: spec.workload.publish_rate_hz,
            payload_bytes: spec.workload.sample_size_bytes,
            count: spec.workload.sample_count,
            start_s: spec.workload.start_time_s,
        },
        link: LinkFile {
            per: 1.0 - spec.link.delivery_prob,
            capacity_bps: spec.link.capacity_bytes_per_s * 8.0,
            mtu: spec.link.mtu_bytes,
            prop_delay_s: spec.link.propagation_delay_s,
            outages: spec.link.outage_windows.iter().map(|w| [w.start_s, w.end_s]).collect(),
        },
        qos: QosFile {
            max_message_bytes: spec.qos.max_rtps_message_bytes,
            retx_rate_hz: spec.qos.retransmission_rate_hz,
            history_capacity: Some(match spec.qos.history_cache_capacity {
                Some(n) => Capacity::Count(n),
                None => Capacity::Word("unbounded".into()),
            }),
            reliability: spec.qos.reliability,
            history,
            history_depth,
            blocked_publish: (spec.qos.blocked_publish != BlockedPublish::Defer).then_some(spec.qos.blocked_publish),
        },
        duration_s: spec.duration_s,
        seed: spec.rng_seed,
    };
    let mut text = serde_json::to_string_pretty(&file).map_err(|e| Error::Scenario(e.to_string()))?;
    text.push('\n');
    Ok(text)
}
