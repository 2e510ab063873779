use serde::{Deserialize, Serialize};

use crate::analytic::{DEFAULT_MAX_RTPS_MESSAGE_BYTES, DEFAULT_MTU_BYTES};
use crate::error::{invalid, Result};

pub type SequenceNumber = u64;

/// Half-open interval `[start_s, end_s)` during which the link carries nothing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutageWindow {
    pub start_s: f64,
    pub end_s: f64,
}

impl OutageWindow {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self> {
        if !(start_s.is_finite() && end_s.is_finite() && start_s >= 0.0 && end_s > start_s) {
            return Err(invalid(format!("outage window [{start_s}, {end_s}) is empty or invalid")));
        }
        Ok(Self { start_s, end_s })
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.start_s && t < self.end_s
    }

    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Impairments of the single hop between writer and reader.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkModel {
    /// Per-packet delivery probability `p`.
    pub delivery_prob: f64,
    pub capacity_bytes_per_s: f64,
    pub mtu_bytes: u64,
    pub propagation_delay_s: f64,
    /// Sorted, non-overlapping.
    pub outage_windows: Vec<OutageWindow>,
}

impl LinkModel {
    pub fn new(
        delivery_prob: f64,
        capacity_bytes_per_s: f64,
        mtu_bytes: u64,
        propagation_delay_s: f64,
        outage_windows: Vec<OutageWindow>,
    ) -> Result<Self> {
        let link = Self { delivery_prob, capacity_bytes_per_s, mtu_bytes, propagation_delay_s, outage_windows };
        link.validate()?;
        Ok(link)
    }

    /// Lossless, effectively unconstrained link.
    pub fn ideal() -> Self {
        Self {
            delivery_prob: 1.0,
            capacity_bytes_per_s: 1e12,
            mtu_bytes: DEFAULT_MTU_BYTES,
            propagation_delay_s: 0.0,
            outage_windows: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delivery_prob) {
            return Err(invalid(format!("delivery probability {} outside [0, 1]", self.delivery_prob)));
        }
        if !(self.capacity_bytes_per_s > 0.0 && self.capacity_bytes_per_s.is_finite()) {
            return Err(invalid("link capacity must be positive"));
        }
        if self.mtu_bytes == 0 {
            return Err(invalid("mtu must be positive"));
        }
        if !(self.propagation_delay_s >= 0.0 && self.propagation_delay_s.is_finite()) {
            return Err(invalid("propagation delay must be non-negative"));
        }
        for w in &self.outage_windows {
            OutageWindow::new(w.start_s, w.end_s)?;
        }
        for pair in self.outage_windows.windows(2) {
            if pair[1].start_s < pair[0].end_s {
                return Err(invalid("outage windows overlap or are unsorted"));
            }
        }
        Ok(())
    }

    pub fn in_outage(&self, t: f64) -> bool {
        // windows are few; a linear scan is fine
        self.outage_windows.iter().any(|w| w.contains(t))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reliability {
    Reliable,
    BestEffort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum History {
    KeepAll,
    KeepLast(u64),
}

/// What a `KEEP_ALL` writer does when its cache is full.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockedPublish {
    /// Hold the sample until acknowledgments free a slot.
    #[default]
    Defer,
    /// Discard the sample, as a writer whose blocking time expired would.
    Drop,
}

/// Tunable protocol knobs of one writer/reader pair.
#[derive(Debug, Clone, PartialEq)]
pub struct QosProfile {
    pub max_rtps_message_bytes: u64,
    /// Heartbeat rate `n`; the heartbeat period is `1 / n`.
    pub retransmission_rate_hz: f64,
    /// `None` is unbounded.
    pub history_cache_capacity: Option<u64>,
    pub reliability: Reliability,
    pub history: History,
    pub blocked_publish: BlockedPublish,
}

impl QosProfile {
    /// Out-of-the-box middleware settings: 64 KiB messages, 3 s heartbeat, 400 samples.
    pub fn middleware_default() -> Self {
        Self {
            max_rtps_message_bytes: DEFAULT_MAX_RTPS_MESSAGE_BYTES,
            retransmission_rate_hz: 1.0 / 3.0,
            history_cache_capacity: Some(400),
            reliability: Reliability::Reliable,
            history: History::KeepAll,
            blocked_publish: BlockedPublish::Defer,
        }
    }

    pub fn heartbeat_period_s(&self) -> f64 {
        1.0 / self.retransmission_rate_hz
    }

    /// Effective slot count of the writer cache.
    pub fn cache_slots(&self) -> Option<u64> {
        match (self.history, self.history_cache_capacity) {
            (History::KeepLast(depth), Some(cap)) => Some(depth.min(cap)),
            (History::KeepLast(depth), None) => Some(depth),
            (History::KeepAll, cap) => cap,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_rtps_message_bytes == 0 {
            return Err(invalid("max RTPS message size must be >= 1"));
        }
        if !(self.retransmission_rate_hz > 0.0 && self.retransmission_rate_hz.is_finite()) {
            return Err(invalid("retransmission rate must be positive"));
        }
        if self.history_cache_capacity == Some(0) {
            return Err(invalid("bounded history cache needs capacity >= 1"));
        }
        if self.history == History::KeepLast(0) {
            return Err(invalid("KEEP_LAST depth must be >= 1"));
        }
        Ok(())
    }
}

/// Periodic publisher: `sample_count` samples of `sample_size_bytes` at `publish_rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadSpec {
    pub publish_rate_hz: f64,
    pub sample_size_bytes: u64,
    pub sample_count: u64,
    pub start_time_s: f64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.publish_rate_hz > 0.0 && self.publish_rate_hz.is_finite()) {
            return Err(invalid("publish rate must be positive"));
        }
        if self.sample_size_bytes == 0 || self.sample_count == 0 {
            return Err(invalid("workload needs a positive sample size and count"));
        }
        if !(self.start_time_s >= 0.0 && self.start_time_s.is_finite()) {
            return Err(invalid("workload start must be non-negative"));
        }
        Ok(())
    }

    pub fn publish_time(&self, index: u64) -> f64 {
        self.start_time_s + index as f64 / self.publish_rate_hz
    }

    /// Nominal span covered by the publish schedule, `count / r`.
    pub fn publish_span_s(&self) -> f64 {
        self.sample_count as f64 / self.publish_rate_hz
    }
}

/// Everything needed for one deterministic run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub workload: WorkloadSpec,
    pub link: LinkModel,
    pub qos: QosProfile,
    pub duration_s: f64,
    pub rng_seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        self.workload.validate()?;
        self.link.validate()?;
        self.qos.validate()?;
        if !(self.duration_s > self.workload.start_time_s && self.duration_s.is_finite()) {
            return Err(invalid("duration must extend past the workload start"));
        }
        Ok(())
    }
}

/// Life of one application sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    /// Application-side ordinal (0-based).
    pub sample_id: u64,
    /// Assigned when the sample enters the writer cache; `None` if it never did.
    pub sequence_number: Option<SequenceNumber>,
    pub publish_time_s: f64,
    pub delivery_time_s: Option<f64>,
    pub acknowledged: bool,
}

impl SampleRecord {
    pub fn latency_s(&self) -> Option<f64> {
        self.delivery_time_s.map(|d| d - self.publish_time_s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn link_validation() {
        let ok = LinkModel::new(0.9, 1e6, 1500, 0.0, vec![OutageWindow::new(1.0, 2.0).unwrap()]);
        assert!(ok.is_ok());
        assert!(LinkModel::new(1.2, 1e6, 1500, 0.0, vec![]).is_err());
        assert!(LinkModel::new(0.9, 0.0, 1500, 0.0, vec![]).is_err());
        let overlapping = vec![OutageWindow { start_s: 1.0, end_s: 3.0 }, OutageWindow { start_s: 2.0, end_s: 4.0 }];
        assert!(LinkModel::new(0.9, 1e6, 1500, 0.0, overlapping).is_err());
        assert!(OutageWindow::new(2.0, 2.0).is_err());
    }

    #[test]
    fn outage_is_half_open() {
        let w = OutageWindow::new(1.0, 2.0).unwrap();
        assert!(w.contains(1.0));
        assert!(!w.contains(2.0));
    }

    #[test]
    fn cache_slots_follow_history() {
        let mut q = QosProfile::middleware_default();
        assert_eq!(q.cache_slots(), Some(400));
        q.history = History::KeepLast(10);
        assert_eq!(q.cache_slots(), Some(10));
        q.history_cache_capacity = None;
        assert_eq!(q.cache_slots(), Some(10));
        q.history = History::KeepAll;
        assert_eq!(q.cache_slots(), None);
    }

    #[test]
    fn default_heartbeat_is_three_seconds() {
        assert!((QosProfile::middleware_default().heartbeat_period_s() - 3.0).abs() < 1e-12);
    }
}
