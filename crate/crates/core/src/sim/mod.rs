//! Discrete-event simulation of one writer and one reader over an impaired link.
//!
//! Time is continuous (`f64` seconds). Events at equal timestamps run in the
//! order: link arrivals, publishes, heartbeat timers, then insertion order.

mod event;
pub mod link;
pub mod metrics;
pub mod reader;
pub mod trace;
mod types;
pub mod writer;

pub use link::{Burst, Direction, TxOutcome};
pub use metrics::{compute_metrics, reception_timeline, recovery_time_s, MetricsReport};
pub use reader::{AckNack, HeartbeatResponse, Reader};
pub use trace::TraceEvent;
pub use types::*;
pub use writer::{AckNackResult, DataMessage, Heartbeat, PublishOutcome, Writer};

use crate::analytic::FragmentationPlan;
use crate::error::Result;
use event::{EventKind, EventQueue};
use link::LinkDirection;
use trace::Tracer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub record_trace: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_trace: true }
    }
}

/// Forward-direction traffic accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkStats {
    /// Data bytes pushed into the link, first sends and retransmissions.
    pub bytes_offered: u64,
    /// `bytes_offered` over the nominal publish span `count / r`.
    pub offered_rate_bytes_per_s: f64,
    pub packets_sent: u64,
    pub packets_lost: u64,
    /// Mean over retransmission rounds inside the publish window of the
    /// largest busy period that started in the round.
    pub mean_round_burst_bytes: f64,
    pub rounds: u64,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub metrics: MetricsReport,
    pub records: Vec<SampleRecord>,
    pub trace: Vec<TraceEvent>,
    pub link_stats: LinkStats,
    pub end_time_s: f64,
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<SimOutcome> {
    run_scenario_with(spec, RunOptions::default())
}

pub fn run_scenario_with(spec: &ScenarioSpec, options: RunOptions) -> Result<SimOutcome> {
    spec.validate()?;
    Simulator::new(spec, options)?.run()
}

struct Simulator<'a> {
    spec: &'a ScenarioSpec,
    writer: Writer,
    reader: Reader,
    forward: LinkDirection,
    reverse: LinkDirection,
    queue: EventQueue,
    records: Vec<SampleRecord>,
    seq_to_sample: Vec<u64>,
    data_in_flight: u64,
    heartbeat_ticks: u64,
    tracer: Tracer,
}

impl<'a> Simulator<'a> {
    fn new(spec: &'a ScenarioSpec, options: RunOptions) -> Result<Self> {
        let plan = FragmentationPlan::new(
            spec.workload.sample_size_bytes,
            spec.qos.max_rtps_message_bytes,
            spec.link.mtu_bytes,
        )?;
        Ok(Self {
            spec,
            writer: Writer::new(&spec.qos, plan.message_sizes),
            reader: Reader::new(spec.qos.reliability),
            forward: LinkDirection::new(spec.rng_seed, Direction::Forward),
            reverse: LinkDirection::new(spec.rng_seed, Direction::Reverse),
            queue: EventQueue::default(),
            records: Vec::with_capacity(spec.workload.sample_count as usize),
            seq_to_sample: Vec::new(),
            data_in_flight: 0,
            heartbeat_ticks: 0,
            tracer: Tracer::new(options.record_trace),
        })
    }

    fn run(mut self) -> Result<SimOutcome> {
        let w = &self.spec.workload;
        self.queue.push(w.publish_time(0), EventKind::Publish { sample_id: 0 });
        if self.spec.qos.reliability == Reliability::Reliable {
            self.schedule_heartbeat();
        }

        let mut end_time = self.spec.duration_s;
        while let Some(t) = self.queue.peek_time() {
            if t > self.spec.duration_s {
                break;
            }
            let (t, kind) = self.queue.pop().expect("peeked");
            self.handle(t, kind);
            if self.finished() {
                end_time = t;
                break;
            }
        }
        if self.queue.peek_time().is_none() && !self.finished() {
            end_time = self.spec.duration_s;
        }
        Ok(self.finish(end_time))
    }

    fn finished(&self) -> bool {
        self.records.len() as u64 == self.spec.workload.sample_count
            && self.writer.is_idle()
            && self.data_in_flight == 0
    }

    fn schedule_heartbeat(&mut self) {
        self.heartbeat_ticks += 1;
        let t = self.spec.workload.start_time_s
            + self.heartbeat_ticks as f64 / self.spec.qos.retransmission_rate_hz;
        self.queue.push(t, EventKind::HeartbeatTick);
    }

    fn handle(&mut self, t: f64, kind: EventKind) {
        match kind {
            EventKind::Publish { sample_id } => self.on_publish(t, sample_id),
            EventKind::HeartbeatTick => self.on_heartbeat_tick(t),
            EventKind::DataArrival(msg) => {
                self.data_in_flight -= 1;
                let delivered = self.reader.on_data(&msg);
                self.tracer.record(t, "reader", "data", Some(msg.seq), Some(msg.bytes), || {
                    format!("msg={}/{}", msg.msg_index + 1, msg.n_msgs)
                });
                self.mark_delivered(t, &delivered);
            }
            EventKind::HeartbeatArrival(hb) => self.on_heartbeat_arrival(t, hb),
            EventKind::AckNackArrival(an) => self.on_acknack_arrival(t, an),
        }
    }

    fn on_publish(&mut self, t: f64, sample_id: u64) {
        self.records.push(SampleRecord {
            sample_id,
            sequence_number: None,
            publish_time_s: t,
            delivery_time_s: None,
            acknowledged: false,
        });
        match self.writer.publish(sample_id) {
            PublishOutcome::Stored { seq, evicted, messages } => {
                self.bind(seq, sample_id);
                if let Some((old, _)) = evicted {
                    self.tracer.record(t, "writer", "evict", Some(old), None, String::new);
                }
                self.tracer.record(t, "writer", "publish", Some(seq), Some(self.spec.workload.sample_size_bytes), || {
                    format!("sample={sample_id}")
                });
                self.transmit(t, &messages, "send");
            }
            PublishOutcome::Sent { seq, messages } => {
                self.bind(seq, sample_id);
                self.tracer.record(t, "writer", "publish", Some(seq), Some(self.spec.workload.sample_size_bytes), || {
                    format!("sample={sample_id}")
                });
                self.transmit(t, &messages, "send");
            }
            PublishOutcome::Deferred => {
                self.tracer.record(t, "writer", "defer", None, None, || format!("sample={sample_id}"));
            }
            PublishOutcome::Dropped => {
                self.tracer.record(t, "writer", "drop", None, None, || format!("sample={sample_id}"));
            }
        }
        let next = sample_id + 1;
        if next < self.spec.workload.sample_count {
            self.queue.push(self.spec.workload.publish_time(next), EventKind::Publish { sample_id: next });
        }
    }

    fn on_heartbeat_tick(&mut self, t: f64) {
        if let Some(hb) = self.writer.heartbeat() {
            match self.forward.transmit_control(&self.spec.link, t) {
                Some(arrival) => {
                    self.tracer.record(t, "writer", "heartbeat", None, None, || {
                        format!("min={} max={} count={}", hb.min, hb.max, hb.count)
                    });
                    self.queue.push(arrival, EventKind::HeartbeatArrival(hb));
                }
                None => self.tracer.record(t, "link", "heartbeat_lost", None, None, || format!("count={}", hb.count)),
            }
        }
        self.schedule_heartbeat();
    }

    fn on_heartbeat_arrival(&mut self, t: f64, hb: Heartbeat) {
        let resp = self.reader.on_heartbeat(&hb);
        for &seq in &resp.skipped {
            self.tracer.record(t, "reader", "skip", Some(seq), None, String::new);
        }
        self.mark_delivered(t, &resp.delivered);
        let Some(an) = resp.acknack else { return };
        match self.reverse.transmit_control(&self.spec.link, t) {
            Some(arrival) => {
                self.tracer.record(t, "reader", "acknack", Some(an.base), None, || {
                    format!("missing={} count={}", an.missing.len(), an.heartbeat_count)
                });
                self.queue.push(arrival, EventKind::AckNackArrival(an));
            }
            None => self.tracer.record(t, "link", "acknack_lost", Some(an.base), None, String::new),
        }
    }

    fn on_acknack_arrival(&mut self, t: f64, an: AckNack) {
        let res = self.writer.handle_acknack(&an);
        for &(seq, sample_id) in &res.acked {
            self.records[sample_id as usize].acknowledged = true;
            self.tracer.record(t, "writer", "ack", Some(seq), None, String::new);
        }
        for &seq in &res.unknown {
            self.tracer.record(t, "writer", "nack_unknown", Some(seq), None, String::new);
        }
        self.transmit(t, &res.retransmit, "resend");
        for &(seq, sample_id) in &res.admitted {
            self.bind(seq, sample_id);
            self.tracer.record(t, "writer", "publish", Some(seq), Some(self.spec.workload.sample_size_bytes), || {
                format!("sample={sample_id} deferred")
            });
        }
        self.transmit(t, &res.admitted_messages, "send");
    }

    fn bind(&mut self, seq: SequenceNumber, sample_id: u64) {
        debug_assert_eq!(seq as usize, self.seq_to_sample.len() + 1);
        self.seq_to_sample.push(sample_id);
        self.records[sample_id as usize].sequence_number = Some(seq);
    }

    fn mark_delivered(&mut self, t: f64, seqs: &[SequenceNumber]) {
        for &seq in seqs {
            let sample_id = self.seq_to_sample[(seq - 1) as usize];
            self.records[sample_id as usize].delivery_time_s = Some(t);
            self.tracer.record(t, "reader", "deliver", Some(seq), None, || format!("sample={sample_id}"));
        }
    }

    fn transmit(&mut self, t: f64, messages: &[DataMessage], label: &'static str) {
        for msg in messages {
            match self.forward.transmit(&self.spec.link, t, msg.bytes) {
                TxOutcome::Delivered { arrival_s } => {
                    self.data_in_flight += 1;
                    self.queue.push(arrival_s, EventKind::DataArrival(*msg));
                    self.tracer.record(t, "writer", label, Some(msg.seq), Some(msg.bytes), || {
                        format!("msg={}/{}", msg.msg_index + 1, msg.n_msgs)
                    });
                }
                TxOutcome::Lost { packets_lost, in_outage } => {
                    self.tracer.record(t, "writer", label, Some(msg.seq), Some(msg.bytes), || {
                        format!("msg={}/{}", msg.msg_index + 1, msg.n_msgs)
                    });
                    self.tracer.record(t, "link", "lost", Some(msg.seq), Some(msg.bytes), || {
                        format!("packets={packets_lost}{}", if in_outage { " outage" } else { "" })
                    });
                }
            }
        }
    }

    fn finish(self, end_time_s: f64) -> SimOutcome {
        let spec = self.spec;
        let n = spec.qos.retransmission_rate_hz;
        let span = spec.workload.publish_span_s();
        let (bytes_offered, packets_sent, packets_lost) =
            (self.forward.bytes_offered, self.forward.packets_sent, self.forward.packets_lost);
        let bursts = self.forward.into_bursts();

        let rounds = ((span * n + 1e-9).floor() as u64).max(1);
        let mut round_max = vec![0u64; rounds as usize];
        for b in &bursts {
            let k = ((b.start_s - spec.workload.start_time_s) * n + 1e-9).floor();
            if k >= 0.0 && (k as u64) < rounds {
                let slot = &mut round_max[k as usize];
                *slot = (*slot).max(b.bytes);
            }
        }
        let mean_round_burst_bytes = round_max.iter().sum::<u64>() as f64 / rounds as f64;

        let mut metrics = compute_metrics(&self.records);
        metrics.max_burst_bytes = bursts.iter().map(|b| b.bytes).max().unwrap_or(0);
        let all_published = self.records.len() as u64 == spec.workload.sample_count;
        metrics.complete = all_published
            && self.records.iter().all(|r| {
                r.delivery_time_s.is_some() && (spec.qos.reliability == Reliability::BestEffort || r.acknowledged)
            });

        SimOutcome {
            metrics,
            records: self.records,
            trace: self.tracer.into_events(),
            link_stats: LinkStats {
                bytes_offered,
                offered_rate_bytes_per_s: bytes_offered as f64 / span,
                packets_sent,
                packets_lost,
                mean_round_burst_bytes,
                rounds,
            },
            end_time_s,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(p: f64, count: u64, qos: QosProfile) -> ScenarioSpec {
        ScenarioSpec {
            name: "t".into(),
            workload: WorkloadSpec { publish_rate_hz: 30.0, sample_size_bytes: 10_000, sample_count: count, start_time_s: 0.0 },
            link: LinkModel { delivery_prob: p, ..LinkModel::ideal() },
            qos,
            duration_s: 60.0,
            rng_seed: 1,
        }
    }

    fn optimized() -> QosProfile {
        QosProfile { max_rtps_message_bytes: 1472, retransmission_rate_hz: 60.0, ..QosProfile::middleware_default() }
    }

    #[test]
    fn lossless_run_delivers_everything() {
        let out = run_scenario(&spec(1.0, 100, optimized())).unwrap();
        assert_eq!(out.metrics.delivery_ratio, 1.0);
        assert!(out.metrics.complete);
        assert!((out.metrics.reception_rate_hz.unwrap() - 100.0 / (99.0 / 30.0)).abs() < 1e-6);
    }

    #[test]
    fn permanent_outage_best_effort_receives_nothing() {
        let mut s = spec(1.0, 30, QosProfile { reliability: Reliability::BestEffort, ..optimized() });
        s.link.outage_windows = vec![OutageWindow::new(0.0, 60.0).unwrap()];
        let out = run_scenario(&s).unwrap();
        assert_eq!(out.metrics.received_count, 0);
        assert!(!out.metrics.complete);
    }

    #[test]
    fn lossy_reliable_run_recovers_all_samples_once() {
        let out = run_scenario(&spec(0.9, 200, optimized())).unwrap();
        assert!(out.metrics.complete);
        let mut seqs: Vec<_> = out.records.iter().map(|r| r.sequence_number.unwrap()).collect();
        seqs.dedup();
        assert_eq!(seqs.len(), 200);
        assert!(out.records.iter().all(|r| r.delivery_time_s.unwrap() >= r.publish_time_s));
    }

    #[test]
    fn deterministic_trace() {
        let s = spec(0.8, 50, optimized());
        let a = run_scenario(&s).unwrap();
        let b = run_scenario(&s).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.metrics, b.metrics);
    }
}
