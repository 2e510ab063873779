//! DataReader side of the reliability protocol.

use std::collections::{BTreeMap, BTreeSet};

use super::types::{Reliability, SequenceNumber};
use super::writer::{DataMessage, Heartbeat};

/// Reader reply to a heartbeat.
///
/// Everything below `base` is acknowledged. `missing` lists nacked sequence
/// numbers with the message indices still needed; an empty list means the
/// whole sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AckNack {
    pub base: SequenceNumber,
    pub missing: Vec<(SequenceNumber, Vec<u32>)>,
    pub heartbeat_count: u32,
}

impl AckNack {
    pub fn is_positive(&self) -> bool {
        self.missing.is_empty()
    }

    /// Nacked sequence numbers only.
    pub fn bitmap(&self) -> Vec<SequenceNumber> {
        self.missing.iter().map(|(s, _)| *s).collect()
    }
}

#[derive(Debug, Clone)]
struct Partial {
    got: Vec<bool>,
    received: u32,
}

impl Partial {
    fn complete(&self) -> bool {
        self.received as usize == self.got.len()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct HeartbeatResponse {
    pub acknack: Option<AckNack>,
    pub delivered: Vec<SequenceNumber>,
    /// Sequence numbers given up because the writer no longer holds them.
    pub skipped: Vec<SequenceNumber>,
}

#[derive(Debug)]
pub struct Reader {
    reliability: Reliability,
    /// Lowest sequence number not yet handed to the application (RELIABLE).
    next_expected: SequenceNumber,
    partial: BTreeMap<SequenceNumber, Partial>,
    delivered_unordered: BTreeSet<SequenceNumber>,
}

impl Reader {
    pub fn new(reliability: Reliability) -> Self {
        Self { reliability, next_expected: 1, partial: BTreeMap::new(), delivered_unordered: BTreeSet::new() }
    }

    pub fn next_expected(&self) -> SequenceNumber {
        self.next_expected
    }

    /// Sequence numbers fully received, whether or not handed over yet.
    pub fn holds(&self, seq: SequenceNumber) -> bool {
        match self.reliability {
            Reliability::Reliable => seq < self.next_expected || self.partial.get(&seq).is_some_and(Partial::complete),
            Reliability::BestEffort => self.delivered_unordered.contains(&seq),
        }
    }

    /// Absorbs one DATA message; returns samples handed to the application.
    pub fn on_data(&mut self, msg: &DataMessage) -> Vec<SequenceNumber> {
        if self.reliability == Reliability::Reliable && msg.seq < self.next_expected {
            return Vec::new();
        }
        if self.delivered_unordered.contains(&msg.seq) {
            return Vec::new();
        }
        let entry = self
            .partial
            .entry(msg.seq)
            .or_insert_with(|| Partial { got: vec![false; msg.n_msgs as usize], received: 0 });
        if let Some(slot) = entry.got.get_mut(msg.msg_index as usize) {
            if !*slot {
                *slot = true;
                entry.received += 1;
            }
        }
        match self.reliability {
            Reliability::Reliable => self.drain_in_order(),
            Reliability::BestEffort => {
                if entry.complete() {
                    self.partial.remove(&msg.seq);
                    self.delivered_unordered.insert(msg.seq);
                    vec![msg.seq]
                } else {
                    Vec::new()
                }
            }
        }
    }

    pub fn on_heartbeat(&mut self, hb: &Heartbeat) -> HeartbeatResponse {
        let mut out = HeartbeatResponse::default();
        if self.reliability == Reliability::BestEffort {
            return out;
        }
        if hb.min > self.next_expected {
            for seq in self.next_expected..hb.min {
                if self.partial.remove(&seq).is_none_or(|p| !p.complete()) {
                    out.skipped.push(seq);
                } else {
                    out.delivered.push(seq);
                }
            }
            self.next_expected = hb.min;
            out.delivered.extend(self.drain_in_order());
        }

        let mut missing = Vec::new();
        for seq in hb.min.max(self.next_expected)..=hb.max {
            match self.partial.get(&seq) {
                Some(p) if p.complete() => {}
                Some(p) => {
                    let idx = p.got.iter().enumerate().filter(|(_, g)| !**g).map(|(i, _)| i as u32).collect();
                    missing.push((seq, idx));
                }
                None => missing.push((seq, Vec::new())),
            }
        }
        let base = match missing.first() {
            Some((seq, _)) => *seq,
            None => (hb.max + 1).max(self.next_expected),
        };
        out.acknack = Some(AckNack { base, missing, heartbeat_count: hb.count });
        out
    }

    fn drain_in_order(&mut self) -> Vec<SequenceNumber> {
        let mut out = Vec::new();
        while self.partial.get(&self.next_expected).is_some_and(Partial::complete) {
            self.partial.remove(&self.next_expected);
            out.push(self.next_expected);
            self.next_expected += 1;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(seq: u64) -> DataMessage {
        DataMessage { seq, msg_index: 0, n_msgs: 1, bytes: 100 }
    }

    fn hb(min: u64, max: u64) -> Heartbeat {
        Heartbeat { min, max, count: 1 }
    }

    #[test]
    fn nack_lists_gaps() {
        let mut r = Reader::new(Reliability::Reliable);
        for s in [1, 2, 4] {
            r.on_data(&data(s));
        }
        let an = r.on_heartbeat(&hb(1, 5)).acknack.unwrap();
        assert_eq!(an.bitmap(), vec![3, 5]);
        assert_eq!(an.base, 3);
    }

    #[test]
    fn positive_ack_when_complete() {
        let mut r = Reader::new(Reliability::Reliable);
        for s in 1..=5 {
            r.on_data(&data(s));
        }
        let an = r.on_heartbeat(&hb(1, 5)).acknack.unwrap();
        assert!(an.is_positive());
        assert_eq!(an.base, 6);
    }

    #[test]
    fn stale_heartbeat_gets_positive_ack() {
        let mut r = Reader::new(Reliability::Reliable);
        for s in 1..=8 {
            r.on_data(&data(s));
        }
        let an = r.on_heartbeat(&hb(1, 5)).acknack.unwrap();
        assert!(an.is_positive());
        assert_eq!(an.base, 9);
    }

    #[test]
    fn in_order_delivery_waits_for_gap() {
        let mut r = Reader::new(Reliability::Reliable);
        assert_eq!(r.on_data(&data(2)), Vec::<u64>::new());
        assert_eq!(r.on_data(&data(1)), vec![1, 2]);
        assert_eq!(r.on_data(&data(1)), Vec::<u64>::new());
    }

    #[test]
    fn fragmented_sample_needs_every_message() {
        let mut r = Reader::new(Reliability::Reliable);
        let m = |i| DataMessage { seq: 1, msg_index: i, n_msgs: 3, bytes: 10 };
        r.on_data(&m(0));
        r.on_data(&m(2));
        let an = r.on_heartbeat(&hb(1, 1)).acknack.unwrap();
        assert_eq!(an.missing, vec![(1, vec![1])]);
        assert_eq!(r.on_data(&m(1)), vec![1]);
    }

    #[test]
    fn heartbeat_above_next_expected_skips() {
        let mut r = Reader::new(Reliability::Reliable);
        r.on_data(&data(4));
        r.on_data(&data(6));
        let resp = r.on_heartbeat(&hb(4, 6));
        assert_eq!(resp.skipped, vec![1, 2, 3]);
        assert_eq!(resp.delivered, vec![4]);
        assert_eq!(resp.acknack.unwrap().bitmap(), vec![5]);
    }

    #[test]
    fn best_effort_delivers_on_completion() {
        let mut r = Reader::new(Reliability::BestEffort);
        assert_eq!(r.on_data(&data(3)), vec![3]);
        assert_eq!(r.on_data(&data(1)), vec![1]);
        assert_eq!(r.on_heartbeat(&hb(1, 3)).acknack, None);
    }
}
