//! DataWriter side of the reliability protocol.

use std::collections::{BTreeMap, VecDeque};

use super::reader::AckNack;
use super::types::{BlockedPublish, History, QosProfile, Reliability, SequenceNumber};

/// One RTPS DATA message (a whole sample or one slice of it).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataMessage {
    pub seq: SequenceNumber,
    pub msg_index: u32,
    pub n_msgs: u32,
    pub bytes: u64,
}

/// Advertises the sequence range currently held by the writer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Heartbeat {
    pub min: SequenceNumber,
    pub max: SequenceNumber,
    pub count: u32,
}

#[derive(Debug, Clone)]
pub struct CacheChange {
    pub sample_id: u64,
    /// Heartbeat count at the last (re)send of each message. A nack answering
    /// heartbeat `c` only covers messages sent before it, i.e. `epoch < c`.
    sent_epoch: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PublishOutcome {
    /// Entered the cache; `messages` go out immediately.
    Stored { seq: SequenceNumber, evicted: Option<(SequenceNumber, u64)>, messages: Vec<DataMessage> },
    /// Best-effort: sent without caching.
    Sent { seq: SequenceNumber, messages: Vec<DataMessage> },
    Deferred,
    Dropped,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AckNackResult {
    /// `(seq, sample_id)` purged by the acknowledgment.
    pub acked: Vec<(SequenceNumber, u64)>,
    pub retransmit: Vec<DataMessage>,
    /// Nacked sequence numbers no longer (or never) in the cache.
    pub unknown: Vec<SequenceNumber>,
    /// Nacked messages already resent after the answered heartbeat.
    pub suppressed: u64,
    /// Deferred samples that entered the freed cache slots.
    pub admitted: Vec<(SequenceNumber, u64)>,
    pub admitted_messages: Vec<DataMessage>,
}

#[derive(Debug)]
pub struct Writer {
    reliability: Reliability,
    history: History,
    slots: Option<u64>,
    blocked: BlockedPublish,
    message_sizes: Vec<u64>,
    cache: BTreeMap<SequenceNumber, CacheChange>,
    deferred: VecDeque<u64>,
    next_seq: SequenceNumber,
    hb_count: u32,
}

impl Writer {
    pub fn new(qos: &QosProfile, message_sizes: Vec<u64>) -> Self {
        Self {
            reliability: qos.reliability,
            history: qos.history,
            slots: qos.cache_slots(),
            blocked: qos.blocked_publish,
            message_sizes,
            cache: BTreeMap::new(),
            deferred: VecDeque::new(),
            next_seq: 1,
            hb_count: 0,
        }
    }

    pub fn cache_len(&self) -> usize {
        self.cache.len()
    }

    pub fn deferred_len(&self) -> usize {
        self.deferred.len()
    }

    pub fn cached_seqs(&self) -> impl Iterator<Item = SequenceNumber> + '_ {
        self.cache.keys().copied()
    }

    pub fn is_idle(&self) -> bool {
        self.cache.is_empty() && self.deferred.is_empty()
    }

    fn full(&self) -> bool {
        self.slots.is_some_and(|s| self.cache.len() as u64 >= s)
    }

    pub fn publish(&mut self, sample_id: u64) -> PublishOutcome {
        if self.reliability == Reliability::BestEffort {
            let seq = self.take_seq();
            let messages = self.all_messages(seq);
            return PublishOutcome::Sent { seq, messages };
        }
        let mut evicted = None;
        if self.full() || !self.deferred.is_empty() {
            match (self.history, self.blocked) {
                (History::KeepLast(_), _) => {
                    if let Some((seq, change)) = self.cache.pop_first() {
                        evicted = Some((seq, change.sample_id));
                    }
                }
                (History::KeepAll, BlockedPublish::Defer) => {
                    self.deferred.push_back(sample_id);
                    return PublishOutcome::Deferred;
                }
                (History::KeepAll, BlockedPublish::Drop) => return PublishOutcome::Dropped,
            }
        }
        let (seq, messages) = self.store(sample_id);
        PublishOutcome::Stored { seq, evicted, messages }
    }

    pub fn heartbeat(&mut self) -> Option<Heartbeat> {
        if self.reliability == Reliability::BestEffort {
            return None;
        }
        let min = *self.cache.keys().next()?;
        let max = *self.cache.keys().next_back()?;
        self.hb_count += 1;
        Some(Heartbeat { min, max, count: self.hb_count })
    }

    pub fn handle_acknack(&mut self, an: &AckNack) -> AckNackResult {
        let mut out = AckNackResult::default();
        while let Some(entry) = self.cache.first_entry() {
            if *entry.key() >= an.base {
                break;
            }
            let (seq, change) = entry.remove_entry();
            out.acked.push((seq, change.sample_id));
        }

        let n_msgs = self.message_sizes.len() as u32;
        for (seq, msgs) in &an.missing {
            let Some(change) = self.cache.get_mut(seq) else {
                out.unknown.push(*seq);
                continue;
            };
            let wanted: Vec<u32> = if msgs.is_empty() { (0..n_msgs).collect() } else { msgs.clone() };
            for m in wanted {
                let Some(epoch) = change.sent_epoch.get_mut(m as usize) else { continue };
                if *epoch >= an.heartbeat_count {
                    out.suppressed += 1;
                    continue;
                }
                *epoch = self.hb_count;
                out.retransmit.push(DataMessage { seq: *seq, msg_index: m, n_msgs, bytes: self.message_sizes[m as usize] });
            }
        }

        while !self.full() {
            let Some(sample_id) = self.deferred.pop_front() else { break };
            let (seq, messages) = self.store(sample_id);
            out.admitted.push((seq, sample_id));
            out.admitted_messages.extend(messages);
        }
        out
    }

    fn take_seq(&mut self) -> SequenceNumber {
        let seq = self.next_seq;
        self.next_seq += 1;
        seq
    }

    fn store(&mut self, sample_id: u64) -> (SequenceNumber, Vec<DataMessage>) {
        let seq = self.take_seq();
        let epochs = vec![self.hb_count; self.message_sizes.len()];
        self.cache.insert(seq, CacheChange { sample_id, sent_epoch: epochs });
        (seq, self.all_messages(seq))
    }

    fn all_messages(&self, seq: SequenceNumber) -> Vec<DataMessage> {
        let n_msgs = self.message_sizes.len() as u32;
        self.message_sizes
            .iter()
            .enumerate()
            .map(|(i, &bytes)| DataMessage { seq, msg_index: i as u32, n_msgs, bytes })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qos(cap: u64, history: History) -> QosProfile {
        QosProfile { history_cache_capacity: Some(cap), history, ..QosProfile::middleware_default() }
    }

    fn fill(w: &mut Writer, n: u64) {
        for i in 0..n {
            w.publish(i);
        }
    }

    #[test]
    fn publish_into_empty_cache() {
        let mut w = Writer::new(&qos(10, History::KeepAll), vec![100]);
        assert!(matches!(w.publish(0), PublishOutcome::Stored { seq: 1, evicted: None, .. }));
        assert_eq!(w.cache_len(), 1);
    }

    #[test]
    fn keep_all_full_cache_defers() {
        let mut w = Writer::new(&qos(10, History::KeepAll), vec![100]);
        fill(&mut w, 10);
        assert_eq!(w.publish(10), PublishOutcome::Deferred);
        assert_eq!((w.cache_len(), w.deferred_len()), (10, 1));
    }

    #[test]
    fn keep_all_drop_switch() {
        let mut q = qos(10, History::KeepAll);
        q.blocked_publish = BlockedPublish::Drop;
        let mut w = Writer::new(&q, vec![100]);
        fill(&mut w, 10);
        assert_eq!(w.publish(10), PublishOutcome::Dropped);
        assert_eq!((w.cache_len(), w.deferred_len()), (10, 0));
    }

    #[test]
    fn keep_last_evicts_oldest() {
        let mut w = Writer::new(&qos(400, History::KeepLast(10)), vec![100]);
        fill(&mut w, 10);
        match w.publish(10) {
            PublishOutcome::Stored { seq: 11, evicted: Some((1, 0)), .. } => {}
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(w.cache_len(), 10);
        assert_eq!(w.cached_seqs().next(), Some(2));
    }

    #[test]
    fn heartbeat_spans_cache() {
        let mut w = Writer::new(&qos(10, History::KeepAll), vec![100]);
        assert_eq!(w.heartbeat(), None);
        fill(&mut w, 7);
        // ack 1..2, leaving 3..7
        w.handle_acknack(&AckNack { base: 3, missing: vec![], heartbeat_count: 0 });
        let hb = w.heartbeat().unwrap();
        assert_eq!((hb.min, hb.max, hb.count), (3, 7, 1));
    }

    #[test]
    fn heartbeat_with_gaps_in_cache() {
        let mut w = Writer::new(&qos(10, History::KeepLast(3)), vec![100]);
        fill(&mut w, 7); // KEEP_LAST keeps 5..7
        let hb = w.heartbeat().unwrap();
        assert_eq!((hb.min, hb.max), (5, 7));
    }

    #[test]
    fn positive_ack_empties_cache_and_admits_deferred() {
        let mut w = Writer::new(&qos(5, History::KeepAll), vec![100]);
        fill(&mut w, 7);
        let res = w.handle_acknack(&AckNack { base: 6, missing: vec![], heartbeat_count: 1 });
        assert_eq!(res.acked.len(), 5);
        assert_eq!(res.admitted, vec![(6, 5), (7, 6)]);
        assert_eq!((w.cache_len(), w.deferred_len()), (2, 0));
    }

    #[test]
    fn nack_resends_missing_messages_in_order() {
        let mut w = Writer::new(&qos(10, History::KeepAll), vec![1472, 1472, 100]);
        fill(&mut w, 5);
        let hb = w.heartbeat().unwrap();
        let an = AckNack { base: 3, missing: vec![(3, vec![1]), (5, vec![])], heartbeat_count: hb.count };
        let res = w.handle_acknack(&an);
        let sent: Vec<(u64, u32)> = res.retransmit.iter().map(|m| (m.seq, m.msg_index)).collect();
        assert_eq!(sent, vec![(3, 1), (5, 0), (5, 1), (5, 2)]);
        assert_eq!(w.cache_len(), 3);
    }

    #[test]
    fn nack_for_unknown_seq_is_ignored() {
        let mut w = Writer::new(&qos(10, History::KeepAll), vec![100]);
        fill(&mut w, 2);
        let res = w.handle_acknack(&AckNack { base: 1, missing: vec![(9, vec![])], heartbeat_count: 1 });
        assert_eq!(res.unknown, vec![9]);
        assert!(res.retransmit.is_empty());
    }

    #[test]
    fn nack_answering_older_heartbeat_is_suppressed() {
        let mut w = Writer::new(&qos(10, History::KeepAll), vec![100]);
        fill(&mut w, 1);
        let hb1 = w.heartbeat().unwrap();
        let hb2 = w.heartbeat().unwrap();
        let an1 = AckNack { base: 1, missing: vec![(1, vec![])], heartbeat_count: hb1.count };
        assert_eq!(w.handle_acknack(&an1).retransmit.len(), 1);
        // resent after hb2 went out, so hb2's nack cannot have seen it
        let an2 = AckNack { base: 1, missing: vec![(1, vec![])], heartbeat_count: hb2.count };
        let res = w.handle_acknack(&an2);
        assert!(res.retransmit.is_empty());
        assert_eq!(res.suppressed, 1);
        let hb3 = w.heartbeat().unwrap();
        let an3 = AckNack { base: 1, missing: vec![(1, vec![])], heartbeat_count: hb3.count };
        assert_eq!(w.handle_acknack(&an3).retransmit.len(), 1);
    }

    #[test]
    fn best_effort_never_caches() {
        let q = QosProfile { reliability: Reliability::BestEffort, ..QosProfile::middleware_default() };
        let mut w = Writer::new(&q, vec![100]);
        assert!(matches!(w.publish(0), PublishOutcome::Sent { seq: 1, .. }));
        assert!(w.is_idle());
        assert_eq!(w.heartbeat(), None);
    }
}
