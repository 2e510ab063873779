use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::reader::AckNack;
use super::writer::{DataMessage, Heartbeat};

/// Tie-break class at equal timestamps: link arrivals, then publishes, then heartbeat timers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum EventClass {
    Delivery = 0,
    Publish = 1,
    HeartbeatTick = 2,
}

#[derive(Debug, Clone)]
pub(crate) enum EventKind {
    DataArrival(DataMessage),
    HeartbeatArrival(Heartbeat),
    AckNackArrival(AckNack),
    Publish { sample_id: u64 },
    HeartbeatTick,
}

impl EventKind {
    fn class(&self) -> EventClass {
        match self {
            EventKind::DataArrival(_) | EventKind::HeartbeatArrival(_) | EventKind::AckNackArrival(_) => {
                EventClass::Delivery
            }
            EventKind::Publish { .. } => EventClass::Publish,
            EventKind::HeartbeatTick => EventClass::HeartbeatTick,
        }
    }
}

#[derive(Debug)]
struct Entry {
    time_s: f64,
    class: EventClass,
    order: u64,
    kind: EventKind,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time_s
            .total_cmp(&self.time_s)
            .then(other.class.cmp(&self.class))
            .then(other.order.cmp(&self.order))
    }
}

/// Totally ordered future-event list.
#[derive(Debug, Default)]
pub(crate) struct EventQueue {
    heap: BinaryHeap<Entry>,
    next_order: u64,
}

impl EventQueue {
    pub(crate) fn push(&mut self, time_s: f64, kind: EventKind) {
        let class = kind.class();
        self.heap.push(Entry { time_s, class, order: self.next_order, kind });
        self.next_order += 1;
    }

    pub(crate) fn pop(&mut self) -> Option<(f64, EventKind)> {
        self.heap.pop().map(|e| (e.time_s, e.kind))
    }

    pub(crate) fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time_s)
    }
}
