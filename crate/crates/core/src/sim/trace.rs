/// One row of the event trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub time_s: f64,
    pub entity: &'static str,
    pub event: &'static str,
    pub seq: Option<u64>,
    pub bytes: Option<u64>,
    pub detail: String,
}

#[derive(Debug, Default)]
pub(crate) struct Tracer {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Tracer {
    pub(crate) fn new(enabled: bool) -> Self {
        Self { enabled, events: Vec::new() }
    }

    pub(crate) fn record(
        &mut self,
        time_s: f64,
        entity: &'static str,
        event: &'static str,
        seq: Option<u64>,
        bytes: Option<u64>,
        detail: impl FnOnce() -> String,
    ) {
        if self.enabled {
            self.events.push(TraceEvent { time_s, entity, event, seq, bytes, detail: detail() });
        }
    }

    pub(crate) fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}
