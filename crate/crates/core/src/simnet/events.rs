//! Discrete-event queue and JSON-lines transcript.
//!
//! Events run in `(time, phase, seq)` order. The phase puts every event kind
//! at a fixed slot within one instant: blocks first, then prover cut-offs,
//! then message deliveries, and the verifier's deadline last. That makes an
//! arrival exactly at the deadline count as on time. Within one phase the
//! order is FIFO by insertion.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Block = 0,
    Cutoff = 1,
    Delivery = 2,
    Deadline = 3,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<P> {
    pub time_ns: u64,
    pub phase: Phase,
    pub seq: u64,
    pub payload: P,
}

struct Slot<P>(Event<P>);

impl<P> PartialEq for Slot<P> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}
impl<P> Eq for Slot<P> {}
impl<P> PartialOrd for Slot<P> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<P> Ord for Slot<P> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}
impl<P> Slot<P> {
    fn key(&self) -> (u64, Phase, u64) {
        (self.0.time_ns, self.0.phase, self.0.seq)
    }
}

pub struct Scheduler<P> {
    heap: BinaryHeap<Reverse<Slot<P>>>,
    next_seq: u64,
    now_ns: u64,
}

impl<P> Default for Scheduler<P> {
    fn default() -> Self {
        Scheduler {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now_ns: 0,
        }
    }
}

impl<P> Scheduler<P> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now_ns(&self) -> u64 {
        self.now_ns
    }

    /// Schedule at an absolute time. Times in the past are clamped to now.
    pub fn at(&mut self, time_ns: u64, phase: Phase, payload: P) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Slot(Event {
            time_ns: time_ns.max(self.now_ns),
            phase,
            seq,
            payload,
        })));
    }

    pub fn after(&mut self, delay_ns: u64, phase: Phase, payload: P) {
        self.at(self.now_ns.saturating_add(delay_ns), phase, payload);
    }

    fn pop(&mut self) -> Option<Event<P>> {
        let Reverse(Slot(ev)) = self.heap.pop()?;
        self.now_ns = ev.time_ns;
        Some(ev)
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub time_ns: u64,
    pub kind: String,
    pub detail: serde_json::Value,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn record(&mut self, time_ns: u64, kind: &str, detail: serde_json::Value) {
        self.entries.push(TranscriptEntry {
            time_ns,
            kind: kind.to_string(),
            detail,
        });
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entry serializes"));
            out.push('\n');
        }
        out
    }
}

pub trait EventHandler<P> {
    fn handle(
        &mut self,
        event: Event<P>,
        scheduler: &mut Scheduler<P>,
        transcript: &mut Transcript,
    );
}

/// Drain the queue through `handler`, returning what it recorded.
pub fn event_loop<P, H: EventHandler<P>>(
    mut scheduler: Scheduler<P>,
    handler: &mut H,
) -> Transcript {
    let mut transcript = Transcript::default();
    while let Some(ev) = scheduler.pop() {
        handler.handle(ev, &mut scheduler, &mut transcript);
    }
    transcript
}

/// Messages sent to a verifier that closes at `deadline_ns`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DeadlineMsg<M> {
    Send { from: u32, message: M },
    Deliver { from: u32, message: M },
    Deadline,
}

/// Deliver every `(from, send_time, message)` after `delay_ns` and keep the
/// ones that arrive no later than `deadline_ns`.
pub struct DeadlineVerifier<M> {
    delay_ns: u64,
    closed: bool,
    pub accepted: Vec<(u32, M)>,
    pub late: Vec<(u32, M)>,
}

impl<M: Clone> EventHandler<DeadlineMsg<M>> for DeadlineVerifier<M> {
    fn handle(
        &mut self,
        event: Event<DeadlineMsg<M>>,
        scheduler: &mut Scheduler<DeadlineMsg<M>>,
        transcript: &mut Transcript,
    ) {
        let now = event.time_ns;
        match event.payload {
            DeadlineMsg::Send { from, message } => {
                transcript.record(now, "message-sent", serde_json::json!({ "from": from }));
                scheduler.after(
                    self.delay_ns,
                    Phase::Delivery,
                    DeadlineMsg::Deliver { from, message },
                );
            }
            DeadlineMsg::Deliver { from, message } => {
                let on_time = !self.closed;
                transcript.record(
                    now,
                    "message-delivered",
                    serde_json::json!({ "from": from, "included": on_time }),
                );
                if on_time {
                    self.accepted.push((from, message));
                } else {
                    self.late.push((from, message));
                }
            }
            DeadlineMsg::Deadline => {
                self.closed = true;
                transcript.record(
                    now,
                    "timer-fired",
                    serde_json::json!({ "timer": "deadline" }),
                );
            }
        }
    }
}

pub fn run_deadline<M: Clone>(
    deadline_ns: u64,
    delay_ns: u64,
    sends: Vec<(u32, u64, M)>,
) -> (DeadlineVerifier<M>, Transcript) {
    let mut scheduler = Scheduler::new();
    for (from, at, message) in sends {
        scheduler.at(at, Phase::Cutoff, DeadlineMsg::Send { from, message });
    }
    scheduler.at(deadline_ns, Phase::Deadline, DeadlineMsg::Deadline);
    let mut v = DeadlineVerifier {
        delay_ns,
        closed: false,
        accepted: Vec::new(),
        late: Vec::new(),
    };
    let transcript = event_loop(scheduler, &mut v);
    (v, transcript)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SEC: u64 = 1_000_000_000;

    #[test]
    fn boundary_arrival_is_included() {
        let (t, d) = (60 * SEC, 2 * SEC);
        let (v, _) = run_deadline(t, d, vec![(1, t - d, "on-time"), (2, t - d / 2, "late")]);
        assert_eq!(v.accepted, vec![(1, "on-time")]);
        assert_eq!(v.late, vec![(2, "late")]);
    }

    #[test]
    fn fifo_within_phase() {
        let (v, tr) = run_deadline(10, 0, vec![(3, 5, 'a'), (1, 5, 'b'), (2, 5, 'c')]);
        let order: Vec<u32> = v.accepted.iter().map(|(p, _)| *p).collect();
        assert_eq!(order, vec![3, 1, 2]);
        assert!(tr.entries.windows(2).all(|w| w[0].time_ns <= w[1].time_ns));
    }

    #[test]
    fn replay_is_identical() {
        let sends = || vec![(1, 7 * SEC, 1u8), (2, 9 * SEC, 2u8), (3, 3 * SEC, 3u8)];
        let a = run_deadline(10 * SEC, 2 * SEC, sends()).1.to_jsonl();
        let b = run_deadline(10 * SEC, 2 * SEC, sends()).1.to_jsonl();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 7);
    }
}
