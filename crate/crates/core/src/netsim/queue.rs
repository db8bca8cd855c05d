use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use super::{NodeId, Payload};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EventKind {
    // Declaration order is the tie-break rank at equal timestamps.
    DeadlineFire,
    Deliver,
    AdversaryAction,
}

#[derive(Clone, Debug)]
pub struct Event {
    pub at: u64,
    pub kind: EventKind,
    pub sender: NodeId,
    pub receiver: NodeId,
    pub seq: u64,
    pub payload: Payload,
}

impl Event {
    fn key(&self) -> (u64, EventKind, NodeId, u64) {
        (self.at, self.kind, self.sender, self.seq)
    }
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Min-queue of events ordered by `(time, kind, sender, sequence)`.
#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Schedules an event, stamping it with the next sequence number.
    pub fn schedule(
        &mut self,
        at: u64,
        kind: EventKind,
        sender: NodeId,
        receiver: NodeId,
        payload: Payload,
    ) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.push(Event {
            at,
            kind,
            sender,
            receiver,
            seq,
            payload,
        });
        seq
    }

    pub fn push(&mut self, event: Event) {
        self.next_seq = self.next_seq.max(event.seq + 1);
        self.heap.push(Reverse(event));
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn advance(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }
}

/// Pops the globally minimal event; `None` signals the simulation is complete.
pub fn advance(queue: &mut EventQueue) -> Option<Event> {
    queue.advance()
}
