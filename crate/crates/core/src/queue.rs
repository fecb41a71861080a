//! Time-ordered event queue.
//!
//! Events dequeue in `(time, sequence)` order where `sequence` is a counter
//! incremented on every insertion, so simultaneous events come out in the
//! order they were scheduled.
//!
//! Besides the binary heap the queue has FIFO lanes. Messages sent with a
//! fixed delay arrive in the order they were sent, so a lane per delay keeps
//! them sorted for free. A lane push that would break the lane's order falls
//! back to the heap; the dequeue order is the same either way.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use thiserror::Error;

use crate::{BlockId, MinerId, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payload {
    Block(BlockId),
    Tx(TxId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    BlockMined(MinerId),
    Deliver { target: MinerId, payload: Payload },
    TxGenerated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub sequence: u64,
    pub kind: EventKind,
}

#[derive(Debug, Error, PartialEq)]
#[error("cannot schedule event at t={at} before current time t={now}")]
pub struct PastEvent {
    pub at: f64,
    pub now: f64,
}

struct Entry(Event);

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
    // Reversed: BinaryHeap is a max-heap.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.sequence.cmp(&self.0.sequence))
    }
}

#[derive(Default)]
pub struct EventQueue {
    heap: BinaryHeap<Entry>,
    lanes: Vec<VecDeque<Event>>,
    /// `(time, sequence)` of each lane's front, `INFINITY` when empty.
    fronts: Vec<(f64, u64)>,
    next_sequence: u64,
    now: f64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Time of the most recently dequeued event.
    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len() + self.lanes.iter().map(VecDeque::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn stamp(&mut self, at: f64, kind: EventKind) -> Result<Event, PastEvent> {
        if !(at >= self.now) {
            return Err(PastEvent { at, now: self.now });
        }
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        Ok(Event {
            time: at,
            sequence,
            kind,
        })
    }

    /// Schedules `kind` at absolute time `at`. Returns the assigned sequence
    /// number.
    pub fn schedule(&mut self, at: f64, kind: EventKind) -> Result<u64, PastEvent> {
        let event = self.stamp(at, kind)?;
        self.heap.push(Entry(event));
        Ok(event.sequence)
    }

    /// Like [`EventQueue::schedule`], but appends to FIFO lane `lane` when
    /// that keeps the lane sorted.
    pub fn schedule_in_lane(&mut self, lane: usize, at: f64, kind: EventKind) -> Result<u64, PastEvent> {
        let event = self.stamp(at, kind)?;
        if self.lanes.len() <= lane {
            self.lanes.resize_with(lane + 1, VecDeque::new);
            self.fronts.resize(lane + 1, (f64::INFINITY, u64::MAX));
        }
        let queue = &mut self.lanes[lane];
        match queue.back() {
            Some(back) if back.time > at => self.heap.push(Entry(event)),
            Some(_) => queue.push_back(event),
            None => {
                self.fronts[lane] = (event.time, event.sequence);
                queue.push_back(event);
            }
        }
        Ok(event.sequence)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<Event> {
        let mut lane = None;
        let mut best = (f64::INFINITY, u64::MAX);
        for (i, &front) in self.fronts.iter().enumerate() {
            if front.0 < best.0 || (front.0 == best.0 && front.1 < best.1) {
                best = front;
                lane = Some(i);
            }
        }
        let from_heap = match (self.heap.peek(), lane) {
            (None, None) => return None,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (Some(top), Some(_)) => (top.0.time, top.0.sequence) < best,
        };
        let event = if from_heap {
            self.heap.pop()?.0
        } else {
            let i = lane?;
            let event = self.lanes[i].pop_front()?;
            self.fronts[i] = self.lanes[i]
                .front()
                .map_or((f64::INFINITY, u64::MAX), |e| (e.time, e.sequence));
            event
        };
        self.now = event.time;
        Some(event)
    }

    /// Advances the clock without dequeuing anything. Later scheduling
    /// before `t` is then rejected.
    pub fn advance_to(&mut self, t: f64) -> Result<(), PastEvent> {
        if !(t >= self.now) {
            return Err(PastEvent { at: t, now: self.now });
        }
        self.now = t;
        Ok(())
    }
}
