use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Discrete-event queue. Events pop in `(tick, actor, enqueue order)` order,
/// so delivery is FIFO per destination and ties break the same way every run.
#[derive(Debug)]
pub struct Scheduler<E> {
    heap: BinaryHeap<Reverse<Entry<E>>>,
    seq: u64,
    now: u64,
}

#[derive(Debug)]
struct Entry<E> {
    tick: u64,
    actor: u8,
    seq: u64,
    event: E,
}

impl<E> Entry<E> {
    fn key(&self) -> (u64, u8, u64) {
        (self.tick, self.actor, self.seq)
    }
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.key() == other.key()
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key().cmp(&other.key())
    }
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Scheduler {
            heap: BinaryHeap::new(),
            seq: 0,
            now: 0,
        }
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    /// Enqueues `event` for `actor` at `now + delay`.
    pub fn schedule(&mut self, delay: u64, actor: u8, event: E) {
        let entry = Entry {
            tick: self.now + delay,
            actor,
            seq: self.seq,
            event,
        };
        self.seq += 1;
        self.heap.push(Reverse(entry));
    }

    pub fn pop(&mut self) -> Option<(u64, u8, E)> {
        let Reverse(e) = self.heap.pop()?;
        self.now = e.tick;
        Some((e.tick, e.actor, e.event))
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_by_tick_then_actor_then_enqueue() {
        let mut s = Scheduler::new();
        s.schedule(2, 0, "c0-late");
        s.schedule(1, 2, "dev-a");
        s.schedule(1, 1, "relay");
        s.schedule(1, 2, "dev-b");
        s.schedule(1, 0, "ctrl");
        let order: Vec<_> = std::iter::from_fn(|| s.pop().map(|(_, _, e)| e)).collect();
        assert_eq!(order, ["ctrl", "relay", "dev-a", "dev-b", "c0-late"]);
    }

    #[test]
    fn delay_is_relative_to_last_popped_tick() {
        let mut s = Scheduler::new();
        s.schedule(5, 0, 1);
        assert_eq!(s.pop().map(|(t, ..)| t), Some(5));
        s.schedule(1, 0, 2);
        assert_eq!(s.pop(), Some((6, 0, 2)));
        assert!(s.is_empty());
    }
}
