//! Three-queue output ports with SP, WFQ and DRR service.

use alloc::collections::VecDeque;

use crate::topology::{NodeScheduling, Policy, NUM_QUEUES};

/// DRR base quantum in bits. With weights of at least 10 every queue's
/// quantum (`weight * 170`) covers the largest 1700-bit packet.
pub const DRR_BASE_QUANTUM: f64 = 170.0;

/// A packet waiting in an output queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Queued {
    /// Caller-side packet handle.
    pub packet: usize,
    pub size: f64,
    /// WFQ virtual start tag; zero for other disciplines.
    pub start_tag: f64,
    /// WFQ virtual finish tag; zero for other disciplines.
    pub finish_tag: f64,
}

/// A dequeued packet and the queue it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dequeued {
    pub queue: usize,
    pub item: Queued,
}

/// Start-time fair queueing bookkeeping: tags are assigned on arrival,
/// service picks the smallest finish tag, and virtual time follows the
/// start tag of the packet in service.
#[derive(Debug, Clone, PartialEq)]
pub struct WfqState {
    shares: [f64; NUM_QUEUES],
    virtual_time: f64,
    last_finish: [f64; NUM_QUEUES],
}

impl WfqState {
    pub fn new(weights: [u32; NUM_QUEUES]) -> Self {
        WfqState {
            shares: weights.map(|w| w as f64 / 100.0),
            virtual_time: 0.0,
            last_finish: [0.0; NUM_QUEUES],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrrState {
    quanta: [f64; NUM_QUEUES],
    deficit: [f64; NUM_QUEUES],
    current: usize,
    /// Whether `current` already received its quantum on this visit.
    granted: bool,
}

impl DrrState {
    pub fn new(weights: [u32; NUM_QUEUES]) -> Self {
        DrrState {
            quanta: weights.map(|w| w as f64 * DRR_BASE_QUANTUM),
            deficit: [0.0; NUM_QUEUES],
            current: 0,
            granted: false,
        }
    }

    pub fn deficits(&self) -> [f64; NUM_QUEUES] {
        self.deficit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Discipline {
    StrictPriority,
    Wfq(WfqState),
    Drr(DrrState),
}

impl Discipline {
    pub fn for_node(s: &NodeScheduling) -> Self {
        match s.policy {
            Policy::Sp => Discipline::StrictPriority,
            Policy::Wfq => Discipline::Wfq(WfqState::new(s.weights)),
            Policy::Drr => Discipline::Drr(DrrState::new(s.weights)),
        }
    }
}

/// An output port: three FIFO queues sharing one transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPort {
    queues: [VecDeque<Queued>; NUM_QUEUES],
    buffer_size: usize,
    discipline: Discipline,
}

impl OutputPort {
    pub fn new(discipline: Discipline, buffer_size: usize) -> Self {
        OutputPort { queues: Default::default(), buffer_size, discipline }
    }

    pub fn discipline(&self) -> &Discipline {
        &self.discipline
    }

    pub fn queue_len(&self, queue: usize) -> usize {
        self.queues[queue].len()
    }

    pub fn backlog(&self) -> usize {
        self.queues.iter().map(VecDeque::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.queues.iter().all(VecDeque::is_empty)
    }

    /// Appends a packet to `queue`. Returns `false` (packet dropped) when the
    /// queue already holds `buffer_size` packets.
    pub fn enqueue(&mut self, queue: usize, packet: usize, size: f64) -> bool {
        if self.queues[queue].len() >= self.buffer_size {
            return false;
        }
        let (start_tag, finish_tag) = match &mut self.discipline {
            Discipline::Wfq(w) => {
                let start = w.virtual_time.max(w.last_finish[queue]);
                let finish = start + size / w.shares[queue];
                w.last_finish[queue] = finish;
                (start, finish)
            }
            _ => (0.0, 0.0),
        };
        self.queues[queue].push_back(Queued { packet, size, start_tag, finish_tag });
        true
    }

    /// Next packet to transmit under the port's discipline.
    pub fn dequeue(&mut self) -> Option<Dequeued> {
        match self.discipline {
            Discipline::StrictPriority => self.sp_dequeue(),
            Discipline::Wfq(_) => self.wfq_dequeue(),
            Discipline::Drr(_) => self.drr_dequeue(),
        }
    }

    /// Head of the lowest-index nonempty queue.
    pub fn sp_dequeue(&mut self) -> Option<Dequeued> {
        let queue = self.queues.iter().position(|q| !q.is_empty())?;
        let item = self.queues[queue].pop_front()?;
        Some(Dequeued { queue, item })
    }

    /// Head packet with the smallest finish tag; ties go to the lower queue.
    pub fn wfq_dequeue(&mut self) -> Option<Dequeued> {
        let mut best: Option<(usize, f64)> = None;
        for (i, q) in self.queues.iter().enumerate() {
            if let Some(head) = q.front() {
                if best.is_none_or(|(_, f)| head.finish_tag < f) {
                    best = Some((i, head.finish_tag));
                }
            }
        }
        let (queue, _) = best?;
        let item = self.queues[queue].pop_front()?;
        if let Discipline::Wfq(w) = &mut self.discipline {
            w.virtual_time = item.start_tag;
        }
        Some(Dequeued { queue, item })
    }

    /// Deficit round robin over the nonempty queues.
    pub fn drr_dequeue(&mut self) -> Option<Dequeued> {
        if self.is_empty() {
            return None;
        }
        let Discipline::Drr(d) = &mut self.discipline else {
            return None;
        };
        loop {
            let i = d.current;
            let q = &mut self.queues[i];
            match q.front() {
                None => {
                    d.deficit[i] = 0.0;
                    d.current = (i + 1) % NUM_QUEUES;
                    d.granted = false;
                }
                Some(head) => {
                    if !d.granted {
                        d.deficit[i] += d.quanta[i];
                        d.granted = true;
                    }
                    if head.size <= d.deficit[i] {
                        d.deficit[i] -= head.size;
                        let item = q.pop_front()?;
                        if q.is_empty() {
                            d.deficit[i] = 0.0;
                            d.current = (i + 1) % NUM_QUEUES;
                            d.granted = false;
                        }
                        return Some(Dequeued { queue: i, item });
                    }
                    d.current = (i + 1) % NUM_QUEUES;
                    d.granted = false;
                }
            }
        }
    }
}
