//! Explicit-stack depth-first walker over caps.
//!
//! A node is a cap `members`; its children add one candidate with a code
//! above the last chosen one, so every cap is reached once, as its sorted
//! code sequence, and nodes are visited in lexicographic order. Each frame
//! owns the exact candidate mask of its node; the walk state is the chosen
//! path plus one cursor per frame, which is all a checkpoint needs.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::bits::CodeMask;
use crate::rules::CapRule;
use crate::space::CodeSpace;

/// How ties with the incumbent are treated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Only strictly larger caps are worth reaching.
    Improve,
    /// Caps as large as the incumbent are still reached; used when complete
    /// caps are being enumerated.
    KeepTies,
}

pub(crate) struct Ctx {
    pub space: Arc<CodeSpace>,
    pub rule: Box<dyn CapRule>,
    pub size_bound: usize,
    pub policy: Policy,
    pub floor: usize,
}

impl Ctx {
    fn threshold(&self, best: usize) -> usize {
        let t = match self.policy {
            Policy::Improve => best + 1,
            Policy::KeepTies => best,
        };
        t.max(self.floor)
    }

    /// Candidate mask after `members`' last entry joined.
    pub fn child_mask(&self, parent: &CodeMask, members: &[u32], out: &mut CodeMask) {
        out.copy_from(parent);
        self.rule.forbid(&self.space, members, out);
    }
}

/// Best cap found so far: size and sorted codes.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Found {
    pub size: usize,
    pub codes: Vec<u32>,
}

/// Statistics and incumbent of a finished or partial walk. Merging is
/// commutative and associative, so any schedule yields the same total.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub found: Option<Found>,
    pub nodes: u64,
    pub complete: u64,
}

impl Tally {
    pub fn merge(&mut self, other: Tally) {
        self.nodes += other.nodes;
        self.complete += other.complete;
        self.offer(other.found);
    }

    fn offer(&mut self, cand: Option<Found>) {
        let Some(cand) = cand else { return };
        let better = match &self.found {
            None => true,
            Some(cur) => cand.size > cur.size || (cand.size == cur.size && cand.codes < cur.codes),
        };
        if better {
            self.found = Some(cand);
        }
    }
}

/// Why a run stopped before exhausting its space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Interrupted,
    NodeLimit,
    Paused,
}

/// Shared stop switch and node accounting for one run.
#[derive(Debug)]
pub struct SearchControl {
    stop: AtomicBool,
    nodes: AtomicU64,
    node_limit: Option<u64>,
    pause_after: Option<u64>,
    poll_every: u64,
    reason: Mutex<Option<StopReason>>,
}

impl Default for SearchControl {
    fn default() -> Self {
        SearchControl::new(None, None)
    }
}

impl SearchControl {
    pub fn new(node_limit: Option<u64>, pause_after: Option<u64>) -> Self {
        // Small limits are honored exactly; large ones within a poll interval.
        let smallest = node_limit.into_iter().chain(pause_after).min();
        let poll_every = match smallest {
            Some(l) if l < POLL_EVERY * 64 => 1,
            _ => POLL_EVERY,
        };
        SearchControl {
            stop: AtomicBool::new(false),
            nodes: AtomicU64::new(0),
            node_limit,
            pause_after,
            poll_every,
            reason: Mutex::new(None),
        }
    }

    /// Asks every worker to stop at its next poll.
    pub fn interrupt(&self) {
        self.stop_with(StopReason::Interrupted);
    }

    fn stop_with(&self, reason: StopReason) {
        let mut slot = self.reason.lock().expect("stop reason lock");
        if slot.is_none() {
            *slot = Some(reason);
        }
        self.stop.store(true, Ordering::SeqCst);
    }

    pub fn stopped(&self) -> bool {
        self.stop.load(Ordering::Relaxed)
    }

    pub fn reason(&self) -> Option<StopReason> {
        *self.reason.lock().expect("stop reason lock")
    }

    /// Adds `delta` nodes to the shared count; true if the walk must stop.
    fn account(&self, delta: u64) -> bool {
        let total = self.nodes.fetch_add(delta, Ordering::Relaxed) + delta;
        if self.node_limit.is_some_and(|l| total >= l) {
            self.stop_with(StopReason::NodeLimit);
        } else if self.pause_after.is_some_and(|l| total >= l) {
            self.stop_with(StopReason::Paused);
        }
        self.stopped()
    }
}

/// Serializable walker position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkState {
    /// Codes chosen below the start node.
    pub path: Vec<u32>,
    /// Next candidate code to try, one per frame (start node first).
    pub cursors: Vec<u32>,
    pub best: usize,
    pub tally: Tally,
}

struct Frame {
    mask: CodeMask,
    next: u32,
    remaining: usize,
}

/// A depth-2 subtree handed to a worker.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Emitted {
    pub path: Vec<u32>,
    pub best: usize,
}

pub(crate) enum Walked {
    Done,
    Stopped,
}

const POLL_EVERY: u64 = 1 << 10;

pub(crate) struct Walker {
    ctx: Arc<Ctx>,
    members: Vec<u32>,
    start_len: usize,
    frames: Vec<Frame>,
    spare: Vec<CodeMask>,
    best: usize,
    tally: Tally,
    /// Depth below the start node at which subtrees are emitted instead of
    /// entered.
    split_at: Option<usize>,
    pub emitted: Vec<Emitted>,
    /// Set to the size of the node just visited when it is complete.
    pub last_complete: Option<usize>,
    unpolled: u64,
}

impl Walker {
    /// A walker positioned on `members` with candidate mask `mask`; children
    /// start at code `min_child`. The start node is visited immediately.
    pub fn start(
        ctx: Arc<Ctx>,
        members: Vec<u32>,
        mask: CodeMask,
        min_child: u32,
        best: usize,
    ) -> Self {
        let mut w = Walker {
            ctx,
            start_len: members.len(),
            members,
            frames: Vec::new(),
            spare: Vec::new(),
            best,
            tally: Tally::default(),
            split_at: None,
            emitted: Vec::new(),
            last_complete: None,
            unpolled: 0,
        };
        w.enter(mask, min_child);
        w
    }

    /// Rebuilds a walker from a saved position without re-counting nodes.
    pub fn resume(ctx: Arc<Ctx>, members: Vec<u32>, mask: CodeMask, state: WalkState) -> Self {
        let mut w = Walker {
            ctx,
            start_len: members.len(),
            members,
            frames: Vec::new(),
            spare: Vec::new(),
            best: state.best,
            tally: state.tally,
            split_at: None,
            emitted: Vec::new(),
            last_complete: None,
            unpolled: 0,
        };
        let mut cursors = state.cursors.into_iter();
        let first = cursors.next().unwrap_or(u32::MAX);
        w.push_frame(mask, first);
        for (code, cursor) in state.path.into_iter().zip(cursors) {
            w.members.push(code);
            let mut child = CodeMask::empty(0);
            w.ctx.child_mask(
                &w.frames.last().expect("frame").mask,
                &w.members,
                &mut child,
            );
            w.push_frame(child, cursor);
        }
        w
    }

    pub fn with_split(mut self, depth: usize) -> Self {
        self.split_at = Some(depth);
        self
    }

    pub fn state(&self) -> WalkState {
        WalkState {
            path: self.members[self.start_len..].to_vec(),
            cursors: self.frames.iter().map(|f| f.next).collect(),
            best: self.best,
            tally: self.tally.clone(),
        }
    }

    pub fn into_tally(self) -> Tally {
        self.tally
    }

    pub fn members(&self) -> &[u32] {
        &self.members
    }

    fn push_frame(&mut self, mask: CodeMask, next: u32) {
        let remaining = mask.count_from(next);
        self.frames.push(Frame {
            mask,
            next,
            remaining,
        });
    }

    fn enter(&mut self, mask: CodeMask, next: u32) {
        self.tally.nodes += 1;
        self.unpolled += 1;
        let size = self.members.len();
        if size > self.best || self.tally.found.is_none() && size >= self.ctx.threshold(self.best) {
            self.best = self.best.max(size);
            let mut codes = self.members.clone();
            codes.sort_unstable();
            self.tally.found = Some(Found { size, codes });
        }
        self.last_complete = None;
        if mask.is_empty() {
            self.tally.complete += 1;
            self.last_complete = Some(size);
        }
        self.push_frame(mask, next);
    }

    /// Advances to the next visited node. Returns false once the walk is
    /// exhausted.
    pub fn step(&mut self) -> bool {
        loop {
            let depth = self.frames.len();
            let Some(top) = self.frames.last_mut() else {
                return false;
            };
            let Some(x) = top.mask.next_from(top.next) else {
                self.pop();
                continue;
            };
            let size = self.members.len();
            let bound = (size + top.remaining).min(self.ctx.size_bound);
            if bound < self.ctx.threshold(self.best) {
                self.pop();
                continue;
            }
            top.next = x + 1;
            top.remaining -= 1;
            if self.split_at == Some(depth) {
                let mut path = self.members[self.start_len..].to_vec();
                path.push(x);
                self.emitted.push(Emitted {
                    path,
                    best: self.best,
                });
                continue;
            }
            self.members.push(x);
            let mut child = self.spare.pop().unwrap_or_else(|| CodeMask::empty(0));
            self.ctx.child_mask(
                &self.frames.last().expect("frame").mask,
                &self.members,
                &mut child,
            );
            self.enter(child, x + 1);
            return true;
        }
    }

    fn pop(&mut self) {
        if let Some(frame) = self.frames.pop() {
            self.spare.push(frame.mask);
            if !self.frames.is_empty() {
                self.members.pop();
            }
        }
    }

    /// Walks to exhaustion or until `control` asks to stop.
    pub fn run(&mut self, control: &SearchControl) -> Walked {
        while self.step() {
            if self.unpolled >= control.poll_every {
                let delta = std::mem::take(&mut self.unpolled);
                if control.account(delta) {
                    return Walked::Stopped;
                }
            }
        }
        control.account(std::mem::take(&mut self.unpolled));
        Walked::Done
    }
}
