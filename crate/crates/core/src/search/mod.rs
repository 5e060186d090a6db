//! Exhaustive and prefix-reduced maximization of d-caps.
//!
//! Every mode is a [`strategy::SearchPlan`] run by one engine: each root is
//! walked sequentially to depth two, the depth-two subtrees become
//! independent tasks, and task results are merged by size and then by
//! lexicographic order of the witness. A task starts from the incumbent the
//! root walk had when it emitted the task, so results never depend on the
//! number of worker threads.

pub mod checkpoint;
mod engine;
pub mod strategy;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use checkpoint::{Checkpoint, CHECKPOINT_VERSION};
use engine::{Ctx, Emitted, Walked, Walker};
pub use engine::{Found, Policy, SearchControl, StopReason, Tally, WalkState};
use strategy::{Root, StrategyRegistry};

use crate::bits::CodeMask;
use crate::constructions::{dim3_cap, odd_lower_bound, paper_witness, parabola_sidon};
use crate::error::{CapError, Result};
use crate::rules::rule_for_order;
use crate::sidon::{is_d_cap, is_sidon};
use crate::space::{apply_affine, pow3, AffineMap, CapSet, CodeSpace, F3Matrix, Point};

/// The largest m with m(m - 1) <= 3^n - 1: distinct nonzero differences of
/// a 2-cap are all distinct.
pub fn upper_bound_counting(n: usize) -> usize {
    let limit = 3u128.pow(n as u32) - 1;
    let mut m = (limit as f64).sqrt() as u128 + 1;
    while m * (m - 1) > limit {
        m -= 1;
    }
    while (m + 1) * m <= limit {
        m += 1;
    }
    m as usize
}

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub n: usize,
    pub d: u32,
    pub mode: String,
    pub seed: Option<CapSet>,
    /// Only caps strictly larger than this are reported.
    pub target: Option<usize>,
    pub threads: usize,
    pub checkpoint_path: Option<PathBuf>,
    pub node_limit: Option<u64>,
}

impl SearchConfig {
    pub fn new(n: usize, d: u32, mode: &str) -> Self {
        SearchConfig {
            n,
            d,
            mode: mode.to_string(),
            seed: None,
            target: None,
            threads: 1,
            checkpoint_path: None,
            node_limit: None,
        }
    }

    pub fn with_seed(mut self, seed: CapSet) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads;
        self
    }

    pub fn with_target(mut self, target: usize) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_checkpoint(mut self, path: impl Into<PathBuf>) -> Self {
        self.checkpoint_path = Some(path.into());
        self
    }

    pub fn with_node_limit(mut self, limit: u64) -> Self {
        self.node_limit = Some(limit);
        self
    }

    /// The parts of the config that determine the result.
    pub fn echo(&self) -> Result<ConfigEcho> {
        let mode = StrategyRegistry::default()
            .get(&self.mode)?
            .name()
            .to_string();
        Ok(ConfigEcho {
            n: self.n,
            d: self.d,
            mode,
            seed: self
                .seed
                .as_ref()
                .map(|s| s.iter().map(|p| p.to_string()).collect()),
            target: self.target,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub n: usize,
    pub d: u32,
    pub mode: String,
    pub seed: Option<Vec<String>>,
    pub target: Option<usize>,
}

impl ConfigEcho {
    /// Rebuilds a runnable config (one thread, no limits).
    pub fn to_config(&self) -> Result<SearchConfig> {
        let mut c = SearchConfig::new(self.n, self.d, &self.mode);
        if let Some(words) = &self.seed {
            c.seed = Some(CapSet::parse(self.n, words)?);
        }
        c.target = self.target;
        Ok(c)
    }
}

#[derive(Clone, Debug)]
pub struct SearchReport {
    pub config: ConfigEcho,
    pub max_size: usize,
    /// Lexicographically earliest cap of size `max_size` in the searched space.
    pub witness: CapSet,
    pub complete_caps_visited: u64,
    pub nodes_expanded: u64,
    /// True iff the searched space was fully explored.
    pub exhausted: bool,
    pub stopped: Option<StopReason>,
    pub wall_time: Duration,
}

impl SearchReport {
    /// Equality of everything but timing.
    pub fn same_outcome(&self, other: &SearchReport) -> bool {
        self.config == other.config
            && self.max_size == other.max_size
            && self.witness == other.witness
            && self.complete_caps_visited == other.complete_caps_visited
            && self.nodes_expanded == other.nodes_expanded
            && self.exhausted == other.exhausted
    }
}

fn check_cap(s: &CapSet, d: u32) -> Result<()> {
    let ok = if d == 2 { is_sidon(s) } else { is_d_cap(s, d)? };
    if ok {
        Ok(())
    } else {
        Err(CapError::NotACap(d))
    }
}

fn build_ctx(n: usize, d: u32, policy: Policy, floor: usize) -> Result<Arc<Ctx>> {
    let rule = rule_for_order(d)?;
    let size_bound = rule.size_bound(n).unwrap_or(usize::MAX);
    Ok(Arc::new(Ctx {
        space: CodeSpace::shared(n)?,
        rule,
        size_bound,
        policy,
        floor,
    }))
}

enum TaskResult {
    Done(Tally),
    Suspended(WalkState),
    Pending,
    Skipped,
}

fn run_task(
    ctx: &Arc<Ctx>,
    root: &Root,
    root_mask: &CodeMask,
    task: &Emitted,
    carry: usize,
    resume: Option<WalkState>,
    control: &SearchControl,
) -> TaskResult {
    if control.stopped() {
        return match resume {
            Some(state) => TaskResult::Suspended(state),
            None => TaskResult::Pending,
        };
    }
    let mut members = root.members.clone();
    let mut mask = root_mask.clone();
    let mut scratch = CodeMask::empty(0);
    for &code in &task.path {
        members.push(code);
        ctx.child_mask(&mask, &members, &mut scratch);
        std::mem::swap(&mut mask, &mut scratch);
    }
    let last = *task.path.last().expect("tasks sit below the root");
    let mut walker = match resume {
        Some(state) => Walker::resume(ctx.clone(), members, mask, state),
        None => Walker::start(ctx.clone(), members, mask, last + 1, task.best.max(carry)),
    };
    match walker.run(control) {
        Walked::Done => TaskResult::Done(walker.into_tally()),
        Walked::Stopped => TaskResult::Suspended(walker.state()),
    }
}

/// Tasks run in chunks of doubling size; each chunk starts from the
/// incumbent of every earlier chunk, which is fixed by the task order alone.
fn task_chunks(total: usize) -> Vec<std::ops::Range<usize>> {
    const MAX_CHUNK: usize = 256;
    let mut out = Vec::new();
    let (mut start, mut size) = (0, 1);
    while start < total {
        let end = (start + size).min(total);
        out.push(start..end);
        start = end;
        if out.len() > 1 {
            size = (size * 2).min(MAX_CHUNK);
        }
    }
    out
}

/// Runs `config` under `control`, continuing from `resume` if given. When
/// the run stops early and the config names a checkpoint path, the frontier
/// is written there.
pub fn run_search_with(
    config: &SearchConfig,
    control: &SearchControl,
    resume: Option<Checkpoint>,
) -> Result<SearchReport> {
    let started = Instant::now();
    let registry = StrategyRegistry::default();
    let strategy = registry.get(&config.mode)?;
    let echo = config.echo()?;
    if let Some(seed) = &config.seed {
        if seed.dim() != config.n {
            return Err(CapError::DimensionMismatch {
                expected: config.n,
                found: seed.dim(),
            });
        }
    }
    let plan = strategy.plan(config)?;
    for root in &plan.roots {
        check_cap(
            &CapSet::from_codes(config.n, root.members.iter().copied())?,
            config.d,
        )?;
    }
    if let Some(cp) = &resume {
        if cp.config != echo {
            return Err(CapError::Checkpoint(
                "checkpoint was written for a different search".into(),
            ));
        }
        if cp.root >= plan.roots.len() {
            return Err(CapError::Checkpoint(
                "checkpoint root index out of range".into(),
            ));
        }
    }
    let ctx = build_ctx(config.n, config.d, plan.policy, plan.floor)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.max(1))
        .build()
        .map_err(|e| CapError::InvalidParams(format!("thread pool: {e}")))?;

    let first_root = resume.as_ref().map_or(0, |c| c.root);
    let mut prior = resume
        .as_ref()
        .map_or_else(Tally::default, |c| c.prior.clone());
    let mut resume = resume;
    let mut stopped_tally = None;

    for (ri, root) in plan.roots.iter().enumerate().skip(first_root) {
        let best = prior.found.as_ref().map_or(0, |f| f.size);
        let root_mask = ctx.rule.candidates_of(&ctx.space, &root.members);
        let mut walker = Walker::start(
            ctx.clone(),
            root.members.clone(),
            root_mask.clone(),
            root.min_child,
            best,
        )
        .with_split(2);
        while walker.step() {}
        let tasks = std::mem::take(&mut walker.emitted);
        let root_tally = walker.into_tally();

        let cp = resume.take().filter(|c| c.root == ri);
        if let Some(c) = &cp {
            if c.task_total != tasks.len() {
                return Err(CapError::Checkpoint(
                    "checkpoint task count does not match the search".into(),
                ));
            }
        }
        let mut suspended: Vec<Option<WalkState>> = vec![None; tasks.len()];
        if let Some(c) = &cp {
            for s in &c.suspended {
                let slot = suspended.get_mut(s.task).ok_or_else(|| {
                    CapError::Checkpoint("checkpoint task index out of range".into())
                })?;
                *slot = Some(s.state.clone());
            }
        }
        let done_before = |i: usize| cp.as_ref().is_some_and(|c| c.is_completed(i));

        let mut carry = cp.as_ref().map_or(0, |c| c.carry);
        let mut completed = cp
            .as_ref()
            .map_or_else(Tally::default, |c| c.completed_tally.clone());
        let mut completed_ids = Vec::new();
        let mut open = Vec::new();
        let mut partial = Tally::default();
        for range in task_chunks(tasks.len()) {
            let states: Vec<Option<WalkState>> = suspended[range.clone()]
                .iter_mut()
                .map(Option::take)
                .collect();
            let results: Vec<TaskResult> = pool.install(|| {
                tasks[range.clone()]
                    .par_iter()
                    .zip(states.into_par_iter())
                    .enumerate()
                    .map(|(j, (task, state))| {
                        if done_before(range.start + j) {
                            TaskResult::Skipped
                        } else {
                            run_task(&ctx, root, &root_mask, task, carry, state, control)
                        }
                    })
                    .collect()
            });
            let mut ran = false;
            for (j, r) in results.into_iter().enumerate() {
                let i = range.start + j;
                match r {
                    TaskResult::Skipped => completed_ids.push(i),
                    TaskResult::Done(t) => {
                        ran = true;
                        completed.merge(t);
                        completed_ids.push(i);
                    }
                    TaskResult::Suspended(state) => {
                        partial.merge(state.tally.clone());
                        open.push(checkpoint::SuspendedTask { task: i, state });
                    }
                    // Not started: a resume starts it fresh.
                    TaskResult::Pending => {}
                }
            }
            if completed_ids.len() < range.end {
                break;
            }
            // A chunk finished before a resume is already in the saved carry.
            if ran {
                carry = carry.max(completed.found.as_ref().map_or(0, |f| f.size));
            }
        }
        let all_done = completed_ids.len() == tasks.len();

        if !all_done {
            let snapshot = Checkpoint {
                version: CHECKPOINT_VERSION,
                config: echo.clone(),
                root: ri,
                prior: prior.clone(),
                task_total: tasks.len(),
                completed: checkpoint::to_ranges(completed_ids),
                completed_tally: completed.clone(),
                carry,
                suspended: open,
            };
            if let Some(path) = &config.checkpoint_path {
                snapshot.save(path)?;
            }
            let mut seen = prior.clone();
            seen.merge(root_tally);
            seen.merge(completed);
            seen.merge(partial);
            stopped_tally = Some(seen);
            break;
        }
        prior.merge(root_tally);
        prior.merge(completed);
    }

    let exhausted = stopped_tally.is_none();
    let tally = stopped_tally.unwrap_or(prior);
    let (max_size, witness) = match tally.found {
        Some(f) => (f.size, CapSet::from_codes(config.n, f.codes)?),
        None => (0, CapSet::empty(config.n)?),
    };
    Ok(SearchReport {
        config: echo,
        max_size,
        witness,
        complete_caps_visited: tally.complete,
        nodes_expanded: tally.nodes,
        exhausted,
        stopped: if exhausted { None } else { control.reason() },
        wall_time: started.elapsed(),
    })
}

/// Runs `config` to completion or its node limit.
pub fn run_search(config: &SearchConfig) -> Result<SearchReport> {
    let control = SearchControl::new(config.node_limit, None);
    run_search_with(config, &control, None)
}

/// Resumes the search saved at `path`, with `threads` workers.
pub fn resume_search(
    path: &std::path::Path,
    threads: usize,
    control: &SearchControl,
) -> Result<SearchReport> {
    let cp = Checkpoint::load(path)?;
    let mut config = cp.config.to_config()?.with_threads(threads);
    config.checkpoint_path = Some(path.to_path_buf());
    run_search_with(&config, control, Some(cp))
}

fn with_mode(config: &SearchConfig, mode: &str) -> SearchConfig {
    let mut c = config.clone();
    c.mode = mode.to_string();
    c
}

/// Unreduced search for the largest d-cap.
pub fn max_cap_search(config: &SearchConfig) -> Result<SearchReport> {
    run_search(&with_mode(config, "full"))
}

/// Order-2 search over the normalized prefixes.
pub fn prefix_reduced_search(config: &SearchConfig) -> Result<SearchReport> {
    run_search(&with_mode(config, "prefix_reduced"))
}

/// Every complete cap containing `seed`.
pub fn completion_search(seed: &CapSet, config: &SearchConfig) -> Result<SearchReport> {
    let mut c = with_mode(config, "completion");
    c.n = seed.dim();
    c.seed = Some(seed.clone());
    run_search(&c)
}

/// Sequential stream of the maximum-size d-caps containing a given cap, in
/// lexicographic order of their sorted codes.
pub struct MaximalCaps {
    walker: Walker,
    n: usize,
    size: usize,
}

impl Iterator for MaximalCaps {
    type Item = CapSet;

    fn next(&mut self) -> Option<CapSet> {
        loop {
            if self.walker.last_complete == Some(self.size) {
                self.walker.last_complete = None;
                let set = CapSet::from_codes(self.n, self.walker.members().iter().copied())
                    .expect("walker members are valid codes");
                return Some(set);
            }
            if !self.walker.step() {
                return None;
            }
        }
    }
}

fn enumeration_size(n: usize, d: u32) -> Result<usize> {
    if d == 2 && n > 4 || d != 2 && n > 3 {
        return Err(CapError::Infeasible(format!(
            "enumerating every maximal cap of order {d} is limited to n <= {}",
            if d == 2 { 4 } else { 3 }
        )));
    }
    Ok(max_cap_search(&SearchConfig::new(n, d, "full"))?.max_size)
}

fn maximal_from(seed: &CapSet, d: u32, size: usize) -> Result<MaximalCaps> {
    check_cap(seed, d)?;
    let n = seed.dim();
    let ctx = build_ctx(n, d, Policy::KeepTies, size)?;
    let members = seed.codes();
    let mask = ctx.rule.candidates_of(&ctx.space, &members);
    let walker = Walker::start(ctx, members, mask, 0, 0);
    Ok(MaximalCaps { walker, n, size })
}

/// Every d-cap of F_3^n of the largest possible size, each exactly once.
pub fn enumerate_maximal(n: usize, d: u32) -> Result<MaximalCaps> {
    let size = enumeration_size(n, d)?;
    maximal_from(&CapSet::empty(n)?, d, size)
}

/// The maximum-size d-caps that contain `seed`.
pub fn enumerate_maximal_containing(seed: &CapSet, d: u32) -> Result<MaximalCaps> {
    let size = enumeration_size(seed.dim(), d)?;
    maximal_from(seed, d, size)
}

/// An affine map claimed to send the first dim-3 maximal cap to the i-th.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dim3Map {
    pub index: usize,
    pub matrix: [[u8; 3]; 3],
    pub translation: [u8; 3],
}

/// The four maps relating the maximal 2-caps of F_3^3 through the frame.
pub fn dim3_maps() -> Vec<Dim3Map> {
    vec![
        Dim3Map {
            index: 2,
            matrix: [[1, 0, 0], [2, 1, 0], [2, 0, 1]],
            translation: [0, 0, 0],
        },
        Dim3Map {
            index: 3,
            matrix: [[1, 0, 2], [0, 0, 1], [0, 1, 2]],
            translation: [0, 0, 0],
        },
        Dim3Map {
            index: 4,
            matrix: [[1, 0, 2], [0, 1, 2], [0, 0, 1]],
            translation: [0, 0, 0],
        },
        Dim3Map {
            index: 5,
            matrix: [[2, 1, 1], [1, 2, 1], [1, 1, 2]],
            translation: [2, 2, 2],
        },
    ]
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapCheck {
    pub index: usize,
    pub rank: usize,
    pub invertible: bool,
    pub image: Option<CapSet>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dim3Classification {
    pub caps: Vec<CapSet>,
    pub checks: Vec<MapCheck>,
}

impl Dim3Classification {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Checks each map is invertible and sends the first cap onto the indexed one.
pub fn dim3_classification_with(maps: &[Dim3Map]) -> Result<Dim3Classification> {
    let caps = (1..=5).map(dim3_cap).collect::<Result<Vec<_>>>()?;
    let checks = maps
        .iter()
        .map(|m| {
            let matrix = F3Matrix::from_rows(&m.matrix)?;
            let rank = matrix.rank();
            let invertible = matrix.is_invertible();
            let image = match AffineMap::new(matrix, Point::from_digits(&m.translation)?) {
                Ok(t) => Some(apply_affine(&t, &caps[0])?),
                Err(_) => None,
            };
            let target = caps.get(m.index.wrapping_sub(1));
            let passed = invertible && image.is_some() && image.as_ref() == target;
            Ok(MapCheck {
                index: m.index,
                rank,
                invertible,
                image,
                passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dim3Classification { caps, checks })
}

pub fn dim3_classification() -> Result<Dim3Classification> {
    dim3_classification_with(&dim3_maps())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundRecord {
    pub n: usize,
    pub d: u32,
    pub lower: usize,
    pub upper: usize,
    pub lower_source: String,
    pub upper_source: String,
}

/// Order-2 bounds for n = 1..=n_max from constructions, reference sets, the
/// counting bound and any supplied search reports.
pub fn bounds_table(n_max: usize, reports: &[SearchReport]) -> Result<Vec<BoundRecord>> {
    if n_max > 8 {
        return Err(CapError::UnsupportedDimension(n_max));
    }
    let mut out = Vec::new();
    for n in 1..=n_max {
        let mut lower: Vec<(usize, String)> = Vec::new();
        let mut upper: Vec<(usize, String)> =
            vec![(upper_bound_counting(n), "counting bound".into())];
        if n <= 2 {
            lower.push((n + 1, "affine basis".into()));
            upper.push((n + 1, "affine basis bound".into()));
        }
        if n % 2 == 0 {
            let k = n / 2;
            lower.push((
                parabola_sidon(k, None)?.len(),
                format!("parabola construction (k = {k})"),
            ));
            upper.push((pow3(k) as usize, "even-dimension bound 3^(n/2)".into()));
        } else if n >= 3 {
            lower.push((odd_lower_bound(n)?.len(), "odd-dimension extension".into()));
        }
        for name in ["dim3_C1", "dim5_max13", "dim7_complete33"] {
            let w = paper_witness(name)?;
            if w.dim() == n && is_sidon(&w) {
                lower.push((w.len(), format!("reference set {name}")));
            }
        }
        for r in reports
            .iter()
            .filter(|r| r.config.n == n && r.config.d == 2)
        {
            if r.max_size > 0 && is_sidon(&r.witness) {
                lower.push((r.max_size, format!("{} search", r.config.mode)));
            }
            let spans_space = r.config.mode != "completion" && r.config.target.is_none();
            if r.exhausted && spans_space {
                upper.push((r.max_size, format!("exhausted {} search", r.config.mode)));
            }
        }
        // Ties keep the earliest listed source.
        let (lo, lo_src) = lower
            .into_iter()
            .rev()
            .max_by_key(|(v, _)| *v)
            .unwrap_or((0, "none".into()));
        let (up, up_src) = upper
            .into_iter()
            .min_by_key(|(v, _)| *v)
            .expect("counting bound");
        if lo > up {
            return Err(CapError::Inconsistent(format!(
                "n = {n}: lower bound {lo} exceeds upper bound {up}"
            )));
        }
        out.push(BoundRecord {
            n,
            d: 2,
            lower: lo,
            upper: up,
            lower_source: lo_src,
            upper_source: up_src,
        });
    }
    Ok(out)
}
