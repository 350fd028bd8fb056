//! Pair orderings and submatrix issue sequencing for the parallel
//! eigendecomposition.
//!
//! An `N×N` Hermitian matrix (`N` even) is processed as a grid of 2×2
//! submatrices over a partition of the rows into `p = N/2` pairs. One *sweep*
//! visits `2p−1` round-robin orderings; together they rotate every row pair
//! exactly once. Within one ordering the hardware issues all `p²` submatrix
//! blocks into a deep arithmetic pipeline, one block every `issue_interval`
//! cycles.
//!
//! A block of the *next* ordering reads entries the *current* ordering
//! writes, so the issue order inside an ordering decides whether the next
//! ordering can start seamlessly or must wait. Two strategies are modelled:
//!
//! * [`HazardFree`] — diagonal blocks first, then the pairs of blocks the
//!   next ordering's diagonal blocks will need, in that ordering's pair
//!   order, then the rest row-major. For `p² − 2p ≥ depth/issue_interval`
//!   (N ≥ 8 at the design point) every dependency is written back by the
//!   time its consumer issues, with zero interlock hardware.
//! * [`RowMajor`] — plain row-major issue with the conservative interlock a
//!   scoreboard-less design needs: the next ordering may not issue until the
//!   previous ordering's last block has written back (a full pipeline
//!   drain).
//!
//! [`simulate_issue`] plays a whole run under a strategy and measures idle
//! cycles from per-stage occupancy; it also reports, diagnostically, whether
//! a strictly seamless schedule would have violated any dependency.

use crate::error::{Error, Result};

/// Round-robin pair orderings covering all row pairs exactly once.
///
/// Rows are 0-indexed. The first ordering pairs adjacent rows
/// `(0,1), (2,3), …`; each subsequent ordering applies one step of the
/// tournament rotation that keeps position 0's top row fixed.
pub fn parallel_orderings(n: usize) -> Result<Vec<Vec<(usize, usize)>>> {
    if !(4..=64).contains(&n) || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "ordering generation needs an even row count in 4..=64, got {n}"
        )));
    }
    let p = n / 2;
    let mut top: Vec<usize> = (0..p).map(|i| 2 * i).collect();
    let mut bot: Vec<usize> = (0..p).map(|i| 2 * i + 1).collect();
    let mut orderings = Vec::with_capacity(2 * p - 1);
    for _ in 0..(2 * p - 1) {
        orderings.push(
            top.iter()
                .zip(bot.iter())
                .map(|(&a, &b)| (a.min(b), a.max(b)))
                .collect(),
        );
        // Tournament rotation: top[0] stays, everyone else moves one seat.
        let mut new_top = Vec::with_capacity(p);
        new_top.push(top[0]);
        new_top.push(bot[0]);
        new_top.extend_from_slice(&top[1..p - 1]);
        let mut new_bot: Vec<usize> = bot[1..].to_vec();
        new_bot.push(top[p - 1]);
        top = new_top;
        bot = new_bot;
    }
    Ok(orderings)
}

/// Issue-order policy for the `p²` submatrix blocks of one ordering.
pub trait SequenceStrategy {
    /// Registry name (CLI-selectable).
    fn name(&self) -> &'static str;

    /// One-line description for listings.
    fn description(&self) -> &'static str;

    /// Whether the hardware inserts a full pipeline drain between orderings
    /// (the scoreboard-less conservative interlock).
    fn drains_between_orderings(&self) -> bool;

    /// Block issue order for an ordering with pair list `current`, given the
    /// following ordering's pair list when one exists. Blocks are pair-index
    /// coordinates `(u, v)`; the result is a permutation of all `p²` blocks.
    fn sequence(
        &self,
        current: &[(usize, usize)],
        next: Option<&[(usize, usize)]>,
    ) -> Vec<(usize, usize)>;
}

/// Dependency-sorted issue order enabling seamless ordering transitions.
pub struct HazardFree;

impl SequenceStrategy for HazardFree {
    fn name(&self) -> &'static str {
        "hazard-free"
    }

    fn description(&self) -> &'static str {
        "diagonal blocks first, then the next ordering's dependencies in need order"
    }

    fn drains_between_orderings(&self) -> bool {
        false
    }

    fn sequence(
        &self,
        current: &[(usize, usize)],
        next: Option<&[(usize, usize)]>,
    ) -> Vec<(usize, usize)> {
        let p = current.len();
        let mut pos = vec![usize::MAX; 2 * p];
        for (idx, &(a, b)) in current.iter().enumerate() {
            pos[a] = idx;
            pos[b] = idx;
        }
        let mut placed = vec![false; p * p];
        let mut seq = Vec::with_capacity(p * p);
        let place = |seq: &mut Vec<(usize, usize)>, placed: &mut Vec<bool>, u: usize, v: usize| {
            if !placed[u * p + v] {
                placed[u * p + v] = true;
                seq.push((u, v));
            }
        };
        for k in 0..p {
            place(&mut seq, &mut placed, k, k);
        }
        if let Some(next) = next {
            for &(i, j) in next {
                let (a, b) = (pos[i], pos[j]);
                place(&mut seq, &mut placed, a, b);
                place(&mut seq, &mut placed, b, a);
            }
        }
        for u in 0..p {
            for v in 0..p {
                place(&mut seq, &mut placed, u, v);
            }
        }
        seq
    }
}

/// Plain row-major issue with a full drain between orderings.
pub struct RowMajor;

impl SequenceStrategy for RowMajor {
    fn name(&self) -> &'static str {
        "row-major"
    }

    fn description(&self) -> &'static str {
        "row-major issue with a full pipeline drain between orderings"
    }

    fn drains_between_orderings(&self) -> bool {
        true
    }

    fn sequence(
        &self,
        current: &[(usize, usize)],
        _next: Option<&[(usize, usize)]>,
    ) -> Vec<(usize, usize)> {
        let p = current.len();
        (0..p).flat_map(|u| (0..p).map(move |v| (u, v))).collect()
    }
}

/// All registered sequencing strategies.
pub fn sequence_strategies() -> Vec<Box<dyn SequenceStrategy>> {
    vec![Box::new(HazardFree), Box::new(RowMajor)]
}

/// Looks a strategy up by its registry name.
pub fn lookup_sequence(name: &str) -> Result<Box<dyn SequenceStrategy>> {
    sequence_strategies()
        .into_iter()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            let known: Vec<&str> = sequence_strategies().iter().map(|s| s.name()).collect();
            Error::Config(format!(
                "unknown sequence strategy '{name}' (known: {})",
                known.join(", ")
            ))
        })
}

/// Timing shape of the rotation pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineModel {
    issue_interval: u64,
    depth: u64,
}

impl PipelineModel {
    /// `depth` must be a positive multiple of `issue_interval`.
    pub fn new(issue_interval: u64, depth: u64) -> Result<Self> {
        if issue_interval == 0 || depth == 0 || !depth.is_multiple_of(issue_interval) {
            return Err(Error::Config(format!(
                "pipeline depth {depth} must be a positive multiple of the issue interval {issue_interval}"
            )));
        }
        Ok(PipelineModel {
            issue_interval,
            depth,
        })
    }

    /// The design point: a new block every 2 cycles into a 10-cycle pipeline.
    pub fn design_point() -> Self {
        PipelineModel {
            issue_interval: 2,
            depth: 10,
        }
    }

    pub fn issue_interval(&self) -> u64 {
        self.issue_interval
    }

    pub fn depth(&self) -> u64 {
        self.depth
    }

    /// Number of pipeline stages (`depth / issue_interval`).
    pub fn stages(&self) -> u64 {
        self.depth / self.issue_interval
    }
}

/// Outcome of one issue-schedule simulation.
#[derive(Debug, Clone)]
pub struct IssueSim {
    /// Blocks issued over the whole run.
    pub blocks: u64,
    /// Cycles a perfectly seamless schedule would take (`blocks × interval`).
    pub seamless_cycles: u64,
    /// Cycles the simulated schedule takes (last issue + interval; the final
    /// drain is not charged — it overlaps the next matrix's preprocessing).
    pub total_cycles: u64,
    /// Issue-slot idle cycles (total − seamless).
    pub idle_issue_cycles: u64,
    /// Idle cycles summed over every pipeline stage, measured from per-stage
    /// occupancy intervals.
    pub idle_stage_cycles: u64,
    /// Stall inserted at each ordering transition (length `orderings − 1`).
    pub transition_stalls: Vec<u64>,
    /// Dependencies a strictly seamless schedule would have violated.
    pub seamless_violations: usize,
    /// Human-readable description of the first such violation.
    pub first_violation: Option<String>,
}

/// Plays `sweeps` full sweeps of an `n×n` matrix through the pipeline under
/// a sequencing strategy.
///
/// Dependencies are entry-accurate: a block reads the four matrix entries at
/// its pair-row × pair-column intersections, each of which became valid at
/// the writeback of whichever block last wrote it. A block never issues
/// before its operands exist (hardware cannot); the strategy decides whether
/// additional conservative stalls (drains) are inserted.
pub fn simulate_issue(
    n: usize,
    sweeps: usize,
    strategy: &dyn SequenceStrategy,
    model: PipelineModel,
) -> Result<IssueSim> {
    let orderings = parallel_orderings(n)?;
    if sweeps == 0 || sweeps > 1000 {
        return Err(Error::Config(format!(
            "sweep count must be in 1..=1000, got {sweeps}"
        )));
    }
    let p = n / 2;
    let ii = model.issue_interval();
    let depth = model.depth();

    // Flatten the run: every ordering of every sweep, with its successor.
    let run: Vec<&Vec<(usize, usize)>> = (0..sweeps).flat_map(|_| orderings.iter()).collect();

    // Pass 1 (diagnostic): strictly seamless issue — find dependency breaks.
    let mut seamless_violations = 0usize;
    let mut first_violation = None;
    {
        let mut entry_ready = vec![0u64; n * n];
        let mut slot = 0u64;
        for (oi, ordering) in run.iter().enumerate() {
            let next = run.get(oi + 1).map(|o| o.as_slice());
            for (u, v) in strategy.sequence(ordering, next) {
                let issue = slot * ii;
                let (ru, rv) = (ordering[u], ordering[v]);
                let mut ready = 0u64;
                for r in [ru.0, ru.1] {
                    for c in [rv.0, rv.1] {
                        ready = ready.max(entry_ready[r * n + c]);
                    }
                }
                if ready > issue {
                    seamless_violations += 1;
                    first_violation.get_or_insert_with(|| {
                        format!(
                            "ordering {oi} block ({u},{v}) rows {ru:?}×{rv:?}: operands ready at {ready}, seamless issue {issue}"
                        )
                    });
                }
                let wb = issue + depth;
                for r in [ru.0, ru.1] {
                    for c in [rv.0, rv.1] {
                        entry_ready[r * n + c] = wb;
                    }
                }
                slot += 1;
            }
        }
    }

    // Pass 2: the strategy's actual schedule.
    let mut entry_ready = vec![0u64; n * n];
    let mut issues: Vec<u64> = Vec::with_capacity(run.len() * p * p);
    let mut transition_stalls = Vec::with_capacity(run.len() - 1);
    let mut prev_ordering_last_wb = 0u64;
    for (oi, ordering) in run.iter().enumerate() {
        let next = run.get(oi + 1).map(|o| o.as_slice());
        let mut ordering_last_wb = 0u64;
        for (bi, (u, v)) in strategy.sequence(ordering, next).into_iter().enumerate() {
            let seamless = match issues.last() {
                Some(&t) => t + ii,
                None => 0,
            };
            let mut issue = seamless;
            if bi == 0 && oi > 0 && strategy.drains_between_orderings() {
                issue = issue.max(prev_ordering_last_wb);
            }
            let (ru, rv) = (ordering[u], ordering[v]);
            for r in [ru.0, ru.1] {
                for c in [rv.0, rv.1] {
                    issue = issue.max(entry_ready[r * n + c]);
                }
            }
            if bi == 0 && oi > 0 {
                transition_stalls.push(issue - seamless);
            }
            let wb = issue + depth;
            for r in [ru.0, ru.1] {
                for c in [rv.0, rv.1] {
                    entry_ready[r * n + c] = wb;
                }
            }
            ordering_last_wb = ordering_last_wb.max(wb);
            issues.push(issue);
        }
        prev_ordering_last_wb = ordering_last_wb;
    }

    let blocks = issues.len() as u64;
    let total_cycles = issues.last().unwrap() + ii;
    let seamless_cycles = blocks * ii;

    // Stage occupancy: stage s of a block issued at t is busy [t+s·ii, t+(s+1)·ii).
    // Issues are strictly increasing by ≥ ii, so per stage the intervals are
    // disjoint and idle is the gap sum, measured rather than inferred.
    let mut idle_stage_cycles = 0u64;
    for s in 0..model.stages() {
        let mut busy = 0u64;
        let first = issues[0] + s * ii;
        let mut last_end = first;
        for &t in &issues {
            let start = t + s * ii;
            busy += ii;
            last_end = start + ii;
        }
        idle_stage_cycles += (last_end - first) - busy;
    }

    Ok(IssueSim {
        blocks,
        seamless_cycles,
        total_cycles,
        idle_issue_cycles: total_cycles - seamless_cycles,
        idle_stage_cycles,
        transition_stalls,
        seamless_violations,
        first_violation,
    })
}
