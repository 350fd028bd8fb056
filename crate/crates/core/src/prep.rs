//! Preprocessing stage: centering, covariance assembly, and the event-driven
//! schedule of the units that execute them.
//!
//! # Data path
//!
//! The input block is `N×M` complex samples (`N` even antennas, `M` a power
//! of two). Centering subtracts each row's mean (exact wide sums, one
//! rounding). The covariance `C = Xc·Xcᴴ/M` is then assembled from three
//! producers, exactly as the hardware partitions it:
//!
//! * diagonal entries — self-power accumulators in the diagonal calculator,
//! * within-pair off-diagonal entries — the same calculator's cross channel,
//! * cross-pair 2×2 blocks — the multiply-accumulate array
//!   ([`crate::mma::Ecmma`], two processing elements).
//!
//! All three share one accumulation contract (exact wide products, single
//! round-to-nearest-even at writeback with a `log2(M)` averaging shift), so
//! the assembled matrix is bit-identical to a monolithic wide-sum covariance.
//! The lower triangle is mirrored by conjugation; the diagonal is exactly
//! real by construction.
//!
//! # Schedule
//!
//! [`simulate_schedule`] plays the same work through an event model with
//! four units — the sample-memory write port, the centering calculator, the
//! diagonal calculator, and the array — and returns a per-unit timeline. The
//! rules are the hardware's:
//!
//! * the write port streams two complex samples per cycle, so a block loads
//!   in `N·M/2` cycles, and a new block may only load once the previous
//!   block's last subtraction pass has consumed the raw samples;
//! * the centering calculator starts once the block is resident and runs one
//!   `M`-cycle accumulation pass and one `M`-cycle subtraction pass per row
//!   pair, serially (subtraction shares the write port to store centered
//!   samples);
//! * the diagonal calculator shadows the centering passes: diagonal entries
//!   in lockstep with each subtraction pass, each pair's internal
//!   off-diagonal entry during the next accumulation pass (the last one
//!   right after centering finishes);
//! * the array computes one `2M`-cycle block per cross-pair combination in
//!   row-major order, each gated on its two source pairs being centered.
//!
//! Latency and steady-state period figures are *outputs* of this simulation;
//! nothing in this module stores the headline cycle counts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fixedpoint::{CFix, CProductAcc, WideAcc};
use crate::matrix::CMat;
use crate::mma::Ecmma;

/// Complex samples accepted per cycle by the sample-memory write port.
pub const INPUT_RATE: u64 = 2;

/// One occupancy interval of one unit, in cycles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub unit: &'static str,
    pub label: String,
    pub start: u64,
    pub end: u64,
}

/// Append-only log of unit occupancy with a no-overlap invariant per unit.
#[derive(Debug, Clone, Default)]
pub struct Timeline {
    spans: Vec<Span>,
}

impl Timeline {
    pub fn new() -> Self {
        Timeline::default()
    }

    /// Records an interval, panicking if it overlaps an existing interval on
    /// the same unit — a unit cannot do two things at once.
    pub fn push(&mut self, unit: &'static str, label: String, start: u64, end: u64) {
        assert!(start < end, "span {label} on {unit} is empty or reversed");
        for s in self.spans.iter().filter(|s| s.unit == unit) {
            assert!(
                end <= s.start || start >= s.end,
                "unit {unit} double-booked: {label} [{start}, {end}) vs {} [{}, {})",
                s.label,
                s.start,
                s.end
            );
        }
        self.spans.push(Span {
            unit,
            label,
            start,
            end,
        });
    }

    /// All recorded spans in insertion order.
    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    /// Spans of one unit, sorted by start time.
    pub fn unit_spans(&self, unit: &str) -> Vec<&Span> {
        let mut v: Vec<&Span> = self.spans.iter().filter(|s| s.unit == unit).collect();
        v.sort_by_key(|s| s.start);
        v
    }

    /// Idle cycles of a unit between its first start and last end.
    pub fn idle_within(&self, unit: &str) -> u64 {
        let spans = self.unit_spans(unit);
        if spans.is_empty() {
            return 0;
        }
        let total = spans.last().unwrap().end - spans[0].start;
        let busy: u64 = spans.iter().map(|s| s.end - s.start).sum();
        total - busy
    }
}

/// Centered data block plus the removed means.
#[derive(Debug, Clone)]
pub struct Centered {
    pub data: CMat,
    pub means: Vec<CFix>,
}

/// Validates the block shape accepted by the preprocessing stage.
fn validate_shape(n: usize, m: usize) -> Result<()> {
    if !(4..=64).contains(&n) || !n.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "antenna count must be even and in 4..=64, got {n}"
        )));
    }
    if !(8..=(1 << 20)).contains(&m) || !m.is_power_of_two() {
        return Err(Error::Config(format!(
            "sample count must be a power of two in 8..=2^20, got {m}"
        )));
    }
    Ok(())
}

/// Removes each row's mean using exact wide sums (one rounding per mean).
pub fn center(x: &CMat) -> Result<Centered> {
    validate_shape(x.rows(), x.cols())?;
    let fmt = x.fmt();
    let mut data = CMat::zeros(x.rows(), x.cols(), fmt);
    let mut means = Vec::with_capacity(x.rows());
    for i in 0..x.rows() {
        let mut acc_re = WideAcc::new(fmt);
        let mut acc_im = WideAcc::new(fmt);
        for k in 0..x.cols() {
            let z = x.get(i, k);
            acc_re.push(z.re);
            acc_im.push(z.im);
        }
        let mean = CFix::new(acc_re.mean_pow2()?, acc_im.mean_pow2()?);
        means.push(mean);
        for k in 0..x.cols() {
            data.set(i, k, x.get(i, k) - mean);
        }
    }
    Ok(Centered { data, means })
}

/// Copies two adjacent rows (one pair) into a standalone 2×M block.
fn pair_block(xc: &CMat, pair: usize) -> CMat {
    let mut b = CMat::zeros(2, xc.cols(), xc.fmt());
    for r in 0..2 {
        for k in 0..xc.cols() {
            b.set(r, k, xc.get(2 * pair + r, k));
        }
    }
    b
}

/// Assembles the averaged covariance `Xc·Xcᴴ/M` from the hardware's three
/// producers. Bit-identical to a monolithic wide-sum covariance because all
/// producers share the accumulate-then-round-once contract.
pub fn fixed_covariance(xc: &CMat) -> Result<CMat> {
    validate_shape(xc.rows(), xc.cols())?;
    let fmt = xc.fmt();
    let n = xc.rows();
    let m_samples = xc.cols();
    let shift = m_samples.ilog2();
    let mut c = CMat::zeros(n, n, fmt);

    // Diagonal calculator: self-power per row (exactly real).
    for i in 0..n {
        let mut acc = CProductAcc::new(fmt);
        for k in 0..m_samples {
            acc.mac_conj(xc.get(i, k), xc.get(i, k));
        }
        c.set(i, i, acc.writeback(shift));
    }

    // Diagonal calculator, cross channel: each pair's internal entry.
    for p in 0..n / 2 {
        let mut acc = CProductAcc::new(fmt);
        for k in 0..m_samples {
            acc.mac_conj(xc.get(2 * p, k), xc.get(2 * p + 1, k));
        }
        let e = acc.writeback(shift);
        c.set(2 * p, 2 * p + 1, e);
        c.set(2 * p + 1, 2 * p, e.conj());
    }

    // Multiply-accumulate array: cross-pair 2×2 blocks, row-major.
    let array = Ecmma::new(2, fmt, shift)?;
    for a in 0..n / 2 {
        let xa = pair_block(xc, a);
        for b in (a + 1)..n / 2 {
            let yb = pair_block(xc, b);
            let blk = array.multiply_conj(&xa, &yb).product;
            for r in 0..2 {
                for col in 0..2 {
                    c.set(2 * a + r, 2 * b + col, blk.get(r, col));
                    c.set(2 * b + col, 2 * a + r, blk.get(r, col).conj());
                }
            }
        }
    }
    Ok(c)
}

/// Outcome of the event-driven schedule simulation.
#[derive(Debug, Clone)]
pub struct ScheduleSim {
    pub timeline: Timeline,
    /// Per matrix: cycle at which its block finished loading.
    pub load_done: Vec<u64>,
    /// Per matrix: cycle at which its last subtraction pass finished.
    pub centering_done: Vec<u64>,
    /// Per matrix: cycle at which all its preprocessing outputs exist.
    pub prep_done: Vec<u64>,
    pub n: usize,
    pub m: usize,
}

impl ScheduleSim {
    /// Latency of the first matrix from first input cycle to last output.
    pub fn first_latency(&self) -> u64 {
        self.prep_done[0]
    }

    /// Completion-to-completion intervals between consecutive matrices.
    pub fn completion_intervals(&self) -> Vec<u64> {
        self.prep_done.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Steady-state period: the last completion interval (requires at least
    /// two matrices).
    pub fn steady_period(&self) -> Option<u64> {
        self.completion_intervals().last().copied()
    }
}

/// Plays `matrices` consecutive `n×m` blocks through the unit model.
pub fn simulate_schedule(n: usize, m: usize, matrices: usize) -> Result<ScheduleSim> {
    validate_shape(n, m)?;
    if matrices == 0 {
        return Err(Error::Config(
            "at least one matrix must be scheduled".into(),
        ));
    }
    let pairs = n / 2;
    let load_cycles = (n as u64 * m as u64) / INPUT_RATE;
    let pass = m as u64;
    let array = Ecmma::new(2, crate::fixedpoint::FixFormat::q10_8(), m.ilog2())?;
    let block = array.block_cycles(m);

    let mut tl = Timeline::new();
    let mut wport_free = 0u64;
    let mut raw_release = 0u64; // when the raw sample region may be overwritten
    let mut cc_free = 0u64;
    let mut ecmma_free = 0u64;
    let mut load_done = Vec::new();
    let mut centering_done = Vec::new();
    let mut prep_done = Vec::new();

    for mi in 0..matrices {
        let load_start = wport_free.max(raw_release);
        let load_end = load_start + load_cycles;
        tl.push("wport", format!("m{mi}.load"), load_start, load_end);
        load_done.push(load_end);

        // Centering: accumulate then subtract, per pair, serial on one unit.
        let mut t = cc_free.max(load_end);
        let mut sub_end = vec![0u64; pairs];
        for (p, done) in sub_end.iter_mut().enumerate() {
            tl.push("cc", format!("m{mi}.accum{p}"), t, t + pass);
            if p > 0 {
                tl.push("dsc", format!("m{mi}.cross{}", p - 1), t, t + pass);
            }
            t += pass;
            tl.push("cc", format!("m{mi}.sub{p}"), t, t + pass);
            tl.push("wport", format!("m{mi}.store{p}"), t, t + pass);
            tl.push("dsc", format!("m{mi}.diag{p}"), t, t + pass);
            t += pass;
            *done = t;
        }
        centering_done.push(t);
        cc_free = t;
        raw_release = t; // last subtraction pass consumed the raw block
        wport_free = t; // its writeback was the port's last busy interval
        let dsc_end = t + pass;
        tl.push("dsc", format!("m{mi}.cross{}", pairs - 1), t, dsc_end);

        // Cross-pair covariance blocks, row-major, gated on centered pairs.
        let mut e = ecmma_free;
        for a in 0..pairs {
            for b in (a + 1)..pairs {
                let start = e.max(sub_end[a]).max(sub_end[b]);
                tl.push("ecmma", format!("m{mi}.blk{a}_{b}"), start, start + block);
                e = start + block;
            }
        }
        ecmma_free = e;
        prep_done.push(centering_done[mi].max(e).max(dsc_end));
    }

    Ok(ScheduleSim {
        timeline: tl,
        load_done,
        centering_done,
        prep_done,
        n,
        m,
    })
}

/// Complete preprocessing result: data products plus the schedule they cost.
#[derive(Debug, Clone)]
pub struct PrepResult {
    pub centered: CMat,
    pub means: Vec<CFix>,
    pub covariance: CMat,
    pub schedule: ScheduleSim,
    pub centering_saturations: u64,
    pub covariance_saturations: u64,
}

/// Runs centering and covariance on one block and simulates its schedule.
pub fn run_prep(x: &CMat) -> Result<PrepResult> {
    let centered = center(x)?;
    let covariance = fixed_covariance(&centered.data)?;
    let schedule = simulate_schedule(x.rows(), x.cols(), 1)?;
    Ok(PrepResult {
        centering_saturations: centered.data.saturated_count(),
        covariance_saturations: covariance.saturated_count(),
        centered: centered.data,
        means: centered.means,
        covariance,
        schedule,
    })
}
