//! The model's acceptance criteria, each as a reusable check.
//!
//! Every tolerance is pinned here as a named constant; the checks are the
//! single source of truth shared by the command-line `check` subcommand and
//! the acceptance test suite. Each check returns a [`CheckResult`] whose
//! detail line reports the measured numbers, pass or fail — a failing check
//! explains itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::evd::{evd_run, EvdConfig};
use crate::fixedpoint::{CFix, FixFormat};
use crate::matrix::{CMat, FloatMat};
use crate::mma::{Ecmma, EcmmaCensus};
use crate::oracle;
use crate::ordering::{lookup_sequence, parallel_orderings, simulate_issue, PipelineModel};
use crate::pipeline::{execute, RunConfig};
use crate::prep::simulate_schedule;

/// Steady-state preprocessing period at the design point (cycles).
pub const PREP_PERIOD_DESIGN: u64 = 6144;
/// Design-text first-block preprocessing latency the model must land near.
pub const PREP_LATENCY_CLAIM: f64 = 10757.0;
/// Design-text end-to-end first-matrix latency the model must land near.
pub const TOTAL_LATENCY_CLAIM: f64 = 15237.0;
/// Allowed relative deviation from the two latency claims.
pub const LATENCY_TOLERANCE: f64 = 0.05;
/// Rotation issue slots for a full 20-sweep run at the design point.
pub const EVD_CYCLES_DESIGN: u64 = 4480;
/// Claimed sustained rate at the design clock (matrices per second).
pub const THROUGHPUT_CLAIM: f64 = 40.7e3;
/// Allowed relative deviation from the throughput claim.
pub const THROUGHPUT_TOLERANCE: f64 = 0.005;
/// Randomized trials for the array bit-exactness check.
pub const ARRAY_TRIALS: usize = 10_000;
/// Seeded end-to-end runs for the accuracy check.
pub const SCENARIO_TRIALS: u64 = 100;
/// Budgets, in least-significant-bit units of the 10-bit format.
pub const COVARIANCE_BUDGET_LSB: f64 = 4.0;
pub const EIGENVALUE_BUDGET_LSB: f64 = 8.0;
pub const UNITARITY_BUDGET_LSB: f64 = 8.0;
pub const RECONSTRUCTION_BUDGET_LSB: f64 = 16.0;
pub const WHITENESS_BUDGET_LSB: f64 = 10.0;
/// Bound on the all-reference whitening identity distance.
pub const ORACLE_WHITENESS_BOUND: f64 = 1e-8;
/// Random spectra for the reference-solver convergence check.
pub const SOLVER_TRIALS: u64 = 100;
/// Reference solver must reach this off-diagonal norm.
pub const SOLVER_FLOOR: f64 = 1e-12;
/// Per-row budget for the converged fixed off-diagonal norm (LSB units).
pub const OFFDIAG_PER_ROW_BUDGET_LSB: f64 = 4.0;

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// One printable line: `PASS name — detail` or `FAIL name — detail`.
    pub fn line(&self) -> String {
        format!(
            "{} {} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn result(name: &'static str, fails: Vec<String>, detail: String) -> CheckResult {
    if fails.is_empty() {
        CheckResult {
            name,
            passed: true,
            detail,
        }
    } else {
        CheckResult {
            name,
            passed: false,
            detail: format!("{detail}; FAILED: {}", fails.join("; ")),
        }
    }
}

/// Steady-state preprocessing period: exact at the design point and equal to
/// `(n² − 2n)·m/4` wherever the array is the bottleneck (n ≥ 8).
pub fn check_steady_period() -> CheckResult {
    let mut fails = Vec::new();
    let design = simulate_schedule(8, 512, 4)
        .unwrap()
        .steady_period()
        .unwrap();
    if design != PREP_PERIOD_DESIGN {
        fails.push(format!(
            "design-point period {design} ≠ {PREP_PERIOD_DESIGN}"
        ));
    }
    let mut swept = 0usize;
    for n in [8usize, 10, 12, 16] {
        for m in [64usize, 256, 1024] {
            let formula = ((n * n - 2 * n) * m) as u64 / 4;
            let got = simulate_schedule(n, m, 3).unwrap().steady_period().unwrap();
            if got != formula {
                fails.push(format!("n={n} m={m}: period {got} ≠ formula {formula}"));
            }
            swept += 1;
        }
    }
    result(
        "steady-period",
        fails,
        format!("design point {design} cycles; formula held at {swept} array-bound sizes"),
    )
}

/// First-matrix latency of both halves lands within ±5% of the design text.
pub fn check_latency_window() -> CheckResult {
    let mut fails = Vec::new();
    let sched = simulate_schedule(8, 512, 1).unwrap();
    let prep = sched.first_latency();
    let strategy = lookup_sequence("hazard-free").unwrap();
    let issue = simulate_issue(8, 20, strategy.as_ref(), PipelineModel::design_point()).unwrap();
    let total = prep + issue.total_cycles;
    let prep_dev = (prep as f64 - PREP_LATENCY_CLAIM) / PREP_LATENCY_CLAIM;
    let total_dev = (total as f64 - TOTAL_LATENCY_CLAIM) / TOTAL_LATENCY_CLAIM;
    if prep_dev.abs() > LATENCY_TOLERANCE {
        fails.push(format!(
            "prep latency {prep} deviates {:+.1}% from {PREP_LATENCY_CLAIM}",
            prep_dev * 100.0
        ));
    }
    if total_dev.abs() > LATENCY_TOLERANCE {
        fails.push(format!(
            "total latency {total} deviates {:+.1}% from {TOTAL_LATENCY_CLAIM}",
            total_dev * 100.0
        ));
    }
    result(
        "latency-window",
        fails,
        format!(
            "prep {prep} ({:+.1}% vs {PREP_LATENCY_CLAIM:.0}), total {total} ({:+.1}% vs {TOTAL_LATENCY_CLAIM:.0})",
            prep_dev * 100.0,
            total_dev * 100.0
        ),
    )
}

/// Rotation schedule: the hazard-free sequence fills every issue slot of the
/// exact cycle budget; the drained row-major sequence pays 8 cycles and 40
/// idle stage-cycles per ordering transition.
pub fn check_rotation_cycle_budget() -> CheckResult {
    let mut fails = Vec::new();
    let model = PipelineModel::design_point();
    let hf = lookup_sequence("hazard-free").unwrap();
    let sim = simulate_issue(8, 20, hf.as_ref(), model).unwrap();
    if sim.total_cycles != EVD_CYCLES_DESIGN {
        fails.push(format!(
            "hazard-free total {} ≠ {EVD_CYCLES_DESIGN}",
            sim.total_cycles
        ));
    }
    if sim.idle_issue_cycles != 0 || sim.idle_stage_cycles != 0 {
        fails.push(format!(
            "hazard-free idles: issue {}, stage {}",
            sim.idle_issue_cycles, sim.idle_stage_cycles
        ));
    }
    if sim.seamless_violations != 0 {
        fails.push(format!(
            "hazard-free would violate {} dependencies",
            sim.seamless_violations
        ));
    }
    let rm = lookup_sequence("row-major").unwrap();
    let drained = simulate_issue(8, 20, rm.as_ref(), model).unwrap();
    let transitions = drained.transition_stalls.len() as u64;
    if !drained.transition_stalls.iter().all(|&s| s == 8) {
        fails.push("row-major transition stalls are not uniformly 8 cycles".to_string());
    }
    if drained.idle_stage_cycles != 40 * transitions {
        fails.push(format!(
            "row-major idle stage-cycles {} ≠ 40 × {transitions}",
            drained.idle_stage_cycles
        ));
    }
    result(
        "rotation-cycle-budget",
        fails,
        format!(
            "hazard-free: {} cycles, zero idle; row-major: +{} stall cycles and {} idle stage-cycles over {} transitions",
            sim.total_cycles,
            drained.total_cycles - sim.total_cycles,
            drained.idle_stage_cycles,
            transitions
        ),
    )
}

/// Sustained throughput at the design clock matches the claimed rate.
pub fn check_throughput() -> CheckResult {
    let mut fails = Vec::new();
    let run = execute(&RunConfig::default()).unwrap();
    let got = run.cycles.throughput_per_s;
    let dev = (got - THROUGHPUT_CLAIM) / THROUGHPUT_CLAIM;
    if dev.abs() > THROUGHPUT_TOLERANCE {
        fails.push(format!(
            "throughput {got:.1}/s deviates {:+.3}% from {THROUGHPUT_CLAIM:.0}/s",
            dev * 100.0
        ));
    }
    result(
        "throughput",
        fails,
        format!(
            "{got:.1} matrices/s at {:.0} MHz ({:+.3}% vs claim, period {} cycles)",
            run.config.clock_hz / 1e6,
            dev * 100.0,
            run.cycles.bound_period
        ),
    )
}

/// Round-to-nearest-even division by a power of two, written from the
/// definition, independent of the production accumulators.
fn reference_rne(v: i128, shift: u32) -> i128 {
    if shift == 0 {
        return v;
    }
    let floor = v >> shift;
    let rem = v - (floor << shift);
    let half = 1i128 << (shift - 1);
    if rem > half || (rem == half && (floor & 1) == 1) {
        floor + 1
    } else {
        floor
    }
}

/// The array result computed entry by entry from the definition: exact wide
/// products, one rounding, one saturation.
fn reference_product(x: &CMat, y: &CMat, acc_shift: u32) -> Vec<(i64, i64)> {
    let fmt = x.fmt();
    let limit = (1i64 << (fmt.word_length() - 1)) - 1;
    let rows = x.rows();
    let mut out = Vec::with_capacity(rows * rows);
    for i in 0..rows {
        for j in 0..rows {
            let mut re = 0i128;
            let mut im = 0i128;
            for k in 0..x.cols() {
                let a = x.get(i, k);
                let b = y.get(j, k);
                let (ar, ai) = (a.re.raw() as i128, a.im.raw() as i128);
                let (br, bi) = (b.re.raw() as i128, b.im.raw() as i128);
                re += ar * br + ai * bi;
                im += ai * br - ar * bi;
            }
            let shift = fmt.frac_bits() + acc_shift;
            let clamp = |v: i128| -> i64 {
                let r = reference_rne(v, shift);
                r.clamp(-(limit as i128 + 1), limit as i128) as i64
            };
            out.push((clamp(re), clamp(im)));
        }
    }
    out
}

/// Array bit-exactness: ten thousand randomized blocks, full-range operands
/// (saturation paths included), must match the definition bit for bit, with
/// the exact cycle count and the stated hardware inventory.
pub fn check_array_bit_exactness() -> CheckResult {
    let mut fails = Vec::new();
    let fmt = FixFormat::q10_8();
    let mut rng = ChaCha8Rng::seed_from_u64(0x57EC);
    let mut trials = 0usize;
    'outer: for _ in 0..ARRAY_TRIALS {
        let pes = 2usize;
        let steps = rng.gen_range(1..=64usize);
        let acc_shift = rng.gen_range(0..=8u32);
        let array = Ecmma::new(pes, fmt, acc_shift).unwrap();
        let mut x = CMat::zeros(pes, steps, fmt);
        let mut y = CMat::zeros(pes, steps, fmt);
        for mat in [&mut x, &mut y] {
            for i in 0..pes {
                for k in 0..steps {
                    let re = fmt.from_raw(rng.gen_range(-512..=511i64));
                    let im = fmt.from_raw(rng.gen_range(-512..=511i64));
                    mat.set(i, k, CFix::new(re, im));
                }
            }
        }
        let got = array.multiply_conj(&x, &y);
        if got.cycles != (pes * steps) as u64 {
            fails.push(format!(
                "cycle count {} ≠ {} for {pes} elements × {steps} steps",
                got.cycles,
                pes * steps
            ));
            break 'outer;
        }
        let expect = reference_product(&x, &y, acc_shift);
        for i in 0..pes {
            for j in 0..pes {
                let z = got.product.get(i, j);
                if (z.re.raw(), z.im.raw()) != expect[i * pes + j] {
                    fails.push(format!(
                        "trial {trials}: entry ({i},{j}) = ({},{}) ≠ definition {:?}",
                        z.re.raw(),
                        z.im.raw(),
                        expect[i * pes + j]
                    ));
                    break 'outer;
                }
            }
        }
        trials += 1;
    }
    let census = Ecmma::new(2, fmt, 9).unwrap().census();
    let expected_census = EcmmaCensus {
        processing_elements: 4,
        adders: 4,
        multiplexors: 8,
        registers: 12,
    };
    if census != expected_census {
        fails.push(format!("census {census:?} ≠ {expected_census:?}"));
    }
    result(
        "array-bit-exactness",
        fails,
        format!(
            "{trials} randomized blocks bit-identical to the definition; census: {} elements, {} adders, {} multiplexors, {} registers",
            census.processing_elements, census.adders, census.multiplexors, census.registers
        ),
    )
}

/// End-to-end accuracy over many seeded runs at the operating point: every
/// budget holds on every run and nothing saturates.
pub fn check_scenario_accuracy() -> CheckResult {
    let mut fails = Vec::new();
    let mut worst_cov = 0.0f64;
    let mut worst_eig = 0.0f64;
    let mut worst_uni = 0.0f64;
    let mut worst_rec = 0.0f64;
    for seed in 1..=SCENARIO_TRIALS {
        let cfg = RunConfig {
            seed,
            ..Default::default()
        };
        let run = match execute(&cfg) {
            Ok(r) => r,
            Err(e) => {
                fails.push(format!("seed {seed}: run failed: {e}"));
                continue;
            }
        };
        let a = &run.accuracy;
        worst_cov = worst_cov.max(a.covariance_max_err_lsb);
        worst_eig = worst_eig.max(a.eigenvalue_max_err_lsb);
        worst_uni = worst_uni.max(a.unitarity_err_lsb);
        worst_rec = worst_rec.max(a.reconstruction_err_lsb);
        if a.covariance_max_err_lsb > COVARIANCE_BUDGET_LSB {
            fails.push(format!(
                "seed {seed}: covariance error {:.2} LSB",
                a.covariance_max_err_lsb
            ));
        }
        if a.eigenvalue_max_err_lsb > EIGENVALUE_BUDGET_LSB {
            fails.push(format!(
                "seed {seed}: eigenvalue error {:.2} LSB",
                a.eigenvalue_max_err_lsb
            ));
        }
        if a.unitarity_err_lsb > UNITARITY_BUDGET_LSB {
            fails.push(format!(
                "seed {seed}: unitarity error {:.2} LSB",
                a.unitarity_err_lsb
            ));
        }
        if a.reconstruction_err_lsb > RECONSTRUCTION_BUDGET_LSB {
            fails.push(format!(
                "seed {seed}: reconstruction error {:.2} LSB",
                a.reconstruction_err_lsb
            ));
        }
        if a.saturation_count != 0 {
            fails.push(format!(
                "seed {seed}: {} saturation flags",
                a.saturation_count
            ));
        }
    }
    result(
        "scenario-accuracy",
        fails,
        format!(
            "{SCENARIO_TRIALS} seeded runs; worst LSB errors: covariance {worst_cov:.2}/{COVARIANCE_BUDGET_LSB}, eigenvalues {worst_eig:.2}/{EIGENVALUE_BUDGET_LSB}, unitarity {worst_uni:.2}/{UNITARITY_BUDGET_LSB}, reconstruction {worst_rec:.2}/{RECONSTRUCTION_BUDGET_LSB}; zero saturation"
        ),
    )
}

/// Reference solver: the off-diagonal norm falls strictly every sweep down
/// to the convergence floor on randomized spectra; the fixed-point engine's
/// converged off-diagonal noise stays under its per-row budget.
pub fn check_solver_convergence() -> CheckResult {
    let mut fails = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0C0_FFEE);
    for trial in 0..SOLVER_TRIALS {
        let n = [4usize, 6, 8][(trial % 3) as usize];
        let u = oracle::random_unitary(n, &mut rng);
        let d = {
            let spread: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.9)).collect();
            FloatMat::from_fn(n, n, |i, j| {
                if i == j {
                    num_complex::Complex64::new(spread[i], 0.0)
                } else {
                    num_complex::Complex64::new(0.0, 0.0)
                }
            })
        };
        let c = u.matmul(&d).matmul(&u.hermitian());
        match oracle::eigendecompose(&c) {
            Ok(evd) => {
                let trace = &evd.off_norm_trace;
                if trace.windows(2).any(|w| w[1] >= w[0]) {
                    fails.push(format!("trial {trial}: off-norm not strictly decreasing"));
                }
                if *trace.last().unwrap() >= SOLVER_FLOOR {
                    fails.push(format!(
                        "trial {trial}: final off-norm {:.3e} ≥ {SOLVER_FLOOR:.0e}",
                        trace.last().unwrap()
                    ));
                }
            }
            Err(e) => fails.push(format!("trial {trial}: solver failed: {e}")),
        }
    }

    // Fixed-point engine: converged off-diagonal noise per planted matrix.
    let fmt = FixFormat::q10_8();
    let lsb = fmt.lsb();
    let mut worst_rows = 0.0f64;
    for seed in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let n = 8;
        let u = oracle::random_unitary(n, &mut rng);
        let d = FloatMat::from_fn(n, n, |i, j| {
            if i == j {
                num_complex::Complex64::new(0.4 + 0.15 * i as f64, 0.0)
            } else {
                num_complex::Complex64::new(0.0, 0.0)
            }
        });
        let mut q = CMat::quantize(&u.matmul(&d).matmul(&u.hermitian()), fmt);
        for i in 0..n {
            let di = q.get(i, i);
            q.set(
                i,
                i,
                CFix::new(di.re, crate::fixedpoint::FixPoint::zero(fmt)),
            );
            for j in (i + 1)..n {
                let upper = q.get(i, j);
                q.set(j, i, upper.conj());
            }
        }
        let r = evd_run(&q, &EvdConfig::design_point()).unwrap();
        let off = r.per_sweep_off_norm.last().copied().unwrap();
        let budget = n as f64 * OFFDIAG_PER_ROW_BUDGET_LSB * lsb;
        worst_rows = worst_rows.max(off / (n as f64 * lsb));
        if off > budget {
            fails.push(format!(
                "seed {seed}: converged off-norm {off:.5} > {budget:.5} ({} rows × {OFFDIAG_PER_ROW_BUDGET_LSB} LSB)",
                n
            ));
        }
    }
    result(
        "solver-convergence",
        fails,
        format!(
            "{SOLVER_TRIALS} reference spectra converged strictly below {SOLVER_FLOOR:.0e}; fixed engine's converged off-norm ≤ {worst_rows:.2} LSB/row (budget {OFFDIAG_PER_ROW_BUDGET_LSB})"
        ),
    )
}

/// Round-robin orderings: for every even size, `n − 1` orderings of perfect
/// matchings covering every unordered pair exactly once.
pub fn check_ordering_coverage() -> CheckResult {
    let mut fails = Vec::new();
    let mut sizes = 0usize;
    for n in (4..=16usize).step_by(2) {
        let orderings = parallel_orderings(n).unwrap();
        if orderings.len() != n - 1 {
            fails.push(format!("n={n}: {} orderings ≠ {}", orderings.len(), n - 1));
        }
        let mut seen = std::collections::HashSet::new();
        for (oi, ordering) in orderings.iter().enumerate() {
            let mut used = vec![false; n];
            for &(a, b) in ordering {
                if a >= b || b >= n || used[a] || used[b] {
                    fails.push(format!("n={n} ordering {oi}: not a perfect matching"));
                    break;
                }
                used[a] = true;
                used[b] = true;
                if !seen.insert((a, b)) {
                    fails.push(format!("n={n}: pair ({a},{b}) appears twice"));
                }
            }
            if used.iter().any(|&u| !u) {
                fails.push(format!("n={n} ordering {oi}: leaves an index unpaired"));
            }
        }
        let expect_pairs = n * (n - 1) / 2;
        if seen.len() != expect_pairs {
            fails.push(format!(
                "n={n}: covered {} pairs ≠ C(n,2) = {expect_pairs}",
                seen.len()
            ));
        }
        sizes += 1;
    }
    result(
        "ordering-coverage",
        fails,
        format!("{sizes} even sizes: n−1 perfect matchings covering every pair exactly once"),
    )
}

/// Whitening quality: the all-reference chain is numerically exact and the
/// fixed-point chain whitens within its LSB budget.
pub fn check_whitening_quality() -> CheckResult {
    let mut fails = Vec::new();
    let mut worst_ref = 0.0f64;
    let mut worst_fix = 0.0f64;
    for seed in [11u64, 12, 13] {
        let cfg = RunConfig {
            seed,
            ..Default::default()
        };
        let run = execute(&cfg).unwrap();
        worst_ref = worst_ref.max(run.accuracy.oracle_whiteness_distance);
        worst_fix = worst_fix.max(run.accuracy.whiteness_err_lsb);
        if run.accuracy.oracle_whiteness_distance > ORACLE_WHITENESS_BOUND {
            fails.push(format!(
                "seed {seed}: reference whitening distance {:.3e} > {ORACLE_WHITENESS_BOUND:.0e}",
                run.accuracy.oracle_whiteness_distance
            ));
        }
        if run.accuracy.whiteness_err_lsb > WHITENESS_BUDGET_LSB {
            fails.push(format!(
                "seed {seed}: fixed whitening error {:.2} LSB > {WHITENESS_BUDGET_LSB}",
                run.accuracy.whiteness_err_lsb
            ));
        }
    }
    result(
        "whitening-quality",
        fails,
        format!(
            "reference ≤ {worst_ref:.2e} (bound {ORACLE_WHITENESS_BOUND:.0e}); fixed ≤ {worst_fix:.2} LSB (budget {WHITENESS_BUDGET_LSB})"
        ),
    )
}

type CheckFn = fn() -> CheckResult;

/// All checks in presentation order, with their registry names.
pub fn check_table() -> Vec<(&'static str, CheckFn)> {
    vec![
        ("steady-period", check_steady_period as CheckFn),
        ("latency-window", check_latency_window),
        ("rotation-cycle-budget", check_rotation_cycle_budget),
        ("throughput", check_throughput),
        ("array-bit-exactness", check_array_bit_exactness),
        ("scenario-accuracy", check_scenario_accuracy),
        ("solver-convergence", check_solver_convergence),
        ("ordering-coverage", check_ordering_coverage),
        ("whitening-quality", check_whitening_quality),
    ]
}

/// Runs one check by name.
pub fn run_check(name: &str) -> Result<CheckResult> {
    check_table()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, f)| f())
        .ok_or_else(|| {
            let known: Vec<&str> = check_table().iter().map(|(n, _)| *n).collect();
            Error::Config(format!(
                "unknown check '{name}'; available: {}",
                known.join(", ")
            ))
        })
}

/// Runs every check in order.
pub fn run_all_checks() -> Vec<CheckResult> {
    check_table().into_iter().map(|(_, f)| f()).collect()
}
