//! End-to-end run of the whitening front end: scenario (or supplied block)
//! → quantize → centering + covariance → eigendecomposition, with the cycle
//! simulations for both halves and a double-precision reference chain
//! computed on the *same* quantized input.
//!
//! Every headline figure — latencies, the steady-state period, throughput,
//! and each accuracy number — is produced here from the simulations and the
//! arithmetic, not stored as a constant.

use serde::{Deserialize, Serialize};

use crate::cordic::CordicConfig;
use crate::error::{Error, Result};
use crate::evd::{evd_run, EvdConfig, EvdResult};
use crate::fixedpoint::FixFormat;
use crate::matrix::CMat;
use crate::oracle;
use crate::ordering::{lookup_sequence, simulate_issue, IssueSim, PipelineModel};
use crate::prep::{run_prep, simulate_schedule, PrepResult};
use crate::scenario::lookup_scenario;

/// Relative floor below which a whitening eigenvalue counts as rank loss.
pub const EIGENVALUE_FLOOR: f64 = 1e-8;

/// Full parameterization of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub channels: usize,
    pub samples: usize,
    pub word_length: u32,
    pub frac_bits: u32,
    pub cordic_iterations: u32,
    pub evd_sweeps: usize,
    pub scenario: String,
    pub sequence: String,
    pub seed: u64,
    pub clock_hz: f64,
}

impl Default for RunConfig {
    /// The design point: 8 antennas × 512 samples in the 10-bit format,
    /// 10 CORDIC iterations, 20 sweeps, hazard-free issue, 250 MHz clock.
    fn default() -> Self {
        RunConfig {
            channels: 8,
            samples: 512,
            word_length: 10,
            frac_bits: 8,
            cordic_iterations: 10,
            evd_sweeps: 20,
            scenario: "qpsk_sources".to_string(),
            sequence: "hazard-free".to_string(),
            seed: 1,
            clock_hz: 250e6,
        }
    }
}

impl RunConfig {
    pub fn format(&self) -> Result<FixFormat> {
        FixFormat::new(self.word_length, self.frac_bits)
    }
}

/// Cycle figures assembled from the two schedule simulations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleFigures {
    /// Cycles to stream one block in through the write port.
    pub load: u64,
    /// First-block preprocessing latency (load through covariance ready).
    pub prep_latency: u64,
    /// Steady-state preprocessing period under back-to-back blocks.
    pub prep_period: u64,
    /// Eigendecomposition cycles (issue schedule, drain overlapped).
    pub evd: u64,
    /// Issue-slot idle cycles within the eigendecomposition schedule.
    pub evd_idle_issue: u64,
    /// First-matrix latency through both halves.
    pub total_latency: u64,
    /// Pipelined steady-state period: the slower of the two halves.
    pub bound_period: u64,
    /// Matrices per second at the configured clock.
    pub throughput_per_s: f64,
}

/// Accuracy of the fixed-point chain, in least-significant-bit units of the
/// run's format (and the reference chain's own identity distance).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AccuracyFigures {
    /// Worst component error of the fixed covariance vs the reference
    /// covariance of the same quantized input.
    pub covariance_max_err_lsb: f64,
    /// Worst sorted-eigenvalue error vs the reference decomposition of the
    /// fixed covariance (isolates the rotation engine).
    pub eigenvalue_max_err_lsb: f64,
    /// Distance of `EᴴE` from the identity.
    pub unitarity_err_lsb: f64,
    /// Worst component error of `E·diag(λ)·Eᴴ` vs the fixed covariance.
    pub reconstruction_err_lsb: f64,
    /// Distance of the fixed-whitened covariance from the identity.
    pub whiteness_err_lsb: f64,
    /// Same distance for the all-reference chain (should be ≈ 0).
    pub oracle_whiteness_distance: f64,
    /// Worst residual overwritten by a structural zero, raw units.
    pub max_offdiag_residual_raw: i64,
    /// Saturation flags across centering, covariance, and the decomposition.
    pub saturation_count: u64,
}

/// Everything one run produces.
#[derive(Debug, Clone)]
pub struct PipelineRun {
    pub config: RunConfig,
    pub input: CMat,
    pub prep: PrepResult,
    pub evd: EvdResult,
    pub issue: IssueSim,
    /// Reference eigenvalues of the fixed covariance, descending.
    pub oracle_values: Vec<f64>,
    /// Fixed eigenvalues, descending.
    pub fixed_values: Vec<f64>,
    pub cycles: CycleFigures,
    pub accuracy: AccuracyFigures,
}

/// Generates the configured scenario, quantizes it, and runs the chain.
pub fn execute(cfg: &RunConfig) -> Result<PipelineRun> {
    let fmt = cfg.format()?;
    let kind = lookup_scenario(&cfg.scenario)?;
    let block = kind.generate(cfg.channels, cfg.samples, cfg.seed)?;
    let input = CMat::quantize(&block.observations, fmt);
    execute_on(cfg, input)
}

/// Runs the chain on an already-quantized input block.
pub fn execute_on(cfg: &RunConfig, input: CMat) -> Result<PipelineRun> {
    let fmt = cfg.format()?;
    if input.fmt() != fmt {
        return Err(Error::Config(format!(
            "input block format {:?} does not match the configured format {:?}",
            input.fmt(),
            fmt
        )));
    }
    if input.rows() != cfg.channels || input.cols() != cfg.samples {
        return Err(Error::Config(format!(
            "input block is {}×{}, config says {}×{}",
            input.rows(),
            input.cols(),
            cfg.channels,
            cfg.samples
        )));
    }
    let lsb = fmt.lsb();

    // Fixed-point chain.
    let prep = run_prep(&input)?;
    let cordic = CordicConfig::new(cfg.cordic_iterations, fmt)?;
    let evd_cfg = EvdConfig {
        sweeps: cfg.evd_sweeps,
        cordic,
        pipeline: PipelineModel::design_point(),
    };
    let evd = evd_run(&prep.covariance, &evd_cfg)?;

    // Cycle models: several back-to-back blocks for the steady period, the
    // issue schedule for the rotation half.
    let sched = simulate_schedule(cfg.channels, cfg.samples, 4)?;
    let strategy = lookup_sequence(&cfg.sequence)?;
    let issue = simulate_issue(
        cfg.channels,
        cfg.evd_sweeps,
        strategy.as_ref(),
        evd_cfg.pipeline,
    )?;
    let prep_latency = sched.first_latency();
    let prep_period = sched
        .steady_period()
        .expect("simulate_schedule(…, 4) always yields completion intervals");
    let bound_period = prep_period.max(issue.total_cycles);
    let cycles = CycleFigures {
        load: sched.load_done[0],
        prep_latency,
        prep_period,
        evd: issue.total_cycles,
        evd_idle_issue: issue.idle_issue_cycles,
        total_latency: prep_latency + issue.total_cycles,
        bound_period,
        throughput_per_s: cfg.clock_hz / bound_period as f64,
    };

    // Reference chain on the same quantized input.
    let x_f = input.to_float();
    let c_ref = oracle::covariance(&oracle::center(&x_f));
    let c_fix_f = prep.covariance.to_float();
    let ref_of_fixed = oracle::eigendecompose(&c_fix_f)?;
    let (oracle_values, _) = ref_of_fixed.sorted_descending();

    let mut fixed_values: Vec<f64> = evd.eigenvalues.iter().map(|v| v.to_f64()).collect();
    fixed_values.sort_by(|a, b| b.total_cmp(a));

    // Accuracy figures.
    let covariance_max_err_lsb = c_fix_f.max_component_diff(&c_ref) / lsb;
    let eigenvalue_max_err_lsb = fixed_values
        .iter()
        .zip(oracle_values.iter())
        .map(|(f, o)| (f - o).abs())
        .fold(0.0, f64::max)
        / lsb;
    let e_f = evd.vectors.to_float();
    let unitarity_err_lsb = oracle::distance_from_identity(&e_f.hermitian().matmul(&e_f)) / lsb;
    let d_f = crate::matrix::FloatMat::from_fn(cfg.channels, cfg.channels, |i, j| {
        if i == j {
            num_complex::Complex64::new(evd.eigenvalues[i].to_f64(), 0.0)
        } else {
            num_complex::Complex64::new(0.0, 0.0)
        }
    });
    let reconstruction_err_lsb = e_f
        .matmul(&d_f)
        .matmul(&e_f.hermitian())
        .max_component_diff(&c_fix_f)
        / lsb;

    let diag_values: Vec<f64> = evd.eigenvalues.iter().map(|v| v.to_f64()).collect();
    let whitened_fixed =
        oracle::whitened_covariance(&c_fix_f, &e_f, &diag_values, EIGENVALUE_FLOOR)?;
    let whiteness_err_lsb = oracle::distance_from_identity(&whitened_fixed) / lsb;

    let ref_chain = oracle::eigendecompose(&c_ref)?;
    let whitened_ref = oracle::whitened_covariance(
        &c_ref,
        &ref_chain.vectors,
        &ref_chain.eigenvalues,
        EIGENVALUE_FLOOR,
    )?;
    let oracle_whiteness_distance = oracle::distance_from_identity(&whitened_ref);

    let accuracy = AccuracyFigures {
        covariance_max_err_lsb,
        eigenvalue_max_err_lsb,
        unitarity_err_lsb,
        reconstruction_err_lsb,
        whiteness_err_lsb,
        oracle_whiteness_distance,
        max_offdiag_residual_raw: evd.max_offdiag_residual_raw,
        saturation_count: prep.centering_saturations
            + prep.covariance_saturations
            + evd.saturation_count,
    };

    Ok(PipelineRun {
        config: cfg.clone(),
        input,
        prep,
        evd,
        issue,
        oracle_values,
        fixed_values,
        cycles,
        accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_point_run_hits_the_headline_cycle_figures() {
        let run = execute(&RunConfig::default()).unwrap();
        assert_eq!(run.cycles.load, 2048);
        assert_eq!(run.cycles.prep_latency, 10240);
        assert_eq!(run.cycles.prep_period, 6144);
        assert_eq!(run.cycles.evd, 4480);
        assert_eq!(run.cycles.evd_idle_issue, 0);
        assert_eq!(run.cycles.total_latency, 14720);
        assert_eq!(run.cycles.bound_period, 6144);
        let expect = 250e6 / 6144.0;
        assert!((run.cycles.throughput_per_s - expect).abs() < 1e-6);
    }

    #[test]
    fn design_point_run_is_accurate_and_saturation_free() {
        let run = execute(&RunConfig::default()).unwrap();
        assert_eq!(run.accuracy.saturation_count, 0);
        assert!(run.accuracy.covariance_max_err_lsb <= 4.0);
        assert!(run.accuracy.eigenvalue_max_err_lsb <= 8.0);
        assert!(run.accuracy.unitarity_err_lsb <= 8.0);
        assert!(run.accuracy.reconstruction_err_lsb <= 16.0);
        assert!(run.accuracy.whiteness_err_lsb <= 10.0);
        assert!(run.accuracy.oracle_whiteness_distance <= 1e-8);
    }

    #[test]
    fn mismatched_input_shape_is_rejected() {
        let cfg = RunConfig::default();
        let wrong = CMat::zeros(4, 512, cfg.format().unwrap());
        assert!(matches!(execute_on(&cfg, wrong), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_names_are_rejected() {
        let cfg = RunConfig {
            scenario: "nope".into(),
            ..RunConfig::default()
        };
        assert!(execute(&cfg).is_err());
        let cfg2 = RunConfig {
            sequence: "nope".into(),
            ..RunConfig::default()
        };
        assert!(execute(&cfg2).is_err());
    }

    #[test]
    fn row_major_sequencing_shows_the_drain_cost() {
        let cfg = RunConfig {
            sequence: "row-major".into(),
            ..RunConfig::default()
        };
        let run = execute(&cfg).unwrap();
        // 7 orderings/sweep × 20 sweeps − 1 = 139 transitions, 8 cycles each.
        assert_eq!(run.cycles.evd, 4480 + 139 * 8);
        assert!(run.cycles.evd_idle_issue > 0);
    }
}
