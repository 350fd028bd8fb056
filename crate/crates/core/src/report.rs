//! Serializable run report.
//!
//! The report is a stable JSON document (`schema: 1`) capturing the
//! configuration, every cycle figure, every accuracy figure, and both
//! eigenvalue lists. It contains no timestamps or environment details, so
//! two runs with the same configuration produce byte-identical reports —
//! reports can be diffed directly in regression setups.

use serde::{Deserialize, Serialize};

use crate::pipeline::{AccuracyFigures, CycleFigures, PipelineRun, RunConfig};

/// Version of the report document layout.
pub const REPORT_SCHEMA: u32 = 1;

/// Fixed and reference spectra, both descending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EigenReport {
    pub fixed: Vec<f64>,
    pub reference: Vec<f64>,
}

/// Rotation-engine activity over the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotationReport {
    pub applied: u64,
    pub skipped: u64,
    /// Lifted off-diagonal norm after each sweep.
    pub per_sweep_off_norm: Vec<f64>,
}

/// Complete description of one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub config: RunConfig,
    pub cycles: CycleFigures,
    pub accuracy: AccuracyFigures,
    pub eigenvalues: EigenReport,
    pub rotations: RotationReport,
}

impl RunReport {
    pub fn from_run(run: &PipelineRun) -> Self {
        RunReport {
            schema: REPORT_SCHEMA,
            config: run.config.clone(),
            cycles: run.cycles.clone(),
            accuracy: run.accuracy.clone(),
            eigenvalues: EigenReport {
                fixed: run.fixed_values.clone(),
                reference: run.oracle_values.clone(),
            },
            rotations: RotationReport {
                applied: run.evd.applied_rotations,
                skipped: run.evd.skipped_rotations,
                per_sweep_off_norm: run.evd.per_sweep_off_norm.clone(),
            },
        }
    }

    /// Human-readable summary, one fact per line.
    pub fn summary_lines(&self) -> Vec<String> {
        let c = &self.cycles;
        let a = &self.accuracy;
        vec![
            format!(
                "config: {}x{} {}-bit (frac {}), scenario {}, sequence {}, seed {}",
                self.config.channels,
                self.config.samples,
                self.config.word_length,
                self.config.frac_bits,
                self.config.scenario,
                self.config.sequence,
                self.config.seed
            ),
            format!(
                "cycles: load {}, prep latency {}, prep period {}, rotation {}, total latency {}",
                c.load, c.prep_latency, c.prep_period, c.evd, c.total_latency
            ),
            format!(
                "throughput: {:.1} matrices/s at {:.0} MHz (period {} cycles)",
                c.throughput_per_s,
                self.config.clock_hz / 1e6,
                c.bound_period
            ),
            format!(
                "accuracy (LSB): covariance {:.2}, eigenvalues {:.2}, unitarity {:.2}, reconstruction {:.2}, whiteness {:.2}",
                a.covariance_max_err_lsb,
                a.eigenvalue_max_err_lsb,
                a.unitarity_err_lsb,
                a.reconstruction_err_lsb,
                a.whiteness_err_lsb
            ),
            format!(
                "health: {} saturation flags, worst zeroed residual {} raw, rotations {} applied / {} skipped",
                a.saturation_count,
                a.max_offdiag_residual_raw,
                self.rotations.applied,
                self.rotations.skipped
            ),
        ]
    }
}
