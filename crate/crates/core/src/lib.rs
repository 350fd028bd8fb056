//! Cycle- and bit-accurate model of a fixed-point whitening front end for
//! blind source separation.
//!
//! The crate models the three stages a hardware preprocessor applies to a
//! block of complex antenna samples — mean removal, covariance accumulation,
//! and a CORDIC-based Hermitian eigendecomposition — together with the cycle
//! schedule of the units that execute them. Every arithmetic step goes
//! through the [`fixedpoint`] types, so results are bit-identical to the
//! register-transfer behaviour being modelled, and every schedule claim is
//! produced by an event simulation rather than a closed-form guess.
//!
//! A double-precision reference implementation lives in [`oracle`]; the
//! fixed-point pipeline is validated against it in units of the output
//! format's least significant bit.

pub mod checks;
pub mod cordic;
pub mod error;
pub mod evd;
pub mod fixedpoint;
pub mod io;
pub mod matrix;
pub mod mma;
pub mod oracle;
pub mod ordering;
pub mod pipeline;
pub mod prep;
pub mod report;
pub mod scenario;

pub use cordic::{CordicConfig, DirectionSequence};
pub use error::{Error, Result};
pub use evd::{EvdConfig, EvdResult, PairRotation};
pub use fixedpoint::{CFix, CProductAcc, FixFormat, FixPoint, WideAcc};
pub use matrix::{CMat, FloatMat};
pub use mma::{Ecmma, EcmmaCensus, EcmmaResult};
pub use pipeline::{AccuracyFigures, CycleFigures, PipelineRun, RunConfig};
pub use report::RunReport;
