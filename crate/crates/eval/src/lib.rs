//! Data plumbing and evaluation harness around [`headpose_core`]: pose file
//! loading and saving in four representations, yaw filtering and binning,
//! metric reports with optional reference-frame alignment, synthetic set
//! generation, and the quaternion discontinuity sweep.
//!
//! The `headpose` binary in this crate exposes all of it as subcommands.

mod error;

pub mod binning;
pub mod evaluate;
pub mod report;
pub mod samples;
pub mod synth;

pub use binning::{bin_by_yaw, filter_by_yaw, BinSpec, YawBin};
pub use error::EvalError;
pub use evaluate::{evaluate, EvalOutcome, EvaluateOptions};
pub use report::{render_report, write_report, EvalReport, ReportFormat};
pub use samples::{
    join_samples, load_pose_file, save_pose_file, FileFormat, PoseRow, Representation, SampleRecord,
};
pub use synth::{
    quat_sweep, render_sweep, sweep_discontinuities, synth_generate, SweepSample, SynthParams,
};
