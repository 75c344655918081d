//! SO(3) toolkit for head-pose work: rotation representations and
//! conversions under a fixed pitch-yaw-roll convention, distance metrics
//! between rotations, the Opal loss with derived transition constants, and
//! single rotation averaging for reference-frame alignment.
//!
//! The crate is organized in four modules:
//!
//! - [`so3`]: rotation types (matrix, Euler angles, unit quaternion, 6D,
//!   axis-angle), conversions, exp/log maps and a seeded rotation sampler.
//! - [`metrics`]: pairwise distances (raw and wrapped Euler, chordal,
//!   deviation from identity, geodesic) and their data-set aggregates.
//! - [`opal`]: the piecewise L2/tanh/L1 loss over geodesic error, its
//!   influence function and a histogram-based parameter fit.
//! - [`alignment`]: Karcher-mean estimation of the constant reference-frame
//!   offset between a prediction set and its ground truth.
//!
//! All angles cross the public API in degrees; axis-angle vectors are in
//! radians.

pub mod alignment;
pub mod metrics;
pub mod opal;
pub mod so3;

pub use alignment::{align, karcher_mean, AlignmentOptions, AlignmentResult};
pub use metrics::{geodesic_distance, mean_geodesic_error};
pub use opal::OpalParams;
pub use so3::{
    exp_map, log_map, random_rotation, AngleRange, AxisAngle, EulerAngles, RotationMatrix,
    RotationSampler, SixD, UnitQuaternion,
};
