//! Distances between rotations and their data-set aggregates.
//!
//! Euler-based distances come in a raw flavor (plain component differences,
//! the quantity behind the MAE columns of most head-pose benchmarks) and a
//! wrapped flavor that accounts for 360-degree periodicity. Neither is a
//! metric on SO(3): near a quarter-turn yaw the decomposition degenerates
//! and nearby rotations can have arbitrarily distant Euler triples. The
//! matrix-based distances (chordal, deviation from identity, geodesic) do
//! not suffer from this; the geodesic one reads directly as an angle and is
//! the primary evaluation measure here.
//!
//! Aggregates use a fixed sequential summation order so repeated runs are
//! bit-identical.

use thiserror::Error;

use crate::so3::{EulerAngles, RotationMatrix};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("empty input sequence")]
    EmptyInput,
}

/// Periodicity-aware distance between two angles in degrees, in `[0, 180]`.
///
/// The difference is reduced modulo 360 first, then the shorter way around
/// the circle is taken. On scalars the 1-norm and 2-norm variants coincide,
/// so a single function covers both. Non-finite inputs propagate as NaN.
pub fn wrapped_angle_diff(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// L1 norm of the raw angle differences, in degrees. No wrapping.
pub fn euler_mae(pred: &EulerAngles, gt: &EulerAngles) -> f64 {
    (pred.pitch - gt.pitch).abs() + (pred.yaw - gt.yaw).abs() + (pred.roll - gt.roll).abs()
}

/// Squared L2 norm of the raw angle differences, in degrees squared.
pub fn euler_mse(pred: &EulerAngles, gt: &EulerAngles) -> f64 {
    let dp = pred.pitch - gt.pitch;
    let dy = pred.yaw - gt.yaw;
    let dr = pred.roll - gt.roll;
    dp * dp + dy * dy + dr * dr
}

pub fn euler_rmse(pred: &EulerAngles, gt: &EulerAngles) -> f64 {
    euler_mse(pred, gt).sqrt()
}

/// Sum of the wrapped per-component differences, in degrees.
pub fn wrapped_euler_distance(pred: &EulerAngles, gt: &EulerAngles) -> f64 {
    wrapped_angle_diff(pred.pitch, gt.pitch)
        + wrapped_angle_diff(pred.yaw, gt.yaw)
        + wrapped_angle_diff(pred.roll, gt.roll)
}

/// Wrapped distance between two yaw angles, in degrees.
pub fn wrapped_yaw_distance(pred_yaw_deg: f64, gt_yaw_deg: f64) -> f64 {
    wrapped_angle_diff(pred_yaw_deg, gt_yaw_deg)
}

/// Frobenius norm of the matrix difference (chordal distance). Unitless,
/// in `[0, 2*sqrt(2)]`.
pub fn chordal_distance(pred: &RotationMatrix, gt: &RotationMatrix) -> f64 {
    (pred.matrix() - gt.matrix()).norm()
}

/// `|I - pred * gt^T|_F`. Equals the chordal distance for any pair.
pub fn identity_deviation(pred: &RotationMatrix, gt: &RotationMatrix) -> f64 {
    (nalgebra::Matrix3::identity() - pred.matrix() * gt.matrix().transpose()).norm()
}

/// Geodesic distance on SO(3) in degrees: the angle of the relative
/// rotation, `acos((tr(pred * gt^T) - 1) / 2)`, in `[0, 180]`.
///
/// The trace argument is clamped to `[-1, 1]` before `acos` since roundoff
/// can push it out by a few ulps.
pub fn geodesic_distance(pred: &RotationMatrix, gt: &RotationMatrix) -> f64 {
    let relative = pred.matrix() * gt.matrix().transpose();
    let cos = ((relative.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    cos.acos().to_degrees()
}

/// Arithmetic mean of the geodesic distance over `(prediction, ground
/// truth)` pairs, in degrees.
pub fn mean_geodesic_error(pairs: &[(RotationMatrix, RotationMatrix)]) -> Result<f64, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let sum: f64 = pairs
        .iter()
        .map(|(pred, gt)| geodesic_distance(pred, gt))
        .sum();
    Ok(sum / pairs.len() as f64)
}

/// Per-angle mean absolute errors over a data set, plus their mean, mirroring
/// the usual benchmark table columns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerAngleMae {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub mean: f64,
}

/// Mean absolute error per angle over `(prediction, ground truth)` Euler
/// pairs. `wrapped` selects the periodicity-aware difference; the raw
/// variant reproduces the conventional benchmark numbers.
pub fn per_angle_mae(
    pairs: &[(EulerAngles, EulerAngles)],
    wrapped: bool,
) -> Result<PerAngleMae, MetricError> {
    if pairs.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let diff = |a: f64, b: f64| {
        if wrapped {
            wrapped_angle_diff(a, b)
        } else {
            (a - b).abs()
        }
    };
    let mut sums = [0.0_f64; 3];
    for (pred, gt) in pairs {
        sums[0] += diff(pred.yaw, gt.yaw);
        sums[1] += diff(pred.pitch, gt.pitch);
        sums[2] += diff(pred.roll, gt.roll);
    }
    let n = pairs.len() as f64;
    let (yaw, pitch, roll) = (sums[0] / n, sums[1] / n, sums[2] / n);
    Ok(PerAngleMae {
        yaw,
        pitch,
        roll,
        mean: (yaw + pitch + roll) / 3.0,
    })
}
