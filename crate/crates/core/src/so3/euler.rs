//! Pitch-yaw-roll Euler angles and their composition/decomposition.

use nalgebra::Matrix3;

use super::{RotationMatrix, So3Error};

/// Detection threshold for the collapsed decomposition: only `|sin yaw|`
/// saturating to exactly 1 in f64 is treated as a half-pi yaw. Any wider
/// window would return the collapsed representative for matrices it cannot
/// reproduce to the crate's round-trip tolerance; right up to saturation,
/// `asin` and the scale-invariant `atan2` recover the angles accurately.
const GIMBAL_SIN_LIMIT: f64 = 1.0;

/// Pitch-yaw-roll Euler angles in degrees.
///
/// Any finite angles are accepted on input. The decomposition returned by
/// [`RotationMatrix::to_euler`] is the principal branch: yaw in
/// `[-90, 90]`, pitch and roll in `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub pitch: f64,
    pub yaw: f64,
    pub roll: f64,
}

impl EulerAngles {
    pub fn new(pitch: f64, yaw: f64, roll: f64) -> Self {
        Self { pitch, yaw, roll }
    }

    /// Composes `Rz(roll) * Ry(yaw) * Rx(pitch)` from the elementary
    /// matrices spelled out in the module docs.
    pub fn to_rotation(&self) -> Result<RotationMatrix, So3Error> {
        if !(self.pitch.is_finite() && self.yaw.is_finite() && self.roll.is_finite()) {
            return Err(So3Error::NonFinite {
                context: "euler angles",
            });
        }
        let m = rz(self.roll) * ry(self.yaw) * rx(self.pitch);
        Ok(RotationMatrix::from_matrix_unchecked(m))
    }
}

fn rx(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, s, 0.0, -s, c)
}

fn ry(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, 0.0, -s, 0.0, 1.0, 0.0, s, 0.0, c)
}

fn rz(deg: f64) -> Matrix3<f64> {
    let (s, c) = deg.to_radians().sin_cos();
    Matrix3::new(c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Wraps into `[-180, 180)`.
pub(crate) fn wrap_deg_180(x: f64) -> f64 {
    (x + 180.0).rem_euclid(360.0) - 180.0
}

impl RotationMatrix {
    /// Principal-branch pitch-yaw-roll decomposition.
    ///
    /// Away from the collapsed configuration this inverts
    /// [`EulerAngles::to_rotation`] exactly. When `|sin yaw|` saturates to
    /// 1, pitch and roll are no longer separable (only their combination is
    /// observable); the representative with roll = 0 and pitch carrying the
    /// combined angle is returned.
    pub fn to_euler(&self) -> EulerAngles {
        let m = self.matrix();
        let sy = m[(2, 0)].clamp(-1.0, 1.0);
        if sy.abs() >= GIMBAL_SIN_LIMIT {
            let yaw = 90.0_f64.copysign(sy);
            let combined = if sy > 0.0 {
                // pitch + roll
                m[(0, 1)].atan2(m[(1, 1)])
            } else {
                // roll - pitch, negated so the pitch slot carries it
                (-m[(0, 1)]).atan2(m[(1, 1)])
            };
            return EulerAngles::new(wrap_deg_180(combined.to_degrees()), yaw, 0.0);
        }
        let yaw = sy.asin().to_degrees();
        let pitch = (-m[(2, 1)]).atan2(m[(2, 2)]).to_degrees();
        let roll = (-m[(1, 0)]).atan2(m[(0, 0)]).to_degrees();
        EulerAngles::new(wrap_deg_180(pitch), yaw, wrap_deg_180(roll))
    }

    /// Wide-range decomposition: the branch with pitch in `[-90, 90]` and
    /// yaw covering the full turn, `[-180, 180)`.
    ///
    /// Every rotation has exactly two pitch-yaw-roll decompositions,
    /// related by `(p, y, r) ~ (p - 180, 180 - y, r - 180)`. The principal
    /// branch of [`RotationMatrix::to_euler`] keeps yaw within a quarter
    /// turn; this one keeps the head upright instead, which is the natural
    /// reading when yaw itself is the quantity of interest (view binning,
    /// range filters).
    pub fn to_euler_wide(&self) -> EulerAngles {
        let m = self.matrix();
        let sy = m[(2, 0)].clamp(-1.0, 1.0);
        if sy.abs() >= GIMBAL_SIN_LIMIT {
            return self.to_euler();
        }
        // |cos yaw| from the bottom row; its sign is fixed by requiring
        // cos(pitch) >= 0.
        let c = (m[(2, 1)] * m[(2, 1)] + m[(2, 2)] * m[(2, 2)]).sqrt();
        let s = if m[(2, 2)] >= 0.0 { 1.0 } else { -1.0 };
        let yaw = sy.atan2(c * s).to_degrees();
        let pitch = (-m[(2, 1)] * s).atan2(m[(2, 2)] * s).to_degrees();
        let roll = (-m[(1, 0)] * s).atan2(m[(0, 0)] * s).to_degrees();
        EulerAngles::new(wrap_deg_180(pitch), wrap_deg_180(yaw), wrap_deg_180(roll))
    }
}
