//! Core SO(3) types and conversions.
//!
//! The Euler composition used throughout is pitch-yaw-roll about the camera
//! X, Y and Z axes, `R(p, y, r) = Rz(r) * Ry(y) * Rx(p)`, with the
//! elementary matrices
//!
//! ```text
//! Rx(p) = | 1    0      0     |   Ry(y) = | cos y  0  -sin y |   Rz(r) = |  cos r  sin r  0 |
//!         | 0   cos p   sin p |           |   0    1    0    |           | -sin r  cos r  0 |
//!         | 0  -sin p   cos p |           | sin y  0   cos y |           |    0      0    1 |
//! ```
//!
//! Note the sign placement: these are the transposes of the common textbook
//! active-rotation matrices. Every other representation in this crate
//! (quaternion, 6D, axis-angle) is wired to agree with this convention, so
//! for example `exp_map` of `(0, theta, 0)` equals `Ry(theta)` above and the
//! quaternion `(cos(theta/2), 0, sin(theta/2), 0)` converts to the same
//! matrix.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

mod euler;
mod quat;
mod sample;
mod sixd;

pub use euler::EulerAngles;
pub use quat::UnitQuaternion;
pub use sample::{random_rotation, AngleRange, RotationSampler};
pub use sixd::SixD;

/// Frobenius tolerance for the orthonormality and determinant invariants of
/// [`RotationMatrix`].
pub const ROTATION_TOL: f64 = 1e-9;

/// Quaternions whose norm deviates from 1 by more than this are rejected;
/// below it they are renormalized.
pub const QUAT_NORM_TOL: f64 = 1e-6;

/// Below this rotation angle the exp/log maps switch to series expansions.
const SMALL_ANGLE_RAD: f64 = 1e-7;

/// Within this distance of a half-turn the log map switches to the
/// diagonal-dominant axis extraction.
const NEAR_PI_RAD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So3Error {
    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },
    #[error("matrix is not a rotation: orthonormality defect {defect:.3e}, det {det:.9}")]
    NotARotation { defect: f64, det: f64 },
    #[error("quaternion norm {norm:.9} deviates from 1 by more than {QUAT_NORM_TOL:.0e}")]
    NotUnitQuaternion { norm: f64 },
    #[error("degenerate 6D representation: {reason}")]
    DegenerateSixD { reason: &'static str },
    #[error("invalid angle range: [{min}, {max}]")]
    InvalidRange { min: f64, max: f64 },
}

/// A 3x3 orthonormal matrix with determinant +1.
///
/// [`RotationMatrix::from_matrix`] validates the invariants; every
/// conversion in this crate then produces matrices that satisfy them by
/// construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RotationMatrix(Matrix3<f64>);

impl RotationMatrix {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    /// Validates orthonormality (`|R^T R - I|_F <= 1e-9`) and determinant
    /// (`|det - 1| <= 1e-9`).
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, So3Error> {
        if !m.iter().all(|v| v.is_finite()) {
            return Err(So3Error::NonFinite {
                context: "rotation matrix",
            });
        }
        let defect = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if defect > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(So3Error::NotARotation { defect, det });
        }
        Ok(Self(m))
    }

    /// Wraps a matrix that is already known to be a valid rotation, e.g. a
    /// product of validated rotations.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Self(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<f64> {
        self.0
    }

    /// `|R^T R - I|_F`, useful when reporting why an input was rejected.
    pub fn orthonormality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }

    /// Matrix product `self * other` (apply `other` first).
    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    /// Inverse rotation; the transpose.
    pub fn inverse(&self) -> Self {
        Self(self.0.transpose())
    }
}

/// Axis-angle (rotation vector) element: the direction is the rotation axis
/// and the magnitude the rotation angle in radians.
///
/// The canonical form produced by [`log_map`] has magnitude in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle(Vector3<f64>);

impl AxisAngle {
    pub fn new(v: Vector3<f64>) -> Result<Self, So3Error> {
        if !(v.x.is_finite() && v.y.is_finite() && v.z.is_finite()) {
            return Err(So3Error::NonFinite {
                context: "axis-angle vector",
            });
        }
        Ok(Self(v))
    }

    pub fn zero() -> Self {
        Self(Vector3::zeros())
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    /// Rotation angle in radians.
    pub fn angle_rad(&self) -> f64 {
        self.0.norm()
    }

    /// Rotation angle in degrees.
    pub fn angle_deg(&self) -> f64 {
        self.0.norm().to_degrees()
    }
}

/// Skew matrix of `v` under this crate's generator convention, chosen so
/// that `exp_map((theta, 0, 0))` reproduces the module-level `Rx(theta)`.
pub(crate) fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, v.z, -v.y, -v.z, 0.0, v.x, v.y, -v.x, 0.0)
}

pub(crate) fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(1, 2)], m[(2, 0)], m[(0, 1)])
}

/// Rodrigues formula.
pub(crate) fn exp_vec(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta2 = v.norm_squared();
    let (sinc, cosc) = if theta2 < SMALL_ANGLE_RAD * SMALL_ANGLE_RAD {
        // sin(t)/t and (1 - cos(t))/t^2 to second order
        (1.0 - theta2 / 6.0, 0.5 - theta2 / 24.0)
    } else {
        let theta = theta2.sqrt();
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let k = skew(v);
    Matrix3::identity() + k * sinc + k * k * cosc
}

/// Inverse of [`exp_vec`]; returns the canonical vector with magnitude in
/// `[0, pi]`.
pub(crate) fn log_vec(m: &Matrix3<f64>) -> Vector3<f64> {
    let cos = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let theta = cos.acos();
    // w = sin(theta) * axis
    let w = unskew(&(m - m.transpose())) * 0.5;
    if theta < SMALL_ANGLE_RAD {
        w * (1.0 + theta * theta / 6.0)
    } else if theta > std::f64::consts::PI - NEAR_PI_RAD {
        // sin(theta) vanishes; recover the axis from the symmetric part,
        // (M_sym - cos*I)/(1 - cos) = n n^T, via its dominant diagonal.
        let sym = (m + m.transpose()) * 0.5;
        let outer = (sym - Matrix3::identity() * cos) / (1.0 - cos);
        let i = if outer[(0, 0)] >= outer[(1, 1)] && outer[(0, 0)] >= outer[(2, 2)] {
            0
        } else if outer[(1, 1)] >= outer[(2, 2)] {
            1
        } else {
            2
        };
        let ni = outer[(i, i)].max(0.0).sqrt();
        let mut axis = Vector3::new(outer[(0, i)], outer[(1, i)], outer[(2, i)]) / ni;
        axis.normalize_mut();
        // At theta strictly below pi the skew part still carries the sign.
        if w.norm() > 1e-12 && axis.dot(&w) < 0.0 {
            axis = -axis;
        }
        axis * theta
    } else {
        // |w| = sin(theta) computed from the matrix entries directly; far
        // better conditioned near pi than sin(acos(...)).
        w * (theta / w.norm())
    }
}

/// Exponential map from axis-angle to a rotation matrix.
pub fn exp_map(v: &AxisAngle) -> RotationMatrix {
    RotationMatrix(exp_vec(&v.0))
}

/// Logarithm map; inverse of [`exp_map`] with canonical magnitude in
/// `[0, pi]`. At exactly a half-turn, one of the two antipodal axes is
/// returned deterministically (largest-diagonal extraction).
pub fn log_map(r: &RotationMatrix) -> AxisAngle {
    AxisAngle(log_vec(&r.0))
}
