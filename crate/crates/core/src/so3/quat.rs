//! Unit quaternions (Hamilton convention, scalar first).

use super::{RotationMatrix, So3Error, QUAT_NORM_TOL};

/// A unit quaternion `(w, x, y, z)`.
///
/// `q` and `-q` encode the same rotation (double cover); both are
/// representable. [`UnitQuaternion::canonicalized`] picks the `w >= 0`
/// representative, breaking the `w = 0` tie by the first nonzero of
/// `(x, y, z)` being positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitQuaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl UnitQuaternion {
    /// Accepts components whose norm is within 1e-6 of 1 and renormalizes;
    /// rejects anything farther off.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, So3Error> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(So3Error::NonFinite {
                context: "quaternion",
            });
        }
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if (norm - 1.0).abs() > QUAT_NORM_TOL {
            return Err(So3Error::NotUnitQuaternion { norm });
        }
        Ok(Self {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    pub fn identity() -> Self {
        Self {
            w: 1.0,
            x: 0.0,
            y: 0.0,
            z: 0.0,
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }

    /// The `w >= 0` double-cover representative.
    pub fn canonicalized(&self) -> Self {
        let flip = if self.w != 0.0 {
            self.w < 0.0
        } else if self.x != 0.0 {
            self.x < 0.0
        } else if self.y != 0.0 {
            self.y < 0.0
        } else {
            self.z < 0.0
        };
        if flip {
            self.negated()
        } else {
            *self
        }
    }

    pub fn components(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    /// Conversion consistent with the crate's Euler convention, so that
    /// `(cos(t/2), 0, sin(t/2), 0)` maps to `Ry(t)` of the module docs.
    pub fn to_rotation(&self) -> RotationMatrix {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        let m = nalgebra::Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y + w * z),
            2.0 * (x * z - w * y),
            2.0 * (x * y - w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z + w * x),
            2.0 * (x * z + w * y),
            2.0 * (y * z - w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        RotationMatrix::from_matrix_unchecked(m)
    }
}

impl RotationMatrix {
    /// Robust extraction via the largest of trace and diagonal entries;
    /// returns the canonical (`w >= 0`) representative.
    pub fn to_quaternion(&self) -> UnitQuaternion {
        let m = self.matrix();
        let trace = m.trace();
        let (w, x, y, z);
        if trace > 0.0 {
            let s = (trace + 1.0).sqrt() * 2.0;
            w = 0.25 * s;
            x = (m[(1, 2)] - m[(2, 1)]) / s;
            y = (m[(2, 0)] - m[(0, 2)]) / s;
            z = (m[(0, 1)] - m[(1, 0)]) / s;
        } else if m[(0, 0)] >= m[(1, 1)] && m[(0, 0)] >= m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(1, 2)] - m[(2, 1)]) / s;
            x = 0.25 * s;
            y = (m[(0, 1)] + m[(1, 0)]) / s;
            z = (m[(2, 0)] + m[(0, 2)]) / s;
        } else if m[(1, 1)] >= m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            w = (m[(2, 0)] - m[(0, 2)]) / s;
            x = (m[(0, 1)] + m[(1, 0)]) / s;
            y = 0.25 * s;
            z = (m[(1, 2)] + m[(2, 1)]) / s;
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            w = (m[(0, 1)] - m[(1, 0)]) / s;
            x = (m[(2, 0)] + m[(0, 2)]) / s;
            y = (m[(1, 2)] + m[(2, 1)]) / s;
            z = 0.25 * s;
        }
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        UnitQuaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        }
        .canonicalized()
    }
}
