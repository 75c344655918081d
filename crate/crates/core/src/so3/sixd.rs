//! The 6D rotation representation: the first two columns of a rotation
//! matrix, recovered by Gram-Schmidt. Continuous over all of SO(3).

use nalgebra::{Matrix3, Vector3};

use super::{RotationMatrix, So3Error};

const DEGENERACY_TOL: f64 = 1e-12;

/// Two 3-vectors standing for the first two columns of a rotation matrix.
///
/// No invariants are required on input: any pair with a nonzero first
/// vector and a second vector not parallel to it is recoverable. Pairs
/// produced by [`RotationMatrix::to_sixd`] are orthonormal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SixD {
    pub c1: Vector3<f64>,
    pub c2: Vector3<f64>,
}

impl SixD {
    pub fn new(c1: Vector3<f64>, c2: Vector3<f64>) -> Self {
        Self { c1, c2 }
    }

    /// Gram-Schmidt recovery: `b1 = c1/|c1|`, `b2` the normalized rejection
    /// of `c2` from `b1`, `b3 = b1 x b2`; the columns of the result.
    pub fn to_rotation(&self) -> Result<RotationMatrix, So3Error> {
        if !(self.c1.iter().all(|v| v.is_finite()) && self.c2.iter().all(|v| v.is_finite())) {
            return Err(So3Error::NonFinite {
                context: "6D representation",
            });
        }
        let n1 = self.c1.norm();
        if n1 <= DEGENERACY_TOL {
            return Err(So3Error::DegenerateSixD {
                reason: "first column is numerically zero",
            });
        }
        let b1 = self.c1 / n1;
        let rejected = self.c2 - b1 * b1.dot(&self.c2);
        let n2 = rejected.norm();
        if n2 <= DEGENERACY_TOL {
            return Err(So3Error::DegenerateSixD {
                reason: "columns are numerically parallel",
            });
        }
        let b2 = rejected / n2;
        let b3 = b1.cross(&b2);
        Ok(RotationMatrix::from_matrix_unchecked(
            Matrix3::from_columns(&[b1, b2, b3]),
        ))
    }
}

impl RotationMatrix {
    pub fn to_sixd(&self) -> SixD {
        let m = self.matrix();
        SixD::new(m.column(0).into(), m.column(1).into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3::EulerAngles;

    fn frob(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
        (a - b).norm()
    }

    #[test]
    fn identity_columns_recover_identity() {
        let s = SixD::new(Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0));
        assert_eq!(s.to_rotation().unwrap().matrix(), &Matrix3::identity());
    }

    #[test]
    fn identity_round_trip() {
        let s = RotationMatrix::identity().to_sixd();
        assert_eq!(s.c1, Vector3::new(1.0, 0.0, 0.0));
        assert_eq!(s.c2, Vector3::new(0.0, 1.0, 0.0));
    }

    #[test]
    fn gram_schmidt_undoes_scaling_and_shear() {
        let r = EulerAngles::new(33.0, -71.0, 140.0).to_rotation().unwrap();
        let s = r.to_sixd();
        let mangled = SixD::new(s.c1 * 2.0, s.c2 + s.c1 * 0.3);
        let recovered = mangled.to_rotation().unwrap();
        assert!(frob(recovered.matrix(), r.matrix()) < 1e-12);
    }

    #[test]
    fn round_trip_on_gimbal_matrix() {
        let r = EulerAngles::new(30.0, 90.0, 20.0).to_rotation().unwrap();
        let back = r.to_sixd().to_rotation().unwrap();
        assert!(frob(back.matrix(), r.matrix()) < 1e-12);
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let zero_first = SixD::new(Vector3::zeros(), Vector3::new(0.0, 1.0, 0.0));
        assert!(matches!(
            zero_first.to_rotation(),
            Err(So3Error::DegenerateSixD { .. })
        ));
        let parallel = SixD::new(Vector3::new(1.0, 2.0, 3.0), Vector3::new(2.0, 4.0, 6.0));
        assert!(parallel.to_rotation().is_err());
    }

    #[test]
    fn nearly_degenerate_input_still_yields_valid_rotation() {
        let c1 = Vector3::new(1.0, 0.0, 0.0);
        let c2 = Vector3::new(1.0, 1e-9, 0.0);
        let r = SixD::new(c1, c2).to_rotation().unwrap();
        assert!(r.orthonormality_defect() < 1e-12);
        assert!((r.matrix().determinant() - 1.0).abs() < 1e-12);
    }
}
