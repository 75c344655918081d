//! Seeded random rotation sampling.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{EulerAngles, RotationMatrix, So3Error};

/// Closed interval of angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleRange {
    pub min_deg: f64,
    pub max_deg: f64,
}

impl AngleRange {
    pub fn new(min_deg: f64, max_deg: f64) -> Result<Self, So3Error> {
        if !(min_deg.is_finite() && max_deg.is_finite()) || min_deg > max_deg {
            return Err(So3Error::InvalidRange {
                min: min_deg,
                max: max_deg,
            });
        }
        Ok(Self { min_deg, max_deg })
    }

    pub fn fixed(value_deg: f64) -> Self {
        Self {
            min_deg: value_deg,
            max_deg: value_deg,
        }
    }
}

/// Deterministic rotation sampler.
///
/// Carries explicit seed state; create one per thread rather than sharing.
pub struct RotationSampler {
    rng: ChaCha8Rng,
}

impl RotationSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Uniform angles within the given ranges, in pitch, yaw, roll order.
    pub fn sample_euler(
        &mut self,
        yaw: &AngleRange,
        pitch: &AngleRange,
        roll: &AngleRange,
    ) -> EulerAngles {
        let p = self.sample_angle(pitch);
        let y = self.sample_angle(yaw);
        let r = self.sample_angle(roll);
        EulerAngles::new(p, y, r)
    }

    pub fn sample_rotation(
        &mut self,
        yaw: &AngleRange,
        pitch: &AngleRange,
        roll: &AngleRange,
    ) -> RotationMatrix {
        self.sample_euler(yaw, pitch, roll)
            .to_rotation()
            .expect("sampled angles are finite")
    }

    /// Uniform direction on the unit sphere.
    pub fn sample_axis(&mut self) -> Vector3<f64> {
        let z: f64 = self.rng.random_range(-1.0..=1.0);
        let phi: f64 = self.rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).max(0.0).sqrt();
        Vector3::new(s * phi.cos(), s * phi.sin(), z)
    }

    fn sample_angle(&mut self, range: &AngleRange) -> f64 {
        if range.min_deg == range.max_deg {
            range.min_deg
        } else {
            self.rng.random_range(range.min_deg..=range.max_deg)
        }
    }
}

/// One rotation with Euler angles drawn uniformly from the given ranges.
/// Deterministic for a fixed seed.
pub fn random_rotation(
    yaw: &AngleRange,
    pitch: &AngleRange,
    roll: &AngleRange,
    seed: u64,
) -> RotationMatrix {
    RotationSampler::new(seed).sample_rotation(yaw, pitch, roll)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Matrix3;

    #[test]
    fn zero_ranges_give_identity() {
        let zero = AngleRange::fixed(0.0);
        let r = random_rotation(&zero, &zero, &zero, 123);
        assert_eq!(r.matrix(), &Matrix3::identity());
    }

    #[test]
    fn fixed_seed_repeats_the_sequence() {
        let range = AngleRange::new(-180.0, 180.0).unwrap();
        let mut a = RotationSampler::new(7);
        let mut b = RotationSampler::new(7);
        for _ in 0..32 {
            let ra = a.sample_rotation(&range, &range, &range);
            let rb = b.sample_rotation(&range, &range, &range);
            assert_eq!(ra.matrix(), rb.matrix());
        }
    }

    #[test]
    fn invalid_range_is_rejected() {
        assert!(AngleRange::new(10.0, -10.0).is_err());
        assert!(AngleRange::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn sampled_yaw_is_uniform_over_full_circle() {
        // chi-squared against 36 bins of 10 degrees; 10^4 draws, fixed seed.
        // 60.3 is the 0.5% critical value for 35 degrees of freedom.
        let range = AngleRange::new(-180.0, 180.0).unwrap();
        let mut sampler = RotationSampler::new(42);
        let n = 10_000;
        let mut bins = [0usize; 36];
        for _ in 0..n {
            let e = sampler.sample_euler(&range, &range, &range);
            let idx = (((e.yaw + 180.0) / 10.0) as usize).min(35);
            bins[idx] += 1;
        }
        let expected = n as f64 / 36.0;
        let chi2: f64 = bins
            .iter()
            .map(|&o| {
                let d = o as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 60.3, "chi2 = {chi2:.1}");
    }

    #[test]
    fn sampled_axes_are_unit_and_cover_hemispheres() {
        let mut sampler = RotationSampler::new(9);
        let mut up = 0;
        for _ in 0..1000 {
            let axis = sampler.sample_axis();
            assert!((axis.norm() - 1.0).abs() < 1e-12);
            if axis.z > 0.0 {
                up += 1;
            }
        }
        assert!((300..700).contains(&up), "up = {up}");
    }
}
