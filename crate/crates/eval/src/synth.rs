//! Synthetic evaluation sets and the quaternion discontinuity sweep.

use headpose_core::so3::{
    exp_map, AngleRange, AxisAngle, EulerAngles, RotationMatrix, RotationSampler,
};
use serde::Serialize;

use crate::error::EvalError;
use crate::samples::PoseRow;

/// Parameters of the synthetic ground-truth/prediction generator.
///
/// Ground truth is sampled uniformly in the Euler ranges. Predictions
/// follow the constant-offset error model `pred * noise * delta = gt`: the
/// ground truth composed with the inverse misalignment, then perturbed by a
/// rotation of `noise_deg` degrees about a uniformly random axis.
#[derive(Debug, Clone)]
pub struct SynthParams {
    pub n: usize,
    pub yaw: AngleRange,
    pub pitch: AngleRange,
    pub roll: AngleRange,
    pub noise_deg: f64,
    pub misalignment: Option<RotationMatrix>,
    pub seed: u64,
}

pub fn synth_generate(params: &SynthParams) -> Result<(Vec<PoseRow>, Vec<PoseRow>), EvalError> {
    if params.n == 0 {
        return Err(EvalError::InvalidArgument(
            "synth size must be positive".into(),
        ));
    }
    if !params.noise_deg.is_finite() || params.noise_deg < 0.0 {
        return Err(EvalError::InvalidArgument(format!(
            "noise must be a non-negative number of degrees, got {}",
            params.noise_deg
        )));
    }
    let mut sampler = RotationSampler::new(params.seed);
    let mut gt_rows = Vec::with_capacity(params.n);
    let mut pred_rows = Vec::with_capacity(params.n);
    for i in 0..params.n {
        let gt = sampler.sample_rotation(&params.yaw, &params.pitch, &params.roll);
        let mut pred = gt;
        if let Some(delta) = &params.misalignment {
            pred = pred.compose(&delta.inverse());
        }
        if params.noise_deg > 0.0 {
            let axis = sampler.sample_axis() * params.noise_deg.to_radians();
            let noise = exp_map(&AxisAngle::new(axis).expect("finite noise axis"));
            pred = pred.compose(&noise.inverse());
        }
        let id = format!("s{i:06}");
        gt_rows.push(PoseRow {
            id: id.clone(),
            group: None,
            rotation: gt,
        });
        pred_rows.push(PoseRow {
            id,
            group: None,
            rotation: pred,
        });
    }
    Ok((gt_rows, pred_rows))
}

/// One step of the pure-yaw quaternion sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSample {
    pub yaw_deg: f64,
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Canonical quaternion components along a pure-yaw sweep from 0 to 360
/// degrees inclusive. Canonicalization collapses the double cover, which
/// concentrates the representation's discontinuity into a single sign jump
/// at the half turn.
pub fn quat_sweep(step_deg: f64) -> Result<Vec<SweepSample>, EvalError> {
    if !step_deg.is_finite() || step_deg <= 0.0 || step_deg > 360.0 {
        return Err(EvalError::InvalidArgument(format!(
            "sweep step must be in (0, 360], got {step_deg}"
        )));
    }
    let mut samples = Vec::new();
    let mut i = 0u32;
    loop {
        let yaw = f64::from(i) * step_deg;
        if yaw > 360.0 + 1e-9 {
            break;
        }
        let q = EulerAngles::new(0.0, yaw, 0.0)
            .to_rotation()
            .expect("finite angles")
            .to_quaternion()
            .canonicalized();
        samples.push(SweepSample {
            yaw_deg: yaw,
            w: q.w,
            x: q.x,
            y: q.y,
            z: q.z,
        });
        i += 1;
    }
    Ok(samples)
}

/// Midpoint yaw of every adjacent pair whose component change exceeds 1.
pub fn sweep_discontinuities(samples: &[SweepSample]) -> Vec<f64> {
    samples
        .windows(2)
        .filter_map(|pair| {
            let (a, b) = (&pair[0], &pair[1]);
            let jump = [b.w - a.w, b.x - a.x, b.y - a.y, b.z - a.z]
                .iter()
                .fold(0.0_f64, |m, d| m.max(d.abs()));
            (jump > 1.0).then(|| (a.yaw_deg + b.yaw_deg) / 2.0)
        })
        .collect()
}

/// Renders sweep samples as a CSV table.
pub fn render_sweep(samples: &[SweepSample]) -> String {
    let mut out = String::from("yaw_deg,qw,qx,qy,qz\n");
    for s in samples {
        out.push_str(&format!("{},{},{},{},{}\n", s.yaw_deg, s.w, s.x, s.y, s.z));
    }
    out
}
