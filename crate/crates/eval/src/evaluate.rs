//! Metric evaluation over a joined sample set, with optional alignment.

use std::collections::BTreeMap;

use headpose_core::alignment::{align, AlignmentError, AlignmentOptions};
use headpose_core::metrics::{chordal_distance, per_angle_mae, wrapped_euler_distance};
use headpose_core::opal::{mean_opal_loss, OpalParams};
use headpose_core::so3::{EulerAngles, RotationMatrix};

use crate::binning::{bin_by_yaw, BinSpec};
use crate::error::EvalError;
use crate::report::{
    round_sig6, AlignmentFailure, AlignmentSummary, AngleMae, BinMetricsValues, BinReport,
    EulerDegrees, GroupAlignment, MetricsBlock,
};
use crate::samples::SampleRecord;

/// Yaw distance from a quarter turn below which the per-angle MAE columns
/// are flagged as untrustworthy.
const NEAR_GIMBAL_MARGIN_DEG: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct EvaluateOptions {
    pub align: bool,
    /// Estimate one offset per `group` value instead of a global one.
    pub group_align: bool,
    /// Apply the transposed offset estimate (comparison switch).
    pub transpose_delta: bool,
    pub bins: BinSpec,
    pub opal: Option<OpalParams>,
    pub tolerance_rad: f64,
    pub max_iterations: usize,
}

impl Default for EvaluateOptions {
    fn default() -> Self {
        Self {
            align: false,
            group_align: false,
            transpose_delta: false,
            bins: BinSpec::default_views(),
            opal: None,
            tolerance_rad: headpose_core::alignment::DEFAULT_TOLERANCE_RAD,
            max_iterations: headpose_core::alignment::DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutcome {
    pub unaligned: MetricsBlock,
    pub alignment: Option<AlignmentSummary>,
    pub aligned: Option<MetricsBlock>,
}

impl EvalOutcome {
    /// True when alignment was requested but did not converge; the report
    /// still carries the unaligned block plus the error note.
    pub fn alignment_failed(&self) -> bool {
        self.alignment.as_ref().is_some_and(|a| a.error.is_some())
    }
}

struct PairData {
    pred: RotationMatrix,
    gt: RotationMatrix,
    pred_euler: EulerAngles,
    gt_euler: EulerAngles,
    near_gimbal: bool,
}

impl PairData {
    fn new(pred: RotationMatrix, gt: RotationMatrix) -> Self {
        let pred_euler = pred.to_euler();
        let gt_euler = gt.to_euler();
        let near_gimbal = (90.0 - pred_euler.yaw.abs()).abs() <= NEAR_GIMBAL_MARGIN_DEG
            || (90.0 - gt_euler.yaw.abs()).abs() <= NEAR_GIMBAL_MARGIN_DEG;
        Self {
            pred,
            gt,
            pred_euler,
            gt_euler,
            near_gimbal,
        }
    }
}

fn bin_report(
    name: &str,
    pairs: &[&PairData],
    opal: Option<&OpalParams>,
) -> Result<BinReport, EvalError> {
    let count = pairs.len();
    let near_gimbal_count = pairs.iter().filter(|p| p.near_gimbal).count();
    if count == 0 {
        return Ok(BinReport {
            name: name.into(),
            count,
            near_gimbal_count,
            metrics: None,
        });
    }
    let matrix_pairs: Vec<(RotationMatrix, RotationMatrix)> =
        pairs.iter().map(|p| (p.pred, p.gt)).collect();
    let euler_pairs: Vec<(EulerAngles, EulerAngles)> =
        pairs.iter().map(|p| (p.pred_euler, p.gt_euler)).collect();
    let n = count as f64;
    let ge_mean = headpose_core::metrics::mean_geodesic_error(&matrix_pairs)?;
    let euc_mean = pairs
        .iter()
        .map(|p| wrapped_euler_distance(&p.pred_euler, &p.gt_euler))
        .sum::<f64>()
        / n;
    let chordal_mean = pairs
        .iter()
        .map(|p| chordal_distance(&p.pred, &p.gt))
        .sum::<f64>()
        / n;
    let opal_mean = match opal {
        Some(params) => Some(round_sig6(mean_opal_loss(&matrix_pairs, params)?)),
        None => None,
    };
    Ok(BinReport {
        name: name.into(),
        count,
        near_gimbal_count,
        metrics: Some(BinMetricsValues {
            ge_mean: round_sig6(ge_mean),
            mae_raw: AngleMae::rounded(&per_angle_mae(&euler_pairs, false)?),
            mae_wrapped: AngleMae::rounded(&per_angle_mae(&euler_pairs, true)?),
            euc_mean: round_sig6(euc_mean),
            chordal_mean: round_sig6(chordal_mean),
            opal_mean,
        }),
    })
}

fn metrics_block(
    samples: &[SampleRecord],
    pairs: &[PairData],
    bins: &BinSpec,
    opal: Option<&OpalParams>,
) -> Result<MetricsBlock, EvalError> {
    let all: Vec<&PairData> = pairs.iter().collect();
    let overall = bin_report("overall", &all, opal)?;
    let mut bin_reports = Vec::new();
    for (name, indices) in bin_by_yaw(samples, bins) {
        let members: Vec<&PairData> = indices.iter().map(|&i| &pairs[i]).collect();
        bin_reports.push(bin_report(&name, &members, opal)?);
    }
    Ok(MetricsBlock {
        overall,
        bins: bin_reports,
    })
}

/// Groups sample indices for alignment: one global group, or one per
/// `group` key (sorted; samples without a group fall under `(none)`).
pub fn alignment_groups(samples: &[SampleRecord], per_group: bool) -> Vec<(String, Vec<usize>)> {
    if !per_group {
        return vec![("global".into(), (0..samples.len()).collect())];
    }
    let mut map: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, sample) in samples.iter().enumerate() {
        let key = sample.group.clone().unwrap_or_else(|| "(none)".into());
        map.entry(key).or_default().push(i);
    }
    map.into_iter().collect()
}

pub fn evaluate(
    samples: &[SampleRecord],
    options: &EvaluateOptions,
) -> Result<EvalOutcome, EvalError> {
    if samples.is_empty() {
        return Err(EvalError::NoSamples);
    }
    let mut pairs = Vec::with_capacity(samples.len());
    for sample in samples {
        let pred = sample
            .prediction
            .ok_or_else(|| EvalError::MissingPrediction {
                id: sample.id.clone(),
            })?;
        pairs.push(PairData::new(pred, sample.ground_truth));
    }

    let unaligned = metrics_block(samples, &pairs, &options.bins, options.opal.as_ref())?;

    if !options.align {
        return Ok(EvalOutcome {
            unaligned,
            alignment: None,
            aligned: None,
        });
    }

    let align_options = AlignmentOptions {
        tolerance_rad: options.tolerance_rad,
        max_iterations: options.max_iterations,
        apply_transposed: options.transpose_delta,
    };
    let groups = alignment_groups(samples, options.group_align);
    let mut group_reports = Vec::new();
    let mut aligned_preds: Vec<Option<RotationMatrix>> = vec![None; samples.len()];
    let mut failure = None;

    for (group, indices) in &groups {
        let preds: Vec<RotationMatrix> = indices.iter().map(|&i| pairs[i].pred).collect();
        let gts: Vec<RotationMatrix> = indices.iter().map(|&i| pairs[i].gt).collect();
        match align(&preds, &gts, &align_options) {
            Ok((aligned, result)) => {
                for (&i, rotation) in indices.iter().zip(aligned) {
                    aligned_preds[i] = Some(rotation);
                }
                let delta_euler = result.delta_hat.to_euler();
                let m = result.delta_hat.matrix();
                group_reports.push(GroupAlignment {
                    group: group.clone(),
                    count: indices.len(),
                    delta: std::array::from_fn(|i| std::array::from_fn(|j| round_sig6(m[(i, j)]))),
                    delta_euler: EulerDegrees {
                        pitch: round_sig6(delta_euler.pitch),
                        yaw: round_sig6(delta_euler.yaw),
                        roll: round_sig6(delta_euler.roll),
                    },
                    iterations: result.iterations,
                    final_step_norm_rad: round_sig6(result.final_step_norm),
                    dispersion_deg: round_sig6(result.dispersion_deg),
                    ge_before: round_sig6(result.ge_before),
                    ge_after: round_sig6(result.ge_after),
                });
            }
            Err(e @ AlignmentError::NonConvergence { .. }) => {
                failure = Some(AlignmentFailure {
                    group: group.clone(),
                    message: e.to_string(),
                    convergence_failure: true,
                });
                break;
            }
            Err(other) => return Err(other.into()),
        }
    }

    let mode = if options.group_align {
        "per_group"
    } else {
        "global"
    };
    if let Some(failure) = failure {
        return Ok(EvalOutcome {
            unaligned,
            alignment: Some(AlignmentSummary {
                mode: mode.into(),
                transpose_applied: options.transpose_delta,
                groups: group_reports,
                error: Some(failure),
            }),
            aligned: None,
        });
    }

    let aligned_pairs: Vec<PairData> = pairs
        .iter()
        .zip(&aligned_preds)
        .map(|(pair, aligned)| PairData::new(aligned.expect("every group aligned"), pair.gt))
        .collect();
    let aligned_block = metrics_block(
        samples,
        &aligned_pairs,
        &options.bins,
        options.opal.as_ref(),
    )?;

    Ok(EvalOutcome {
        unaligned,
        alignment: Some(AlignmentSummary {
            mode: mode.into(),
            transpose_applied: options.transpose_delta,
            groups: group_reports,
            error: None,
        }),
        aligned: Some(aligned_block),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use headpose_core::so3::{exp_map, AxisAngle, RotationSampler};

    fn rot(p: f64, y: f64, r: f64) -> RotationMatrix {
        EulerAngles::new(p, y, r).to_rotation().unwrap()
    }

    fn sample(
        id: &str,
        group: Option<&str>,
        gt: RotationMatrix,
        pred: RotationMatrix,
    ) -> SampleRecord {
        SampleRecord {
            id: id.into(),
            group: group.map(String::from),
            ground_truth: gt,
            prediction: Some(pred),
        }
    }

    #[test]
    fn perfect_predictions_give_zero_metrics() {
        let samples: Vec<SampleRecord> = (0..6)
            .map(|i| {
                let r = rot(5.0 * i as f64, 10.0 * i as f64, -3.0 * i as f64);
                sample(&format!("s{i}"), None, r, r)
            })
            .collect();
        let options = EvaluateOptions {
            opal: Some(OpalParams::default()),
            ..Default::default()
        };
        let outcome = evaluate(&samples, &options).unwrap();
        let overall = outcome.unaligned.overall.metrics.unwrap();
        assert!(overall.ge_mean < 1e-5);
        assert!(overall.mae_raw.mean < 1e-5);
        assert!(overall.euc_mean < 1e-5);
        assert!(overall.chordal_mean < 1e-7);
        // the loss of a zero error is the constant offset b
        assert_abs_diff_eq!(
            overall.opal_mean.unwrap(),
            round_sig6(OpalParams::default().b),
            epsilon = 1e-6
        );
    }

    #[test]
    fn missing_prediction_is_an_error() {
        let mut s = sample("a", None, rot(0.0, 0.0, 0.0), rot(0.0, 0.0, 0.0));
        s.prediction = None;
        match evaluate(&[s], &EvaluateOptions::default()) {
            Err(EvalError::MissingPrediction { id }) => assert_eq!(id, "a"),
            other => panic!("expected MissingPrediction, got {other:?}"),
        }
        assert!(matches!(
            evaluate(&[], &EvaluateOptions::default()),
            Err(EvalError::NoSamples)
        ));
    }

    #[test]
    fn two_bin_toy_set_matches_hand_computation() {
        // two frontal samples with 10-degree yaw error, one profile sample
        // with 20 degrees
        let samples = vec![
            sample("f1", None, rot(0.0, 10.0, 0.0), rot(0.0, 20.0, 0.0)),
            sample("f2", None, rot(0.0, -30.0, 0.0), rot(0.0, -40.0, 0.0)),
            sample("p1", None, rot(0.0, 80.0, 0.0), rot(0.0, 100.0, 0.0)),
        ];
        let outcome = evaluate(&samples, &EvaluateOptions::default()).unwrap();
        let bins = &outcome.unaligned.bins;
        assert_eq!(bins[0].count, 2);
        assert_eq!(bins[1].count, 1);
        assert_eq!(bins[2].count, 0);
        assert!(bins[2].metrics.is_none());
        let frontal = bins[0].metrics.unwrap();
        assert_abs_diff_eq!(frontal.ge_mean, 10.0, epsilon = 1e-4);
        let overall = outcome.unaligned.overall.metrics.unwrap();
        assert_abs_diff_eq!(overall.ge_mean, (10.0 + 10.0 + 20.0) / 3.0, epsilon = 1e-4);
        // the profile pair straddles the quarter turn on the prediction side
        assert_eq!(outcome.unaligned.overall.near_gimbal_count, 0);
        assert_eq!(outcome.unaligned.bins[1].near_gimbal_count, 0);
    }

    #[test]
    fn near_gimbal_samples_are_flagged() {
        let samples = vec![sample(
            "g",
            None,
            rot(10.0, 89.5, 0.0),
            rot(10.0, 89.2, 0.0),
        )];
        let outcome = evaluate(&samples, &EvaluateOptions::default()).unwrap();
        assert_eq!(outcome.unaligned.overall.near_gimbal_count, 1);
    }

    #[test]
    fn alignment_reduces_ge_on_misaligned_set() {
        let delta = rot(3.0, 8.0, -2.0);
        let range = headpose_core::so3::AngleRange::new(-50.0, 50.0).unwrap();
        let mut sampler = RotationSampler::new(99);
        let samples: Vec<SampleRecord> = (0..300)
            .map(|i| {
                let gt = sampler.sample_rotation(&range, &range, &range);
                let noise_axis = sampler.sample_axis() * 2.0_f64.to_radians();
                let noise = exp_map(&AxisAngle::new(noise_axis).unwrap());
                let pred = gt.compose(&delta.inverse()).compose(&noise.inverse());
                sample(&format!("s{i}"), None, gt, pred)
            })
            .collect();
        let options = EvaluateOptions {
            align: true,
            ..Default::default()
        };
        let outcome = evaluate(&samples, &options).unwrap();
        let summary = outcome.alignment.as_ref().unwrap();
        assert_eq!(summary.groups.len(), 1);
        assert!(summary.error.is_none());
        let before = outcome.unaligned.overall.metrics.unwrap().ge_mean;
        let after = outcome
            .aligned
            .as_ref()
            .unwrap()
            .overall
            .metrics
            .unwrap()
            .ge_mean;
        assert!(after < before, "after {after} vs before {before}");
        assert!((after - 2.0).abs() < 0.2, "after = {after}");
        assert_abs_diff_eq!(summary.groups[0].ge_after, after, epsilon = 1e-4);
    }

    #[test]
    fn group_alignment_estimates_one_offset_per_group() {
        let delta_a = rot(0.0, 10.0, 0.0);
        let delta_b = rot(5.0, 0.0, 0.0);
        let range = headpose_core::so3::AngleRange::new(-40.0, 40.0).unwrap();
        let mut sampler = RotationSampler::new(7);
        let mut samples = Vec::new();
        for i in 0..100 {
            let gt = sampler.sample_rotation(&range, &range, &range);
            let (group, delta) = if i % 2 == 0 {
                ("a", delta_a)
            } else {
                ("b", delta_b)
            };
            let pred = gt.compose(&delta.inverse());
            samples.push(sample(&format!("s{i}"), Some(group), gt, pred));
        }
        let options = EvaluateOptions {
            align: true,
            group_align: true,
            ..Default::default()
        };
        let outcome = evaluate(&samples, &options).unwrap();
        let summary = outcome.alignment.unwrap();
        assert_eq!(summary.mode, "per_group");
        assert_eq!(summary.groups.len(), 2);
        assert_eq!(summary.groups[0].group, "a");
        assert_abs_diff_eq!(summary.groups[0].delta_euler.yaw, 10.0, epsilon = 1e-3);
        assert_abs_diff_eq!(summary.groups[1].delta_euler.pitch, 5.0, epsilon = 1e-3);
        let after = outcome.aligned.unwrap().overall.metrics.unwrap().ge_mean;
        assert!(after < 1e-4, "after = {after}");
    }

    #[test]
    fn convergence_failure_keeps_unaligned_block() {
        // residuals must vary, otherwise the iteration converges in zero
        // steps regardless of the cap
        let samples: Vec<SampleRecord> = (0..10)
            .map(|i| {
                let gt = rot(0.0, 3.0 * i as f64, 0.0);
                let delta = rot(0.0, 15.0 + i as f64, 0.0);
                sample(&format!("s{i}"), None, gt, gt.compose(&delta.inverse()))
            })
            .collect();
        let options = EvaluateOptions {
            align: true,
            max_iterations: 0,
            ..Default::default()
        };
        let outcome = evaluate(&samples, &options).unwrap();
        assert!(outcome.alignment_failed());
        assert!(outcome.aligned.is_none());
        let summary = outcome.alignment.unwrap();
        assert!(summary.error.as_ref().unwrap().convergence_failure);
        assert!(outcome.unaligned.overall.metrics.is_some());
    }
}
