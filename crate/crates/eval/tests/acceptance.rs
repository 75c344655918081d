//! Acceptance suite: one test per release criterion. Each test prints a
//! PASS line with its measured runtime and enforces the runtime budget.
//!
//! Run with `cargo test -p headpose-eval --test acceptance -- --nocapture`
//! to see the lines.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use headpose_core::alignment::{
    align, alignment_residuals, karcher_mean_trace, AlignmentOptions, DEFAULT_MAX_ITERATIONS,
    DEFAULT_TOLERANCE_RAD,
};
use headpose_core::metrics::{
    chordal_distance, euler_mae, geodesic_distance, mean_geodesic_error, wrapped_angle_diff,
};
use headpose_core::opal::{opal_influence, opal_loss, OpalParams};
use headpose_core::so3::{
    exp_map, AngleRange, AxisAngle, EulerAngles, RotationMatrix, RotationSampler,
};
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frob(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    (a - b).norm()
}

fn finish(criterion: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed <= budget,
        "criterion {criterion} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
    println!("PASS criterion {criterion} ({elapsed:?})");
}

fn random_rotation_full(rng: &mut ChaCha8Rng) -> RotationMatrix {
    let p = rng.random_range(-180.0..180.0);
    let y = rng.random_range(-180.0..180.0);
    let r = rng.random_range(-180.0..180.0);
    EulerAngles::new(p, y, r).to_rotation().unwrap()
}

/// Pairs straddling the quarter-turn yaw stay geodesically close while
/// their principal Euler decompositions drift far apart.
#[test]
fn criterion_1_gimbal_lock_coherence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    // the fixed pair moves the whole 50-degree combined angle between the
    // pitch and roll slots
    let mut cases = vec![(50.0, 0.0, 50.0)];
    for _ in 0..100 {
        let p = rng.random_range(-80.0..80.0);
        let r = rng.random_range(-80.0..80.0);
        let gamma = rng.random_range(-60.0..60.0);
        cases.push((p, r, gamma));
    }
    let mut max_principal_mae = 0.0_f64;
    for (p, r, gamma) in cases {
        let low = EulerAngles::new(p, 89.5, r).to_rotation().unwrap();
        let high = EulerAngles::new(p - gamma, 90.5, r + gamma)
            .to_rotation()
            .unwrap();
        let ge = geodesic_distance(&low, &high);
        assert!(ge <= 1.01, "ge = {ge} for ({p}, {r}, {gamma})");
        max_principal_mae = max_principal_mae.max(euler_mae(&low.to_euler(), &high.to_euler()));
    }
    assert!(
        max_principal_mae >= 30.0,
        "principal mae only reached {max_principal_mae}"
    );
    finish("1 (gimbal-lock coherence)", start, Duration::from_secs(1));
}

/// The composition at and near a quarter-turn yaw matches its closed form
/// and first-order expansion.
#[test]
fn criterion_2_quarter_turn_algebra() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for _ in 0..100 {
        let p: f64 = rng.random_range(-180.0..180.0);
        let r: f64 = rng.random_range(-180.0..180.0);
        // exact closed form at yaw = 90: only pitch + roll survives
        let (sa, ca) = (p + r).to_radians().sin_cos();
        let closed_form = Matrix3::new(0.0, sa, -ca, 0.0, ca, sa, 1.0, 0.0, 0.0);
        let full = EulerAngles::new(p, 90.0, r).to_rotation().unwrap();
        let residual = frob(full.matrix(), &closed_form);
        assert!(residual <= 1e-12, "({p}, {r}): residual {residual:.3e}");

        // first-order form at yaw = 90 + delta
        for delta_deg in [0.1, 0.5] {
            let d = delta_deg * std::f64::consts::PI / 180.0;
            let (sp, cp) = p.to_radians().sin_cos();
            let (sr, cr) = r.to_radians().sin_cos();
            let first_order = Matrix3::new(-d * cr, sa, -ca, d * sr, ca, sa, 1.0, d * sp, -d * cp);
            let full = EulerAngles::new(p, 90.0 + delta_deg, r)
                .to_rotation()
                .unwrap();
            let residual = frob(full.matrix(), &first_order);
            assert!(
                residual <= 5.0 * d * d,
                "({p}, {r}, {delta_deg}): residual {residual:.3e} > {:.3e}",
                5.0 * d * d
            );
        }
    }
    finish("2 (quarter-turn algebra)", start, Duration::from_secs(1));
}

/// Geodesic metric axioms, the exp-map magnitude identity, wrapped
/// differences and the chordal closed-form relation.
#[test]
fn criterion_3_metric_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for _ in 0..10_000 {
        let a = random_rotation_full(&mut rng);
        let b = random_rotation_full(&mut rng);
        let c = random_rotation_full(&mut rng);
        let ab = geodesic_distance(&a, &b);
        let bc = geodesic_distance(&b, &c);
        let ac = geodesic_distance(&a, &c);
        assert!(ab + bc - ac >= -1e-9, "triangle slack {}", ab + bc - ac);
        assert!((ab - geodesic_distance(&b, &a)).abs() <= 1e-9);
        // identity of indiscernibles at the arccos resolution floor
        assert!(geodesic_distance(&a, &a) <= 5e-6);
    }

    let identity = RotationMatrix::identity();
    for _ in 0..1000 {
        let z: f64 = rng.random_range(-1.0..1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mag: f64 = rng.random_range(0.01..std::f64::consts::PI - 1e-3);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let v = Vector3::new(s * phi.cos(), s * phi.sin(), z) * mag;
        let ge = geodesic_distance(&identity, &exp_map(&AxisAngle::new(v).unwrap()));
        assert!(
            (ge - mag.to_degrees()).abs() <= 1e-8,
            "|v| = {mag}: ge = {ge}"
        );
    }

    assert!((wrapped_angle_diff(359.0, 1.0) - 2.0).abs() <= 1e-12);

    for _ in 0..1000 {
        let a = random_rotation_full(&mut rng);
        let b = random_rotation_full(&mut rng);
        let theta = geodesic_distance(&a, &b).to_radians();
        let expected = 2.0 * 2.0_f64.sqrt() * (theta / 2.0).sin();
        assert!((chordal_distance(&a, &b) - expected).abs() <= 1e-9);
    }
    finish("3 (metric suite)", start, Duration::from_secs(5));
}

/// Opal constants satisfy the transition identities; the analytic
/// influence matches finite differences and is exactly 1 beyond beta.
#[test]
fn criterion_4_opal_constants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    // Tuples keep both tanh-edge arguments at or below 3 so the slopes at
    // the transitions stay large enough for a meaningful relative check;
    // shapes beyond that bury the quadratic branch under the loss offset.
    let mut parameter_sets = vec![OpalParams::default()];
    while parameter_sets.len() < 101 {
        let epsilon: f64 = rng.random_range(0.2..20.0);
        let beta: f64 = (epsilon + rng.random_range(1.0..60.0)).min(179.0);
        let peak = epsilon + rng.random_range(0.1..0.9) * (beta - epsilon);
        let sigma_cap = (3.0 / (beta - peak)).min(3.0 / (peak - epsilon)).min(0.6);
        let sigma: f64 = rng.random_range(0.05..sigma_cap);
        if let Ok(params) = OpalParams::derive(epsilon, beta, sigma * peak, sigma) {
            parameter_sets.push(params);
        }
    }

    let h = 1e-3;
    for params in &parameter_sets {
        for (i, residual) in params.transition_residuals().iter().enumerate() {
            assert!(
                residual.abs() < 1e-9,
                "residual {i} = {residual:.3e} for {params:?}"
            );
        }

        // central differences on a log grid, keeping clear of the
        // breakpoints and of the quadratic region's vanishing slope
        let mut g = (0.2 * params.epsilon).max(0.01);
        while g < 179.0 {
            let near_break =
                (g - params.epsilon).abs() < 4.0 * h || (g - params.beta).abs() < 4.0 * h;
            if !near_break {
                let numeric = (opal_loss(g + h, params).unwrap()
                    - opal_loss(g - h, params).unwrap())
                    / (2.0 * h);
                let analytic = opal_influence(g, params).unwrap();
                let relative = (numeric - analytic).abs() / analytic.abs().max(1e-12);
                assert!(
                    relative < 1e-6,
                    "G = {g}: numeric {numeric}, analytic {analytic}, rel {relative:.3e}"
                );
            }
            g *= 1.35;
        }

        // unit influence on the linear tail
        let mut g = params.beta;
        while g <= 180.0 {
            assert_eq!(opal_influence(g, params).unwrap(), 1.0, "G = {g}");
            g += 7.0;
        }
        assert_eq!(opal_influence(180.0, params).unwrap(), 1.0);
    }
    finish("4 (opal constants)", start, Duration::from_secs(5));
}

/// Synthetic misalignment recovery: the estimated offset lands on the
/// injected one, aligned error returns to the noise floor, and the
/// averaging objective never increases.
#[test]
fn criterion_5_alignment_recovery() {
    let start = Instant::now();
    let axis = Vector3::new(2.0, -1.0, 0.5).normalize();
    let delta = exp_map(&AxisAngle::new(axis * 10.0_f64.to_radians()).unwrap());
    assert!((geodesic_distance(&RotationMatrix::identity(), &delta) - 10.0).abs() < 1e-9);

    let params = |misalignment: Option<RotationMatrix>| headpose_eval::SynthParams {
        n: 1000,
        yaw: AngleRange::new(-60.0, 60.0).unwrap(),
        pitch: AngleRange::new(-45.0, 45.0).unwrap(),
        roll: AngleRange::new(-45.0, 45.0).unwrap(),
        noise_deg: 2.0,
        misalignment,
        seed: 77,
    };
    let pairs_of = |gt: &[headpose_eval::PoseRow], pred: &[headpose_eval::PoseRow]| {
        pred.iter()
            .zip(gt)
            .map(|(p, g)| (p.rotation, g.rotation))
            .collect::<Vec<_>>()
    };

    // noise-only baseline with the identical seed (same draws)
    let (gt0, pred0) = headpose_eval::synth_generate(&params(None)).unwrap();
    let noise_ge = mean_geodesic_error(&pairs_of(&gt0, &pred0)).unwrap();

    let (gt, pred) = headpose_eval::synth_generate(&params(Some(delta))).unwrap();
    let preds: Vec<RotationMatrix> = pred.iter().map(|r| r.rotation).collect();
    let gts: Vec<RotationMatrix> = gt.iter().map(|r| r.rotation).collect();

    let ge_before = mean_geodesic_error(&pairs_of(&gt, &pred)).unwrap();
    assert!((9.0..=11.5).contains(&ge_before), "ge_before = {ge_before}");

    let (_, result) = align(&preds, &gts, &AlignmentOptions::default()).unwrap();
    let delta_error = geodesic_distance(&result.delta_hat, &delta);
    assert!(delta_error <= 0.3, "delta recovered {delta_error} deg off");
    assert!(
        (result.ge_after - noise_ge).abs() <= 0.05 * noise_ge,
        "ge_after = {} vs noise floor {noise_ge}",
        result.ge_after
    );

    // objective trace of the same averaging problem
    let residuals = alignment_residuals(&preds, &gts).unwrap();
    let trace =
        karcher_mean_trace(&residuals, DEFAULT_TOLERANCE_RAD, DEFAULT_MAX_ITERATIONS).unwrap();
    for pair in trace.objective.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-6,
            "objective increased: {} -> {}",
            pair[0],
            pair[1]
        );
    }

    // no-bias check: with no injected offset, alignment changes nothing
    let preds0: Vec<RotationMatrix> = pred0.iter().map(|r| r.rotation).collect();
    let gts0: Vec<RotationMatrix> = gt0.iter().map(|r| r.rotation).collect();
    let (_, unbiased) = align(&preds0, &gts0, &AlignmentOptions::default()).unwrap();
    assert!(
        (unbiased.ge_after - unbiased.ge_before).abs() < 0.05,
        "no-bias drift: {} -> {}",
        unbiased.ge_before,
        unbiased.ge_after
    );
    finish("5 (alignment recovery)", start, Duration::from_secs(10));
}

/// The canonical quaternion sweep jumps exactly once, at the half turn.
#[test]
fn criterion_6_quaternion_discontinuity() {
    let start = Instant::now();
    let samples = headpose_eval::quat_sweep(1.0).unwrap();
    let jumps = headpose_eval::sweep_discontinuities(&samples);
    assert_eq!(jumps.len(), 1, "jumps at {jumps:?}");
    assert!(
        jumps[0] > 179.0 && jumps[0] < 181.0,
        "jump at {} deg",
        jumps[0]
    );
    finish(
        "6 (quaternion discontinuity)",
        start,
        Duration::from_secs(1),
    );
}

fn run_cli(args: &[&str], dir: &Path) {
    let output = Command::new(env!("CARGO_BIN_EXE_headpose"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "headpose {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn assert_json_close(a: &serde_json::Value, b: &serde_json::Value, tol: f64, path: &str) {
    use serde_json::Value;
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            assert!((x - y).abs() <= tol, "{path}: {x} vs {y}");
        }
        (Value::Array(xs), Value::Array(ys)) => {
            assert_eq!(xs.len(), ys.len(), "{path}: array lengths differ");
            for (i, (x, y)) in xs.iter().zip(ys).enumerate() {
                assert_json_close(x, y, tol, &format!("{path}[{i}]"));
            }
        }
        (Value::Object(xo), Value::Object(yo)) => {
            let keys: Vec<&String> = xo.keys().collect();
            assert_eq!(
                keys,
                yo.keys().collect::<Vec<&String>>(),
                "{path}: keys differ"
            );
            for key in keys {
                assert_json_close(&xo[key], &yo[key], tol, &format!("{path}.{key}"));
            }
        }
        _ => assert_eq!(a, b, "{path}: values differ"),
    }
}

/// Representation round trips reproduce the matrix, and evaluation reports
/// do not depend on which representation carried the poses.
#[test]
fn criterion_7_representation_indifference() {
    let start = Instant::now();
    let full = AngleRange::new(-180.0, 180.0).unwrap();
    let mut sampler = RotationSampler::new(2024);
    let mut gt_rows = Vec::with_capacity(10_000);
    let mut pred_rows = Vec::with_capacity(10_000);
    for i in 0..10_000 {
        let rotation = sampler.sample_rotation(&full, &full, &full);

        let euler_rt = rotation.to_euler().to_rotation().unwrap();
        assert!(frob(euler_rt.matrix(), rotation.matrix()) < 1e-8);
        let quat_rt = rotation.to_quaternion().to_rotation();
        assert!(frob(quat_rt.matrix(), rotation.matrix()) < 1e-8);
        let sixd_rt = rotation.to_sixd().to_rotation().unwrap();
        assert!(frob(sixd_rt.matrix(), rotation.matrix()) < 1e-8);

        let noise = sampler.sample_axis() * 2.0_f64.to_radians();
        let pred = rotation.compose(&exp_map(&AxisAngle::new(noise).unwrap()));
        let id = format!("s{i:06}");
        gt_rows.push(headpose_eval::PoseRow {
            id: id.clone(),
            group: None,
            rotation,
        });
        pred_rows.push(headpose_eval::PoseRow {
            id,
            group: None,
            rotation: pred,
        });
    }

    let dir = tempfile::tempdir().unwrap();
    let reps = [
        headpose_eval::Representation::EulerDeg,
        headpose_eval::Representation::QuaternionWxyz,
        headpose_eval::Representation::MatrixRowMajor,
        headpose_eval::Representation::SixD,
    ];
    let mut blocks = Vec::new();
    for rep in reps {
        let gt_name = format!("gt_{}.csv", rep.as_str());
        let pred_name = format!("pred_{}.csv", rep.as_str());
        let report_name = format!("report_{}.json", rep.as_str());
        headpose_eval::save_pose_file(
            &dir.path().join(&gt_name),
            headpose_eval::FileFormat::Csv,
            rep,
            &gt_rows,
        )
        .unwrap();
        headpose_eval::save_pose_file(
            &dir.path().join(&pred_name),
            headpose_eval::FileFormat::Csv,
            rep,
            &pred_rows,
        )
        .unwrap();
        run_cli(
            &[
                "evaluate",
                "--gt",
                &gt_name,
                "--pred",
                &pred_name,
                "--rep",
                rep.as_str(),
                "--out",
                &report_name,
            ],
            dir.path(),
        );
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join(&report_name)).unwrap())
                .unwrap();
        blocks.push(report["unaligned"].clone());
    }
    for block in &blocks[1..] {
        assert_json_close(&blocks[0], block, 1e-6, "unaligned");
    }
    finish(
        "7 (round trips and representation indifference)",
        start,
        Duration::from_secs(30),
    );
}

/// Identical seeds and flags produce byte-identical synthetic sets and
/// reports.
#[test]
fn criterion_8_end_to_end_determinism() {
    let start = Instant::now();
    let run_once = |dir: &Path| {
        run_cli(
            &[
                "synth",
                "--n",
                "500",
                "--noise-deg",
                "2",
                "--misalign",
                "3:8:-2",
                "--seed",
                "7",
                "--gt-out",
                "gt.csv",
                "--pred-out",
                "pred.csv",
            ],
            dir,
        );
        run_cli(
            &[
                "evaluate",
                "--gt",
                "gt.csv",
                "--pred",
                "pred.csv",
                "--align",
                "--out",
                "report.json",
            ],
            dir,
        );
    };
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_once(dir_a.path());
    run_once(dir_b.path());
    for name in ["gt.csv", "pred.csv", "report.json"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    finish("8 (end-to-end determinism)", start, Duration::from_secs(60));
}
