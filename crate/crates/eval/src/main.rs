//! The `headpose` command line: pose file conversion, metric evaluation
//! with optional reference-frame alignment, alignment itself, synthetic
//! set generation, Opal parameter handling and the quaternion sweep.
//!
//! Exit codes: 0 on success, 1 on input errors, 2 on convergence errors.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use headpose_core::alignment::{
    AlignmentOptions, DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE_RAD, DISPERSION_WARN_DEG,
};
use headpose_core::opal::{fit_opal_params, OpalParams};
use headpose_core::so3::{AngleRange, EulerAngles, RotationMatrix};
use headpose_eval::evaluate::alignment_groups;
use headpose_eval::report::{
    file_sha256, render_report, EulerDegrees, EvalReport, GroupAlignment, InputDigest,
    ReportFormat, ToolInfo,
};
use headpose_eval::{
    evaluate, filter_by_yaw, join_samples, load_pose_file, quat_sweep, render_sweep,
    save_pose_file, sweep_discontinuities, synth_generate, BinSpec, EvalError, EvaluateOptions,
    FileFormat, PoseRow, Representation, SampleRecord, SynthParams,
};

#[derive(Parser)]
#[command(
    name = "headpose",
    version,
    about = "Rotation-representation conversion and head-pose evaluation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-serialize a pose file into another representation or format
    Convert(ConvertArgs),
    /// Evaluate predictions against ground truth and write a report
    Evaluate(EvaluateArgs),
    /// Estimate the reference-frame offset and write aligned predictions
    Align(AlignArgs),
    /// Generate a synthetic ground-truth/prediction file pair
    Synth(SynthArgs),
    /// Derive or fit Opal loss parameters
    Opal(OpalArgs),
    /// Emit canonical quaternion components along a pure-yaw sweep
    QuatSweep(QuatSweepArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// Input pose file
    #[arg(long = "in")]
    input: PathBuf,
    /// Input representation
    #[arg(long, value_enum)]
    rep: Representation,
    /// Input file format
    #[arg(long, value_enum, default_value = "csv")]
    file_format: FileFormat,
    /// Output pose file
    #[arg(long)]
    out: PathBuf,
    /// Output representation (defaults to the input one)
    #[arg(long, value_enum)]
    out_rep: Option<Representation>,
    /// Output file format (defaults to the input one)
    #[arg(long, value_enum)]
    out_format: Option<FileFormat>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ground-truth pose file
    #[arg(long)]
    gt: PathBuf,
    /// Prediction pose file
    #[arg(long)]
    pred: PathBuf,
    /// Representation of both files
    #[arg(long, value_enum, default_value = "euler_deg")]
    rep: Representation,
    /// Pose file format
    #[arg(long, value_enum, default_value = "csv")]
    file_format: FileFormat,
    /// Estimate and remove the reference-frame offset
    #[arg(long)]
    align: bool,
    /// Align per group key instead of globally (implies --align)
    #[arg(long)]
    group_align: bool,
    /// Apply the transposed offset estimate (comparison switch)
    #[arg(long)]
    transpose_delta: bool,
    /// View bins as name:lo:hi,... over absolute yaw
    #[arg(long, default_value = "frontal:0:60,profile:60:120,back:120:180")]
    bins: String,
    /// Keep only samples with ground-truth yaw in MIN:MAX degrees
    #[arg(long, value_parser = parse_min_max, allow_hyphen_values = true)]
    yaw_filter: Option<(f64, f64)>,
    /// Apply the yaw filter bounds to pitch and roll as well
    #[arg(long, requires = "yaw_filter")]
    tri_angle_filter: bool,
    /// Opal parameter file; adds the mean Opal loss to the report
    #[arg(long)]
    opal: Option<PathBuf>,
    /// Report output path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    /// Convergence tolerance for the alignment iteration, radians
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_RAD)]
    tol: f64,
    /// Iteration cap for the alignment
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
}

#[derive(Args)]
struct AlignArgs {
    /// Ground-truth pose file
    #[arg(long)]
    gt: PathBuf,
    /// Prediction pose file
    #[arg(long)]
    pred: PathBuf,
    /// Representation of both files
    #[arg(long, value_enum, default_value = "euler_deg")]
    rep: Representation,
    /// Pose file format
    #[arg(long, value_enum, default_value = "csv")]
    file_format: FileFormat,
    /// Output path for the aligned predictions
    #[arg(long)]
    out: PathBuf,
    /// Representation of the aligned output (defaults to --rep)
    #[arg(long, value_enum)]
    out_rep: Option<Representation>,
    /// Offset summary output path (stdout when omitted)
    #[arg(long)]
    delta_out: Option<PathBuf>,
    /// Estimate one offset per group key
    #[arg(long)]
    group_align: bool,
    /// Apply the transposed offset estimate (comparison switch)
    #[arg(long)]
    transpose_delta: bool,
    /// Convergence tolerance, radians
    #[arg(long, default_value_t = DEFAULT_TOLERANCE_RAD)]
    tol: f64,
    /// Iteration cap
    #[arg(long, default_value_t = DEFAULT_MAX_ITERATIONS)]
    max_iter: usize,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of samples
    #[arg(long)]
    n: usize,
    /// Yaw range MIN:MAX, degrees
    #[arg(long, value_parser = parse_min_max, allow_hyphen_values = true, default_value = "-180:180")]
    yaw_range: (f64, f64),
    /// Pitch range MIN:MAX, degrees
    #[arg(long, value_parser = parse_min_max, allow_hyphen_values = true, default_value = "-45:45")]
    pitch_range: (f64, f64),
    /// Roll range MIN:MAX, degrees
    #[arg(long, value_parser = parse_min_max, allow_hyphen_values = true, default_value = "-45:45")]
    roll_range: (f64, f64),
    /// Per-sample noise rotation magnitude, degrees
    #[arg(long, default_value_t = 0.0)]
    noise_deg: f64,
    /// Constant misalignment as PITCH:YAW:ROLL degrees
    #[arg(long, value_parser = parse_euler_triple, allow_hyphen_values = true)]
    misalign: Option<EulerTripleArg>,
    /// Seed for all randomness
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Ground-truth output path
    #[arg(long)]
    gt_out: PathBuf,
    /// Prediction output path
    #[arg(long)]
    pred_out: PathBuf,
    /// Output representation
    #[arg(long, value_enum, default_value = "euler_deg")]
    rep: Representation,
    /// Output file format
    #[arg(long, value_enum, default_value = "csv")]
    file_format: FileFormat,
}

#[derive(Args)]
struct OpalArgs {
    #[command(subcommand)]
    mode: OpalMode,
}

#[derive(Subcommand)]
enum OpalMode {
    /// Derive the loss constants from epsilon, beta, mu and sigma
    Derive {
        /// L2-to-tanh threshold, degrees
        #[arg(long)]
        epsilon: f64,
        /// tanh-to-L1 threshold, degrees
        #[arg(long)]
        beta: f64,
        /// Bump center (unitless); the influence peak sits at mu/sigma degrees
        #[arg(long)]
        mu: f64,
        /// Bump width, per degree
        #[arg(long)]
        sigma: f64,
        /// Parameter file output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the influence bump to a file of geodesic errors (one per line)
    Fit {
        /// Text file of error samples in degrees, one per line
        #[arg(long)]
        samples: PathBuf,
        /// L2-to-tanh threshold, degrees
        #[arg(long)]
        epsilon: f64,
        /// tanh-to-L1 threshold, degrees
        #[arg(long)]
        beta: f64,
        /// Parameter file output path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct QuatSweepArgs {
    /// Sweep step, degrees
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
struct EulerTripleArg {
    pitch: f64,
    yaw: f64,
    roll: f64,
}

fn parse_min_max(raw: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = raw
        .split_once(':')
        .ok_or_else(|| format!("expected MIN:MAX, got '{raw}'"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .map_err(|_| format!("invalid number '{lo}'"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .map_err(|_| format!("invalid number '{hi}'"))?;
    if !(lo.is_finite() && hi.is_finite()) || lo > hi {
        return Err(format!("invalid range {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_euler_triple(raw: &str) -> Result<EulerTripleArg, String> {
    let fields: Vec<&str> = raw.split(':').collect();
    if fields.len() != 3 {
        return Err(format!("expected PITCH:YAW:ROLL, got '{raw}'"));
    }
    let mut values = [0.0f64; 3];
    for (slot, field) in values.iter_mut().zip(&fields) {
        *slot = field
            .trim()
            .parse()
            .map_err(|_| format!("invalid number '{field}'"))?;
    }
    Ok(EulerTripleArg {
        pitch: values[0],
        yaw: values[1],
        roll: values[2],
    })
}

fn angle_range(pair: (f64, f64)) -> Result<AngleRange, EvalError> {
    AngleRange::new(pair.0, pair.1).map_err(|e| EvalError::InvalidArgument(e.to_string()))
}

fn write_or_print(path: Option<&Path>, content: &str) -> Result<(), EvalError> {
    match path {
        Some(path) => std::fs::write(path, content).map_err(|source| EvalError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn load_opal_file(path: &Path) -> Result<OpalParams, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(OpalParams::from_kv_str(&text)?)
}

fn complete_pairs(
    samples: &[SampleRecord],
) -> Result<(Vec<RotationMatrix>, Vec<RotationMatrix>), EvalError> {
    let mut preds = Vec::with_capacity(samples.len());
    let mut gts = Vec::with_capacity(samples.len());
    for sample in samples {
        let pred = sample
            .prediction
            .ok_or_else(|| EvalError::MissingPrediction {
                id: sample.id.clone(),
            })?;
        preds.push(pred);
        gts.push(sample.ground_truth);
    }
    Ok((preds, gts))
}

fn run_convert(args: ConvertArgs) -> Result<ExitCode, EvalError> {
    let rows = load_pose_file(&args.input, args.file_format, args.rep)?;
    save_pose_file(
        &args.out,
        args.out_format.unwrap_or(args.file_format),
        args.out_rep.unwrap_or(args.rep),
        &rows,
    )?;
    Ok(ExitCode::SUCCESS)
}

fn run_evaluate(args: EvaluateArgs) -> Result<ExitCode, EvalError> {
    let bins = BinSpec::parse(&args.bins)?;
    let opal = args.opal.as_deref().map(load_opal_file).transpose()?;
    let gt_rows = load_pose_file(&args.gt, args.file_format, args.rep)?;
    let pred_rows = load_pose_file(&args.pred, args.file_format, args.rep)?;
    let mut samples = join_samples(gt_rows, Some(pred_rows))?;
    if let Some((lo, hi)) = args.yaw_filter {
        let before = samples.len();
        samples = filter_by_yaw(samples, lo, hi, args.tri_angle_filter);
        eprintln!(
            "yaw filter [{lo}, {hi}]: kept {} of {before} samples",
            samples.len()
        );
    }

    let options = EvaluateOptions {
        align: args.align || args.group_align,
        group_align: args.group_align,
        transpose_delta: args.transpose_delta,
        bins: bins.clone(),
        opal,
        tolerance_rad: args.tol,
        max_iterations: args.max_iter,
    };
    let outcome = evaluate(&samples, &options)?;

    if let Some(summary) = &outcome.alignment {
        for group in &summary.groups {
            if group.dispersion_deg > DISPERSION_WARN_DEG {
                eprintln!(
                    "warning: residual dispersion in group '{}' is {:.1} deg; \
                     the mean may be poorly determined",
                    group.group, group.dispersion_deg
                );
            }
        }
    }

    let mut parameters = BTreeMap::new();
    parameters.insert("rep".into(), args.rep.as_str().to_string());
    parameters.insert("file_format".into(), args.file_format.to_string());
    parameters.insert("align".into(), options.align.to_string());
    parameters.insert("group_align".into(), args.group_align.to_string());
    parameters.insert("transpose_delta".into(), args.transpose_delta.to_string());
    parameters.insert("bins".into(), bins.spec_string());
    parameters.insert(
        "yaw_filter".into(),
        args.yaw_filter
            .map(|(lo, hi)| format!("{lo}:{hi}"))
            .unwrap_or_else(|| "none".into()),
    );
    parameters.insert("tri_angle_filter".into(), args.tri_angle_filter.to_string());
    parameters.insert(
        "opal".into(),
        args.opal
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "none".into()),
    );
    parameters.insert("tolerance_rad".into(), format!("{}", args.tol));
    parameters.insert("max_iterations".into(), args.max_iter.to_string());

    let report = EvalReport {
        tool: ToolInfo::default(),
        parameters,
        inputs: vec![
            InputDigest {
                role: "ground_truth".into(),
                path: args.gt.display().to_string(),
                sha256: file_sha256(&args.gt)?,
            },
            InputDigest {
                role: "prediction".into(),
                path: args.pred.display().to_string(),
                sha256: file_sha256(&args.pred)?,
            },
        ],
        unaligned: outcome.unaligned.clone(),
        alignment: outcome.alignment.clone(),
        aligned: outcome.aligned.clone(),
    };
    write_or_print(args.out.as_deref(), &render_report(&report, args.format))?;

    if outcome.alignment_failed() {
        let failure = outcome
            .alignment
            .as_ref()
            .and_then(|a| a.error.as_ref())
            .expect("failure flagged");
        eprintln!(
            "alignment did not converge (group '{}'); report contains the unaligned block only",
            failure.group
        );
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn run_align(args: AlignArgs) -> Result<ExitCode, EvalError> {
    let gt_rows = load_pose_file(&args.gt, args.file_format, args.rep)?;
    let pred_rows = load_pose_file(&args.pred, args.file_format, args.rep)?;
    let samples = join_samples(gt_rows, Some(pred_rows))?;
    let (preds, gts) = complete_pairs(&samples)?;

    let options = AlignmentOptions {
        tolerance_rad: args.tol,
        max_iterations: args.max_iter,
        apply_transposed: args.transpose_delta,
    };
    let groups = alignment_groups(&samples, args.group_align);
    let mut aligned_rows: Vec<Option<PoseRow>> = vec![None; samples.len()];
    let mut summaries = Vec::new();
    for (group, indices) in &groups {
        let group_preds: Vec<RotationMatrix> = indices.iter().map(|&i| preds[i]).collect();
        let group_gts: Vec<RotationMatrix> = indices.iter().map(|&i| gts[i]).collect();
        let (aligned, result) =
            headpose_core::alignment::align(&group_preds, &group_gts, &options)?;
        if result.dispersion_deg > DISPERSION_WARN_DEG {
            eprintln!(
                "warning: residual dispersion in group '{group}' is {:.1} deg; \
                 the mean may be poorly determined",
                result.dispersion_deg
            );
        }
        for (&i, rotation) in indices.iter().zip(aligned) {
            aligned_rows[i] = Some(PoseRow {
                id: samples[i].id.clone(),
                group: samples[i].group.clone(),
                rotation,
            });
        }
        let delta_euler = result.delta_hat.to_euler();
        let m = result.delta_hat.matrix();
        summaries.push(GroupAlignment {
            group: group.clone(),
            count: indices.len(),
            delta: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)])),
            delta_euler: EulerDegrees {
                pitch: delta_euler.pitch,
                yaw: delta_euler.yaw,
                roll: delta_euler.roll,
            },
            iterations: result.iterations,
            final_step_norm_rad: result.final_step_norm,
            dispersion_deg: result.dispersion_deg,
            ge_before: result.ge_before,
            ge_after: result.ge_after,
        });
    }

    let rows: Vec<PoseRow> = aligned_rows
        .into_iter()
        .map(|r| r.expect("all groups aligned"))
        .collect();
    save_pose_file(
        &args.out,
        args.file_format,
        args.out_rep.unwrap_or(args.rep),
        &rows,
    )?;

    let mut summary_text =
        serde_json::to_string_pretty(&summaries).expect("summary serialization cannot fail");
    summary_text.push('\n');
    write_or_print(args.delta_out.as_deref(), &summary_text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_synth(args: SynthArgs) -> Result<ExitCode, EvalError> {
    let misalignment = args
        .misalign
        .map(|triple| {
            EulerAngles::new(triple.pitch, triple.yaw, triple.roll)
                .to_rotation()
                .map_err(|e| EvalError::InvalidArgument(e.to_string()))
        })
        .transpose()?;
    let params = SynthParams {
        n: args.n,
        yaw: angle_range(args.yaw_range)?,
        pitch: angle_range(args.pitch_range)?,
        roll: angle_range(args.roll_range)?,
        noise_deg: args.noise_deg,
        misalignment,
        seed: args.seed,
    };
    let (gt_rows, pred_rows) = synth_generate(&params)?;
    save_pose_file(&args.gt_out, args.file_format, args.rep, &gt_rows)?;
    save_pose_file(&args.pred_out, args.file_format, args.rep, &pred_rows)?;
    eprintln!(
        "wrote {} samples to {} and {}",
        args.n,
        args.gt_out.display(),
        args.pred_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn run_opal(args: OpalArgs) -> Result<ExitCode, EvalError> {
    let (params, out) = match args.mode {
        OpalMode::Derive {
            epsilon,
            beta,
            mu,
            sigma,
            out,
        } => (OpalParams::derive(epsilon, beta, mu, sigma)?, out),
        OpalMode::Fit {
            samples,
            epsilon,
            beta,
            out,
        } => {
            let text = std::fs::read_to_string(&samples).map_err(|source| EvalError::Io {
                path: samples.display().to_string(),
                source,
            })?;
            let mut values = Vec::new();
            for (index, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let value: f64 = line.parse().map_err(|_| EvalError::Parse {
                    path: samples.display().to_string(),
                    line: index + 1,
                    message: format!("invalid number '{line}'"),
                })?;
                values.push(value);
            }
            (fit_opal_params(&values, epsilon, beta)?, out)
        }
    };
    write_or_print(out.as_deref(), &params.to_kv_string())?;
    Ok(ExitCode::SUCCESS)
}

fn run_quat_sweep(args: QuatSweepArgs) -> Result<ExitCode, EvalError> {
    let samples = quat_sweep(args.step)?;
    let jumps = sweep_discontinuities(&samples);
    write_or_print(args.out.as_deref(), &render_sweep(&samples))?;
    match jumps.as_slice() {
        [] => eprintln!("no component jump detected"),
        jumps => {
            for jump in jumps {
                eprintln!("component jump near yaw {jump} deg");
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, EvalError> {
    match cli.command {
        Command::Convert(args) => run_convert(args),
        Command::Evaluate(args) => run_evaluate(args),
        Command::Align(args) => run_align(args),
        Command::Synth(args) => run_synth(args),
        Command::Opal(args) => run_opal(args),
        Command::QuatSweep(args) => run_quat_sweep(args),
    }
}

fn main() -> ExitCode {
    // Usage errors are input errors and must exit 1; code 2 is reserved for
    // convergence failures. Help and version requests stay successful.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(error) => {
            eprintln!("error: {error}");
            let mut source = std::error::Error::source(&error);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
