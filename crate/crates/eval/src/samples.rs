//! Pose file loading, saving and ground-truth/prediction joining.
//!
//! Two file formats (CSV with a header row, JSON lines) carry the same flat
//! schema: an `id` column, an optional `group` column (empty means none)
//! and one block of numeric columns per representation:
//!
//! - `euler_deg`: `pitch,yaw,roll` in degrees
//! - `quaternion_wxyz`: `qw,qx,qy,qz`
//! - `matrix_rowmajor`: `m00,m01,m02,m10,m11,m12,m20,m21,m22`
//! - `sixd`: `c1x,c1y,c1z,c2x,c2y,c2z`
//!
//! Every pose is converted to a validated rotation matrix on load; rows
//! with non-finite values, invalid rotations or duplicate ids are rejected
//! with their line number.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use headpose_core::so3::{EulerAngles, RotationMatrix, SixD, UnitQuaternion};
use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use crate::error::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FileFormat {
    Csv,
    Jsonl,
}

impl fmt::Display for FileFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FileFormat::Csv => "csv",
            FileFormat::Jsonl => "jsonl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Representation {
    #[value(name = "euler_deg")]
    EulerDeg,
    #[value(name = "quaternion_wxyz")]
    QuaternionWxyz,
    #[value(name = "matrix_rowmajor")]
    MatrixRowMajor,
    #[value(name = "sixd")]
    SixD,
}

impl Representation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Representation::EulerDeg => "euler_deg",
            Representation::QuaternionWxyz => "quaternion_wxyz",
            Representation::MatrixRowMajor => "matrix_rowmajor",
            Representation::SixD => "sixd",
        }
    }

    /// Numeric column names following `id,group`.
    pub fn columns(&self) -> &'static [&'static str] {
        match self {
            Representation::EulerDeg => &["pitch", "yaw", "roll"],
            Representation::QuaternionWxyz => &["qw", "qx", "qy", "qz"],
            Representation::MatrixRowMajor => &[
                "m00", "m01", "m02", "m10", "m11", "m12", "m20", "m21", "m22",
            ],
            Representation::SixD => &["c1x", "c1y", "c1z", "c2x", "c2y", "c2z"],
        }
    }

    /// Converts one row of numeric fields into a validated rotation.
    pub fn rotation_from_fields(
        &self,
        fields: &[f64],
    ) -> Result<RotationMatrix, headpose_core::so3::So3Error> {
        debug_assert_eq!(fields.len(), self.columns().len());
        match self {
            Representation::EulerDeg => {
                EulerAngles::new(fields[0], fields[1], fields[2]).to_rotation()
            }
            Representation::QuaternionWxyz => {
                UnitQuaternion::new(fields[0], fields[1], fields[2], fields[3])
                    .map(|q| q.to_rotation())
            }
            Representation::MatrixRowMajor => RotationMatrix::from_matrix(Matrix3::new(
                fields[0], fields[1], fields[2], fields[3], fields[4], fields[5], fields[6],
                fields[7], fields[8],
            )),
            Representation::SixD => SixD::new(
                Vector3::new(fields[0], fields[1], fields[2]),
                Vector3::new(fields[3], fields[4], fields[5]),
            )
            .to_rotation(),
        }
    }

    /// Serializes a rotation into this representation's numeric fields.
    /// Euler output uses the wide-range decomposition (pitch within a
    /// quarter turn, yaw over the full turn), the usual annotation style
    /// for files that cover more than profile views.
    pub fn rotation_to_fields(&self, rotation: &RotationMatrix) -> Vec<f64> {
        match self {
            Representation::EulerDeg => {
                let e = rotation.to_euler_wide();
                vec![e.pitch, e.yaw, e.roll]
            }
            Representation::QuaternionWxyz => rotation.to_quaternion().components().to_vec(),
            Representation::MatrixRowMajor => {
                let m = rotation.matrix();
                (0..3)
                    .flat_map(|i| (0..3).map(move |j| m[(i, j)]))
                    .collect()
            }
            Representation::SixD => {
                let s = rotation.to_sixd();
                vec![s.c1.x, s.c1.y, s.c1.z, s.c2.x, s.c2.y, s.c2.z]
            }
        }
    }
}

/// One pose row of a file.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseRow {
    pub id: String,
    pub group: Option<String>,
    pub rotation: RotationMatrix,
}

/// A ground-truth pose joined with its prediction, if any.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub id: String,
    pub group: Option<String>,
    pub ground_truth: RotationMatrix,
    pub prediction: Option<RotationMatrix>,
}

pub fn load_pose_file(
    path: &Path,
    format: FileFormat,
    representation: Representation,
) -> Result<Vec<PoseRow>, EvalError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| EvalError::Io {
        path: display.clone(),
        source,
    })?;
    let rows = match format {
        FileFormat::Csv => parse_csv(&display, &text, representation)?,
        FileFormat::Jsonl => parse_jsonl(&display, &text, representation)?,
    };
    if rows.is_empty() {
        return Err(EvalError::EmptyInput { path: display });
    }
    Ok(rows)
}

fn check_row(
    path: &str,
    line: usize,
    id: String,
    group: Option<String>,
    fields: &[f64],
    representation: Representation,
    seen: &mut HashMap<String, usize>,
) -> Result<PoseRow, EvalError> {
    if id.is_empty() {
        return Err(EvalError::Parse {
            path: path.to_string(),
            line,
            message: "empty id".into(),
        });
    }
    if let Some(&first_line) = seen.get(&id) {
        return Err(EvalError::DuplicateId {
            path: path.to_string(),
            line,
            id,
            first_line,
        });
    }
    for (column, value) in representation.columns().iter().zip(fields) {
        if !value.is_finite() {
            return Err(EvalError::Parse {
                path: path.to_string(),
                line,
                message: format!("column '{column}': non-finite value {value}"),
            });
        }
    }
    let rotation = representation
        .rotation_from_fields(fields)
        .map_err(|source| EvalError::InvalidPose {
            path: path.to_string(),
            line,
            id: id.clone(),
            source,
        })?;
    seen.insert(id.clone(), line);
    Ok(PoseRow {
        id,
        group,
        rotation,
    })
}

fn parse_csv(
    path: &str,
    text: &str,
    representation: Representation,
) -> Result<Vec<PoseRow>, EvalError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let expected: Vec<&str> = ["id", "group"]
        .into_iter()
        .chain(representation.columns().iter().copied())
        .collect();
    let headers = reader.headers().map_err(|e| EvalError::Parse {
        path: path.to_string(),
        line: 1,
        message: e.to_string(),
    })?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(EvalError::Parse {
            path: path.to_string(),
            line: 1,
            message: format!(
                "header mismatch for representation '{}': expected '{}', got '{}'",
                representation.as_str(),
                expected.join(","),
                got.join(",")
            ),
        });
    }

    let mut seen = HashMap::new();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| EvalError::Parse {
            path: path.to_string(),
            line: e.position().map(|p| p.line() as usize).unwrap_or_default(),
            message: e.to_string(),
        })?;
        let line = record
            .position()
            .map(|p| p.line() as usize)
            .unwrap_or_default();
        if record.len() != expected.len() {
            return Err(EvalError::Parse {
                path: path.to_string(),
                line,
                message: format!("expected {} fields, got {}", expected.len(), record.len()),
            });
        }
        let id = record[0].to_string();
        let group = match &record[1] {
            "" => None,
            g => Some(g.to_string()),
        };
        let mut fields = Vec::with_capacity(representation.columns().len());
        for (column, raw) in representation.columns().iter().zip(record.iter().skip(2)) {
            let value: f64 = raw.parse().map_err(|_| EvalError::Parse {
                path: path.to_string(),
                line,
                message: format!("column '{column}': invalid number '{raw}'"),
            })?;
            fields.push(value);
        }
        rows.push(check_row(
            path,
            line,
            id,
            group,
            &fields,
            representation,
            &mut seen,
        )?);
    }
    Ok(rows)
}

fn parse_jsonl(
    path: &str,
    text: &str,
    representation: Representation,
) -> Result<Vec<PoseRow>, EvalError> {
    let mut seen = HashMap::new();
    let mut rows = Vec::new();
    for (index, raw_line) in text.lines().enumerate() {
        let line = index + 1;
        if raw_line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value =
            serde_json::from_str(raw_line).map_err(|e| EvalError::Parse {
                path: path.to_string(),
                line,
                message: e.to_string(),
            })?;
        let object = value.as_object().ok_or_else(|| EvalError::Parse {
            path: path.to_string(),
            line,
            message: "expected a JSON object".into(),
        })?;
        let id = object
            .get("id")
            .and_then(|v| v.as_str())
            .ok_or_else(|| EvalError::Parse {
                path: path.to_string(),
                line,
                message: "missing string field 'id'".into(),
            })?
            .to_string();
        let group = match object.get("group") {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(g)) if g.is_empty() => None,
            Some(serde_json::Value::String(g)) => Some(g.clone()),
            Some(other) => {
                return Err(EvalError::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("field 'group' must be a string or null, got {other}"),
                })
            }
        };
        let mut fields = Vec::with_capacity(representation.columns().len());
        for column in representation.columns() {
            let value = object
                .get(*column)
                .and_then(|v| v.as_f64())
                .ok_or_else(|| EvalError::Parse {
                    path: path.to_string(),
                    line,
                    message: format!("missing numeric field '{column}'"),
                })?;
            fields.push(value);
        }
        rows.push(check_row(
            path,
            line,
            id,
            group,
            &fields,
            representation,
            &mut seen,
        )?);
    }
    Ok(rows)
}

pub fn save_pose_file(
    path: &Path,
    format: FileFormat,
    representation: Representation,
    rows: &[PoseRow],
) -> Result<(), EvalError> {
    let rendered = render_pose_file(format, representation, rows);
    std::fs::write(path, rendered).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Renders rows in the on-disk schema. Float formatting is the shortest
/// representation that parses back to the same value, so save/load round
/// trips are exact.
pub fn render_pose_file(
    format: FileFormat,
    representation: Representation,
    rows: &[PoseRow],
) -> String {
    match format {
        FileFormat::Csv => {
            let mut out = String::new();
            out.push_str("id,group,");
            out.push_str(&representation.columns().join(","));
            out.push('\n');
            for row in rows {
                out.push_str(&row.id);
                out.push(',');
                if let Some(g) = &row.group {
                    out.push_str(g);
                }
                for value in representation.rotation_to_fields(&row.rotation) {
                    out.push(',');
                    out.push_str(&format!("{value}"));
                }
                out.push('\n');
            }
            out
        }
        FileFormat::Jsonl => {
            let mut out = String::new();
            for row in rows {
                #[derive(Serialize)]
                struct JsonRow<'a> {
                    id: &'a str,
                    group: Option<&'a str>,
                    #[serde(flatten)]
                    fields: serde_json::Map<String, serde_json::Value>,
                }
                let mut fields = serde_json::Map::new();
                for (column, value) in representation
                    .columns()
                    .iter()
                    .zip(representation.rotation_to_fields(&row.rotation))
                {
                    fields.insert(column.to_string(), serde_json::json!(value));
                }
                let json = serde_json::to_string(&JsonRow {
                    id: &row.id,
                    group: row.group.as_deref(),
                    fields,
                })
                .expect("pose row serialization cannot fail");
                out.push_str(&json);
                out.push('\n');
            }
            out
        }
    }
}

/// Joins prediction rows onto ground-truth rows by id. Ids present only in
/// the prediction file are an error; ground-truth rows without a prediction
/// keep `prediction = None`.
pub fn join_samples(
    ground_truth: Vec<PoseRow>,
    predictions: Option<Vec<PoseRow>>,
) -> Result<Vec<SampleRecord>, EvalError> {
    let mut samples: Vec<SampleRecord> = ground_truth
        .into_iter()
        .map(|row| SampleRecord {
            id: row.id,
            group: row.group,
            ground_truth: row.rotation,
            prediction: None,
        })
        .collect();
    if let Some(predictions) = predictions {
        let index: HashMap<&str, usize> = samples
            .iter()
            .enumerate()
            .map(|(i, s)| (s.id.as_str(), i))
            .collect();
        let mut updates = Vec::with_capacity(predictions.len());
        for row in &predictions {
            match index.get(row.id.as_str()) {
                Some(&i) => updates.push((i, row.rotation)),
                None => return Err(EvalError::UnmatchedPrediction { id: row.id.clone() }),
            }
        }
        for (i, rotation) in updates {
            samples[i].prediction = Some(rotation);
        }
    }
    Ok(samples)
}
