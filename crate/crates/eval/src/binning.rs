//! Yaw-range filtering and absolute-yaw view bins.

use crate::error::EvalError;
use crate::samples::SampleRecord;

/// One named interval of absolute yaw, degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct YawBin {
    pub name: String,
    pub lo_deg: f64,
    pub hi_deg: f64,
}

/// Ordered, non-overlapping (except shared endpoints) intervals of
/// absolute yaw. A boundary value lands in the earlier bin (closed-left
/// convention), so with the default spec a yaw of exactly 60 is frontal.
#[derive(Debug, Clone, PartialEq)]
pub struct BinSpec {
    bins: Vec<YawBin>,
}

impl BinSpec {
    pub fn new(bins: Vec<YawBin>) -> Result<Self, EvalError> {
        if bins.is_empty() {
            return Err(EvalError::BinSpec("no bins given".into()));
        }
        for bin in &bins {
            if bin.name.is_empty() {
                return Err(EvalError::BinSpec("empty bin name".into()));
            }
            if !(bin.lo_deg.is_finite() && bin.hi_deg.is_finite())
                || bin.lo_deg < 0.0
                || bin.hi_deg > 180.0
                || bin.lo_deg >= bin.hi_deg
            {
                return Err(EvalError::BinSpec(format!(
                    "bin '{}' must satisfy 0 <= lo < hi <= 180, got [{}, {}]",
                    bin.name, bin.lo_deg, bin.hi_deg
                )));
            }
        }
        for pair in bins.windows(2) {
            if pair[1].lo_deg < pair[0].hi_deg {
                return Err(EvalError::BinSpec(format!(
                    "bins '{}' and '{}' overlap",
                    pair[0].name, pair[1].name
                )));
            }
        }
        let mut names: Vec<&str> = bins.iter().map(|b| b.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != bins.len() {
            return Err(EvalError::BinSpec("duplicate bin name".into()));
        }
        Ok(Self { bins })
    }

    /// frontal `[0, 60]`, profile `[60, 120]`, back `[120, 180]`.
    pub fn default_views() -> Self {
        Self::new(vec![
            YawBin {
                name: "frontal".into(),
                lo_deg: 0.0,
                hi_deg: 60.0,
            },
            YawBin {
                name: "profile".into(),
                lo_deg: 60.0,
                hi_deg: 120.0,
            },
            YawBin {
                name: "back".into(),
                lo_deg: 120.0,
                hi_deg: 180.0,
            },
        ])
        .expect("default bins are valid")
    }

    /// Parses `name:lo:hi,name:lo:hi,...`.
    pub fn parse(spec: &str) -> Result<Self, EvalError> {
        let mut bins = Vec::new();
        for part in spec.split(',') {
            let fields: Vec<&str> = part.split(':').collect();
            if fields.len() != 3 {
                return Err(EvalError::BinSpec(format!(
                    "expected 'name:lo:hi', got '{part}'"
                )));
            }
            let parse = |s: &str| -> Result<f64, EvalError> {
                s.trim()
                    .parse()
                    .map_err(|_| EvalError::BinSpec(format!("invalid number '{s}'")))
            };
            bins.push(YawBin {
                name: fields[0].trim().to_string(),
                lo_deg: parse(fields[1])?,
                hi_deg: parse(fields[2])?,
            });
        }
        Self::new(bins)
    }

    pub fn spec_string(&self) -> String {
        self.bins
            .iter()
            .map(|b| format!("{}:{}:{}", b.name, b.lo_deg, b.hi_deg))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn bins(&self) -> &[YawBin] {
        &self.bins
    }

    /// Index of the bin holding this absolute yaw, if any covers it.
    pub fn assign(&self, abs_yaw_deg: f64) -> Option<usize> {
        self.bins
            .iter()
            .position(|b| abs_yaw_deg >= b.lo_deg && abs_yaw_deg <= b.hi_deg)
    }
}

impl Default for BinSpec {
    fn default() -> Self {
        Self::default_views()
    }
}

/// Keeps samples whose ground-truth wide-range yaw lies in
/// `[min_deg, max_deg]`; with `all_angles` the bound applies to pitch and
/// roll as well. Angles come from the wide-range decomposition (pitch in
/// `[-90, 90]`), so a yaw annotation of 120 degrees is seen as 120, not as
/// its quarter-turn mirror.
pub fn filter_by_yaw(
    samples: Vec<SampleRecord>,
    min_deg: f64,
    max_deg: f64,
    all_angles: bool,
) -> Vec<SampleRecord> {
    samples
        .into_iter()
        .filter(|s| {
            let e = s.ground_truth.to_euler_wide();
            let yaw_ok = e.yaw >= min_deg && e.yaw <= max_deg;
            if all_angles {
                yaw_ok
                    && e.pitch >= min_deg
                    && e.pitch <= max_deg
                    && e.roll >= min_deg
                    && e.roll <= max_deg
            } else {
                yaw_ok
            }
        })
        .collect()
}

/// Sample indices per bin, assigned by the absolute wide-range yaw of the
/// ground truth. Bins come back in spec order.
pub fn bin_by_yaw(samples: &[SampleRecord], spec: &BinSpec) -> Vec<(String, Vec<usize>)> {
    let mut out: Vec<(String, Vec<usize>)> = spec
        .bins()
        .iter()
        .map(|b| (b.name.clone(), Vec::new()))
        .collect();
    for (i, sample) in samples.iter().enumerate() {
        let yaw = sample.ground_truth.to_euler_wide().yaw.abs();
        if let Some(bin) = spec.assign(yaw) {
            out[bin].1.push(i);
        }
    }
    out
}
