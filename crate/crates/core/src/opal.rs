//! The Opal loss: a piecewise generalization of the geodesic error.
//!
//! As a function of the geodesic error `G` (degrees) the loss has three
//! regimes:
//!
//! ```text
//! g(G) = a * G^2 + b                                G < epsilon
//!        c * (tanh(sigma * G - mu) + tanh(mu))      epsilon <= G < beta
//!        G + d                                      G >= beta
//! ```
//!
//! Its gradient (the influence function, which decides how hard each sample
//! pulls during training) grows linearly on the first branch, is a
//! pseudo-Gaussian `c * sigma * sech^2(sigma * G - mu)` peaking at
//! `G = mu / sigma` on the second, and is exactly 1 on the third, which
//! keeps large errors from producing exploding gradients.
//!
//! The four constants `a, b, c, d` are not free: they are the unique
//! solution making the loss continuous and once-differentiable at both
//! thresholds with unit slope beyond `beta`:
//!
//! ```text
//! c = cosh^2(sigma * beta - mu) / sigma
//! a = c * sigma * sech^2(sigma * epsilon - mu) / (2 * epsilon)
//! b = c * (tanh(sigma * epsilon - mu) + tanh(mu)) - a * epsilon^2
//! d = c * (tanh(sigma * beta - mu) + tanh(mu)) - beta
//! ```
//!
//! `sigma` is per-degree and `mu` unitless; both are recorded in the
//! serialized parameter file so the degree convention travels with the
//! numbers.

use thiserror::Error;

use crate::metrics::geodesic_distance;
use crate::so3::RotationMatrix;

/// Residual bound for the continuity/differentiability identities.
pub const CONSTANTS_TOL: f64 = 1e-9;

/// Histogram bin width used by [`fit_opal_params`], in degrees.
pub const FIT_BIN_WIDTH_DEG: f64 = 0.5;

/// Half width at half maximum of `sech^2`: `acosh(sqrt(2)) = ln(1 + sqrt 2)`.
const SECH2_HWHM: f64 = 0.881_373_587_019_543;

/// Largest `sigma * (beta - peak)` the fit will produce; keeps the derived
/// constants well-conditioned.
const MAX_RIGHT_EDGE_ARG: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OpalError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("geodesic error must be non-negative and finite, got {0}")]
    InvalidErrorValue(f64),
    #[error("empty input sequence")]
    EmptyInput,
    #[error("no error samples inside ({epsilon}, {beta}); cannot place the influence peak")]
    FitInfeasible { epsilon: f64, beta: f64 },
    #[error("parameter file: {0}")]
    Parse(String),
}

/// User parameters of the loss plus the derived constants.
///
/// Construct with [`OpalParams::derive`]; the invariants (ordering of the
/// thresholds, peak inside the tanh region, and the four transition
/// identities) then hold by construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpalParams {
    /// L2-to-tanh threshold, degrees.
    pub epsilon: f64,
    /// tanh-to-L1 threshold, degrees.
    pub beta: f64,
    /// Center of the influence bump, unitless; the peak sits at `mu / sigma`
    /// degrees.
    pub mu: f64,
    /// Width control, per degree.
    pub sigma: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

fn sech2(x: f64) -> f64 {
    let c = x.cosh();
    1.0 / (c * c)
}

impl OpalParams {
    pub const DEFAULT_EPSILON: f64 = 2.0;
    pub const DEFAULT_BETA: f64 = 12.0;
    pub const DEFAULT_PEAK: f64 = 5.5;
    pub const DEFAULT_SIGMA: f64 = 0.25;

    /// Solves for the constants given the four free parameters.
    pub fn derive(epsilon: f64, beta: f64, mu: f64, sigma: f64) -> Result<Self, OpalError> {
        if !(epsilon.is_finite() && beta.is_finite() && mu.is_finite() && sigma.is_finite()) {
            return Err(OpalError::InvalidParams("non-finite parameter".into()));
        }
        if !(epsilon > 0.0 && epsilon < beta && beta <= 180.0) {
            return Err(OpalError::InvalidParams(format!(
                "thresholds must satisfy 0 < epsilon < beta <= 180, got epsilon={epsilon}, beta={beta}"
            )));
        }
        if sigma <= 0.0 {
            return Err(OpalError::InvalidParams(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let peak = mu / sigma;
        if !(peak > epsilon && peak < beta) {
            return Err(OpalError::InvalidParams(format!(
                "influence peak mu/sigma = {peak} must lie inside ({epsilon}, {beta})"
            )));
        }
        let at_beta = sigma * beta - mu;
        let at_epsilon = sigma * epsilon - mu;
        let cosh_beta = at_beta.cosh();
        if !cosh_beta.is_finite() {
            return Err(OpalError::InvalidParams(format!(
                "sech^2(sigma*beta - mu) underflows for sigma*beta - mu = {at_beta}"
            )));
        }
        let c = cosh_beta * cosh_beta / sigma;
        let a = c * sigma * sech2(at_epsilon) / (2.0 * epsilon);
        let b = c * (at_epsilon.tanh() + mu.tanh()) - a * epsilon * epsilon;
        let d = c * (at_beta.tanh() + mu.tanh()) - beta;
        let params = Self {
            epsilon,
            beta,
            mu,
            sigma,
            a,
            b,
            c,
            d,
        };
        if !(a.is_finite() && b.is_finite() && c.is_finite() && d.is_finite()) {
            return Err(OpalError::InvalidParams(
                "derived constants are not finite".into(),
            ));
        }
        // Extreme parameter combinations blow the constants up to a scale
        // where the transition identities no longer hold in f64.
        let worst = params
            .transition_residuals()
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()));
        if worst > CONSTANTS_TOL {
            return Err(OpalError::InvalidParams(format!(
                "parameters are numerically ill-conditioned (worst transition residual {worst:.3e})"
            )));
        }
        Ok(params)
    }

    /// `G` position of the influence maximum, degrees.
    pub fn influence_peak(&self) -> f64 {
        self.mu / self.sigma
    }

    /// Height of the influence maximum, `cosh^2(sigma * beta - mu)`.
    pub fn influence_peak_value(&self) -> f64 {
        self.c * self.sigma
    }

    /// The four transition residuals: value and slope mismatches at
    /// `epsilon` and `beta`. All are below [`CONSTANTS_TOL`] for derived
    /// parameter sets.
    pub fn transition_residuals(&self) -> [f64; 4] {
        let at_epsilon = self.sigma * self.epsilon - self.mu;
        let at_beta = self.sigma * self.beta - self.mu;
        [
            self.a * self.epsilon * self.epsilon + self.b
                - self.c * (at_epsilon.tanh() + self.mu.tanh()),
            self.c * (at_beta.tanh() + self.mu.tanh()) - (self.beta + self.d),
            2.0 * self.a * self.epsilon - self.c * self.sigma * sech2(at_epsilon),
            self.c * self.sigma * sech2(at_beta) - 1.0,
        ]
    }

    fn validate(&self) -> Result<(), OpalError> {
        // Reconstructs the derivation checks for parameter sets that did not
        // come from `derive`, e.g. hand-edited files.
        Self::derive(self.epsilon, self.beta, self.mu, self.sigma)?;
        let worst = self
            .transition_residuals()
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.abs()));
        if worst > CONSTANTS_TOL {
            return Err(OpalError::InvalidParams(format!(
                "constants violate the transition identities (worst residual {worst:.3e})"
            )));
        }
        Ok(())
    }

    /// Flat `key = value` document with keys
    /// `epsilon, beta, mu, sigma, a, b, c, d`. Values round-trip exactly.
    pub fn to_kv_string(&self) -> String {
        format!(
            "epsilon = {}\nbeta = {}\nmu = {}\nsigma = {}\na = {}\nb = {}\nc = {}\nd = {}\n",
            self.epsilon, self.beta, self.mu, self.sigma, self.a, self.b, self.c, self.d
        )
    }

    /// Parses [`OpalParams::to_kv_string`] output. Blank lines and `#`
    /// comments are allowed; all eight keys are required and the transition
    /// identities are re-checked.
    pub fn from_kv_str(text: &str) -> Result<Self, OpalError> {
        let mut values = std::collections::BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                OpalError::Parse(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim();
            let value: f64 = value.trim().parse().map_err(|_| {
                OpalError::Parse(format!(
                    "line {}: invalid number '{}'",
                    lineno + 1,
                    value.trim()
                ))
            })?;
            if values.insert(key.to_string(), value).is_some() {
                return Err(OpalError::Parse(format!("duplicate key '{key}'")));
            }
        }
        let mut get = |k: &str| {
            values
                .remove(k)
                .ok_or_else(|| OpalError::Parse(format!("missing key '{k}'")))
        };
        let params = Self {
            epsilon: get("epsilon")?,
            beta: get("beta")?,
            mu: get("mu")?,
            sigma: get("sigma")?,
            a: get("a")?,
            b: get("b")?,
            c: get("c")?,
            d: get("d")?,
        };
        if let Some(extra) = values.keys().next() {
            return Err(OpalError::Parse(format!("unknown key '{extra}'")));
        }
        params.validate()?;
        Ok(params)
    }
}

impl Default for OpalParams {
    /// Thresholds at 2 and 12 degrees with the influence peak at 5.5
    /// degrees, the shaping used for wide-range head pose evaluation.
    fn default() -> Self {
        Self::derive(
            Self::DEFAULT_EPSILON,
            Self::DEFAULT_BETA,
            Self::DEFAULT_PEAK * Self::DEFAULT_SIGMA,
            Self::DEFAULT_SIGMA,
        )
        .expect("default parameters are valid")
    }
}

/// Loss value for a geodesic error `G` in degrees.
pub fn opal_loss(ge_deg: f64, params: &OpalParams) -> Result<f64, OpalError> {
    if !ge_deg.is_finite() || ge_deg < 0.0 {
        return Err(OpalError::InvalidErrorValue(ge_deg));
    }
    Ok(if ge_deg < params.epsilon {
        params.a * ge_deg * ge_deg + params.b
    } else if ge_deg < params.beta {
        params.c * ((params.sigma * ge_deg - params.mu).tanh() + params.mu.tanh())
    } else {
        ge_deg + params.d
    })
}

/// Analytic gradient of [`opal_loss`] with respect to `G`.
pub fn opal_influence(ge_deg: f64, params: &OpalParams) -> Result<f64, OpalError> {
    if !ge_deg.is_finite() || ge_deg < 0.0 {
        return Err(OpalError::InvalidErrorValue(ge_deg));
    }
    Ok(if ge_deg < params.epsilon {
        2.0 * params.a * ge_deg
    } else if ge_deg < params.beta {
        params.c * params.sigma * sech2(params.sigma * ge_deg - params.mu)
    } else {
        1.0
    })
}

/// Mean Opal loss over `(prediction, ground truth)` rotation pairs.
pub fn mean_opal_loss(
    pairs: &[(RotationMatrix, RotationMatrix)],
    params: &OpalParams,
) -> Result<f64, OpalError> {
    if pairs.is_empty() {
        return Err(OpalError::EmptyInput);
    }
    let mut sum = 0.0;
    for (pred, gt) in pairs {
        sum += opal_loss(geodesic_distance(pred, gt), params)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Shapes the influence bump to a sample of geodesic errors (degrees).
///
/// The peak is placed at the mode of a fixed-bin histogram (bin width
/// 0.5 degrees) of the samples falling inside `(epsilon, beta)`; ties go to
/// the smaller error. `sigma` is set so the `sech^2` full width at half
/// maximum matches the histogram's, then the constants are derived.
pub fn fit_opal_params(
    error_samples_deg: &[f64],
    epsilon: f64,
    beta: f64,
) -> Result<OpalParams, OpalError> {
    if error_samples_deg.is_empty() {
        return Err(OpalError::EmptyInput);
    }
    if !(epsilon > 0.0 && epsilon < beta) {
        return Err(OpalError::InvalidParams(format!(
            "thresholds must satisfy 0 < epsilon < beta, got epsilon={epsilon}, beta={beta}"
        )));
    }
    let inside: Vec<f64> = error_samples_deg
        .iter()
        .copied()
        .filter(|g| g.is_finite() && *g > epsilon && *g < beta)
        .collect();
    if inside.is_empty() {
        return Err(OpalError::FitInfeasible { epsilon, beta });
    }

    let bin_of = |g: f64| (g / FIT_BIN_WIDTH_DEG).floor() as i64;
    let mut counts = std::collections::BTreeMap::<i64, usize>::new();
    for &g in &inside {
        *counts.entry(bin_of(g)).or_insert(0) += 1;
    }
    // BTreeMap iteration is ascending, so ties resolve to the smaller bin.
    let (&mode_bin, &mode_count) = counts
        .iter()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0)))
        .expect("non-empty histogram");

    let in_mode: Vec<f64> = inside
        .iter()
        .copied()
        .filter(|g| bin_of(*g) == mode_bin)
        .collect();
    let peak = in_mode.iter().sum::<f64>() / in_mode.len() as f64;

    let half_max = mode_count as f64 / 2.0;
    let above = |bin: i64| counts.get(&bin).copied().unwrap_or(0) as f64 >= half_max;
    let mut lo = mode_bin;
    while above(lo - 1) {
        lo -= 1;
    }
    let mut hi = mode_bin;
    while above(hi + 1) {
        hi += 1;
    }
    let fwhm = (hi - lo + 1) as f64 * FIT_BIN_WIDTH_DEG;

    // Very narrow histograms would put the right transition deep into the
    // tanh tail, where the derived constants become too large to satisfy
    // the transition identities in f64. Cap the width parameter so
    // sigma * (beta - peak) stays modest; the peak position is unaffected.
    let sigma = (2.0 * SECH2_HWHM / fwhm).min(MAX_RIGHT_EDGE_ARG / (beta - peak));
    OpalParams::derive(epsilon, beta, sigma * peak, sigma)
}
