//! JSON run report.

use serde::{Serialize, Serializer};

/// Serializes non-finite values as the strings `"inf"`, `"-inf"`, `"nan"`.
pub fn finite_or_string<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Metrics {
    #[serde(serialize_with = "finite_or_string")]
    pub psnr: f64,
    pub ssim: f64,
    /// `null` when a reference slice has zero mean.
    pub ergas: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PenaltyEcho {
    pub kind: String,
    pub p: f64,
    pub tau_p: f64,
    #[serde(serialize_with = "finite_or_string")]
    pub tau: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub input: String,
    pub mask: String,
    pub output: String,
    pub reference: Option<String>,
    pub penalty: PenaltyEcho,
    pub mode_pairs: Vec<usize>,
    pub beta: Vec<f64>,
    pub rho0: Vec<f64>,
    pub mu: f64,
    pub eps: f64,
    pub max_iter: usize,
    pub prox_weight: String,
    pub stop_rule: String,
    pub rho_cap: f64,
    pub threads: Option<usize>,
    pub rescale: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalIterate {
    pub rel_change: f64,
    pub primal_residuals: Vec<f64>,
    pub multiplier_norms: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: &'static str,
    pub version: &'static str,
    pub config: ConfigEcho,
    pub log: String,
    pub iterations: usize,
    pub converged: bool,
    pub rho_capped: bool,
    #[serde(rename = "final")]
    pub last: FinalIterate,
    pub observed_fraction: f64,
    pub metrics: Option<Metrics>,
    pub wall_time_secs: f64,
    pub seed: Option<u64>,
}
