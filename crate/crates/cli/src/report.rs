//! The machine-readable run report.
//!
//! Field order is fixed by the struct declarations and every map is keyed
//! by label in sorted order, so equal runs serialize to equal bytes (apart
//! from `timings`). Infinite residuals are written as `null`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub const REPORT_VERSION: u32 = 1;

pub type LabelMap<T> = BTreeMap<String, T>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    pub command: Vec<String>,
    pub model_digest: String,
    pub states: Vec<String>,
    pub actions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta_trace: Vec<TraceEntry>,
    /// `λ̄*` produced by the command.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example: Option<ExampleBlock>,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(command: Vec<String>, model_digest: String, states: Vec<String>, actions: Vec<String>) -> Self {
        RunReport {
            report_version: REPORT_VERSION,
            command,
            model_digest,
            states,
            actions,
            method: None,
            beta_trace: Vec::new(),
            value: None,
            solution: None,
            oracle: None,
            certificate: None,
            example: None,
            timings: BTreeMap::new(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Grid resolution; absent for constraint generation.
    pub resolution: Option<u32>,
    pub beta: LabelMap<f64>,
    pub sum_beta: f64,
    pub sum_w: f64,
    pub dual_identity_residual: f64,
    pub constraint_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionBlock {
    pub stop: String,
    /// `Φ̂* = β`, per state.
    pub phi: LabelMap<f64>,
    pub v: LabelMap<f64>,
    /// Maximizer kernel, rows and columns in `states` order.
    pub q_star: Vec<Vec<f64>>,
    /// Randomized minimizer from the LP, columns in `actions` order.
    pub y: Vec<Vec<f64>>,
    pub v_star: LabelMap<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub brute_force_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmin: Option<LabelMap<String>>,
    /// Per-state rates of the argmin policy or of the supplied policy.
    pub per_state_lambda: LabelMap<f64>,
    /// `|value − brute_force_value|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub level_tol: f64,
    #[serde(default)]
    pub levels: Vec<Vec<String>>,
    #[serde(default, with = "nonfinite_map")]
    pub dp1: LabelMap<f64>,
    #[serde(default, with = "nonfinite_map")]
    pub dp2: LabelMap<f64>,
    #[serde(default, with = "nonfinite_map")]
    pub twisted_dp1: LabelMap<f64>,
    #[serde(default, with = "nonfinite_map")]
    pub twisted_dp2: LabelMap<f64>,
    #[serde(default, with = "nonfinite_map")]
    pub twisted_dp3: LabelMap<f64>,
    #[serde(with = "nonfinite")]
    pub max_residual: f64,
    #[serde(with = "nonfinite")]
    pub max_twisted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleBlock {
    pub rho: f64,
    pub supercritical: bool,
    pub phi_star: [f64; 2],
    pub q22: f64,
    pub lambda_bar: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poisson: Option<PoissonBlock>,
    pub lp_value: f64,
    pub lp_q22: f64,
    pub lp_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonBlock {
    pub pairs_checked: usize,
    pub satisfying: usize,
    pub analytic_reduction: bool,
    pub insolvable: bool,
}

mod nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

mod nonfinite_map {
    use super::LabelMap;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(m: &LabelMap<f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k, v.is_finite().then_some(*v))))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<LabelMap<f64>, D::Error> {
        let m = LabelMap::<Option<f64>>::deserialize(d)?;
        Ok(m.into_iter().map(|(k, v)| (k, v.unwrap_or(f64::INFINITY))).collect())
    }
}
