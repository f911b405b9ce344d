use std::collections::BTreeMap;

use num_bigint::BigUint;
use serde::Serialize;
use sharpk_core::{Estimate, GeneratorSpec, ParamSet, Strategy, WorkCounters};

/// Bumped whenever a field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub instance: Instance,
    pub strategy: Strategy,
    pub eps: f64,
    pub delta: f64,
    pub seed: u64,
    pub threads: usize,
    pub params: Option<ParamsView>,
    pub estimate: EstimateView,
    pub reference: Option<String>,
    /// Whether the estimate is within `eps` of the reference.
    pub accurate: Option<bool>,
    pub work: WorkCounters,
    pub wall_time_ms: f64,
}

#[derive(Debug, Serialize)]
pub struct Instance {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    pub num_vars: u32,
    pub num_clauses: usize,
    pub k: usize,
}

#[derive(Debug, Serialize)]
pub struct ParamsView {
    pub k: usize,
    pub n: usize,
    pub beta_k: f64,
    pub mu_k: Option<f64>,
    pub alpha_by_k: BTreeMap<usize, f64>,
    pub theta_k: f64,
    pub p_k: f64,
    pub ell_log2: f64,
    pub ell: String,
    pub m_hat_fraction: Option<f64>,
    pub m_hat: usize,
}

impl From<&ParamSet> for ParamsView {
    fn from(p: &ParamSet) -> Self {
        Self {
            k: p.k,
            n: p.n,
            beta_k: p.beta_k,
            mu_k: p.mu_k,
            alpha_by_k: p.alpha_by_k.clone(),
            theta_k: p.theta_k,
            p_k: p.p_k,
            ell_log2: p.ell_log2,
            ell: p.ell.to_string(),
            m_hat_fraction: p.m_hat_fraction,
            m_hat: p.m_hat,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct EstimateView {
    /// Exact rational value, `p` or `p/q`.
    pub value: String,
    pub value_f64: f64,
    pub exact: bool,
    pub samples: u64,
    pub hits: u64,
    pub undersampled: bool,
}

impl From<&Estimate> for EstimateView {
    fn from(e: &Estimate) -> Self {
        Self {
            value: e.value.to_string(),
            value_f64: e.value_f64(),
            exact: e.exact,
            samples: e.samples,
            hits: e.hits,
            undersampled: e.undersampled,
        }
    }
}

pub const CSV_HEADER: &str = "trial,instance_seed,strategy,n,m,k,value,exact,reference,rel_error,accurate,samples,decider_calls,branch_nodes,wall_time_ms";

pub fn csv_row(trial: usize, r: &RunReport) -> String {
    let seed = r
        .instance
        .generator
        .map_or(String::new(), |g| g.seed.to_string());
    let rel = r
        .reference
        .as_ref()
        .and_then(|s| s.parse::<BigUint>().ok())
        .map(|t| relative_error(r.estimate.value_f64, &t))
        .map_or(String::new(), |e| format!("{e:.6}"));
    format!(
        "{trial},{seed},{},{},{},{},{},{},{},{rel},{},{},{},{},{:.3}",
        r.strategy,
        r.instance.num_vars,
        r.instance.num_clauses,
        r.instance.k,
        r.estimate.value_f64,
        r.estimate.exact,
        r.reference.as_deref().unwrap_or(""),
        r.accurate.map_or(String::new(), |a| a.to_string()),
        r.estimate.samples,
        r.work.decider_calls,
        r.work.branch_nodes,
        r.wall_time_ms,
    )
}

pub fn relative_error(value: f64, truth: &BigUint) -> f64 {
    let t: f64 = truth.to_string().parse().unwrap_or(f64::INFINITY);
    if t == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (value - t).abs() / t
    }
}
