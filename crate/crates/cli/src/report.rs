//! Machine-readable report schemas.
//!
//! Every report carries `schema_version` and `engine_version`; field order
//! is fixed by the struct definitions, so identical runs serialize
//! byte-identically.

use serde::{Deserialize, Serialize};

use rtz_core::lattice::MultiIndex;
use rtz_core::toeplitz::ProductReport;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

pub fn engine_version() -> String {
    env!("CARGO_PKG_VERSION").to_string()
}

pub fn indices(k: &MultiIndex) -> Vec<i64> {
    k.entries().to_vec()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct WitnessEntry {
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    pub weight_re: f64,
    pub weight_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProductCheckReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub domain: String,
    pub kmax: Vec<i64>,
    pub zero_flag: bool,
    pub norm_estimate: f64,
    pub max_abs_weight: f64,
    pub witness: Option<WitnessEntry>,
    pub k0_used: Vec<i64>,
    pub zero_tolerance: f64,
    pub skipped_tuples: usize,
    pub slice_residual: Option<f64>,
    /// Verdicts are restricted to source indices in `N^n` at or above `k0`.
    pub restricted_to_natural_lattice: bool,
}

impl ProductCheckReport {
    pub fn from_product(
        domain: String,
        kmax: Vec<i64>,
        report: &ProductReport,
    ) -> Self {
        Self {
            schema_version: REPORT_SCHEMA_VERSION,
            engine_version: engine_version(),
            domain,
            kmax,
            zero_flag: report.zero_flag,
            norm_estimate: report.operator_norm_estimate,
            max_abs_weight: report.max_abs_weight,
            witness: report.witness.as_ref().map(|(s, t, w)| WitnessEntry {
                source: indices(s),
                target: indices(t),
                weight_re: w.re,
                weight_im: w.im,
            }),
            k0_used: indices(&report.k0_used),
            zero_tolerance: report.zero_tolerance,
            skipped_tuples: report.skipped_tuples,
            slice_residual: report.slice_residual,
            restricted_to_natural_lattice: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FiberReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub set: String,
    pub condition_i: bool,
    pub witness: Option<String>,
    /// `E_n, ..., E_1, E_0` as expressions (with `--decompose`).
    pub layers: Option<Vec<String>>,
    /// `F_n, ..., F_1` as expressions (with `--decompose`).
    pub deleted: Option<Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorReport {
    /// 1-based position (phi_1 applied first).
    pub index: usize,
    pub sup_bound: f64,
    pub moment_tolerance: f64,
    /// `Z_j`: lattice points at or above `k0` where the factor's moment is
    /// below tolerance.
    pub zero_set: Vec<Vec<i64>>,
    pub identically_small: bool,
    pub hull: Option<String>,
    pub hull_contains_zero_set: Option<bool>,
    pub hull_condition_i: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Proposition1Report {
    pub schema_version: u32,
    pub engine_version: String,
    pub kind: String,
    pub domain: String,
    pub kmax: Vec<i64>,
    pub seed: u64,
    pub k0: Vec<i64>,
    pub factors: Vec<FactorReport>,
    /// Points where the product of factor moments is below tolerance.
    pub product_zero_set: Vec<Vec<i64>>,
    pub verdict: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceVerdict {
    pub p: Vec<i64>,
    pub zero_flag: bool,
    pub norm_estimate: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corollary1Report {
    pub schema_version: u32,
    pub engine_version: String,
    pub kind: String,
    pub domain: String,
    pub kmax: Vec<i64>,
    pub seed: u64,
    pub product: ProductCheckReport,
    pub slices: Vec<SliceVerdict>,
    pub tail_zero_flags: Vec<bool>,
    /// When the product is zero: some tail factor zero or all slices zero.
    pub dichotomy_holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceMatchEntry {
    pub source: Vec<i64>,
    pub target: Vec<i64>,
    pub full_re: f64,
    pub full_im: f64,
    pub sliced_re: f64,
    pub sliced_im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReductionEvent {
    pub step: usize,
    pub action: String,
    pub boxes: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoxReductionReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub kind: String,
    pub domain: String,
    pub kmax: Vec<i64>,
    pub seed: u64,
    pub axis: usize,
    /// Largest axis power reachable, `sum_j (b_j - 1)`.
    pub max_axis_shift: i64,
    pub compared_entries: usize,
    pub max_mismatch: f64,
    pub slice_match_ok: bool,
    pub worst_entries: Vec<SliceMatchEntry>,
    pub reduction_log: Vec<ReductionEvent>,
    pub final_state: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentVanishingReport {
    pub schema_version: u32,
    pub engine_version: String,
    pub kind: String,
    pub domain: String,
    pub kmax: Vec<i64>,
    pub seed: u64,
    pub index_set: String,
    pub lattice_points_in_set: usize,
    pub max_abs_on_set: f64,
    pub max_abs_on_probes: f64,
    pub min_abs_on_probes: f64,
    pub bound_violations: usize,
    pub vanishing_observed: bool,
}

/// Serialize any report with a trailing newline (stable byte output).
pub fn to_json_string<T: Serialize>(report: &T) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
    s.push('\n');
    s
}
