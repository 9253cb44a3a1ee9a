//! Artifact serialization: diagnostics CSV, per-time analysis CSV, and the
//! versioned JSON norm report. CSV floats carry 17 significant digits, so a
//! rerun with the same config and seed reproduces the file byte for byte and
//! every value parses back exactly.

use serde::{Deserialize, Serialize};

use qg_core::dynamics::TrajectoryRecord;
use qg_core::gevrey::NormReport;

pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn opt17(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub const DIAG_HEADER: &str =
    "time,l2,linf,h1,dissipation,grad_dissipation,mean,max_speed,balance_residual";

/// Per-step diagnostics table. The balance residual is the discrete
/// `|d/dt (l2^2/2) + kappa * dissipation| / l2^2`, centered in the interior
/// and one-sided at the ends.
pub fn diagnostics_csv(traj: &TrajectoryRecord) -> String {
    let kappa = traj.params.kappa;
    let d = &traj.diag;
    let mut out = String::from(DIAG_HEADER);
    out.push('\n');
    for i in 0..d.len() {
        let res = if d.len() < 2 {
            0.0
        } else {
            let (a, b) = if i == 0 {
                (0, 1)
            } else if i == d.len() - 1 {
                (d.len() - 2, d.len() - 1)
            } else {
                (i - 1, i + 1)
            };
            let de = 0.5 * (d[b].l2 * d[b].l2 - d[a].l2 * d[a].l2) / (d[b].time - d[a].time);
            (de + kappa * d[i].dissipation).abs() / (d[i].l2 * d[i].l2).max(1e-300)
        };
        let row = [
            d[i].time,
            d[i].l2,
            d[i].linf,
            d[i].h1,
            d[i].dissipation,
            d[i].grad_dissipation,
            d[i].mean,
            d[i].max_speed,
            res,
        ];
        let cells: Vec<String> = row.iter().map(|&x| fmt17(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Column order is frozen; downstream tooling indexes by position.
pub const ANALYZE_HEADER: &str = "time,radius,fit_quality,k_norm,g_norm,e1_norm";

pub struct AnalyzeRow {
    pub time: f64,
    pub radius: f64,
    pub fit_quality: f64,
    pub k_norm: Option<f64>,
    pub g_norm: Option<f64>,
    pub e1_norm: Option<f64>,
}

pub fn analyze_csv(rows: &[AnalyzeRow]) -> String {
    let mut out = String::from(ANALYZE_HEADER);
    out.push('\n');
    for r in rows {
        let cells = [
            fmt17(r.time),
            fmt17(r.radius),
            fmt17(r.fit_quality),
            opt17(r.k_norm),
            opt17(r.g_norm),
            opt17(r.e1_norm),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VersionedReport {
    pub schema_version: u32,
    pub report: NormReport,
}

pub fn report_json(report: &NormReport) -> String {
    let wrapped = VersionedReport {
        schema_version: REPORT_SCHEMA_VERSION,
        report: report.clone(),
    };
    let mut s = serde_json::to_string_pretty(&wrapped).expect("report serializes");
    s.push('\n');
    s
}

/// One report per configured norm spec, in config order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VersionedReports {
    pub schema_version: u32,
    pub reports: Vec<NormReport>,
}

pub fn reports_json(reports: &[NormReport]) -> String {
    let wrapped = VersionedReports {
        schema_version: REPORT_SCHEMA_VERSION,
        reports: reports.to_vec(),
    };
    let mut s = serde_json::to_string_pretty(&wrapped).expect("report serializes");
    s.push('\n');
    s
}
