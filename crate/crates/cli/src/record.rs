//! Report records and their JSON and CSV encodings.
//!
//! Infinite constants are written as the string `"inf"` in both formats. Floats use the
//! shortest representation that parses back to the same double.

use std::io::Write;
use std::time::Instant;

use serde::Serialize;
use serde_json::{Map, Value};

use qopt_core::analysis::{
    analyze, evaluate_check, evaluate_restriction_check, verify_restriction_lemma, AnalysisReport, CheckOutcome,
    ExtReal, RestrictionReport, CHECKS, RESTRICTION_CHECK,
};

use crate::config::{Point, RunConfig, SCHEMA_VERSION};
use crate::error::{CliError, CliResult};
use crate::registry::{Built, ModelEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Method,
    Restriction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub passed: bool,
    pub applicable: bool,
    pub residual: ExtReal,
    pub threshold: f64,
}

impl From<CheckOutcome> for CheckRecord {
    fn from(o: CheckOutcome) -> Self {
        Self {
            name: o.name,
            passed: o.passed,
            applicable: o.applicable,
            residual: ExtReal::from(o.residual),
            threshold: o.threshold,
        }
    }
}

/// Everything computed for one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRecord {
    pub point: usize,
    pub model: String,
    pub params: Map<String, Value>,
    pub swept: Map<String, Value>,
    pub kind: RecordKind,
    pub report: Option<AnalysisReport>,
    pub restriction: Option<RestrictionReport>,
    pub checks: Vec<CheckRecord>,
    pub passed: bool,
    /// Seconds; only present with `--timing`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl ReportRecord {
    pub fn failed_checks(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Value of a named quantity (see [`QUANTITIES`]); `None` if the record has no such value.
    pub fn quantity(&self, name: &str) -> Option<ExtReal> {
        if let Some(r) = &self.restriction {
            return match name {
                "restriction_c" => Some(r.c.into()),
                "restriction_delta" => Some(r.delta.into()),
                "restriction_norm" => Some(r.norm.into()),
                _ => None,
            };
        }
        let r = self.report.as_ref()?;
        Some(match name {
            "c_stab" => r.c_stab.into(),
            "c_qopt" | "c_qopt_opnorm" => r.c_qopt_opnorm,
            "c_qopt_dualnorm" => r.c_qopt_dualnorm,
            "c_qopt_angle" => r.c_qopt_angle,
            "complement_norm" => r.complement_norm,
            "delta_v" => r.delta_v,
            "delta_s" => r.delta_s,
            "continuity_cbext" => r.continuity_cbext,
            "inf_sup_beta" => r.inf_sup_beta.into(),
            "classical_bound" => r.classical_bound,
            "angle_alpha" => r.angle_alpha?.into(),
            _ => return None,
        })
    }
}

/// Quantities addressable in assertions and shown in sweep tables.
pub const QUANTITIES: &[&str] = &[
    "c_stab",
    "c_qopt",
    "c_qopt_opnorm",
    "c_qopt_dualnorm",
    "c_qopt_angle",
    "complement_norm",
    "delta_v",
    "delta_s",
    "continuity_cbext",
    "inf_sup_beta",
    "classical_bound",
    "angle_alpha",
    "restriction_c",
    "restriction_delta",
    "restriction_norm",
];

pub fn is_quantity(name: &str) -> bool {
    QUANTITIES.contains(&name)
}

fn default_checks(kind: RecordKind) -> Vec<String> {
    match kind {
        RecordKind::Method => CHECKS.iter().map(|c| c.name.to_string()).collect(),
        RecordKind::Restriction => vec![RESTRICTION_CHECK.name.to_string()],
    }
}

fn not_applicable(name: &str) -> CheckRecord {
    CheckRecord {
        name: name.into(),
        passed: true,
        applicable: false,
        residual: ExtReal::Finite(0.0),
        threshold: 0.0,
    }
}

/// Builds the model at `point`, analyzes it and evaluates the enforced checks.
pub fn evaluate_point(entry: &ModelEntry, config: &RunConfig, point: &Point, timing: bool) -> CliResult<ReportRecord> {
    let start = Instant::now();
    let built = entry.build(&point.params)?;
    let analysis_error = |source| CliError::Analysis {
        point: point.index,
        source,
    };
    let tol = |name: &str| config.tolerance_overrides.get(name).copied();
    let (kind, report, restriction) = match &built {
        Built::Method(m) => (RecordKind::Method, Some(analyze(m).map_err(analysis_error)?), None),
        Built::Restriction(c) => {
            let r = verify_restriction_lemma(&c.space, &c.operator, &c.subspace).map_err(analysis_error)?;
            (RecordKind::Restriction, None, Some(r))
        }
    };
    let names = config.checks.clone().unwrap_or_else(|| default_checks(kind));
    let mut checks = Vec::with_capacity(names.len());
    for name in &names {
        let record = match (&report, &restriction) {
            (Some(r), _) if name != RESTRICTION_CHECK.name => evaluate_check(r, name, tol(name))
                .map_err(|_| CliError::UnknownCheck(name.clone()))?
                .into(),
            (_, Some(r)) if name == RESTRICTION_CHECK.name => evaluate_restriction_check(r, tol(name)).into(),
            _ => not_applicable(name),
        };
        checks.push(record);
    }
    let passed = checks.iter().all(|c| c.passed);
    let swept = point.swept.iter().cloned().collect();
    Ok(ReportRecord {
        point: point.index,
        model: entry.name.to_string(),
        params: point.params.clone(),
        swept,
        kind,
        report,
        restriction,
        checks,
        passed,
        wall_time_s: timing.then(|| start.elapsed().as_secs_f64()),
    })
}

/// Top-level JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct ReportDocument<'a> {
    pub schema_version: u32,
    pub command: &'a str,
    pub model: &'a str,
    pub records: &'a [ReportRecord],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_summary: Option<&'a crate::sweep::SweepSummary>,
    pub passed: bool,
}

impl<'a> ReportDocument<'a> {
    pub fn new(
        command: &'a str,
        model: &'a str,
        records: &'a [ReportRecord],
        sweep_summary: Option<&'a crate::sweep::SweepSummary>,
    ) -> Self {
        let passed = records.iter().all(|r| r.passed) && sweep_summary.is_none_or(|s| s.passed());
        Self {
            schema_version: SCHEMA_VERSION,
            command,
            model,
            records,
            sweep_summary,
            passed,
        }
    }
}

pub fn write_json(doc: &ReportDocument<'_>, out: &mut dyn Write) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::Io {
        context: "cannot write report".into(),
        source: e,
    };
    serde_json::to_writer_pretty(&mut *out, doc).map_err(|e| io(e.into()))?;
    out.write_all(b"\n").map_err(io)
}

/// Leading CSV columns; one `check:<name>` and one `residual:<name>` column per check follow.
pub const CSV_COLUMNS: &[&str] = &[
    "schema_version",
    "point",
    "model",
    "params",
    "kind",
    "passed",
    "consistent",
    "conforming",
    "dim_ambient",
    "dim_v",
    "dim_s",
    "dim_conforming",
    "c_stab",
    "c_qopt_opnorm",
    "complement_norm",
    "c_qopt_dualnorm",
    "c_qopt_angle",
    "angle_alpha",
    "delta_v",
    "delta_s",
    "continuity_cbext",
    "inf_sup_beta",
    "classical_bound",
    "consistency_residual",
    "consistency_scale",
    "consistency_residual_sup",
    "delta_s_alternative",
    "smoother_injective",
    "smoother_rank",
    "approximation_rank",
    "nonconforming_galerkin",
    "restriction_c",
    "restriction_delta",
    "restriction_norm",
    "wall_time_s",
];

/// Every check name, in the order of the per-check CSV columns.
pub fn csv_check_names() -> Vec<&'static str> {
    CHECKS
        .iter()
        .map(|c| c.name)
        .chain(std::iter::once(RESTRICTION_CHECK.name))
        .collect()
}

pub fn csv_header() -> Vec<String> {
    let mut h: Vec<String> = CSV_COLUMNS.iter().map(|s| s.to_string()).collect();
    for name in csv_check_names() {
        h.push(format!("check:{name}"));
        h.push(format!("residual:{name}"));
    }
    h
}

fn real(x: f64) -> String {
    ExtReal::from(x).to_string()
}

fn csv_row(r: &ReportRecord) -> Vec<String> {
    let params = serde_json::to_string(&r.params).expect("params are valid JSON");
    let kind = match r.kind {
        RecordKind::Method => "method",
        RecordKind::Restriction => "restriction",
    };
    let mut row = vec![
        SCHEMA_VERSION.to_string(),
        r.point.to_string(),
        r.model.clone(),
        params,
        kind.to_string(),
        r.passed.to_string(),
    ];
    match &r.report {
        Some(a) => row.extend([
            a.consistent.to_string(),
            a.conforming.to_string(),
            a.dims.ambient.to_string(),
            a.dims.v.to_string(),
            a.dims.s.to_string(),
            a.dims.conforming.to_string(),
            real(a.c_stab),
            a.c_qopt_opnorm.to_string(),
            a.complement_norm.to_string(),
            a.c_qopt_dualnorm.to_string(),
            a.c_qopt_angle.to_string(),
            a.angle_alpha.map(real).unwrap_or_default(),
            a.delta_v.to_string(),
            a.delta_s.to_string(),
            a.continuity_cbext.to_string(),
            real(a.inf_sup_beta),
            a.classical_bound.to_string(),
            real(a.consistency_residual),
            real(a.consistency_scale),
            a.consistency_residual_sup.to_string(),
            a.delta_s_alternative.to_string(),
            a.smoother_injective.to_string(),
            a.smoother_rank.to_string(),
            a.approximation_rank.to_string(),
            a.nonconforming_galerkin.to_string(),
        ]),
        None => row.extend(std::iter::repeat_n(String::new(), 25)),
    }
    match &r.restriction {
        Some(x) => row.extend([real(x.c), real(x.delta), real(x.norm)]),
        None => row.extend(std::iter::repeat_n(String::new(), 3)),
    }
    row.push(r.wall_time_s.map(real).unwrap_or_default());
    for name in csv_check_names() {
        match r.check(name) {
            Some(c) if c.applicable => {
                row.push(if c.passed { "pass" } else { "fail" }.to_string());
                row.push(c.residual.to_string());
            }
            Some(_) => {
                row.push("n/a".to_string());
                row.push(String::new());
            }
            None => {
                row.push(String::new());
                row.push(String::new());
            }
        }
    }
    row
}

pub fn write_csv(records: &[ReportRecord], out: &mut dyn Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_header())?;
    for r in records {
        w.write_record(csv_row(r))?;
    }
    w.flush().map_err(|e| CliError::Io {
        context: "cannot write report".into(),
        source: e,
    })
}
