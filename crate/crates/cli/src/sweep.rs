//! Trend assertions, successive relative changes and the human-readable sweep table.

use std::fmt::Write as _;

use serde::Serialize;

use qopt_core::analysis::ExtReal;

use crate::config::{Trend, TrendAssertion};
use crate::error::{CliError, CliResult};
use crate::record::{RecordKind, ReportRecord};

/// Quantities tracked between successive sweep points.
const METHOD_TRACKED: &[&str] = &["c_stab", "c_qopt", "delta_v", "delta_s", "classical_bound"];
const RESTRICTION_TRACKED: &[&str] = &["restriction_c", "restriction_delta", "restriction_norm"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssertionOutcome {
    pub quantity: String,
    pub trend: Trend,
    pub tolerance: f64,
    pub passed: bool,
    /// Largest step against the trend, relative to `max(1, |previous|)`.
    pub worst_violation: ExtReal,
    /// Indices of the points that moved against the trend.
    pub violating_points: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelativeChange {
    pub from: usize,
    pub to: usize,
    /// `|q_to - q_from| / |q_from|` per tracked quantity.
    pub changes: serde_json::Map<String, serde_json::Value>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SweepSummary {
    pub assertions: Vec<AssertionOutcome>,
    pub relative_changes: Vec<RelativeChange>,
}

impl SweepSummary {
    pub fn new(records: &[ReportRecord], assertions: &[TrendAssertion]) -> CliResult<Self> {
        let assertions = assertions
            .iter()
            .map(|a| check_trend(records, a))
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Self {
            assertions,
            relative_changes: relative_changes(records),
        })
    }

    pub fn passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }
}

fn values(records: &[ReportRecord], quantity: &str) -> CliResult<Vec<f64>> {
    records
        .iter()
        .map(|r| {
            r.quantity(quantity).map(|q| q.value()).ok_or_else(|| {
                CliError::InvalidConfig(format!(
                    "quantity `{quantity}` is not reported at sweep point {}",
                    r.point
                ))
            })
        })
        .collect()
}

fn check_trend(records: &[ReportRecord], a: &TrendAssertion) -> CliResult<AssertionOutcome> {
    let v = values(records, &a.quantity)?;
    let mut worst = 0.0_f64;
    let mut violating = Vec::new();
    for (i, w) in v.windows(2).enumerate() {
        let (prev, next) = (w[0], w[1]);
        let step = match a.trend {
            Trend::Nondecreasing => prev - next,
            Trend::Nonincreasing => next - prev,
        };
        let violation = if prev == next || step <= 0.0 {
            0.0
        } else if prev.is_finite() {
            step / prev.abs().max(1.0)
        } else {
            f64::INFINITY
        };
        if violation > a.tolerance {
            violating.push(records[i + 1].point);
        }
        worst = worst.max(violation);
    }
    Ok(AssertionOutcome {
        quantity: a.quantity.clone(),
        trend: a.trend,
        tolerance: a.tolerance,
        passed: violating.is_empty(),
        worst_violation: worst.into(),
        violating_points: violating,
    })
}

fn relative_change(prev: f64, next: f64) -> ExtReal {
    if prev == next {
        ExtReal::Finite(0.0)
    } else if prev.is_finite() && prev != 0.0 {
        ((next - prev).abs() / prev.abs()).into()
    } else {
        ExtReal::Infinite
    }
}

fn relative_changes(records: &[ReportRecord]) -> Vec<RelativeChange> {
    records
        .windows(2)
        .map(|w| {
            let tracked = match w[0].kind {
                RecordKind::Method => METHOD_TRACKED,
                RecordKind::Restriction => RESTRICTION_TRACKED,
            };
            let mut changes = serde_json::Map::new();
            for q in tracked {
                if let (Some(a), Some(b)) = (w[0].quantity(q), w[1].quantity(q)) {
                    let value = serde_json::to_value(relative_change(a.value(), b.value())).expect("serializable");
                    changes.insert(q.to_string(), value);
                }
            }
            RelativeChange {
                from: w[0].point,
                to: w[1].point,
                changes,
            }
        })
        .collect()
}

fn cell(x: Option<ExtReal>) -> String {
    match x {
        Some(ExtReal::Finite(v)) => format!("{v:.6e}"),
        Some(ExtReal::Infinite) => "inf".into(),
        None => "-".into(),
    }
}

fn classical_ratio(r: &ReportRecord) -> Option<ExtReal> {
    let c = r.quantity("c_qopt")?.finite()?;
    let bound = r.quantity("classical_bound")?;
    Some(match bound {
        ExtReal::Finite(b) if c > 0.0 => (b / c).into(),
        _ => ExtReal::Infinite,
    })
}

/// Fixed-width table of the sweep followed by assertion and relative-change lines.
pub fn render_table(records: &[ReportRecord], summary: &SweepSummary) -> String {
    let mut out = String::new();
    let swept: Vec<String> = records
        .iter()
        .map(|r| {
            r.swept
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect();
    let width = swept.iter().map(String::len).max().unwrap_or(0).max("params".len());
    let _ = writeln!(
        out,
        "{:>5}  {:<width$}  {:>13}  {:>13}  {:>13}  {:>13}  {:>13}  passed",
        "point", "params", "c_stab", "c_qopt", "delta_v", "delta_s", "ratio"
    );
    for (r, s) in records.iter().zip(&swept) {
        let (a, b, c, d) = match r.kind {
            RecordKind::Method => ("c_stab", "c_qopt", "delta_v", "delta_s"),
            RecordKind::Restriction => ("", "restriction_norm", "restriction_c", "restriction_delta"),
        };
        let _ = writeln!(
            out,
            "{:>5}  {:<width$}  {:>13}  {:>13}  {:>13}  {:>13}  {:>13}  {}",
            r.point,
            s,
            cell(r.quantity(a)),
            cell(r.quantity(b)),
            cell(r.quantity(c)),
            cell(r.quantity(d)),
            cell(classical_ratio(r)),
            if r.passed { "yes" } else { "NO" }
        );
    }
    for a in &summary.assertions {
        let trend = match a.trend {
            Trend::Nondecreasing => "nondecreasing",
            Trend::Nonincreasing => "nonincreasing",
        };
        let verdict = if a.passed { "ok" } else { "VIOLATED" };
        let _ = writeln!(
            out,
            "assert {} {}: {} (worst {})",
            a.quantity, trend, verdict, a.worst_violation
        );
    }
    for c in &summary.relative_changes {
        let parts: Vec<String> = c
            .changes
            .iter()
            .map(|(k, v)| format!("{k}={}", v.to_string().trim_matches('"')))
            .collect();
        let _ = writeln!(out, "change {} -> {}: {}", c.from, c.to, parts.join(" "));
    }
    out
}
