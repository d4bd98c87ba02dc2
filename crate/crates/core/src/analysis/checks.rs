//! Named pass/fail checks over an [`AnalysisReport`].

use serde::Serialize;

use super::{residual_names as rn, AnalysisReport, ExtReal, RestrictionReport};
use crate::error::{Error, Result};

/// A check that can be enforced by name.
#[derive(Clone, Copy, Debug)]
pub struct CheckSpec {
    pub name: &'static str,
    pub description: &'static str,
    /// Relative tolerance; multiplied by the check's scale.
    pub default_tolerance: f64,
}

pub const CHECKS: &[CheckSpec] = &[
    CheckSpec {
        name: "cqopt-eq-sqrt1-plus-deltaV2",
        description: "C_qopt = sqrt(1 + deltaV^2)",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "deltaS-two-sided-bound",
        description: "max(C_stab, deltaS) <= C_qopt <= sqrt(C_stab^2 + deltaS^2); lower side at tolerance/10",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "route-agreement-dualnorm",
        description: "operator norm of the extended projection equals the extended dual-norm ratio",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "angle-route",
        description: "C_qopt = 1/sin(alpha), alpha the angle between S and the kernel of the extended projection",
        default_tolerance: 1e-7,
    },
    CheckSpec {
        name: "classical-upper-bound",
        description: "C_qopt <= C_bext / beta",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "buckholtz-norm-identity",
        description: "norm of the extended projection equals the norm of its complement",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "generalized-galerkin-orthogonality",
        description: "bext(x - Pext x, sigma) = 0 over all basis pairs, relative to the size of the forms",
        default_tolerance: 1e-9,
    },
    CheckSpec {
        name: "full-consistency",
        description: "b(u, sigma) = a(u, E sigma) on the conforming part, relative to the size of the forms",
        default_tolerance: 1e-9,
    },
    CheckSpec {
        name: "cqopt-ge-cstab",
        description: "C_qopt >= C_stab and C_qopt >= 1",
        default_tolerance: 1e-9,
    },
    CheckSpec {
        name: "deltaV-stability-bound",
        description: "deltaV >= sqrt(C_stab^2 - 1) when C_stab >= 1, measured as C_stab <= sqrt(1 + deltaV^2)",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "pext-projection",
        description: "the extended projection is idempotent, fixes S and extends P",
        default_tolerance: 1e-9,
    },
    CheckSpec {
        name: "cstab-route-agreement",
        description: "C_stab from the smoother equals the norm of P from V to S",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "deltaS-zero-implies-cstab",
        description: "deltaS = 0 implies C_qopt = C_stab",
        default_tolerance: 1e-8,
    },
    CheckSpec {
        name: "consistency-functional-routes",
        description: "deltaV and deltaS agree with their consistency-functional formulas",
        default_tolerance: 1e-8,
    },
];

/// Check for restriction cases (operator, Gram matrix, subspace).
pub const RESTRICTION_CHECK: CheckSpec = CheckSpec {
    name: "restriction-lemma-bounds",
    description: "max(C, delta) <= |T| <= sqrt(C^2 + delta^2) for restrictions to Y and its complement",
    default_tolerance: 1e-9,
};

impl CheckSpec {
    pub fn find(name: &str) -> Option<&'static CheckSpec> {
        CHECKS
            .iter()
            .chain(std::iter::once(&RESTRICTION_CHECK))
            .find(|c| c.name == name)
    }
}

/// Result of one check. A check that does not apply (for instance one that needs the
/// extended projection of an inconsistent method) passes with `applicable = false`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub applicable: bool,
    pub residual: f64,
    /// Pass threshold (tolerance times scale).
    pub threshold: f64,
}

impl CheckOutcome {
    fn measured(name: &str, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: residual <= threshold,
            applicable: true,
            residual,
            threshold,
        }
    }

    fn not_applicable(name: &str, threshold: f64) -> Self {
        Self {
            name: name.into(),
            passed: true,
            applicable: false,
            residual: 0.0,
            threshold,
        }
    }
}

fn unknown(name: &str) -> Error {
    Error::InvalidParameter(format!("unknown check `{name}`"))
}

/// Evaluates the named check; `tolerance` overrides the default relative tolerance.
pub fn evaluate_check(report: &AnalysisReport, name: &str, tolerance: Option<f64>) -> Result<CheckOutcome> {
    let spec = CHECKS.iter().find(|c| c.name == name).ok_or_else(|| unknown(name))?;
    let tol = tolerance.unwrap_or(spec.default_tolerance);
    let scale = report.scale();
    let threshold = tol * scale;
    let get = |key: &str| report.residual(key);

    if name == "full-consistency" {
        let residual = report.consistency_residual / report.consistency_scale.max(1.0);
        return Ok(CheckOutcome::measured(name, residual, tol));
    }
    if name == "cstab-route-agreement" {
        return Ok(CheckOutcome::measured(
            name,
            get(rn::CSTAB_ROUTES).unwrap_or(0.0),
            threshold,
        ));
    }
    let (Some(c), Some(dv), Some(ds)) = (
        report.c_qopt_opnorm.finite(),
        report.delta_v.finite(),
        report.delta_s.finite(),
    ) else {
        return Ok(CheckOutcome::not_applicable(name, threshold));
    };
    let cs = report.c_stab;

    let outcome = match name {
        "cqopt-eq-sqrt1-plus-deltaV2" => CheckOutcome::measured(name, get(rn::SQRT_IDENTITY).unwrap_or(0.0), threshold),
        "deltaS-two-sided-bound" => {
            let lower = (cs.max(ds) - c).max(0.0);
            let upper = (c - cs.hypot(ds)).max(0.0);
            let mut o = CheckOutcome::measured(name, lower.max(upper), threshold);
            o.passed = lower <= threshold / 10.0 && upper <= threshold;
            o
        }
        "route-agreement-dualnorm" => CheckOutcome::measured(name, get(rn::DUALNORM).unwrap_or(0.0), threshold),
        "angle-route" => match report.c_qopt_angle {
            ExtReal::Finite(_) => CheckOutcome::measured(name, get(rn::ANGLE).unwrap_or(0.0), threshold),
            ExtReal::Infinite => CheckOutcome::measured(name, f64::INFINITY, threshold),
        },
        "classical-upper-bound" => {
            let bound = report.classical_bound.value();
            CheckOutcome::measured(name, (c - bound).max(0.0), threshold)
        }
        "buckholtz-norm-identity" => match get(rn::BUCKHOLTZ) {
            Some(r) => CheckOutcome::measured(name, r, threshold),
            None => CheckOutcome::not_applicable(name, threshold),
        },
        "generalized-galerkin-orthogonality" => {
            CheckOutcome::measured(name, get(rn::ORTHOGONALITY).unwrap_or(0.0), tol)
        }
        "cqopt-ge-cstab" => {
            let violation = (cs - c).max(1.0 - c).max(0.0);
            CheckOutcome::measured(name, violation, threshold)
        }
        "deltaV-stability-bound" => {
            if cs >= 1.0 {
                let violation = (cs - (1.0 + dv * dv).sqrt()).max(0.0);
                CheckOutcome::measured(name, violation, threshold)
            } else {
                CheckOutcome::not_applicable(name, threshold)
            }
        }
        "pext-projection" => {
            let r = [rn::IDEMPOTENCE, rn::IDENTITY_ON_S, rn::EXTENDS_P]
                .iter()
                .filter_map(|k| get(k))
                .fold(0.0, f64::max);
            CheckOutcome::measured(name, r, threshold)
        }
        "deltaS-zero-implies-cstab" => {
            if ds <= 1e-12 * scale {
                CheckOutcome::measured(name, (c - cs).abs(), threshold)
            } else {
                CheckOutcome::not_applicable(name, threshold)
            }
        }
        "consistency-functional-routes" => {
            let r = get(rn::DELTA_V_ROUTES)
                .unwrap_or(0.0)
                .max(get(rn::DELTA_S_ROUTES).unwrap_or(0.0));
            CheckOutcome::measured(name, r, threshold)
        }
        _ => return Err(unknown(name)),
    };
    Ok(outcome)
}

/// Evaluates [`RESTRICTION_CHECK`] on a restriction report.
pub fn evaluate_restriction_check(report: &RestrictionReport, tolerance: Option<f64>) -> CheckOutcome {
    let tol = tolerance.unwrap_or(RESTRICTION_CHECK.default_tolerance);
    let threshold = tol * report.norm.max(1.0);
    let lower = (report.c.max(report.delta) - report.norm).max(0.0);
    let upper = (report.norm - report.c.hypot(report.delta)).max(0.0);
    CheckOutcome::measured(RESTRICTION_CHECK.name, lower.max(upper), threshold)
}
