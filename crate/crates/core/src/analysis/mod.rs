//! Stability, quasi-optimality and consistency constants of a method, each computed by
//! more than one route so that the results can check one another.
//!
//! Ambient computations use the operator `T = Φ_S P̂` on `V̂`. Every norm is a subordinate
//! norm with respect to the relevant Gram matrices, evaluated through singular values of
//! whitened matrices.

mod checks;
mod extreal;

use std::collections::BTreeMap;

use serde::Serialize;

pub use checks::{evaluate_check, evaluate_restriction_check, CheckOutcome, CheckSpec, CHECKS, RESTRICTION_CHECK};
pub use extreal::ExtReal;

use crate::error::Result;
use crate::linalg::{subordinate_norm, sup_norm_ratio, svd, DenseMatrix, SpdFactorization};
use crate::method::{
    approximation_operator, check_full_consistency, check_nonconforming_galerkin, check_smoother_injectivity,
    extended_projection, extension_residuals, ExtendedOperators, MethodSpec,
};
use crate::spaces::{
    orthogonal_complement, ritz_projection, span_above, subspace_angle, GramSpace, HilbertSetup, Subspace,
    SubspaceAngle, SubspaceTag,
};

fn s_factor(setup: &HilbertSetup) -> &SpdFactorization {
    setup.s().gram_factor().expect("S is nontrivial")
}

fn v_factor(setup: &HilbertSetup) -> &SpdFactorization {
    setup.v().gram_factor().expect("V is nontrivial")
}

/// `L_S⁻¹ B`: its column norms are the dual norms `‖b(·, σⱼ)‖_{S′}`.
fn whitened_b(m: &MethodSpec) -> Result<DenseMatrix> {
    s_factor(m.setup()).lower_solve_matrix(m.b_matrix())
}

/// `‖b(·, σ)‖_{S′} = √(wᵀ G_S⁻¹ w)` with `wᵢ = b(sᵢ, σ)`.
pub fn b_dual_norm(m: &MethodSpec, sigma: &[f64]) -> f64 {
    let w = m.b_matrix().matvec(sigma);
    s_factor(m.setup()).inverse_quadratic(&w).max(0.0).sqrt()
}

/// `C_stab = sup_σ ‖Eσ‖ / ‖b(·, σ)‖_{S′}`.
pub fn compute_cstab(m: &MethodSpec) -> Result<f64> {
    let num = v_factor(m.setup()).whiten(m.smoother())?;
    sup_norm_ratio(&num, &whitened_b(m)?)
}

/// `‖P‖` from `V` to `S`, the operator-norm form of `C_stab`.
pub fn approximation_norm(m: &MethodSpec) -> Result<f64> {
    let p = approximation_operator(m)?;
    subordinate_norm(&p.matrix, &m.setup().gram_v(), &m.setup().gram_s())
}

/// `(‖P̂‖, ‖I − P̂‖)` on `V̂`.
pub fn compute_cqopt_opnorm(setup: &HilbertSetup, ops: &ExtendedOperators) -> Result<(f64, f64)> {
    let g = setup.vhat().gram();
    let t = &ops.p_ext.matrix;
    let complement = &DenseMatrix::identity(t.rows()) - t;
    Ok((subordinate_norm(t, g, g)?, subordinate_norm(&complement, g, g)?))
}

/// `sup_σ ‖b̂(·, σ)‖_{V̂′} / ‖b(·, σ)‖_{S′}`.
pub fn compute_cqopt_dualnorm(m: &MethodSpec, ops: &ExtendedOperators) -> Result<f64> {
    let num = m.setup().vhat().factor().lower_solve_matrix(&ops.b_ext)?;
    sup_norm_ratio(&num, &whitened_b(m)?)
}

/// Angle between `S` and the range of `id_V − P`, and the resulting `1/sin α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleRoute {
    /// `None` when the range is trivial.
    pub alpha: Option<f64>,
    pub c_qopt: ExtReal,
}

pub fn compute_cqopt_angle(setup: &HilbertSetup, ops: &ExtendedOperators) -> Result<AngleRoute> {
    let space = setup.vhat();
    let image = setup.s().basis() * &ops.p.matrix;
    let kernel_dirs = setup.v().basis() - &image;
    let reference = space
        .whiten(setup.v().basis())?
        .frobenius_norm()
        .max(space.whiten(&image)?.frobenius_norm());
    let kernel = span_above(space, &kernel_dirs, reference, SubspaceTag::Other)?;
    if kernel.is_trivial() {
        return Ok(AngleRoute {
            alpha: None,
            c_qopt: ExtReal::Finite(1.0),
        });
    }
    Ok(match subspace_angle(setup.vhat(), setup.s(), &kernel)? {
        SubspaceAngle::Proper { radians, sin, .. } => AngleRoute {
            alpha: Some(radians),
            c_qopt: ExtReal::Finite(1.0 / sin),
        },
        SubspaceAngle::Degenerate { .. } => AngleRoute {
            alpha: Some(0.0),
            c_qopt: ExtReal::Infinite,
        },
    })
}

/// Norm of `T` restricted to the `â`-orthogonal complement of `y` (zero if trivial).
fn restricted_to_complement(setup: &HilbertSetup, t: &DenseMatrix, y: &Subspace) -> Result<f64> {
    let space = setup.vhat();
    let q = orthogonal_complement(space, y)?;
    if q.is_trivial() {
        return Ok(0.0);
    }
    subordinate_norm(&(t * q.basis()), &q.gram(), space.gram())
}

/// `δ_V = ‖P̂|_{S⊥}‖`.
pub fn compute_delta_v(setup: &HilbertSetup, ops: &ExtendedOperators) -> Result<f64> {
    restricted_to_complement(setup, &ops.p_ext.matrix, setup.s())
}

/// `δ_S = ‖P̂|_{V⊥}‖`; zero when `V⊥ = {0}`.
pub fn compute_delta_s(setup: &HilbertSetup, ops: &ExtendedOperators) -> Result<f64> {
    restricted_to_complement(setup, &ops.p_ext.matrix, setup.v())
}

/// Basis (in coefficients of `sub`) of the complement of `inner` inside `sub`, orthogonal
/// for the Gram matrix `gram` of `sub`.
fn coefficient_complement(gram: &DenseMatrix, inner: &DenseMatrix) -> Result<DenseMatrix> {
    let space = GramSpace::new(gram, "coefficients")?;
    let inner = Subspace::new(&space, inner.clone(), SubspaceTag::Other)?;
    Ok(orthogonal_complement(&space, &inner)?.basis().clone())
}

/// `sup_v ‖ρ(v)‖_{S′,b} / ‖v − Π_S v‖` with the consistency error
/// `ρ(v) = b(Π_S v, ·) − â(v, E ·)`. For a fully consistent method this is `δ_V`.
pub fn delta_v_consistency_route(m: &MethodSpec) -> Result<f64> {
    let setup = m.setup();
    let z = coefficient_complement(&setup.gram_v(), setup.conforming_in_v())?;
    if z.cols() == 0 {
        return Ok(0.0);
    }
    let space = setup.vhat();
    let pi_s = ritz_projection(space, setup.s())?.matrix.matmul(setup.v().basis())?;
    let rho = &pi_s.tr_matmul(m.b_matrix())?.transpose() - &m.load_map().transpose();
    // ‖ρ‖²_{S′,b} = ρᵀ (Bᵀ G_S⁻¹ B)⁻¹ ρ = ‖L_Sᵀ B⁻ᵀ ρ‖².
    let num = s_factor(setup).whiten(&m.solve_transposed(&rho)?)?;
    let remainder = &(setup.v().basis() * &z) - &(setup.s().basis() * &(&pi_s * &z));
    let den = remainder.congruence(space.gram())?;
    subordinate_norm(&(&num * &z), &den, &DenseMatrix::identity(num.rows()))
}

/// Smallest `δ` with `‖s − P Π_V s‖ ≤ δ ‖s − Π_V s‖` for all `s ∈ S`; equals `δ_S`.
pub fn delta_s_consistency_route(m: &MethodSpec) -> Result<f64> {
    let setup = m.setup();
    let z = coefficient_complement(&setup.gram_s(), setup.conforming_in_s())?;
    if z.cols() == 0 {
        return Ok(0.0);
    }
    let space = setup.vhat();
    let pi_v = ritz_projection(space, setup.v())?.matrix.matmul(setup.s().basis())?;
    let p = approximation_operator(m)?.matrix;
    let k = setup.s().dim();
    let num = &(&DenseMatrix::identity(k) - &(&p * &pi_v)) * &z;
    let remainder = &(setup.s().basis() * &z) - &(setup.v().basis() * &(&pi_v * &z));
    let den = remainder.congruence(space.gram())?;
    subordinate_norm(&num, &den, &setup.gram_s())
}

/// `‖ρ(v)‖_{S′,b}` for a single `v` in `V` coefficients.
pub fn consistency_residual(m: &MethodSpec, v: &[f64]) -> Result<f64> {
    let setup = m.setup();
    let pi_s = ritz_projection(setup.vhat(), setup.s())?;
    let ps = pi_s.apply(&setup.embed_v(v));
    let rho: Vec<f64> = m
        .b_matrix()
        .tr_matvec(&ps)
        .iter()
        .zip(m.smoother().tr_matvec(&setup.gram_v().matvec(v)))
        .map(|(a, b)| a - b)
        .collect();
    let u = m.solve_transposed(&DenseMatrix::column_vector(&rho))?;
    Ok(s_factor(setup).whiten(&u)?.frobenius_norm())
}

/// `β = inf_s sup_σ b(s, σ) / (‖s‖ ‖σ‖)`.
pub fn compute_inf_sup(m: &MethodSpec) -> Result<f64> {
    let f = s_factor(m.setup());
    let x = f.lower_solve_matrix(m.b_matrix())?;
    Ok(svd(&f.lower_solve_matrix(&x.transpose())?)?.smallest())
}

/// Continuity constant of `b̂` on `V̂ × S`, inf-sup constant of `b`, and their ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassicalBound {
    pub c_bext: f64,
    pub beta: f64,
    pub ratio: f64,
}

pub fn compute_classical_bound(m: &MethodSpec, ops: &ExtendedOperators) -> Result<ClassicalBound> {
    let setup = m.setup();
    let num = setup.vhat().factor().lower_solve_matrix(&ops.b_ext)?;
    let den = s_factor(setup).lower().transpose();
    let c_bext = sup_norm_ratio(&num, &den)?;
    let beta = compute_inf_sup(m)?;
    Ok(ClassicalBound {
        c_bext,
        beta,
        ratio: c_bext / beta,
    })
}

/// Norms of an operator, its restriction to `Y` and to `Y⊥`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RestrictionReport {
    /// `‖T|_Y‖`.
    pub c: f64,
    /// `‖T|_{Y⊥}‖`.
    pub delta: f64,
    pub norm: f64,
    /// `max{C, δ} ≤ ‖T‖`.
    pub lower_ok: bool,
    /// `‖T‖ ≤ √(C² + δ²)`.
    pub upper_ok: bool,
}

pub const RESTRICTION_TOL: f64 = 1e-9;

pub fn verify_restriction_lemma(space: &GramSpace, t: &DenseMatrix, y: &Subspace) -> Result<RestrictionReport> {
    let g = space.gram();
    let norm = subordinate_norm(t, g, g)?;
    let c = if y.is_trivial() {
        0.0
    } else {
        subordinate_norm(&(t * y.basis()), &y.gram(), g)?
    };
    let q = orthogonal_complement(space, y)?;
    let delta = if q.is_trivial() {
        0.0
    } else {
        subordinate_norm(&(t * q.basis()), &q.gram(), g)?
    };
    let tol = RESTRICTION_TOL * norm.max(1.0);
    Ok(RestrictionReport {
        c,
        delta,
        norm,
        lower_ok: c.max(delta) <= norm + tol,
        upper_ok: norm <= c.hypot(delta) + tol,
    })
}

/// Dimensions of the spaces of a setup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dimensions {
    pub ambient: usize,
    pub v: usize,
    pub s: usize,
    pub conforming: usize,
}

/// All constants of a method. Quantities that require the extended operators are
/// [`ExtReal::Infinite`] for methods that are not fully algebraically consistent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub dims: Dimensions,
    /// Dimension of the finite-dimensional stand-in for `V`.
    pub proxy_dim: usize,
    /// `S ⊆ V`.
    pub conforming: bool,
    pub consistent: bool,
    pub consistency_residual: f64,
    pub consistency_scale: f64,
    pub smoother_injective: bool,
    pub smoother_rank: usize,
    pub approximation_rank: usize,
    pub nonconforming_galerkin: bool,
    pub c_stab: f64,
    pub c_qopt_opnorm: ExtReal,
    pub complement_norm: ExtReal,
    pub c_qopt_dualnorm: ExtReal,
    pub c_qopt_angle: ExtReal,
    pub angle_alpha: Option<f64>,
    pub delta_v: ExtReal,
    pub delta_s: ExtReal,
    pub continuity_cbext: ExtReal,
    pub inf_sup_beta: f64,
    pub classical_bound: ExtReal,
    /// `sup_v ‖ρ(v)‖_{S′,b} / ‖v − Π_S v‖`.
    pub consistency_residual_sup: ExtReal,
    pub delta_s_alternative: ExtReal,
    /// Gaps between quantities that agree in exact arithmetic.
    pub identity_residuals: BTreeMap<String, f64>,
}

impl AnalysisReport {
    /// `max(1, C_qopt)`, the magnitude for relative tolerances of the identity checks.
    pub fn scale(&self) -> f64 {
        match self.c_qopt_opnorm {
            ExtReal::Finite(c) => c.max(1.0),
            ExtReal::Infinite => 1.0,
        }
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.identity_residuals.get(name).copied()
    }
}

/// Names of the entries of [`AnalysisReport::identity_residuals`].
pub mod residual_names {
    pub const SQRT_IDENTITY: &str = "cqopt-vs-sqrt1-plus-deltaV2";
    pub const DUALNORM: &str = "opnorm-vs-dualnorm";
    pub const ANGLE: &str = "opnorm-vs-angle";
    pub const BUCKHOLTZ: &str = "pext-vs-complement-norm";
    pub const CSTAB_ROUTES: &str = "cstab-vs-p-norm";
    pub const DELTA_V_ROUTES: &str = "deltaV-vs-consistency-route";
    pub const DELTA_S_ROUTES: &str = "deltaS-vs-consistency-route";
    pub const ORTHOGONALITY: &str = "generalized-galerkin-orthogonality";
    pub const IDEMPOTENCE: &str = "pext-idempotence";
    pub const IDENTITY_ON_S: &str = "pext-identity-on-S";
    pub const EXTENDS_P: &str = "pext-extends-P";
    pub const RESTRICTS_TO_B: &str = "bext-restricts-to-b";
    pub const RESTRICTS_TO_LOAD: &str = "bext-restricts-to-load";
    pub const CONSISTENCY_FIXED_POINT: &str = "consistency-fixed-point";
}

pub fn analyze(m: &MethodSpec) -> Result<AnalysisReport> {
    use residual_names as rn;
    let setup = m.setup();
    let consistency = check_full_consistency(m)?;
    let injectivity = check_smoother_injectivity(m)?;
    let galerkin = check_nonconforming_galerkin(m)?;
    let c_stab = compute_cstab(m)?;
    let p_norm = approximation_norm(m)?;
    let beta = compute_inf_sup(m)?;

    let mut residuals = BTreeMap::new();
    residuals.insert(rn::CSTAB_ROUTES.to_string(), (c_stab - p_norm).abs());
    residuals.insert(
        rn::CONSISTENCY_FIXED_POINT.to_string(),
        consistency.fixed_point_residual,
    );

    let mut report = AnalysisReport {
        dims: Dimensions {
            ambient: setup.vhat().dim(),
            v: setup.v().dim(),
            s: setup.s().dim(),
            conforming: setup.s_conforming().dim(),
        },
        proxy_dim: setup.proxy_dim(),
        conforming: setup.is_conforming(),
        consistent: consistency.consistent,
        consistency_residual: consistency.residual,
        consistency_scale: consistency.scale,
        smoother_injective: injectivity.injective,
        smoother_rank: injectivity.smoother_rank,
        approximation_rank: injectivity.approximation_rank,
        nonconforming_galerkin: galerkin.holds,
        c_stab,
        c_qopt_opnorm: ExtReal::Infinite,
        complement_norm: ExtReal::Infinite,
        c_qopt_dualnorm: ExtReal::Infinite,
        c_qopt_angle: ExtReal::Infinite,
        angle_alpha: None,
        delta_v: ExtReal::Infinite,
        delta_s: ExtReal::Infinite,
        continuity_cbext: ExtReal::Infinite,
        inf_sup_beta: beta,
        classical_bound: ExtReal::Infinite,
        consistency_residual_sup: ExtReal::Infinite,
        delta_s_alternative: ExtReal::Infinite,
        identity_residuals: residuals,
    };
    if !consistency.consistent {
        return Ok(report);
    }

    let ops = extended_projection(m)?;
    let (c_qopt, complement) = compute_cqopt_opnorm(setup, &ops)?;
    let dual = compute_cqopt_dualnorm(m, &ops)?;
    let angle = compute_cqopt_angle(setup, &ops)?;
    let delta_v = compute_delta_v(setup, &ops)?;
    let delta_s = compute_delta_s(setup, &ops)?;
    let delta_v_alt = delta_v_consistency_route(m)?;
    let delta_s_alt = delta_s_consistency_route(m)?;
    let classical = compute_classical_bound(m, &ops)?;
    let ext = extension_residuals(m, &ops)?;

    let r = &mut report.identity_residuals;
    r.insert(
        rn::SQRT_IDENTITY.into(),
        (c_qopt - (1.0 + delta_v * delta_v).sqrt()).abs(),
    );
    r.insert(rn::DUALNORM.into(), (c_qopt - dual).abs());
    if let ExtReal::Finite(a) = angle.c_qopt {
        r.insert(rn::ANGLE.into(), (c_qopt - a).abs());
    }
    // ‖P̂‖ = ‖I − P̂‖ requires {0} ≠ S ≠ V̂.
    if setup.s().dim() < setup.vhat().dim() {
        r.insert(rn::BUCKHOLTZ.into(), (c_qopt - complement).abs());
    }
    r.insert(rn::DELTA_V_ROUTES.into(), (delta_v - delta_v_alt).abs());
    r.insert(rn::DELTA_S_ROUTES.into(), (delta_s - delta_s_alt).abs());
    let form_scale = consistency.scale.max(ops.b_ext.max_abs()).max(1.0);
    r.insert(rn::ORTHOGONALITY.into(), ext.galerkin_orthogonality / form_scale);
    r.insert(rn::RESTRICTS_TO_B.into(), ext.restricts_to_b / form_scale);
    r.insert(rn::RESTRICTS_TO_LOAD.into(), ext.restricts_to_load / form_scale);
    r.insert(rn::IDEMPOTENCE.into(), ext.idempotence);
    r.insert(rn::IDENTITY_ON_S.into(), ext.identity_on_s);
    r.insert(rn::EXTENDS_P.into(), ext.extends_p);

    report.c_qopt_opnorm = ExtReal::Finite(c_qopt);
    report.complement_norm = ExtReal::Finite(complement);
    report.c_qopt_dualnorm = ExtReal::Finite(dual);
    report.c_qopt_angle = angle.c_qopt;
    report.angle_alpha = angle.alpha;
    report.delta_v = ExtReal::Finite(delta_v);
    report.delta_s = ExtReal::Finite(delta_s);
    report.continuity_cbext = ExtReal::Finite(classical.c_bext);
    report.classical_bound = ExtReal::Finite(classical.ratio);
    report.consistency_residual_sup = ExtReal::Finite(delta_v_alt);
    report.delta_s_alternative = ExtReal::Finite(delta_s_alt);
    Ok(report)
}
