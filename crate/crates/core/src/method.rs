//! Nonconforming methods `(S, b, E)` with a smoother `E: S → V` whose adjoint is the
//! discrete load map.
//!
//! Orientation: `b(s, σ) = sᵀ B σ` with the trial function first. The discrete problem
//! `b(U, σ) = ⟨ℓ, Eσ⟩ ∀σ` is therefore the system `Bᵀ U = Eᵀ ℓ`.

use std::sync::Arc;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{svd, DenseMatrix, LuFactorization, RANK_TOL};
use crate::spaces::{ritz_projection, Coordinates, HilbertSetup, OperatorMatrix};

/// Relative tolerance for full algebraic consistency and the other structural checks.
pub const CONSISTENCY_TOL: f64 = 1e-9;

/// Residual above which an `S` direction is certified to lie outside `V`.
pub const REPRESENTABILITY_TOL: f64 = 1e-8;

/// A method on a [`HilbertSetup`]: the matrix of `b` on the `S` basis and the smoother
/// in `V` coefficients (column `j` holds `E sⱼ`).
#[derive(Clone, Debug)]
pub struct MethodSpec {
    setup: Arc<HilbertSetup>,
    b: DenseMatrix,
    smoother: DenseMatrix,
    b_lu: LuFactorization,
}

impl MethodSpec {
    /// Validates shapes and nondegeneracy of `b` (`σ_min(B) > 1e-10 · σ_max(B)`).
    pub fn new(setup: Arc<HilbertSetup>, b: DenseMatrix, smoother: DenseMatrix) -> Result<Self> {
        let k = setup.s().dim();
        let m = setup.v().dim();
        if b.shape() != (k, k) {
            return Err(mismatch(format!("{k}x{k} form"), format!("{}x{}", b.rows(), b.cols())));
        }
        if smoother.shape() != (m, k) {
            return Err(mismatch(
                format!("{m}x{k} smoother"),
                format!("{}x{}", smoother.rows(), smoother.cols()),
            ));
        }
        let dec = svd(&b)?;
        let ratio = if dec.largest() > 0.0 {
            dec.smallest() / dec.largest()
        } else {
            0.0
        };
        if ratio <= RANK_TOL {
            return Err(Error::DegenerateB { ratio });
        }
        let b_lu = LuFactorization::new(&b).map_err(|_| Error::DegenerateB { ratio })?;
        Ok(Self {
            setup,
            b,
            smoother,
            b_lu,
        })
    }

    /// Method with `b = â|_{S×S}` and the given smoother.
    pub fn with_restricted_form(setup: Arc<HilbertSetup>, smoother: DenseMatrix) -> Result<Self> {
        let b = setup.gram_s();
        Self::new(setup, b, smoother)
    }

    /// Method whose approximation operator is the prescribed `p` (`dim S x dim V`).
    pub fn from_approximation(setup: Arc<HilbertSetup>, b: DenseMatrix, p: &DenseMatrix) -> Result<Self> {
        let smoother = derive_smoother(&setup, &b, p)?;
        Self::new(setup, b, smoother)
    }

    pub fn setup(&self) -> &HilbertSetup {
        &self.setup
    }

    pub fn shared_setup(&self) -> Arc<HilbertSetup> {
        Arc::clone(&self.setup)
    }

    pub fn b_matrix(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn smoother(&self) -> &DenseMatrix {
        &self.smoother
    }

    /// Solves `Bᵀ X = rhs` column by column.
    pub fn solve_transposed(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.b_lu.solve_transpose_matrix(rhs)
    }

    /// `max(|B| entries, |G_V| entries)`, the magnitude against which form residuals are
    /// measured.
    pub fn consistency_scale(&self) -> f64 {
        self.b.max_abs().max(self.setup.gram_v().max_abs())
    }

    /// `G_V · E`: entry `(i, j)` is `â(φᵢ, E sⱼ)`.
    pub fn load_map(&self) -> DenseMatrix {
        &self.setup.gram_v() * &self.smoother
    }
}

/// The unique smoother with `â(v, Eσ) = b(Pv, σ)` for all `v ∈ V`: `E = G_V⁻¹ Pᵀ B`.
pub fn derive_smoother(setup: &HilbertSetup, b: &DenseMatrix, p: &DenseMatrix) -> Result<DenseMatrix> {
    let (k, m) = (setup.s().dim(), setup.v().dim());
    if p.shape() != (k, m) {
        return Err(mismatch(
            format!("{k}x{m} operator"),
            format!("{}x{}", p.rows(), p.cols()),
        ));
    }
    let rhs = p.tr_matmul(b)?;
    setup.v().gram_factor().expect("V is nontrivial").solve_matrix(&rhs)
}

/// `E = Π_V|_S` in `V` coefficients.
pub fn ritz_smoother(setup: &HilbertSetup) -> Result<DenseMatrix> {
    ritz_projection(setup.vhat(), setup.v())?
        .matrix
        .matmul(setup.s().basis())
}

/// A functional on `V` given by its values on the `V` basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadFunctional {
    values: Vec<f64>,
}

impl LoadFunctional {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { values })
    }

    /// `a(v, ·)` for `v` in `V` coefficients.
    pub fn riesz_of(setup: &HilbertSetup, v: &[f64]) -> Self {
        Self {
            values: setup.gram_v().matvec(v),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `V` coefficients of `A⁻¹ℓ`.
    pub fn riesz_representative(&self, setup: &HilbertSetup) -> Vec<f64> {
        setup.v().gram_factor().expect("V is nontrivial").solve(&self.values)
    }

    /// `‖ℓ‖_{V′} = √(ℓᵀ G_V⁻¹ ℓ)`.
    pub fn dual_norm(&self, setup: &HilbertSetup) -> f64 {
        setup
            .v()
            .gram_factor()
            .expect("V is nontrivial")
            .inverse_quadratic(&self.values)
            .max(0.0)
            .sqrt()
    }
}

/// `S` coefficients of the discrete solution of `b(U, σ) = ⟨ℓ, Eσ⟩`.
pub fn solve_discrete(m: &MethodSpec, load: &LoadFunctional) -> Result<Vec<f64>> {
    if load.values().len() != m.setup().v().dim() {
        return Err(mismatch(
            format!("{} load values", m.setup().v().dim()),
            format!("{}", load.values().len()),
        ));
    }
    Ok(m.b_lu.solve_transpose(&m.smoother.tr_matvec(load.values())))
}

/// `P = B⁻ᵀ Eᵀ G_V`, mapping `V` coefficients to `S` coefficients.
pub fn approximation_operator(m: &MethodSpec) -> Result<OperatorMatrix> {
    let rhs = m.load_map().transpose();
    Ok(OperatorMatrix::new(
        m.solve_transposed(&rhs)?,
        Coordinates::V,
        Coordinates::S,
    ))
}

/// Outcome of [`check_full_consistency`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConsistencyCheck {
    pub consistent: bool,
    /// `max |b(u, σ) − â(u, Eσ)|` over conforming basis `u` and `S` basis `σ`.
    pub residual: f64,
    /// `max |P u − u|` over the conforming basis, in `S` coefficients.
    pub fixed_point_residual: f64,
    pub scale: f64,
}

/// Full algebraic consistency: `b(u, σ) = â(u, Eσ)` on `(S ∩ V) × S`.
pub fn check_full_consistency(m: &MethodSpec) -> Result<ConsistencyCheck> {
    let setup = m.setup();
    let scale = m.consistency_scale();
    if setup.s_conforming().is_trivial() {
        return Ok(ConsistencyCheck {
            consistent: true,
            residual: 0.0,
            fixed_point_residual: 0.0,
            scale,
        });
    }
    let cs = setup.conforming_in_s();
    let cv = setup.conforming_in_v();
    let lhs = cs.tr_matmul(m.b_matrix())?;
    let rhs = cv.tr_matmul(&m.load_map())?;
    let residual = lhs.max_abs_diff(&rhs);
    let p = approximation_operator(m)?.matrix;
    let fixed_point_residual = p.matmul(cv)?.max_abs_diff(cs);
    Ok(ConsistencyCheck {
        consistent: residual <= CONSISTENCY_TOL * scale,
        residual,
        fixed_point_residual,
        scale,
    })
}

/// Matrix of the extended form `b̂` on `V̂ × S` (ambient basis rows, `S` basis columns).
///
/// `b̂(v + s, σ) = â(v, Eσ) + b(s, σ)`. Its values on the decomposition basis
/// `[Φ_V | Φ_S(:, sel)]` are `[G_V E ; B(sel, :)]`; converting to ambient rows is one
/// transposed solve with that basis.
pub fn assemble_bext(m: &MethodSpec) -> Result<DenseMatrix> {
    let check = check_full_consistency(m)?;
    if !check.consistent {
        return Err(Error::InconsistentMethod {
            residual: check.residual,
        });
    }
    let dec = m.setup().decomposition();
    let rows = m.load_map().vstack(&m.b_matrix().select_rows(dec.s_columns()))?;
    dec.dual_to_ambient(&rows)
}

/// Approximation operator, its extension `P̂` and the extended form `b̂`.
#[derive(Clone, Debug)]
pub struct ExtendedOperators {
    /// `V → S` coefficients.
    pub p: OperatorMatrix,
    /// `V̂ → V̂` in ambient coordinates (range in `S`).
    pub p_ext: OperatorMatrix,
    /// `P̂` from ambient coordinates to `S` coefficients.
    pub p_ext_s: DenseMatrix,
    /// `b̂` with ambient rows and `S` columns.
    pub b_ext: DenseMatrix,
}

/// `P̂ v̂ ∈ S` solving `b(P̂ v̂, σ) = b̂(v̂, σ)` for all `σ`.
pub fn extended_projection(m: &MethodSpec) -> Result<ExtendedOperators> {
    let b_ext = assemble_bext(m)?;
    let p = approximation_operator(m)?;
    let p_ext_s = m.solve_transposed(&b_ext.transpose())?;
    let p_ext = OperatorMatrix::new(
        m.setup().s().basis() * &p_ext_s,
        Coordinates::Ambient,
        Coordinates::Ambient,
    );
    Ok(ExtendedOperators {
        p,
        p_ext,
        p_ext_s,
        b_ext,
    })
}

/// Residuals of the structural identities of [`ExtendedOperators`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionResiduals {
    /// `max |b̂(x − P̂x, σ)|` over ambient basis `x` and `S` basis `σ`.
    pub galerkin_orthogonality: f64,
    /// `max |P̂ P̂ − P̂|` (ambient coordinates).
    pub idempotence: f64,
    /// `max |P̂ s − s|` over the `S` basis (`S` coefficients).
    pub identity_on_s: f64,
    /// `max |P̂ v − P v|` over the `V` basis (`S` coefficients).
    pub extends_p: f64,
    /// `max |b̂(s, σ) − b(s, σ)|` over `S` basis pairs.
    pub restricts_to_b: f64,
    /// `max |b̂(v, σ) − â(v, Eσ)|` over `V` and `S` basis pairs.
    pub restricts_to_load: f64,
}

pub fn extension_residuals(m: &MethodSpec, ops: &ExtendedOperators) -> Result<ExtensionResiduals> {
    let setup = m.setup();
    let phi_s = setup.s().basis();
    let phi_v = setup.v().basis();
    let pe = &ops.p_ext.matrix;
    let orth = &ops.b_ext - &ops.p_ext_s.tr_matmul(m.b_matrix())?;
    Ok(ExtensionResiduals {
        galerkin_orthogonality: orth.max_abs(),
        idempotence: pe.matmul(pe)?.max_abs_diff(pe),
        identity_on_s: ops
            .p_ext_s
            .matmul(phi_s)?
            .max_abs_diff(&DenseMatrix::identity(setup.s().dim())),
        extends_p: ops.p_ext_s.matmul(phi_v)?.max_abs_diff(&ops.p.matrix),
        restricts_to_b: phi_s.tr_matmul(&ops.b_ext)?.max_abs_diff(m.b_matrix()),
        restricts_to_load: phi_v.tr_matmul(&ops.b_ext)?.max_abs_diff(&m.load_map()),
    })
}

/// Outcome of [`check_smoother_injectivity`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct InjectivityCheck {
    pub injective: bool,
    pub smoother_rank: usize,
    /// Rank of `P`, i.e. the dimension of the range of the discrete solution map.
    pub approximation_rank: usize,
}

impl InjectivityCheck {
    pub fn ranks_agree(&self) -> bool {
        self.smoother_rank == self.approximation_rank
    }
}

/// `E` injective iff the discrete solution map reaches all of `S`.
pub fn check_smoother_injectivity(m: &MethodSpec) -> Result<InjectivityCheck> {
    let k = m.setup().s().dim();
    let smoother_rank = svd(m.smoother())?.rank();
    let approximation_rank = svd(&approximation_operator(m)?.matrix)?.rank();
    Ok(InjectivityCheck {
        injective: smoother_rank == k,
        smoother_rank,
        approximation_rank,
    })
}

/// Outcome of [`check_nonconforming_galerkin`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NonconformingGalerkinCheck {
    pub holds: bool,
    /// `max |b(u, w) − â(u, w)|` over conforming basis pairs.
    pub form_residual: f64,
    /// `max |E u − u|` over the conforming basis (`V` coefficients).
    pub smoother_residual: f64,
}

/// `b = â` on `(S ∩ V)²` and `E = id` on `S ∩ V`.
pub fn check_nonconforming_galerkin(m: &MethodSpec) -> Result<NonconformingGalerkinCheck> {
    let setup = m.setup();
    let cs = setup.conforming_in_s();
    let cv = setup.conforming_in_v();
    let form_residual = cs
        .tr_matmul(&m.b_matrix().matmul(cs)?)?
        .max_abs_diff(&setup.s_conforming().gram());
    let smoother_residual = m.smoother().matmul(cs)?.max_abs_diff(cv);
    let form_scale = m.consistency_scale().max(1.0);
    let coeff_scale = cv.max_abs().max(1.0);
    Ok(NonconformingGalerkinCheck {
        holds: form_residual <= CONSISTENCY_TOL * form_scale && smoother_residual <= CONSISTENCY_TOL * coeff_scale,
        form_residual,
        smoother_residual,
    })
}

/// Energy distance of each `S` basis column to `V`. A value above
/// [`REPRESENTABILITY_TOL`] (relative to the column norm) certifies that `E s = s` cannot
/// hold for that direction.
pub fn check_id_smoother_representability(setup: &HilbertSetup) -> Vec<f64> {
    let space = setup.vhat();
    setup
        .s()
        .basis()
        .columns()
        .map(|s| setup.v().coordinates(space, &s).1)
        .collect()
}
