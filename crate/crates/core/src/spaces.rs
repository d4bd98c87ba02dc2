//! The extended Hilbert space `V̂ = V + S`, its subspaces, orthogonal projections,
//! complements, intersections and angles.
//!
//! Every element of `V̂` is a coordinate vector with respect to a fixed ambient basis, and
//! the extended scalar product `â` is the Gram matrix of that basis. Subspaces are stored
//! by coefficient columns in the ambient basis, exactly as a model supplies them;
//! orthonormal bases are derived on demand.

use serde::Serialize;

use crate::error::{mismatch, Error, Result};
use crate::linalg::{dot, spd_factor, svd, DenseMatrix, SpdFactorization, RANK_TOL};

/// Membership residual (relative) accepted for the conforming subspace and intersections.
pub const MEMBERSHIP_TOL: f64 = 1e-10;

/// Relative residual below which an `S` column is considered already spanned when the
/// decomposition basis of `V̂` is selected.
const SPAN_TOL: f64 = 1e-8;

/// Finite-dimensional inner-product space given by the Gram matrix of its basis.
#[derive(Clone, Debug)]
pub struct GramSpace {
    label: String,
    factor: SpdFactorization,
}

impl GramSpace {
    pub fn new(gram: &DenseMatrix, label: impl Into<String>) -> Result<Self> {
        Ok(Self {
            label: label.into(),
            factor: spd_factor(gram)?,
        })
    }

    pub fn euclidean(dim: usize, label: impl Into<String>) -> Self {
        Self::new(&DenseMatrix::identity(dim), label).expect("identity is SPD")
    }

    pub fn dim(&self) -> usize {
        self.factor.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn gram(&self) -> &DenseMatrix {
        self.factor.source()
    }

    pub fn factor(&self) -> &SpdFactorization {
        &self.factor
    }

    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.gram().bilinear(x, y)
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).max(0.0).sqrt()
    }

    /// `leftᵀ · G · right`.
    pub fn cross_gram(&self, left: &DenseMatrix, right: &DenseMatrix) -> Result<DenseMatrix> {
        left.tr_matmul(&self.gram().matmul(right)?)
    }

    /// Coordinates in which `G` becomes the identity (`Lᵀ · x`).
    pub fn whiten(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        self.factor.whiten(x)
    }

    /// Inverse of [`GramSpace::whiten`] (`L⁻ᵀ · z`).
    pub fn unwhiten(&self, z: &DenseMatrix) -> Result<DenseMatrix> {
        self.factor.upper_solve_matrix(z)
    }

    fn check_rows(&self, m: &DenseMatrix) -> Result<()> {
        if m.rows() != self.dim() {
            return Err(mismatch(
                format!("{} ambient coordinates", self.dim()),
                format!("{}", m.rows()),
            ));
        }
        Ok(())
    }
}

/// Role of a subspace inside a [`HilbertSetup`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SubspaceTag {
    V,
    S,
    /// `S ∩ V`.
    Conforming,
    Other,
}

/// Coordinate system of the domain or codomain of an [`OperatorMatrix`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Coordinates {
    Ambient,
    V,
    S,
    Conforming,
    Other,
}

impl From<SubspaceTag> for Coordinates {
    fn from(tag: SubspaceTag) -> Self {
        match tag {
            SubspaceTag::V => Coordinates::V,
            SubspaceTag::S => Coordinates::S,
            SubspaceTag::Conforming => Coordinates::Conforming,
            SubspaceTag::Other => Coordinates::Other,
        }
    }
}

/// Linear map in coefficient form, `codomain coefficients = matrix · domain coefficients`.
#[derive(Clone, Debug)]
pub struct OperatorMatrix {
    pub matrix: DenseMatrix,
    pub domain: Coordinates,
    pub codomain: Coordinates,
}

impl OperatorMatrix {
    pub fn new(matrix: DenseMatrix, domain: Coordinates, codomain: Coordinates) -> Self {
        Self {
            matrix,
            domain,
            codomain,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.matvec(x)
    }
}

/// Subspace of a [`GramSpace`], spanned by linearly independent coefficient columns.
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DenseMatrix,
    tag: SubspaceTag,
    gram: Option<SpdFactorization>,
}

impl Subspace {
    /// Validates independence (`σ_min > 1e-10 · σ_max` in the energy inner product) and
    /// factors the induced Gram matrix.
    pub fn new(space: &GramSpace, basis: DenseMatrix, tag: SubspaceTag) -> Result<Self> {
        space.check_rows(&basis)?;
        if basis.cols() == 0 {
            return Ok(Self::zero(space, tag));
        }
        let dec = svd(&space.whiten(&basis)?)?;
        let ratio = if dec.largest() > 0.0 {
            dec.smallest() / dec.largest()
        } else {
            0.0
        };
        if basis.cols() > space.dim() || ratio <= RANK_TOL {
            return Err(Error::LinearlyDependent { ratio });
        }
        let gram = spd_factor(&basis.congruence(space.gram())?)?;
        Ok(Self {
            basis,
            tag,
            gram: Some(gram),
        })
    }

    pub fn zero(space: &GramSpace, tag: SubspaceTag) -> Self {
        Self {
            basis: DenseMatrix::zeros(space.dim(), 0),
            tag,
            gram: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.cols()
    }

    pub fn is_trivial(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    pub fn tag(&self) -> SubspaceTag {
        self.tag
    }

    pub fn with_tag(mut self, tag: SubspaceTag) -> Self {
        self.tag = tag;
        self
    }

    /// Induced Gram matrix `basisᵀ · G · basis` (empty for the zero subspace).
    pub fn gram(&self) -> DenseMatrix {
        self.gram
            .as_ref()
            .map_or_else(|| DenseMatrix::zeros(0, 0), |f| f.source().clone())
    }

    pub fn gram_factor(&self) -> Option<&SpdFactorization> {
        self.gram.as_ref()
    }

    /// Best-approximation coefficients of the ambient vector `x` and the energy norm of
    /// the remainder.
    pub fn coordinates(&self, space: &GramSpace, x: &[f64]) -> (Vec<f64>, f64) {
        let Some(factor) = &self.gram else {
            return (Vec::new(), space.norm(x));
        };
        let rhs = self.basis.tr_matvec(&space.gram().matvec(x));
        let coeffs = factor.solve(&rhs);
        let approx = self.basis.matvec(&coeffs);
        let diff: Vec<f64> = x.iter().zip(&approx).map(|(a, b)| a - b).collect();
        (coeffs, space.norm(&diff))
    }

    /// `â`-orthonormal basis of the same span (ambient coefficients).
    pub fn orthonormal_basis(&self) -> DenseMatrix {
        match &self.gram {
            None => self.basis.clone(),
            Some(f) => {
                // basis · L⁻ᵀ: columns are â-orthonormal.
                let t = f
                    .upper_solve_matrix(&DenseMatrix::identity(self.dim()))
                    .expect("square");
                &self.basis * &t
            }
        }
    }
}

/// Rank-revealing `â`-orthonormal basis of the span of arbitrary (possibly dependent)
/// ambient columns.
pub fn span_of(space: &GramSpace, columns: &DenseMatrix, tag: SubspaceTag) -> Result<Subspace> {
    span_above(space, columns, 0.0, tag)
}

/// Like [`span_of`], but directions with energy below `RANK_TOL · reference` are dropped
/// as well. Used when the columns are differences that may cancel to round-off.
pub fn span_above(space: &GramSpace, columns: &DenseMatrix, reference: f64, tag: SubspaceTag) -> Result<Subspace> {
    space.check_rows(columns)?;
    if columns.cols() == 0 {
        return Ok(Subspace::zero(space, tag));
    }
    let dec = svd(&space.whiten(columns)?)?;
    let cutoff = RANK_TOL * dec.largest().max(reference);
    let keep: Vec<usize> = (0..dec.values.len())
        .filter(|&i| dec.values[i] > cutoff && dec.values[i] > 0.0)
        .collect();
    if keep.is_empty() {
        return Ok(Subspace::zero(space, tag));
    }
    Subspace::new(space, space.unwhiten(&dec.u.select_columns(&keep))?, tag)
}

/// `â`-orthogonal projection onto `target`, mapping ambient coordinates to target
/// coefficients: `R = G_T⁻¹ Φᵀ G`.
pub fn ritz_projection(space: &GramSpace, target: &Subspace) -> Result<OperatorMatrix> {
    space.check_rows(target.basis())?;
    let matrix = match target.gram_factor() {
        None => DenseMatrix::zeros(0, space.dim()),
        Some(f) => f.solve_matrix(&space.cross_gram(target.basis(), &DenseMatrix::identity(space.dim()))?)?,
    };
    Ok(OperatorMatrix::new(matrix, Coordinates::Ambient, target.tag().into()))
}

/// `â`-orthogonal complement with an `â`-orthonormal basis.
pub fn orthogonal_complement(space: &GramSpace, y: &Subspace) -> Result<Subspace> {
    space.check_rows(y.basis())?;
    let n = space.dim();
    let k = y.dim();
    if k == 0 {
        return Subspace::new(space, space.unwhiten(&DenseMatrix::identity(n))?, SubspaceTag::Other);
    }
    if k == n {
        return Ok(Subspace::zero(space, SubspaceTag::Other));
    }
    // Complement of range(Lᵀ Φ) in the Euclidean frame, mapped back by L⁻ᵀ.
    let whitened = space.whiten(y.basis())?;
    let dec = svd(&whitened.transpose())?;
    let idx: Vec<usize> = (k..n).collect();
    let z = dec.v.select_columns(&idx);
    Subspace::new(space, space.unwhiten(&z)?, SubspaceTag::Other)
}

/// Smallest angle between two subspaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum SubspaceAngle {
    Proper {
        radians: f64,
        cos: f64,
        sin: f64,
    },
    /// `sin ≤ 1e-13`: the subspaces share a direction (numerically).
    Degenerate {
        cos: f64,
    },
}

impl SubspaceAngle {
    pub const DEGENERATE_SIN: f64 = 1e-13;

    pub fn radians(&self) -> f64 {
        match *self {
            SubspaceAngle::Proper { radians, .. } => radians,
            SubspaceAngle::Degenerate { .. } => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, SubspaceAngle::Degenerate { .. })
    }
}

/// Angle `θ ∈ (0, π/2]` with `cos θ = sup |â(y₁, y₂)|` over unit vectors of each subspace.
///
/// The cosine is the largest singular value of the cross-Gram of orthonormal bases. The
/// sine is measured directly as the distance between the principal vectors, which avoids
/// the cancellation in `√(1 − cos²)` for small angles.
pub fn subspace_angle(space: &GramSpace, y1: &Subspace, y2: &Subspace) -> Result<SubspaceAngle> {
    if y1.is_trivial() || y2.is_trivial() {
        return Err(Error::TrivialSubspace);
    }
    let q1 = y1.orthonormal_basis();
    let q2 = y2.orthonormal_basis();
    let cross = space.cross_gram(&q1, &q2)?;
    let dec = svd(&cross)?;
    let cos = dec.largest().clamp(0.0, 1.0);
    let sin = if cos == 0.0 {
        1.0
    } else {
        let p1 = q1.matvec(&dec.u.column(0));
        let p2 = q2.matvec(&dec.v.column(0));
        let diff: Vec<f64> = p2.iter().zip(&p1).map(|(b, a)| b - cos * a).collect();
        space.norm(&diff)
    };
    if sin <= SubspaceAngle::DEGENERATE_SIN {
        return Ok(SubspaceAngle::Degenerate { cos });
    }
    Ok(SubspaceAngle::Proper {
        radians: sin.atan2(cos),
        cos,
        sin,
    })
}

/// Basis of `y1 ∩ y2` from the null space of `[Φ₁ | −Φ₂]`; may be zero-dimensional.
pub fn intersect_subspaces(space: &GramSpace, y1: &Subspace, y2: &Subspace, tag: SubspaceTag) -> Result<Subspace> {
    if y1.is_trivial() || y2.is_trivial() {
        return Ok(Subspace::zero(space, tag));
    }
    let stacked = y1.basis().hstack(&y2.basis().scale(-1.0))?;
    let dec = svd(&space.whiten(&stacked)?)?;
    let null = dec.null_space();
    if null.cols() == 0 {
        return Ok(Subspace::zero(space, tag));
    }
    let k1 = y1.dim();
    let head: Vec<usize> = (0..k1).collect();
    let columns = y1.basis() * &null.select_rows(&head);
    let result = span_of(space, &columns, tag)?;
    for j in 0..result.dim() {
        let c = result.basis().column(j);
        let scale = space.norm(&c).max(f64::MIN_POSITIVE);
        let r1 = y1.coordinates(space, &c).1 / scale;
        let r2 = y2.coordinates(space, &c).1 / scale;
        if r1.max(r2) > 1e-9 {
            return Err(Error::InvalidSetup(format!(
                "intersection column {j} leaves its subspaces (residual {:e})",
                r1.max(r2)
            )));
        }
    }
    Ok(result)
}

/// Decomposition basis of `V̂`: all `V` columns followed by the `S` columns that complete
/// them to a basis. Every ambient vector splits uniquely as `v + s` in this basis.
#[derive(Clone, Debug)]
pub struct Decomposition {
    s_columns: Vec<usize>,
    basis: DenseMatrix,
    lu: crate::linalg::LuFactorization,
}

impl Decomposition {
    /// Indices of the `S` basis columns used to complete `V`.
    pub fn s_columns(&self) -> &[usize] {
        &self.s_columns
    }

    /// The square basis `[Φ_V | Φ_S(:, s_columns)]`.
    pub fn basis(&self) -> &DenseMatrix {
        &self.basis
    }

    /// Splits ambient `x` into `V` coefficients and coefficients of the selected `S` columns.
    pub fn split(&self, x: &[f64], v_dim: usize) -> (Vec<f64>, Vec<f64>) {
        let c = self.lu.solve(x);
        let (v, s) = c.split_at(v_dim);
        (v.to_vec(), s.to_vec())
    }

    /// `basis⁻ᵀ · rows`: converts a form given by its values on the decomposition basis
    /// into ambient coefficients.
    pub fn dual_to_ambient(&self, rows: &DenseMatrix) -> Result<DenseMatrix> {
        self.lu.solve_transpose_matrix(rows)
    }
}

/// `V̂` together with `V`, `S` and `S ∩ V`.
#[derive(Clone, Debug)]
pub struct HilbertSetup {
    vhat: GramSpace,
    v: Subspace,
    s: Subspace,
    s_conforming: Subspace,
    conforming_in_v: DenseMatrix,
    conforming_in_s: DenseMatrix,
    decomposition: Decomposition,
}

impl HilbertSetup {
    /// Assembles and validates a setup: `V + S` must span `V̂`, and every conforming column
    /// must lie in both `V` and `S`.
    pub fn new(
        vhat: GramSpace,
        v_basis: DenseMatrix,
        s_basis: DenseMatrix,
        conforming_basis: DenseMatrix,
    ) -> Result<Self> {
        let v = Subspace::new(&vhat, v_basis, SubspaceTag::V)?;
        let s = Subspace::new(&vhat, s_basis, SubspaceTag::S)?;
        if s.is_trivial() {
            return Err(Error::InvalidSetup("the discrete space S is trivial".into()));
        }
        if v.is_trivial() {
            return Err(Error::InvalidSetup("the space V is trivial".into()));
        }
        let s_conforming = Subspace::new(&vhat, conforming_basis, SubspaceTag::Conforming)?;

        let c = s_conforming.dim();
        let mut conforming_in_v = DenseMatrix::zeros(v.dim(), c);
        let mut conforming_in_s = DenseMatrix::zeros(s.dim(), c);
        for j in 0..c {
            let u = s_conforming.basis().column(j);
            let scale = vhat.norm(&u);
            let (cv, rv) = v.coordinates(&vhat, &u);
            let (cs, rs) = s.coordinates(&vhat, &u);
            if rv > MEMBERSHIP_TOL * scale || rs > MEMBERSHIP_TOL * scale {
                return Err(Error::InvalidSetup(format!(
                    "conforming column {j} is not in both V and S (residuals {rv:e}, {rs:e})"
                )));
            }
            conforming_in_v.set_column(j, &cv);
            conforming_in_s.set_column(j, &cs);
        }

        let decomposition = select_decomposition(&vhat, &v, &s)?;
        let expected_conforming = v.dim() + s.dim() - vhat.dim();
        if c != expected_conforming {
            return Err(Error::InvalidSetup(format!(
                "dim(S ∩ V) must be dim V + dim S − dim V̂ = {expected_conforming}, got {c}"
            )));
        }
        Ok(Self {
            vhat,
            v,
            s,
            s_conforming,
            conforming_in_v,
            conforming_in_s,
            decomposition,
        })
    }

    /// Like [`HilbertSetup::new`], computing `S ∩ V` with [`intersect_subspaces`].
    pub fn with_computed_intersection(vhat: GramSpace, v_basis: DenseMatrix, s_basis: DenseMatrix) -> Result<Self> {
        let v = Subspace::new(&vhat, v_basis.clone(), SubspaceTag::V)?;
        let s = Subspace::new(&vhat, s_basis.clone(), SubspaceTag::S)?;
        let sc = intersect_subspaces(&vhat, &v, &s, SubspaceTag::Conforming)?;
        Self::new(vhat, v_basis, s_basis, sc.basis().clone())
    }

    pub fn vhat(&self) -> &GramSpace {
        &self.vhat
    }

    pub fn v(&self) -> &Subspace {
        &self.v
    }

    pub fn s(&self) -> &Subspace {
        &self.s
    }

    pub fn s_conforming(&self) -> &Subspace {
        &self.s_conforming
    }

    /// `V` coefficients of the conforming basis columns (`dim V x dim(S∩V)`).
    pub fn conforming_in_v(&self) -> &DenseMatrix {
        &self.conforming_in_v
    }

    /// `S` coefficients of the conforming basis columns (`dim S x dim(S∩V)`).
    pub fn conforming_in_s(&self) -> &DenseMatrix {
        &self.conforming_in_s
    }

    pub fn decomposition(&self) -> &Decomposition {
        &self.decomposition
    }

    /// Gram matrix of the `V` basis; on `V` it represents the Riesz map `A`.
    pub fn gram_v(&self) -> DenseMatrix {
        self.v.gram()
    }

    pub fn gram_s(&self) -> DenseMatrix {
        self.s.gram()
    }

    /// `S ⊆ V`.
    pub fn is_conforming(&self) -> bool {
        self.s_conforming.dim() == self.s.dim()
    }

    /// Dimension of the finite-dimensional stand-in for `V`.
    pub fn proxy_dim(&self) -> usize {
        self.v.dim()
    }

    /// Ambient coefficients of `S` coefficients.
    pub fn embed_s(&self, coeffs: &[f64]) -> Vec<f64> {
        self.s.basis().matvec(coeffs)
    }

    /// Ambient coefficients of `V` coefficients.
    pub fn embed_v(&self, coeffs: &[f64]) -> Vec<f64> {
        self.v.basis().matvec(coeffs)
    }
}

/// Pivoted Gram–Schmidt in the whitened frame: starting from an orthonormal basis of `V`,
/// repeatedly adds the `S` column with the largest remaining component.
fn select_decomposition(vhat: &GramSpace, v: &Subspace, s: &Subspace) -> Result<Decomposition> {
    let n = vhat.dim();
    let mut q: Vec<Vec<f64>> = vhat.whiten(&v.orthonormal_basis())?.columns().collect();
    let ws: Vec<Vec<f64>> = vhat.whiten(s.basis())?.columns().collect();
    let norms: Vec<f64> = ws.iter().map(|w| dot(w, w).sqrt()).collect();
    let mut chosen: Vec<usize> = Vec::new();

    let residual = |w: &[f64], q: &[Vec<f64>]| {
        let mut r = w.to_vec();
        for _ in 0..2 {
            for qi in q {
                let c = dot(qi, &r);
                for (rj, qj) in r.iter_mut().zip(qi) {
                    *rj -= c * qj;
                }
            }
        }
        r
    };

    while q.len() < n {
        let best = (0..ws.len())
            .filter(|j| !chosen.contains(j))
            .map(|j| {
                let r = residual(&ws[j], &q);
                let rel = dot(&r, &r).sqrt() / norms[j];
                (j, rel, r)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, rel, r)) if rel > SPAN_TOL => {
                let nr = dot(&r, &r).sqrt();
                q.push(r.iter().map(|x| x / nr).collect());
                chosen.push(j);
            }
            _ => {
                return Err(Error::InvalidSetup(format!(
                    "V + S spans only {} of {} ambient dimensions",
                    q.len(),
                    n
                )))
            }
        }
    }
    chosen.sort_unstable();
    let basis = v.basis().hstack(&s.basis().select_columns(&chosen))?;
    let lu = crate::linalg::LuFactorization::new(&basis)?;
    Ok(Decomposition {
        s_columns: chosen,
        basis,
        lu,
    })
}
