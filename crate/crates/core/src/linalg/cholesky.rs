use super::matrix::DenseMatrix;
use crate::error::{mismatch, Error, Result};

/// Relative symmetry tolerance applied before factorization.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Cholesky factorization `source = L·Lᵀ` of a symmetric positive definite matrix.
#[derive(Clone, Debug)]
pub struct SpdFactorization {
    source: DenseMatrix,
    lower: DenseMatrix,
}

/// Checks symmetry to [`SYMMETRY_TOL`] (relative to the largest entry), symmetrizes, and
/// computes the Cholesky factor.
pub fn spd_factor(m: &DenseMatrix) -> Result<SpdFactorization> {
    if !m.is_square() {
        return Err(mismatch("square matrix", format!("{}x{}", m.rows(), m.cols())));
    }
    let tolerance = SYMMETRY_TOL * m.max_abs();
    let asymmetry = m.asymmetry();
    if asymmetry > tolerance {
        return Err(Error::NotSymmetric { asymmetry, tolerance });
    }
    let source = m.symmetrized();
    let n = source.rows();
    let mut lower = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = source[(j, j)];
        for k in 0..j {
            d -= lower[(j, k)] * lower[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let ljj = d.sqrt();
        lower[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = source[(i, j)];
            for k in 0..j {
                s -= lower[(i, k)] * lower[(j, k)];
            }
            lower[(i, j)] = s / ljj;
        }
    }
    Ok(SpdFactorization { source, lower })
}

impl SpdFactorization {
    pub fn dim(&self) -> usize {
        self.source.rows()
    }

    /// The symmetrized matrix that was factored.
    pub fn source(&self) -> &DenseMatrix {
        &self.source
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// `L·Lᵀ`, for reconstruction checks.
    pub fn reconstruct(&self) -> DenseMatrix {
        &self.lower * &self.lower.transpose()
    }

    /// Solves `L y = b` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_lower_in_place(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= self.lower[(i, k)] * b[k];
            }
            b[i] = s / self.lower[(i, i)];
        }
    }

    /// Solves `Lᵀ x = y` in place.
    #[allow(clippy::needless_range_loop)]
    pub fn solve_upper_in_place(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lower[(k, i)] * y[k];
            }
            y[i] = s / self.lower[(i, i)];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.dim(), "right-hand side length");
        let mut x = b.to_vec();
        self.solve_lower_in_place(&mut x);
        self.solve_upper_in_place(&mut x);
        x
    }

    /// Solves `source · X = rhs` column by column.
    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(rhs, |f, c| {
            f.solve_lower_in_place(c);
            f.solve_upper_in_place(c);
        })
    }

    /// `L⁻¹ · rhs`.
    pub fn lower_solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(rhs, |f, c| f.solve_lower_in_place(c))
    }

    /// `L⁻ᵀ · rhs`.
    pub fn upper_solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(rhs, |f, c| f.solve_upper_in_place(c))
    }

    /// `Lᵀ · rhs`; maps coordinates to a frame in which the source Gram becomes the identity.
    pub fn whiten(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.lower.tr_matmul(rhs)
    }

    pub fn inverse(&self) -> DenseMatrix {
        self.solve_matrix(&DenseMatrix::identity(self.dim()))
            .expect("square identity")
            .symmetrized()
    }

    /// `xᵀ · source⁻¹ · x`.
    pub fn inverse_quadratic(&self, x: &[f64]) -> f64 {
        let mut y = x.to_vec();
        self.solve_lower_in_place(&mut y);
        y.iter().map(|v| v * v).sum()
    }

    fn map_columns(&self, rhs: &DenseMatrix, f: impl Fn(&Self, &mut [f64])) -> Result<DenseMatrix> {
        if rhs.rows() != self.dim() {
            return Err(mismatch(format!("{} rows", self.dim()), format!("{} rows", rhs.rows())));
        }
        let mut out = DenseMatrix::zeros(rhs.rows(), rhs.cols());
        for j in 0..rhs.cols() {
            let mut c = rhs.column(j);
            f(self, &mut c);
            out.set_column(j, &c);
        }
        Ok(out)
    }
}
