use super::matrix::DenseMatrix;
use crate::error::{mismatch, Error, Result};

/// LU factorization with partial pivoting, `P·A = L·U`, for general square systems.
#[derive(Clone, Debug)]
pub struct LuFactorization {
    lu: DenseMatrix,
    perm: Vec<usize>,
}

impl LuFactorization {
    /// Factors `a`; a pivot below `1e-14 · max|a|` is reported as [`Error::Singular`].
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(mismatch("square matrix", format!("{}x{}", a.rows(), a.cols())));
        }
        let n = a.rows();
        let threshold = 1e-14 * a.max_abs();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, best) = (k..n)
                .map(|i| (i, lu[(i, k)].abs()))
                .fold((k, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best <= threshold {
                return Err(Error::Singular { pivot: k });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu[(k, j)];
                    lu[(k, j)] = lu[(p, j)];
                    lu[(p, j)] = tmp;
                }
                perm.swap(k, p);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let factor = lu[(i, k)] / pivot;
                lu[(i, k)] = factor;
                if factor != 0.0 {
                    for j in (k + 1)..n {
                        lu[(i, j)] -= factor * lu[(k, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.perm.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for k in 0..i {
                x[i] -= self.lu[(i, k)] * x[k];
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                x[i] -= self.lu[(i, k)] * x[k];
            }
            x[i] /= self.lu[(i, i)];
        }
        x
    }

    /// Solves `Aᵀ x = b`.
    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n, "right-hand side length");
        // Aᵀ = Uᵀ Lᵀ P, so solve Uᵀ z = b, Lᵀ w = z, x = Pᵀ w.
        let mut z = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                z[i] -= self.lu[(k, i)] * z[k];
            }
            z[i] /= self.lu[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                z[i] -= self.lu[(k, i)] * z[k];
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    pub fn solve_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(rhs, Self::solve)
    }

    pub fn solve_transpose_matrix(&self, rhs: &DenseMatrix) -> Result<DenseMatrix> {
        self.map_columns(rhs, Self::solve_transpose)
    }

    fn map_columns(&self, rhs: &DenseMatrix, f: impl Fn(&Self, &[f64]) -> Vec<f64>) -> Result<DenseMatrix> {
        if rhs.rows() != self.dim() {
            return Err(mismatch(format!("{} rows", self.dim()), format!("{} rows", rhs.rows())));
        }
        let mut out = DenseMatrix::zeros(rhs.rows(), rhs.cols());
        for j in 0..rhs.cols() {
            out.set_column(j, &f(self, &rhs.column(j)));
        }
        Ok(out)
    }
}
