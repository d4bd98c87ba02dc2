use super::cholesky::spd_factor;
use super::matrix::DenseMatrix;
use crate::error::{mismatch, Error, Result};

/// Cyclic Jacobi stops once `off(A) <= JACOBI_TOL * ‖A‖_F`.
pub const JACOBI_TOL: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition with eigenvalues sorted in descending order; column `i` of
/// `vectors` belongs to `values[i]`.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl Eigen {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    pub fn smallest(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }
}

/// Symmetric eigen-decomposition by cyclic Jacobi rotations.
///
/// The input is checked for symmetry and symmetrized first. Eigenvectors are orthonormal.
pub fn symmetric_eigen(a: &DenseMatrix) -> Result<Eigen> {
    if !a.is_square() {
        return Err(mismatch("square matrix", format!("{}x{}", a.rows(), a.cols())));
    }
    let tolerance = super::cholesky::SYMMETRY_TOL * a.max_abs();
    let asymmetry = a.asymmetry();
    if asymmetry > tolerance {
        return Err(Error::NotSymmetric { asymmetry, tolerance });
    }
    let n = a.rows();
    let mut m = a.symmetrized();
    let mut v = DenseMatrix::identity(n);
    let threshold = JACOBI_TOL * m.frobenius_norm();

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= threshold {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s, t);
            }
        }
    }
    if !converged && off_diagonal_norm(&m) > threshold {
        return Err(Error::NoConvergence {
            algorithm: "cyclic Jacobi",
            iterations: JACOBI_MAX_SWEEPS,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = v.select_columns(&order);
    Ok(Eigen { values, vectors })
}

fn off_diagonal_norm(m: &DenseMatrix) -> f64 {
    let n = m.rows();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += m[(i, j)] * m[(i, j)];
            }
        }
    }
    s.sqrt()
}

fn rotate(m: &mut DenseMatrix, v: &mut DenseMatrix, p: usize, q: usize, c: f64, s: f64, t: f64) {
    let n = m.rows();
    let apq = m[(p, q)];
    m[(p, p)] -= t * apq;
    m[(q, q)] += t * apq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        if k != p && k != q {
            let akp = m[(k, p)];
            let akq = m[(k, q)];
            let new_kp = c * akp - s * akq;
            let new_kq = s * akp + c * akq;
            m[(k, p)] = new_kp;
            m[(p, k)] = new_kp;
            m[(k, q)] = new_kq;
            m[(q, k)] = new_kq;
        }
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Symmetric-definite generalized eigenproblem `a v = λ g v`.
///
/// Reduced to standard form through the Cholesky factor of `g` (`L⁻¹ a L⁻ᵀ`), solved by
/// [`symmetric_eigen`], and back-transformed so that the eigenvectors are `g`-orthonormal.
pub fn sym_generalized_eigs(a: &DenseMatrix, g: &DenseMatrix) -> Result<Eigen> {
    if a.shape() != g.shape() {
        return Err(mismatch(
            format!("{}x{}", g.rows(), g.cols()),
            format!("{}x{}", a.rows(), a.cols()),
        ));
    }
    let factor = spd_factor(g)?;
    let left = factor.lower_solve_matrix(&a.symmetrized())?;
    let reduced = factor.lower_solve_matrix(&left.transpose())?.symmetrized();
    let eig = symmetric_eigen(&reduced)?;
    let vectors = factor.upper_solve_matrix(&eig.vectors)?;
    Ok(Eigen {
        values: eig.values,
        vectors,
    })
}

/// `sup_x √(xᵀ a x / xᵀ g x)`, clamping round-off below zero. Zero for an empty space.
pub fn sup_rayleigh_sqrt(a: &DenseMatrix, g: &DenseMatrix) -> Result<f64> {
    if a.rows() == 0 {
        return Ok(0.0);
    }
    Ok(sym_generalized_eigs(a, g)?.largest().max(0.0).sqrt())
}
