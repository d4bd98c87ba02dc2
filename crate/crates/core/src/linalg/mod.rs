//! Dense kernels: SPD factorization, LU, symmetric and symmetric-definite generalized
//! eigenproblems, SVD, subordinate operator norms and least squares.

mod cholesky;
mod eigen;
mod lu;
mod matrix;
mod svd;

pub use cholesky::{spd_factor, SpdFactorization, SYMMETRY_TOL};
pub use eigen::{sup_rayleigh_sqrt, sym_generalized_eigs, symmetric_eigen, Eigen, JACOBI_MAX_SWEEPS, JACOBI_TOL};
pub use lu::LuFactorization;
pub use matrix::{axpy, dot, norm2, DenseMatrix};
pub use svd::{least_squares, subordinate_norm, sup_norm_ratio, svd, Svd, RANK_TOL};
