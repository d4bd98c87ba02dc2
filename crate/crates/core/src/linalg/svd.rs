use super::cholesky::spd_factor;
use super::matrix::{dot, DenseMatrix};
use crate::error::{mismatch, Error, Result};

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

const SVD_MAX_SWEEPS: usize = 100;

/// Thin singular value decomposition `A = U · diag(σ) · Vᵀ` of an `m x n` matrix.
///
/// `u` is `m x n` (columns belonging to zero singular values are zero), `v` is a full
/// orthogonal `n x n` matrix and `values` has length `n`, sorted in descending order.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: DenseMatrix,
    pub values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    pub fn largest(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Smallest of the first `min(m, n)` singular values.
    pub fn smallest(&self) -> f64 {
        let p = self.u.rows().min(self.values.len());
        if p == 0 {
            0.0
        } else {
            self.values[p - 1]
        }
    }

    /// Number of singular values above `RANK_TOL · σ_max`.
    pub fn rank(&self) -> usize {
        let cutoff = RANK_TOL * self.largest();
        self.values.iter().filter(|&&s| s > cutoff && s > 0.0).count()
    }

    /// Orthonormal basis of the null space, from the trailing right singular vectors.
    pub fn null_space(&self) -> DenseMatrix {
        let r = self.rank();
        let idx: Vec<usize> = (r..self.values.len()).collect();
        self.v.select_columns(&idx)
    }

    /// Orthonormal basis of the column space.
    pub fn range(&self) -> DenseMatrix {
        let idx: Vec<usize> = (0..self.rank()).collect();
        self.u.select_columns(&idx)
    }
}

/// One-sided (Hestenes) Jacobi SVD. Accurate in the small singular values, which the
/// rank decisions and near-zero restricted norms depend on.
pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    let mut cols: Vec<Vec<f64>> = a.columns().collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();

    let eps = 1e-15;
    let frob_sq: f64 = cols.iter().map(|c| dot(c, c)).sum();
    let negligible = (f64::EPSILON * f64::EPSILON) * frob_sq;
    let mut converged = n < 2;
    for _ in 0..SVD_MAX_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= eps * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut cols, p, q, c, s);
                rotate_pair(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        return Err(Error::NoConvergence {
            algorithm: "one-sided Jacobi SVD",
            iterations: SVD_MAX_SWEEPS,
        });
    }

    let mut sigma: Vec<f64> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));

    let mut u = DenseMatrix::zeros(m, n);
    let mut vm = DenseMatrix::zeros(n, n);
    for (k, &j) in order.iter().enumerate() {
        if sigma[j] > 0.0 {
            let col: Vec<f64> = cols[j].iter().map(|x| x / sigma[j]).collect();
            u.set_column(k, &col);
        }
        vm.set_column(k, &v[j]);
    }
    sigma = order.iter().map(|&j| sigma[j]).collect();
    Ok(Svd {
        u,
        values: sigma,
        v: vm,
    })
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let cp = &mut left[p];
    let cq = &mut right[0];
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let xp = *x;
        let xq = *y;
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Operator norm of `t` from `(ℝⁿ, g_dom)` to `(ℝᵐ, g_cod)`:
/// `sup_{x≠0} √(xᵀ tᵀ g_cod t x / xᵀ g_dom x)`.
///
/// Evaluated as the largest singular value of `L_codᵀ · t · L_dom⁻ᵀ`, which equals the
/// square root of the largest generalized eigenvalue of `(tᵀ g_cod t, g_dom)` but keeps full
/// accuracy when the norm is close to zero.
pub fn subordinate_norm(t: &DenseMatrix, g_dom: &DenseMatrix, g_cod: &DenseMatrix) -> Result<f64> {
    if t.cols() != g_dom.rows() || t.rows() != g_cod.rows() {
        return Err(mismatch(
            format!("{}x{} operator", g_cod.rows(), g_dom.rows()),
            format!("{}x{}", t.rows(), t.cols()),
        ));
    }
    if t.cols() == 0 || t.rows() == 0 {
        return Ok(0.0);
    }
    let dom = spd_factor(g_dom)?;
    let cod = spd_factor(g_cod)?;
    let whitened = cod.whiten(t)?; // L_codᵀ t
    let m_t = dom.lower_solve_matrix(&whitened.transpose())?; // (L_codᵀ t L_dom⁻ᵀ)ᵀ
    Ok(svd(&m_t)?.largest())
}

/// Minimum-norm least-squares solution of `a x ≈ y` with rank threshold [`RANK_TOL`];
/// returns the solution and the Euclidean residual norm.
pub fn least_squares(a: &DenseMatrix, y: &[f64]) -> Result<(Vec<f64>, f64)> {
    if y.len() != a.rows() {
        return Err(mismatch(format!("{} entries", a.rows()), format!("{}", y.len())));
    }
    let dec = svd(a)?;
    let rank = dec.rank();
    let mut x = vec![0.0; a.cols()];
    for k in 0..rank {
        let coef = dot(&dec.u.column(k), y) / dec.values[k];
        for (xi, vi) in x.iter_mut().zip(dec.v.column(k)) {
            *xi += coef * vi;
        }
    }
    let r: f64 = a
        .matvec(&x)
        .iter()
        .zip(y)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    Ok((x, r))
}

/// `max_{σ≠0} ‖num·σ‖ / ‖den·σ‖` for a square invertible `den`, as `σ_max(num · den⁻¹)`.
pub fn sup_norm_ratio(num: &DenseMatrix, den: &DenseMatrix) -> Result<f64> {
    if num.cols() != den.cols() {
        return Err(mismatch(format!("{} columns", den.cols()), format!("{}", num.cols())));
    }
    if den.cols() == 0 {
        return Ok(0.0);
    }
    let lu = super::lu::LuFactorization::new(den)?;
    // (num den⁻¹)ᵀ = den⁻ᵀ numᵀ
    let prod_t = lu.solve_transpose_matrix(&num.transpose())?;
    Ok(svd(&prod_t)?.largest())
}
