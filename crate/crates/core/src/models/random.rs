//! Seeded random setups of small dimension.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::method::{check_full_consistency, MethodSpec};
use crate::spaces::{GramSpace, HilbertSetup, Subspace, SubspaceTag};

use super::synthetic::RestrictionCase;

const MAX_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSmallParams {
    pub seed: u64,
    /// Largest ambient dimension (at least 2).
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
}

fn default_max_dim() -> usize {
    12
}

impl RandomSmallParams {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            max_dim: default_max_dim(),
        }
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// `AᵀA + c·I` with `c ∈ [0.05, 1)`.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let a = uniform_matrix(rng, n, n);
    let shift = rng.gen_range(0.05..1.0);
    let mut g = a.tr_matmul(&a).expect("square");
    for i in 0..n {
        g[(i, i)] += shift;
    }
    g.symmetrized()
}

/// A fully algebraically consistent method with random Gram matrix, subspaces, smoother
/// and form.
///
/// The rows of `B` that belong to the conforming part of `S` are fixed by consistency,
/// `b(u, σ) = â(u, Eσ)`; all other entries are random.
pub fn random_consistent_method(p: &RandomSmallParams) -> Result<MethodSpec> {
    if p.max_dim < 2 {
        return Err(Error::InvalidParameter("max_dim must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    for _ in 0..MAX_ATTEMPTS {
        if let Ok(m) = attempt(&mut rng, p.max_dim) {
            if check_full_consistency(&m)?.consistent {
                return Ok(m);
            }
        }
    }
    Err(Error::InvalidSetup(format!(
        "no admissible random method for seed {} after {MAX_ATTEMPTS} draws",
        p.seed
    )))
}

fn attempt(rng: &mut ChaCha8Rng, max_dim: usize) -> Result<MethodSpec> {
    let n = rng.gen_range(2..=max_dim);
    let m = rng.gen_range(1..n);
    let c = rng.gen_range(0..m);
    let k = n - m + c;
    let space = GramSpace::new(&random_spd(rng, n), "random")?;
    let phi_v = uniform_matrix(rng, n, m);
    let phi_c = phi_v.matmul(&uniform_matrix(rng, m, c))?;
    let phi_s = phi_c.hstack(&uniform_matrix(rng, n, k - c))?;
    let setup = Arc::new(HilbertSetup::new(space, phi_v, phi_s, phi_c)?);

    let smoother = uniform_matrix(rng, m, k);
    let mut b = uniform_matrix(rng, k, k);
    for i in 0..k {
        b[(i, i)] += rng.gen_range(0.5..2.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    }
    let fixed = setup.conforming_in_v().tr_matmul(&(&setup.gram_v() * &smoother))?;
    for i in 0..c {
        for j in 0..k {
            b[(i, j)] = fixed[(i, j)];
        }
    }
    MethodSpec::new(setup, b, smoother)
}

/// Random operator, Gram matrix and subspace with ambient dimension in `2..=max_dim`.
pub fn random_restriction_case(seed: u64, max_dim: usize) -> Result<RestrictionCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=max_dim.max(2));
    let dim_y = rng.gen_range(1..n);
    let space = GramSpace::new(&random_spd(&mut rng, n), "random")?;
    let operator = uniform_matrix(&mut rng, n, n);
    let subspace = Subspace::new(&space, uniform_matrix(&mut rng, n, dim_y), SubspaceTag::Other)?;
    Ok(RestrictionCase {
        space,
        operator,
        subspace,
    })
}
