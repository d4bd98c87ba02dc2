#![allow(dead_code)]

use nalgebra::DMatrix;
use qopt_core::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

pub fn spd(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let a = uniform(rng, n, n);
    let mut g = a.tr_matmul(&a).unwrap();
    for i in 0..n {
        g[(i, i)] += 0.2;
    }
    g.symmetrized()
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// `sup ‖t x‖_{g_cod} / ‖x‖_{g_dom}` via nalgebra's Cholesky and SVD.
pub fn oracle_norm(t: &DenseMatrix, g_dom: &DenseMatrix, g_cod: &DenseMatrix) -> f64 {
    let ld = to_na(g_dom).cholesky().unwrap().l();
    let lc = to_na(g_cod).cholesky().unwrap().l();
    let inv_ld_t = ld.transpose().try_inverse().unwrap();
    let m = lc.transpose() * to_na(t) * inv_ld_t;
    m.singular_values().max()
}

pub fn energy(g: &DenseMatrix, x: &[f64]) -> f64 {
    g.bilinear(x, x).max(0.0).sqrt()
}

/// Maximizes `f` over the unit sphere of `ℝⁿ` by random sampling followed by a shrinking
/// random search around the best sample.
pub fn sampled_sphere_max(n: usize, seed: u64, samples: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut r = rng(seed);
    let normalize = |x: &mut Vec<f64>| {
        let len = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= len);
    };
    let mut best = vec![0.0; n];
    let mut best_val = f64::NEG_INFINITY;
    for _ in 0..samples {
        let mut x = uniform_vec(&mut r, n);
        normalize(&mut x);
        let v = f(&x);
        if v > best_val {
            best_val = v;
            best = x;
        }
    }
    let mut step = 0.1;
    while step > 1e-9 {
        let mut improved = false;
        for _ in 0..50 * n {
            let mut x: Vec<f64> = best.iter().map(|b| b + step * r.gen_range(-1.0..1.0)).collect();
            normalize(&mut x);
            let v = f(&x);
            if v > best_val {
                best_val = v;
                best = x;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best_val
}

/// Minimizes a function of one angle on `[0, π)` by a grid and golden-section refinement.
pub fn minimize_angle(f: impl Fn(f64) -> f64, grid: usize) -> f64 {
    extremize_angle(f, grid, false)
}

pub fn maximize_angle(f: impl Fn(f64) -> f64, grid: usize) -> f64 {
    extremize_angle(f, grid, true)
}

fn extremize_angle(f: impl Fn(f64) -> f64, grid: usize, maximize: bool) -> f64 {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |t: f64| sign * f(t);
    let h = std::f64::consts::PI / grid as f64;
    let (mut i_best, mut v_best) = (0, f64::INFINITY);
    for i in 0..grid {
        let v = g(i as f64 * h);
        if v < v_best {
            v_best = v;
            i_best = i;
        }
    }
    let (mut a, mut b) = ((i_best as f64 - 1.0) * h, (i_best as f64 + 1.0) * h);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if g(c) < g(d) {
            b = d;
        } else {
            a = c;
        }
    }
    sign * g(0.5 * (a + b)).min(v_best)
}
