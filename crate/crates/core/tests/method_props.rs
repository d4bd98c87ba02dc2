mod common;

use common::{rng, to_na, uniform_vec};
use proptest::prelude::*;
use qopt_core::analysis::{b_dual_norm, compute_classical_bound, compute_cqopt_opnorm};
use qopt_core::linalg::{least_squares, DenseMatrix};
use qopt_core::method::{
    approximation_operator, assemble_bext, check_id_smoother_representability, check_nonconforming_galerkin,
    check_smoother_injectivity, extended_projection, solve_discrete, LoadFunctional, MethodSpec,
};
use qopt_core::models::{
    build_poisson_1d, build_sequence_example, random_consistent_method, DiscreteSpace, Poisson1dParams,
    PoissonSmoother, RandomSmallParams, SequenceExampleParams, SequenceVariant,
};
use qopt_core::spaces::ritz_projection;

fn random_method(seed: u64) -> MethodSpec {
    random_consistent_method(&RandomSmallParams::new(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn discrete_solution_of_riesz_load_is_p(seed in 0u64..10_000) {
        let m = random_method(seed);
        let mut r = rng(seed ^ 0xa5a5);
        let v = uniform_vec(&mut r, m.setup().v().dim());
        let u = solve_discrete(&m, &LoadFunctional::riesz_of(m.setup(), &v)).unwrap();
        let pv = approximation_operator(&m).unwrap().apply(&v);
        let scale = pv.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        for (a, b) in u.iter().zip(&pv) {
            prop_assert!((a - b).abs() <= 1e-9 * scale);
        }
    }

    #[test]
    fn dual_norm_is_energy_norm_of_riesz_representative(seed in 0u64..10_000) {
        let m = random_method(seed);
        let setup = m.setup();
        let mut r = rng(seed);
        let load = LoadFunctional::new(uniform_vec(&mut r, setup.v().dim())).unwrap();
        let rep = setup.embed_v(&load.riesz_representative(setup));
        let energy = setup.vhat().norm(&rep);
        let dual = load.dual_norm(setup);
        prop_assert!((energy - dual).abs() <= 1e-9 * dual.max(1.0));
        // and a(rep, φᵢ) reproduces the load
        let back = setup.gram_v().matvec(&load.riesz_representative(setup));
        for (a, b) in back.iter().zip(load.values()) {
            prop_assert!((a - b).abs() <= 1e-9 * dual.max(1.0) * 10.0);
        }
    }

    #[test]
    fn extended_form_is_the_unique_common_extension(seed in 0u64..10_000) {
        let m = random_method(seed);
        let setup = m.setup();
        let b_ext = assemble_bext(&m).unwrap();
        // least-squares fit of b̂ from its values on V and on S, column by column
        let phi = setup.v().basis().hstack(setup.s().basis()).unwrap().transpose();
        let data = m.load_map().vstack(m.b_matrix()).unwrap();
        let mut fitted = DenseMatrix::zeros(setup.vhat().dim(), setup.s().dim());
        for j in 0..data.cols() {
            let (x, res) = least_squares(&phi, &data.column(j)).unwrap();
            prop_assert!(res <= 1e-8 * data.max_abs().max(1.0));
            fitted.set_column(j, &x);
        }
        prop_assert!(fitted.max_abs_diff(&b_ext) <= 1e-8 * b_ext.max_abs().max(1.0));
    }

    #[test]
    fn generalized_galerkin_orthogonality(seed in 0u64..10_000) {
        let m = random_method(seed);
        let ops = extended_projection(&m).unwrap();
        let mut r = rng(seed + 1);
        let n = m.setup().vhat().dim();
        let x = uniform_vec(&mut r, n);
        let px = ops.p_ext.apply(&x);
        let diff: Vec<f64> = x.iter().zip(&px).map(|(a, b)| a - b).collect();
        let pairing = ops.b_ext.tr_matvec(&diff);
        let scale = ops.b_ext.max_abs().max(1.0) * diff.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        prop_assert!(pairing.iter().all(|v| v.abs() <= 1e-9 * scale));
    }

    #[test]
    fn dual_norm_is_homogeneous_in_b(seed in 0u64..10_000) {
        let m = random_method(seed);
        let doubled = MethodSpec::new(m.shared_setup(), m.b_matrix().scale(2.0), m.smoother().clone()).unwrap();
        let mut r = rng(seed + 7);
        let sigma = uniform_vec(&mut r, m.setup().s().dim());
        let (a, b) = (b_dual_norm(&m, &sigma), b_dual_norm(&doubled, &sigma));
        prop_assert!((b - 2.0 * a).abs() <= 1e-10 * b.max(1.0));
    }
}

#[test]
fn scaling_b_with_fixed_smoother_doubles_beta_and_keeps_the_classical_bound() {
    // consistency survives the rescaling only when S ∩ V is trivial
    let mut models = vec![
        sequence(SequenceVariant::Ignore, 1, 0.5),
        build_sequence_example(&SequenceExampleParams::new(SequenceVariant::Exploit, 1, 1.0).with_beta(10.0)).unwrap(),
        qopt_core::models::oblique_method(0.3).unwrap(),
    ];
    models.extend(
        (0..200)
            .map(random_method)
            .filter(|m| m.setup().s_conforming().is_trivial())
            .take(10),
    );
    assert!(models.len() > 5);
    for m in &models {
        let doubled = MethodSpec::new(m.shared_setup(), m.b_matrix().scale(2.0), m.smoother().clone()).unwrap();
        let base = compute_classical_bound(m, &extended_projection(m).unwrap()).unwrap();
        let ops = extended_projection(&doubled).unwrap();
        let scaled = compute_classical_bound(&doubled, &ops).unwrap();
        assert!((scaled.beta - 2.0 * base.beta).abs() <= 1e-9 * scaled.beta.max(1.0));
        let c = compute_cqopt_opnorm(doubled.setup(), &ops).unwrap().0;
        assert!(c <= scaled.ratio * (1.0 + 1e-8), "{c} > {}", scaled.ratio);
    }
}

fn sequence(variant: SequenceVariant, n: usize, alpha: f64) -> MethodSpec {
    build_sequence_example(&SequenceExampleParams::new(variant, n, alpha)).unwrap()
}

#[test]
fn ignoring_variant_extension_maps_e0_to_scaled_nonconforming_direction() {
    for &(n, alpha) in &[(1usize, 1.0), (2, 1.0), (3, 0.5), (4, 0.1)] {
        let m = sequence(SequenceVariant::Ignore, n, alpha);
        let ops = extended_projection(&m).unwrap();
        let mut e0 = vec![0.0; n + 2];
        e0[0] = 1.0;
        let image = ops.p_ext.apply(&e0);
        let mut expected = vec![0.0; n + 2];
        expected[0] = 1.0;
        expected[n] = 1.0 / alpha;
        for (a, b) in image.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12, "n={n} alpha={alpha}: {image:?}");
        }
        // E s̄ = 0, so b̂(eₙ, s̄) = â(eₙ, E s̄) = 0 and b̂(e₀, s̄) = b(s̄, s̄)/α
        let e_bar = m.smoother().column(n - 1);
        assert!(e_bar.iter().all(|x| x.abs() < 1e-14));
        let b_ext = assemble_bext(&m).unwrap();
        assert!(b_ext.row(n)[n - 1].abs() < 1e-12);
        assert!((b_ext.row(0)[n - 1] - (1.0 + alpha * alpha) / alpha).abs() < 1e-12);
    }
}

#[test]
fn exploiting_variant_extension_annihilates_e0() {
    for &(n, alpha, beta) in &[(1usize, 1.0, 10.0), (2, 1.0, 1.0), (3, 0.5, 100.0)] {
        let m = build_sequence_example(&SequenceExampleParams::new(SequenceVariant::Exploit, n, alpha).with_beta(beta))
            .unwrap();
        let ops = extended_projection(&m).unwrap();
        let mut e0 = vec![0.0; n + 2];
        e0[0] = 1.0;
        assert!(ops.p_ext.apply(&e0).iter().all(|x| x.abs() < 1e-11));
    }
}

#[test]
fn exploiting_variant_maps_next_unit_vector_onto_nonconforming_direction() {
    let p = SequenceExampleParams::new(SequenceVariant::Exploit, 2, 1.0)
        .with_beta(3.0)
        .with_truncation(5);
    let m = build_sequence_example(&p).unwrap();
    let ops = extended_projection(&m).unwrap();
    let mut e3 = vec![0.0; 5];
    e3[3] = 1.0;
    let image = ops.p_ext.apply(&e3);
    let expected = [1.5, 0.0, 1.5, 0.0, 0.0];
    for (a, b) in image.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-12, "{image:?}");
    }
    let mut e2 = vec![0.0; 5];
    e2[2] = 1.0;
    let image = ops.p_ext.apply(&e2);
    for (a, b) in image.iter().zip(&[1.0, 0.0, 1.0, 0.0, 0.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    // E s̄ = (1+α²)eₙ + β e_{n+1}; V coefficient j belongs to e_{j+1}
    let e_bar = m.smoother().column(1);
    assert!((e_bar[1] - 2.0).abs() < 1e-12 && (e_bar[2] - 3.0).abs() < 1e-12);
}

#[test]
fn smoother_injectivity_distinguishes_the_sequence_variants() {
    for n in 1..5 {
        let ignore = check_smoother_injectivity(&sequence(SequenceVariant::Ignore, n, 1.0)).unwrap();
        assert!(!ignore.injective);
        assert_eq!(ignore.smoother_rank, n - 1);
        assert_eq!(ignore.approximation_rank, n - 1);
        let exploit = check_smoother_injectivity(&sequence(SequenceVariant::Exploit, n, 1.0)).unwrap();
        assert!(exploit.injective && exploit.ranks_agree());
    }
}

#[test]
fn nonconforming_direction_is_alpha_away_from_v() {
    for &alpha in &[1.0, 0.5, 0.1, 3.0] {
        let m = sequence(SequenceVariant::Ignore, 3, alpha);
        let d = check_id_smoother_representability(m.setup());
        assert!(d[0].abs() < 1e-14 && d[1].abs() < 1e-14);
        assert!((d[2] - alpha).abs() < 1e-14);
    }
}

#[test]
fn restricted_form_with_ritz_smoother_gives_ritz_projection() {
    let models = [
        sequence(SequenceVariant::Ritz, 3, 0.7),
        build_poisson_1d(&Poisson1dParams::new(DiscreteSpace::BrokenP1, PoissonSmoother::Ritz)).unwrap(),
        build_poisson_1d(&Poisson1dParams::new(
            DiscreteSpace::ConformingP1,
            PoissonSmoother::Identity,
        ))
        .unwrap(),
    ];
    for m in &models {
        let setup = m.setup();
        let p = approximation_operator(m).unwrap().matrix;
        let pi_s = ritz_projection(setup.vhat(), setup.s())
            .unwrap()
            .matrix
            .matmul(setup.v().basis())
            .unwrap();
        assert!(p.max_abs_diff(&pi_s) <= 1e-9 * pi_s.max_abs().max(1.0));
    }
}

#[test]
fn sip_with_averaging_is_a_nonconforming_galerkin_method() {
    let m = build_poisson_1d(&Poisson1dParams::new(
        DiscreteSpace::BrokenP1,
        PoissonSmoother::Averaging,
    ))
    .unwrap();
    assert!(check_nonconforming_galerkin(&m).unwrap().holds);
    // broken basis functions are not in V: positive distance
    let d = check_id_smoother_representability(m.setup());
    assert!(d.iter().all(|x| *x > 1e-3));
}

/// Broken P1 on `cells` uniform cells, dof `2c` = left end value of cell `c`, `2c + 1` = right.
/// Assembled cell by cell with two-point Gauss quadrature and face by face.
fn reference_sip(cells: usize, eta: f64) -> nalgebra::DMatrix<f64> {
    let h = 1.0 / cells as f64;
    let k = 2 * cells;
    let mut a = nalgebra::DMatrix::<f64>::zeros(k, k);
    let grad = [-1.0 / h, 1.0 / h];
    let gauss_weights = [0.5 * h, 0.5 * h];
    for c in 0..cells {
        for (i, gi) in grad.iter().enumerate() {
            for (j, gj) in grad.iter().enumerate() {
                let integral: f64 = gauss_weights.iter().map(|w| w * gi * gj).sum();
                a[(2 * c + i, 2 * c + j)] += integral;
            }
        }
    }
    // face terms: trace, one-sided derivative and jump sign contributions per adjacent cell
    for face in 0..=cells {
        // (dof, trace sign in the jump, derivative weight in the average)
        let mut contributions: Vec<(usize, f64, [f64; 2])> = Vec::new();
        let neighbours = usize::from(face > 0) + usize::from(face < cells);
        let w = 1.0 / neighbours as f64;
        if face > 0 {
            let c = face - 1;
            contributions.push((2 * c + 1, 1.0, [w * grad[0], w * grad[1]]));
        }
        if face < cells {
            let c = face;
            contributions.push((2 * c, -1.0, [w * grad[0], w * grad[1]]));
        }
        let mut jump = nalgebra::DVector::<f64>::zeros(k);
        let mut avg = nalgebra::DVector::<f64>::zeros(k);
        for (dof, sign, dw) in &contributions {
            jump[*dof] += sign;
            let cell = dof / 2;
            avg[2 * cell] += dw[0];
            avg[2 * cell + 1] += dw[1];
        }
        a -= &avg * jump.transpose() + &jump * avg.transpose();
        a += (eta / h) * &jump * jump.transpose();
    }
    a
}

#[test]
fn sip_solution_matches_independent_assembly() {
    for &(cells, r, eta) in &[(4usize, 4usize, 1.0), (3, 2, 5.0), (6, 3, 2.0)] {
        let p = Poisson1dParams::new(DiscreteSpace::BrokenP1, PoissonSmoother::Averaging)
            .with_mesh(cells, r)
            .with_penalty(eta);
        let m = build_poisson_1d(&p).unwrap();
        let reference = reference_sip(cells, eta);
        assert!(
            (to_na(m.b_matrix()) - &reference).abs().max() <= 1e-10 * reference.abs().max(),
            "form mismatch for {cells} cells"
        );
        // load f = 1 tested with fine hats gives the fine width
        let h_fine = 1.0 / (cells * r) as f64;
        let load = LoadFunctional::new(vec![h_fine; cells * r - 1]).unwrap();
        let u = solve_discrete(&m, &load).unwrap();
        // ⟨1, Eσ⟩: the averaged function is half a coarse hat at interior nodes, ∫ hat = H
        let big_h = 1.0 / cells as f64;
        let rhs = nalgebra::DVector::from_fn(2 * cells, |j, _| {
            let node = j / 2 + j % 2;
            if node > 0 && node < cells {
                0.5 * big_h
            } else {
                0.0
            }
        });
        let expected = reference.transpose().lu().solve(&rhs).unwrap();
        for (a, b) in u.iter().zip(expected.iter()) {
            assert!((a - b).abs() <= 1e-10, "{cells} cells: {a} vs {b}");
        }
    }
}

#[test]
fn prescribed_operator_is_reproduced() {
    let m = sequence(SequenceVariant::Ignore, 2, 1.0);
    let p = approximation_operator(&m).unwrap().matrix;
    let expected = DenseMatrix::from_rows(&[[1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]);
    assert!(p.max_abs_diff(&expected) < 1e-14);
}
