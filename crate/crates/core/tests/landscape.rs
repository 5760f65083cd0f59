mod common;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::topology::{poly, random_polynomial, rotation2, t, topological_saddle, KINDS};
use flatsaddle::landscape::{
    classify, codim1_coefficients, codim2_form, communication_height_2d, find_stationary_points, ClassDetail,
    ClassifyOptions, GridSpec, NormalFormCodim1, NormalFormCodim2, StationaryPoint, Tag, Verdict, DEFAULT_ZERO_TOL,
};
use flatsaddle::potentials::{
    chain_potential, rotated_two_particle, ChainParams, Potential, PotentialModel,
};

fn chain(n: usize, gamma: f64) -> PotentialModel {
    chain_potential(ChainParams { n, gamma }).unwrap()
}

fn at_origin(model: &PotentialModel) -> StationaryPoint {
    StationaryPoint::at(model, &vec![0.0; model.dim()], DEFAULT_ZERO_TOL)
}

fn class_of(model: &PotentialModel) -> flatsaddle::landscape::SaddleClass {
    classify(model, &at_origin(model), &ClassifyOptions::default()).unwrap()
}

fn codim1(model: &PotentialModel) -> NormalFormCodim1 {
    match class_of(model).detail {
        Some(ClassDetail::Codim1(nf)) => nf,
        other => panic!("expected a codimension-1 form, got {other:?}"),
    }
}

// ---------------------------------------------------------------- search

#[test]
fn newton_finds_the_documented_points() {
    let search = find_stationary_points(&chain(2, 0.6), &[vec![0.9, 1.1]], 1e-10);
    let p = &search.points[0];
    assert!((p.location[0] - 1.0).abs() < 1e-9 && (p.location[1] - 1.0).abs() < 1e-9);

    let model = rotated_two_particle(0.4).into_model("rotated2");
    let search = find_stationary_points(&model, &[vec![0.1, 0.7]], 1e-10);
    let p = &search.points[0];
    assert!(p.location[0].abs() < 1e-9);
    assert!((p.location[1].powi(2) - 0.4).abs() < 1e-9);

    let search = find_stationary_points(&chain(3, 1.0), &[vec![0.0; 3]], 1e-10);
    assert!(search.points[0].gradient_norm <= 1e-10);
}

#[test]
fn duplicates_merge_and_bad_seeds_are_reported() {
    let model = chain(2, 0.6);
    let seeds = vec![vec![0.9, 1.1], vec![1.05, 0.97], vec![1.0], vec![-1.1, -0.8]];
    let s = find_stationary_points(&model, &seeds, 1e-10);
    assert_eq!(s.points.len(), 2);
    assert_eq!(s.seed_to_point, vec![Some(0), Some(0), None, Some(1)]);
    assert_eq!(s.failures.len(), 1);
    assert_eq!(s.failures[0].seed_index, 2);
}

#[test]
fn stationary_point_eigenbasis_is_orthonormal_and_sorted() {
    let model = chain(5, 0.9);
    let s = find_stationary_points(&model, &[vec![0.8, 0.9, 1.0, 1.1, 1.2]], 1e-12);
    let p = &s.points[0];
    assert!(p.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    let d = p.dim();
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = p.eigenvector(i).iter().zip(p.eigenvector(j)).map(|(a, b)| a * b).sum();
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((dot - want).abs() < 1e-10);
        }
    }
}

// ---------------------------------------------------------------- classify examples

#[test]
fn nondegenerate_two_particle_saddle() {
    let model = rotated_two_particle(0.6).into_model("rotated2");
    let p = at_origin(&model);
    assert!((p.eigenvalues[0] + 1.0).abs() < 1e-12 && (p.eigenvalues[1] - 0.2).abs() < 1e-12);
    let c = class_of(&model);
    assert_eq!((c.tag, c.verdict), (Tag::NondegenerateSaddle, Verdict::Saddle));
}

#[test]
fn quartic_stable_two_particle_saddle() {
    let model = rotated_two_particle(0.5).into_model("rotated2");
    let c = class_of(&model);
    assert_eq!((c.tag, c.verdict), (Tag::Codim1, Verdict::Saddle));
    let nf = codim1(&model);
    assert!((nf.lambda2.unwrap() + 1.0).abs() < 1e-12);
    assert!(nf.c3.abs() < 1e-12);
    assert!((nf.c4 - 0.125).abs() < 1e-12);
}

#[test]
fn cross_term_lowers_the_quartic_coefficient() {
    // −x₁⁴ + x₂²/2 + x₁²x₂: minimising over x₂ leaves −(3/2)x₁⁴
    let model = poly(2, vec![t(&[4, 0], -1.0), t(&[0, 2], 0.5), t(&[2, 1], 1.0)]).into_model("p");
    let nf = codim1(&model);
    assert!(nf.c3.abs() < 1e-12);
    assert!((nf.c4 + 1.5).abs() < 1e-12);
    assert_eq!(class_of(&model).verdict, Verdict::Saddle);
    let direct = codim1_coefficients(&model, &at_origin(&model)).unwrap();
    assert_eq!(direct, nf);
}

#[test]
fn even_soft_direction_has_no_cubic_coefficient() {
    let model = poly(2, vec![t(&[4, 0], 0.3), t(&[0, 2], -0.5), t(&[2, 2], 2.0)]).into_model("p");
    assert!(codim1(&model).c3.abs() < 1e-14);
}

#[test]
fn two_descending_directions_are_not_a_saddle() {
    let c = class_of(&chain(2, 0.0));
    assert_eq!((c.tag, c.verdict), (Tag::MultipleNegativeNotSaddle, Verdict::NotSaddle));
}

#[test]
fn three_particle_origin_is_a_double_zero_saddle() {
    let model = chain(3, 2.0 / 3.0);
    let c = class_of(&model);
    assert_eq!((c.tag, c.verdict), (Tag::Codim2, Verdict::Saddle));
    let Some(ClassDetail::Codim2(nf)) = c.detail else { panic!() };
    assert_eq!(nf.root_analysis.real_root_count, 0);
    assert!(nf.root_analysis.positive_definite);
    for i in 0..64 {
        assert!((nf.k(i as f64 * PI / 32.0) - 0.125).abs() < 1e-10);
    }
    assert!((nf.k_minus - 0.125).abs() < 1e-10 && (nf.k_plus - 0.125).abs() < 1e-10);
}

#[test]
fn four_particle_angular_profile() {
    // k(φ) = (3 + cos 4φ)/32 up to the choice of basis in the null space
    let model = chain(4, 1.0);
    let p = at_origin(&model);
    let nf = codim2_form(&model, &p).unwrap();
    assert!((nf.k_minus - 2.0 / 32.0).abs() < 1e-8);
    assert!((nf.k_plus - 4.0 / 32.0).abs() < 1e-8);
    let n = 4096;
    let mean = (0..n).map(|i| nf.k(2.0 * PI * i as f64 / n as f64)).sum::<f64>() / n as f64;
    let mean_sq = (0..n).map(|i| nf.k(2.0 * PI * i as f64 / n as f64).powi(2)).sum::<f64>() / n as f64;
    assert!((mean - 3.0 / 32.0).abs() < 1e-12);
    assert!((mean_sq - 9.5 / 1024.0).abs() < 1e-12);
    assert_eq!(class_of(&model).verdict, Verdict::Saddle);
}

#[test]
fn rotation_invariant_quartic_has_square_discriminant() {
    let model = poly(2, vec![t(&[4, 0], 1.0), t(&[2, 2], 2.0), t(&[0, 4], 1.0)]).into_model("p");
    let nf = codim2_form(&model, &at_origin(&model)).unwrap();
    let want = [1.0, 0.0, 2.0, 0.0, 1.0];
    assert_eq!(nf.delta.len(), 5);
    for (a, b) in nf.delta.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{:?}", nf.delta);
    }
    assert_eq!(nf.root_analysis.real_root_count, 0);
    assert!(nf.root_analysis.positive_definite);
}

#[test]
fn double_roots_are_undetermined() {
    let model = poly(2, vec![t(&[2, 2], 1.0)]).into_model("p");
    assert_eq!(class_of(&model).verdict, Verdict::Undetermined);
}

#[test]
fn sextic_soft_direction_needs_probing() {
    let model = poly(2, vec![t(&[0, 2], -0.5), t(&[6, 0], 1.0)]).into_model("p");
    let p = at_origin(&model);
    let off = classify(&model, &p, &ClassifyOptions::default()).unwrap();
    assert_eq!(off.verdict, Verdict::Undetermined);
    let opts = ClassifyOptions {
        probe_higher: true,
        ..Default::default()
    };
    let on = classify(&model, &p, &opts).unwrap();
    assert_eq!(on.verdict, Verdict::Saddle);
    let Some(ClassDetail::Codim1(nf)) = on.detail else { panic!() };
    let h = nf.higher.unwrap();
    assert_eq!(h.order, 6);
    assert!((h.coefficient - 1.0).abs() < 1e-3);
}

#[test]
fn three_zero_eigenvalues_are_reported_only() {
    let model = poly(4, vec![t(&[4, 0, 0, 0], 1.0), t(&[0, 4, 0, 0], 1.0), t(&[0, 0, 4, 0], 1.0), t(&[0, 0, 0, 2], -1.0)])
        .into_model("p");
    let c = class_of(&model);
    assert_eq!((c.tag, c.verdict), (Tag::HigherCodim, Verdict::Undetermined));
}

// ---------------------------------------------------------------- discriminant table

/// ½λ₃y₃² + V₄(y₁, y₂) in three dimensions.
fn double_zero(lambda3: f64, quartic: [f64; 5]) -> PotentialModel {
    let mut terms = vec![t(&[0, 0, 2], lambda3 / 2.0)];
    let exps = [[4, 0], [3, 1], [2, 2], [1, 3], [0, 4]];
    for (e, c) in exps.iter().zip(quartic) {
        if c != 0.0 {
            terms.push(t(&[e[0], e[1], 0], c));
        }
    }
    poly(3, terms).into_model("double-zero")
}

#[test]
fn discriminant_table_cells() {
    let simple_real = [1.0, 0.0, 0.0, 0.0, -1.0]; // y₁⁴ − y₂⁴
    let positive = [1.0, 0.0, 2.0, 0.0, 1.0];
    let negative = [-1.0, 0.0, -2.0, 0.0, -1.0];
    let cells = [
        (simple_real, -1.0, Verdict::NotSaddle),
        (simple_real, 1.0, Verdict::Saddle),
        (positive, -1.0, Verdict::Saddle),
        (positive, 1.0, Verdict::NotSaddle),
        (negative, -1.0, Verdict::NotSaddle),
        (negative, 1.0, Verdict::NotSaddle),
    ];
    for (q, l3, want) in cells {
        let c = class_of(&double_zero(l3, q));
        assert_eq!(c.tag, Tag::Codim2);
        assert_eq!(c.verdict, want, "quartic {q:?}, λ₃ = {l3}");
    }
}

#[test]
fn nearly_vanishing_leading_coefficient_keeps_the_verdict() {
    // this rotation leaves a y₁⁴ coefficient of about 1e-4 in the null plane
    let theta: f64 = 2.511202367394069;
    let q = [1.0, 0.3, -1.2, 0.0, -0.5];
    let (s, c) = theta.sin_cos();
    let a = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
    for l3 in [-1.0, 1.0] {
        let mut terms = vec![t(&[0, 0, 2], l3 / 2.0)];
        for (e, v) in [[4, 0], [3, 1], [2, 2], [1, 3], [0, 4]].iter().zip(q) {
            terms.push(t(&[e[0], e[1], 0], v));
        }
        let rotated = poly(3, terms).compose_linear(&a).unwrap().into_model("rotated");
        assert_eq!(class_of(&rotated).verdict, class_of(&double_zero(l3, q)).verdict);
        let nf = codim2_form(&rotated, &at_origin(&rotated)).unwrap();
        assert_eq!(nf.root_analysis.real_root_count, 2);
        assert!(nf.root_analysis.all_simple);
    }
}

// ---------------------------------------------------------------- C₄ oracle

/// V restricted to the transverse critical manifold: for fixed t along the
/// soft direction, the transverse gradient is driven to zero by Newton.
fn reduced(model: &PotentialModel, soft: &DVector<f64>, transverse: &[DVector<f64>], s: f64) -> f64 {
    let m = transverse.len();
    let mut c = DVector::zeros(m);
    let point = |c: &DVector<f64>| {
        let mut x = soft * s;
        for (j, e) in transverse.iter().enumerate() {
            x += e * c[j];
        }
        x
    };
    for _ in 0..50 {
        let x = point(&c);
        let g = model.gradient(x.as_slice());
        let h = model.hessian(x.as_slice());
        let gt = DVector::from_iterator(m, transverse.iter().map(|e| e.dot(&g)));
        if gt.norm() < 1e-15 {
            break;
        }
        let ht = DMatrix::from_fn(m, m, |i, j| transverse[i].dot(&(&h * &transverse[j])));
        c -= ht.lu().solve(&gt).unwrap();
    }
    model.value(point(&c).as_slice())
}

/// Quartic coefficient of the even part of the reduced function, Richardson-extrapolated.
fn c4_oracle(model: &PotentialModel, soft: &DVector<f64>, transverse: &[DVector<f64>]) -> f64 {
    let v0 = model.value(&vec![0.0; model.dim()]);
    let q = |s: f64| (reduced(model, soft, transverse, s) + reduced(model, soft, transverse, -s) - 2.0 * v0) / (2.0 * s.powi(4));
    let h = 0.004;
    (4.0 * q(h / 2.0) - q(h)) / 3.0
}

fn unit(d: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(d);
    v[i] = 1.0;
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn quartic_coefficient_matches_transverse_minimisation(
        a in -2.0f64..2.0,
        b in -1.5f64..1.5,
        c in -1.5f64..1.5,
        e in -1.0f64..1.0,
        l2 in 0.3f64..2.0,
        l3 in -2.0f64..-0.3,
    ) {
        // soft y₁, stable y₂, unstable y₃
        let model = poly(3, vec![
            t(&[4, 0, 0], a),
            t(&[0, 2, 0], l2 / 2.0),
            t(&[0, 0, 2], l3 / 2.0),
            t(&[2, 1, 0], b),
            t(&[2, 0, 1], c),
            t(&[1, 1, 1], e),
            t(&[0, 3, 0], 0.3),
            t(&[0, 2, 2], 0.2),
        ]).into_model("p");
        let nf = codim1(&model);
        let oracle = c4_oracle(&model, &unit(3, 0), &[unit(3, 1), unit(3, 2)]);
        prop_assume!(oracle.abs() > 1e-3);
        prop_assert!(((nf.c4 - oracle) / oracle).abs() < 1e-6, "library {} oracle {}", nf.c4, oracle);
        let expected = a - b * b / (2.0 * l2) - c * c / (2.0 * l3);
        prop_assert!((nf.c4 - expected).abs() < 1e-10);
    }

    #[test]
    fn verdict_and_coefficients_survive_rotation(theta in 0.0f64..(2.0 * PI), c4 in 0.2f64..2.0, b in -1.0f64..1.0) {
        let base = poly(2, vec![t(&[4, 0], c4), t(&[0, 2], -0.5), t(&[2, 1], b), t(&[1, 2], 0.4)]);
        let rotated = base.compose_linear(&rotation2(theta)).unwrap().into_model("rotated");
        let base = base.into_model("base");
        let (c0, c1) = (class_of(&base), class_of(&rotated));
        prop_assert_eq!(c0.verdict, c1.verdict);
        let (n0, n1) = (codim1(&base), codim1(&rotated));
        prop_assert!((n0.c3 - n1.c3).abs() < 1e-8);
        prop_assert!((n0.c4 - n1.c4).abs() < 1e-8);
    }

    #[test]
    fn double_zero_verdict_survives_rotation(theta in 0.0f64..(2.0 * PI), l3 in prop::sample::select(vec![-1.0, 1.0])) {
        // rotate the null plane only
        let q = [1.0, 0.3, -1.2, 0.0, -0.5];
        let base = double_zero(l3, q);
        let (s, c) = theta.sin_cos();
        let a = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let mut terms = vec![t(&[0, 0, 2], l3 / 2.0)];
        for (e, v) in [[4, 0], [3, 1], [2, 2], [1, 3], [0, 4]].iter().zip(q) {
            terms.push(t(&[e[0], e[1], 0], v));
        }
        let rotated = poly(3, terms).compose_linear(&a).unwrap().into_model("rotated");
        prop_assert_eq!(class_of(&base).verdict, class_of(&rotated).verdict);
        let nf0: NormalFormCodim2 = codim2_form(&base, &at_origin(&base)).unwrap();
        let nf1 = codim2_form(&rotated, &at_origin(&rotated)).unwrap();
        prop_assert!((nf0.k_minus - nf1.k_minus).abs() < 1e-8);
        prop_assert!((nf0.k_plus - nf1.k_plus).abs() < 1e-8);
    }
}

#[test]
fn verdicts_match_topological_oracle_on_random_polynomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut saddles = 0;
    for i in 0..20 {
        let kind = KINDS[i % KINDS.len()];
        let model = random_polynomial(kind, &mut rng).into_model(format!("random-{i}"));
        let c = class_of(&model);
        let oracle = topological_saddle(&model, 0.05);
        assert_ne!(c.verdict, Verdict::Undetermined, "{kind:?}");
        assert_eq!(c.verdict == Verdict::Saddle, oracle, "polynomial {i} ({kind:?}): {:?}", c);
        saddles += oracle as usize;
    }
    assert!(saddles >= 6 && saddles <= 14, "{saddles}");
}

// ---------------------------------------------------------------- gates

fn two_particle(gamma: f64) -> PotentialModel {
    chain(2, gamma)
}

#[test]
fn gate_through_the_origin() {
    let model = two_particle(0.6);
    let g = communication_height_2d(&model, &[1.0, 1.0], &[-1.0, -1.0], &GridSpec::square(1.5, 301)).unwrap();
    // diagonal grid steps can pass beside the saddle node: O(h²) error
    assert!(g.communication_height.abs() < 1e-4, "{}", g.communication_height);
    assert!(g.communication_height <= 0.0);
    assert!(g.gate_cells.iter().any(|c| c[0].hypot(c[1]) < 0.02));
    assert_eq!(g.path_witness.first().copied(), Some([1.0, 1.0]));
}

#[test]
fn gate_over_the_split_saddles() {
    let model = two_particle(0.4);
    let g = communication_height_2d(&model, &[1.0, 1.0], &[-1.0, -1.0], &GridSpec::square(1.5, 301)).unwrap();
    assert!((g.communication_height + 0.02).abs() < 2e-3, "{}", g.communication_height);
    // z± = ±(y₂*/√2)(1, −1) with y₂*² = 2(1 − 2γ)
    let off = (2.0f64 * 0.2).sqrt() / 2f64.sqrt();
    for zs in [[off, -off], [-off, off]] {
        assert!(g.gate_cells.iter().any(|c| (c[0] - zs[0]).hypot(c[1] - zs[1]) < 0.05), "{:?}", g.gate_cells);
    }
    assert!(g.gate_cells.iter().all(|c| c[0].hypot(c[1]) > 0.1));
}

#[test]
fn gate_properties() {
    let model = two_particle(0.4);
    let (a, b) = ([1.0, 1.0], [-1.0, -1.0]);
    let spec = GridSpec::square(1.5, 151);
    let ab = communication_height_2d(&model, &a, &b, &spec).unwrap();
    let ba = communication_height_2d(&model, &b, &a, &spec).unwrap();
    assert_eq!(ab.communication_height, ba.communication_height);
    assert!(ab.communication_height >= model.value(&a).max(model.value(&b)));
    let same = communication_height_2d(&model, &a, &a, &spec).unwrap();
    assert_eq!(same.communication_height, model.value(&a));
    assert_eq!(same.gate_cells, vec![a]);
    let mut last = f64::INFINITY;
    for n in [76, 151, 301, 601] {
        let g = communication_height_2d(&model, &a, &b, &GridSpec::square(1.5, n)).unwrap();
        let err = (g.communication_height + 0.02).abs();
        assert!(err <= last + 1e-15, "n = {n}: {err} after {last}");
        last = err;
    }
    let three = chain(3, 1.0);
    assert!(communication_height_2d(&three, &[1.0, 1.0], &[0.0, 0.0], &spec).is_err());
}
