//! Property tests for the algebraic building blocks.

use aqec::experiments::output::format_float;
use aqec::lindblad::{integrate, liouvillian, Collapse, IntegrateOptions, LindbladModel, TimeGrid};
use aqec::models::{
    apply_channel, bitflip_kraus, correction_operator, error_subspace_basis, logical_pair,
    qubit_space, SystemParams,
};
use aqec::{
    embed, make_space, projector, sigma, Axis, CompositeSpace, DensityMatrix, Operator,
    StateVector, C64,
};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
    a.sub(b).unwrap().max_abs() <= tol
}

fn matrix(n: usize) -> impl Strategy<Value = Array2<C64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
        Array2::from_shape_vec((n, n), v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
            .unwrap()
    })
}

fn dims() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(2usize..5, 1..5)
}

/// A random density matrix `A A^dag / tr` on `space`.
fn random_state(space: &CompositeSpace, a: Array2<C64>) -> DensityMatrix {
    let r = a.dot(&a.t().mapv(|z| z.conj()));
    let tr: C64 = r.diag().sum();
    DensityMatrix::new(space.clone(), r.mapv(|z| z / tr)).unwrap()
}

#[test]
fn pauli_algebra() {
    let (x, y, z) = (sigma(Axis::X), sigma(Axis::Y), sigma(Axis::Z));
    let id = Operator::identity(x.space());
    let i = C64::new(0.0, 1.0);
    for p in [&x, &y, &z] {
        assert!(close(&p.mul(p).unwrap(), &id, 1e-15));
        assert!(p.is_hermitian(0.0));
    }
    assert!(close(&x.mul(&y).unwrap(), &z.scale(i), 1e-15));
    assert!(close(&y.mul(&z).unwrap(), &x.scale(i), 1e-15));
    assert!(close(&z.mul(&x).unwrap(), &y.scale(i), 1e-15));
    let (up, down) = (sigma(Axis::Plus), sigma(Axis::Minus));
    assert!(close(&up.add(&down).unwrap(), &x, 1e-15));
    assert!(close(&up.adjoint(), &down, 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn index_is_a_bijection(d in dims(), seed in 0usize..10_000) {
        let s = make_space(&d).unwrap();
        let i = seed % s.total_dim();
        let levels = s.levels_of(i);
        prop_assert_eq!(s.index_of(&levels).unwrap(), i);
        for (l, n) in levels.iter().zip(&d) {
            prop_assert!(l < n);
        }
    }

    #[test]
    fn embedding_is_a_homomorphism(a in matrix(2), b in matrix(2), site in 0usize..3) {
        let s = make_space(&[2, 2, 2, 3]).unwrap();
        let local = make_space(&[2]).unwrap();
        let (a, b) = (Operator::new(local.clone(), a).unwrap(), Operator::new(local, b).unwrap());
        let lhs = embed(&a, site, &s).unwrap().mul(&embed(&b, site, &s).unwrap()).unwrap();
        let rhs = embed(&a.mul(&b).unwrap(), site, &s).unwrap();
        prop_assert!(close(&lhs, &rhs, 1e-13));
        let other = (site + 1) % 3;
        let ea = embed(&a, site, &s).unwrap();
        let eb = embed(&b, other, &s).unwrap();
        prop_assert!(ea.commutator(&eb).unwrap().max_abs() <= 1e-13);
    }

    #[test]
    fn kraus_completeness(p in 0.0..=1.0f64) {
        let ks = bitflip_kraus(p).unwrap();
        let mut sum = Operator::zeros(ks[0].space());
        for k in &ks {
            sum = sum.add(&k.adjoint().mul(k).unwrap()).unwrap();
        }
        prop_assert!(close(&sum, &Operator::identity(ks[0].space()), 1e-12));
    }

    #[test]
    fn flip_channel_preserves_states(p in 0.0..=1.0f64, a in matrix(8)) {
        let rho = random_state(&qubit_space(), a);
        let out = apply_channel(&bitflip_kraus(p).unwrap(), &rho).unwrap();
        prop_assert!(out.check().violation().is_none());
    }

    #[test]
    fn projectors_are_idempotent(mask in 1u8..=255) {
        let q = qubit_space();
        let states: Vec<StateVector> = (0..8)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| StateVector::basis(&q, &q.levels_of(i)).unwrap())
            .collect();
        let p = projector(&states).unwrap();
        prop_assert!(close(&p.mul(&p).unwrap(), &p, 1e-14));
        prop_assert!(p.is_hermitian(0.0));
        prop_assert!((p.trace().re - states.len() as f64).abs() < 1e-14);
    }

    /// The reservoir map sends every corrupted logical state back to the
    /// original: `c_j sigma_x^j |psi_L> = |psi_L>`.
    #[test]
    fn correction_undoes_single_flips(theta in 0.0..std::f64::consts::PI, phi in -3.2..3.2f64, j in 0usize..3) {
        let q = qubit_space();
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let amps: Array1<C64> = (0..8)
            .map(|i| match i {
                0 => C64::new(c, 0.0),
                7 => C64::from_polar(s, phi),
                _ => C64::new(0.0, 0.0),
            })
            .collect();
        let psi = StateVector::new(q.clone(), amps).unwrap();
        let flip = embed(&sigma(Axis::X), j, &q).unwrap();
        let corrupted = flip.apply(&psi).unwrap();
        let corrupted = StateVector::new(q.clone(), corrupted).unwrap();
        let back = correction_operator(j, &q).unwrap().apply(&corrupted).unwrap();
        let diff = (&back - psi.amplitudes()).mapv(|z| z.norm()).fold(0.0f64, |m, v| m.max(*v));
        prop_assert!(diff < 1e-14);
    }

    /// `d/dt tr(rho) = 0` for every state.
    #[test]
    fn liouvillian_is_trace_preserving(h in matrix(4), c in matrix(4), a in matrix(4), rate in 0.0..5.0f64) {
        let s = make_space(&[2, 2]).unwrap();
        let h = Operator::new(s.clone(), h).unwrap();
        let h = h.add(&h.adjoint()).unwrap();
        let c = Operator::new(s.clone(), c).unwrap();
        let model = LindbladModel::new(h, vec![Collapse::new(c, rate, "c")], "random").unwrap();
        let rho = random_state(&s, a);
        let l = liouvillian(&model);
        let drho = l.apply(rho.data());
        prop_assert!(drho.diag().sum().norm() < 1e-12);
        let direct = model.rhs(rho.data());
        let gap = (&drho - &direct).mapv(|z| z.norm()).fold(0.0f64, |m, v| m.max(*v));
        prop_assert!(gap < 1e-12);
    }

    #[test]
    fn csv_floats_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let back: f64 = format_float(x).parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Hermitian jump operators give a unital map, so purity never grows.
    #[test]
    fn purity_non_increasing_under_flips(g in prop::array::uniform3(0.0..3.0f64), a in matrix(8)) {
        let mut p = SystemParams::zeros(2);
        p.gamma_x = g;
        let model = aqec::models::build_bitflip_only(&p).unwrap();
        let rho = random_state(&qubit_space(), a);
        let traj = integrate(&model, &rho, &TimeGrid::uniform(2.0, 20), &IntegrateOptions::default()).unwrap();
        for w in traj.states.windows(2) {
            prop_assert!(w[1].purity() <= w[0].purity() + 1e-12);
        }
    }

    #[test]
    fn logical_pairs_are_normalized(phi in -10.0..10.0f64) {
        let psi = logical_pair(&qubit_space(), [0, 0, 0], [1, 1, 1], phi).unwrap();
        let n: f64 = psi.amplitudes().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((n - 1.0).abs() < 1e-14);
    }
}

#[test]
fn correction_jump_projects_onto_error_subspace() {
    let q = qubit_space();
    for j in 0..3 {
        let c = correction_operator(j, &q).unwrap();
        let pi = projector(&error_subspace_basis(&q, j + 1).unwrap()).unwrap();
        assert!(close(&c.adjoint().mul(&c).unwrap(), &pi, 1e-14));
    }
}

#[test]
fn factor_permutation_round_trip() {
    let s = make_space(&[2, 3, 2]).unwrap();
    let a = Array2::from_shape_fn((12, 12), |(i, j)| C64::new((i * 7 + j) as f64 % 5.0, 0.0));
    let rho = random_state(&s, a);
    let moved = rho.permute_factors(&[2, 0, 1]).unwrap();
    assert_eq!(moved.space().dims(), &[3, 2, 2]);
    let back = moved.permute_factors(&[1, 2, 0]).unwrap();
    assert_eq!(back.data(), rho.data());
    assert!(rho.permute_factors(&[0, 0, 1]).is_err());
}
