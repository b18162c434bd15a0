//! Property tests for the structural invariants: energy neutrality, POD
//! truncation, basis orthonormality, temporal factors, affine assembly,
//! persistence formats, interpolation and the kinematic relation.

mod common;

use common::*;
use faer::Mat;
use proptest::collection::vec;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stgrb_core::assembly::{shifted_gram, triple_product, HyperSettings, IndexMap, ReducedModel};
use stgrb_core::bases::{add_supremizers, add_temporal_stabilizers, truncation_rank};
use stgrb_core::bench::kinematic_defect;
use stgrb_core::fom::{
    solve_transient, BdfScheme, ConvectiveTensor, InitialState, MembraneParams, NewtonSettings, ParamBox, ParameterSample,
    TimeGrid, Waveform,
};
use stgrb_core::io::matrix_market::{format_matrix_market, parse_matrix_market};
use stgrb_core::io::tensor::{format_tensor, parse_tensor};
use stgrb_core::io::{DenseArray, Manifest};
use stgrb_core::linalg::{max_abs, max_abs_diff, weighted_gram, CsrMatrix};
use stgrb_core::par::Execution;
use stgrb_core::solvers::{NniWeighting, WarmStartStore, WarmStartStrategy};

fn identity_defect(g: &Mat<f64>) -> f64 {
    max_abs_diff(g.as_ref(), Mat::<f64>::identity(g.nrows(), g.ncols()).as_ref())
}

fn membrane() -> impl Strategy<Value = [f64; 4]> {
    (0.05..0.15, 1.0..1.8, 1e6..8e6, 0.3..0.49).prop_map(|(h, r, e, nu)| [h, r, e, nu])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convection_is_energy_neutral(seed in 0u64..500, u in vec(-10.0..10.0f64, 30)) {
        let ops = small_ops(seed);
        prop_assert!(ops.convective_energy(&u) <= 1e-12);
    }

    #[test]
    fn truncation_rank_is_minimal(mut sv in vec(0.0..10.0f64, 1..25), eps in 1e-4..0.9f64) {
        sv.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = sv.iter().map(|s| s * s).sum();
        let tail = |n: usize| sv[n..].iter().map(|s| s * s).sum::<f64>();
        let n = truncation_rank(&sv, eps);
        prop_assert!(n <= sv.len());
        prop_assert!(tail(n) <= eps * eps * total * (1.0 + 1e-12));
        if n > 0 {
            prop_assert!(tail(n - 1) > eps * eps * total);
        }
        // A looser tolerance never needs more modes.
        prop_assert!(truncation_rank(&sv, (2.0 * eps).min(1.0)) <= n);
    }

    #[test]
    fn supremizer_enrichment_stays_orthonormal(seed in 0u64..500, k_u in 1usize..6, k_c in 1usize..3) {
        let ops = small_ops(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let velocity = random_orthonormal(&mut rng, ops.n_u(), k_u, Some(&ops.norm_u));
        let constraint_ops = ops.constraint_operators();
        let bases: Vec<Mat<f64>> = constraint_ops
            .iter()
            .map(|g| random_orthonormal(&mut rng, g.nrows(), k_c.min(g.nrows()), None))
            .collect();
        let pairs: Vec<_> = constraint_ops.iter().zip(&bases).map(|(g, b)| (g, b.as_ref())).collect();
        let (phi, added) = add_supremizers(velocity.as_ref(), &ops.norm_u, &pairs).unwrap();
        prop_assert_eq!(phi.ncols(), k_u + added);
        prop_assert!(identity_defect(&weighted_gram(phi.as_ref(), phi.as_ref(), Some(&ops.norm_u))) <= 1e-10);
        // The original columns are kept as they were.
        prop_assert!(max_abs_diff(phi.subcols(0, k_u), velocity.as_ref()) == 0.0);
    }

    #[test]
    fn temporal_stabilizers_stay_orthonormal(seed in 0u64..500, n_t in 6usize..40, k in 1usize..5, extra in vec(1usize..4, 1..3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let velocity = random_orthonormal(&mut rng, n_t, k, None);
        let others: Vec<Mat<f64>> = extra.iter().map(|&e| random_orthonormal(&mut rng, n_t, e, None)).collect();
        let refs: Vec<_> = others.iter().map(|o| o.as_ref()).collect();
        let (psi, added) = add_temporal_stabilizers(velocity.as_ref(), &refs);
        prop_assert_eq!(psi.ncols(), k + added);
        prop_assert!(identity_defect(&weighted_gram(psi.as_ref(), psi.as_ref(), None)) <= 1e-10);
        // Every stabilized mode lies in the enriched span.
        for o in &others {
            let coef = psi.transpose() * o;
            let resid = o - &psi * &coef;
            prop_assert!(max_abs(resid.as_ref()) <= 1e-10);
        }
    }

    #[test]
    fn space_time_columns_are_orthonormal(seed in 0u64..500, n_t in 4usize..20, picks in vec((0usize..4, 0usize..3), 2..6)) {
        let ops = small_ops(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let phi = random_orthonormal(&mut rng, ops.n_u(), 4, Some(&ops.norm_u));
        let psi = random_orthonormal(&mut rng, n_t, 3.min(n_t), None);
        // Space-time column as an n_u × n_t matrix: φ_a ψ_bᵀ.
        let column = |a: usize, b: usize| Mat::<f64>::from_fn(ops.n_u(), n_t, |i, t| phi[(i, a)] * psi[(t, b)]);
        for &(a, b) in &picks {
            for &(c, d) in &picks {
                let x = column(a, b);
                let y = column(c, d);
                let inner: f64 = (0..n_t)
                    .map(|t| {
                        let xt: Vec<f64> = (0..ops.n_u()).map(|i| x[(i, t)]).collect();
                        let yt: Vec<f64> = (0..ops.n_u()).map(|i| y[(i, t)]).collect();
                        stgrb_core::linalg::dot(&xt, &ops.norm_u.mul_vec(&yt))
                    })
                    .sum();
                let expected = if (a, b) == (c, d) { 1.0 } else { 0.0 };
                prop_assert!((inner - expected).abs() <= 1e-10, "({a},{b})·({c},{d}) = {inner}");
            }
        }
    }

    #[test]
    fn triple_product_is_symmetric(seed in 0u64..500, n_t in 3usize..25, k in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(n_t);
        let psi = random_orthonormal(&mut rng, n_t, k, None);
        let t = triple_product(psi.as_ref());
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let v = t.get(a, b, c);
                    let direct: f64 = (0..n_t).map(|n| psi[(n, a)] * psi[(n, b)] * psi[(n, c)]).sum();
                    prop_assert!((v - direct).abs() <= 1e-13);
                    for w in [t.get(a, c, b), t.get(b, a, c), t.get(b, c, a), t.get(c, a, b), t.get(c, b, a)] {
                        prop_assert!((v - w).abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn shifted_gram_matches_definition(seed in 0u64..500, n_t in 3usize..25, k in 1usize..5, s in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(n_t);
        let psi = random_orthonormal(&mut rng, n_t, k, None);
        let g = shifted_gram(psi.as_ref(), s);
        for a in 0..k {
            for b in 0..k {
                let direct: f64 = (s..n_t).map(|n| psi[(n, a)] * psi[(n - s, b)]).sum();
                prop_assert!((g[(a, b)] - direct).abs() <= 1e-13);
            }
        }
        if s == 0 {
            prop_assert!(identity_defect(&g) <= 1e-12);
        }
    }

    #[test]
    fn index_map_is_a_bijection(shapes in vec((1usize..6, 1usize..6), 1..5)) {
        let map = IndexMap::new(shapes.clone());
        let mut seen = vec![false; map.total()];
        for (f, &(ns, nt)) in shapes.iter().enumerate() {
            for i in 0..ns {
                for j in 0..nt {
                    let idx = map.index(f, i, j);
                    prop_assert!(!seen[idx]);
                    seen[idx] = true;
                    prop_assert_eq!(map.locate(idx), (f, i, j));
                }
            }
        }
        prop_assert!(seen.into_iter().all(|s| s));
    }

    #[test]
    fn membrane_coefficients_are_admissible(m in membrane()) {
        let c = MembraneParams::from_slice(&m).unwrap().coefficients().unwrap();
        prop_assert!(c.iter().all(|v| v.is_finite()));
        prop_assert!(c[0] > 0.0 && c[2] > 0.0);
    }

    #[test]
    fn dense_arrays_round_trip(rows in 1usize..6, cols in 1usize..6, bits in vec(any::<u64>(), 36)) {
        let data: Vec<f64> = bits[..rows * cols].iter().map(|&b| f64::from_bits(b)).collect();
        let a = DenseArray::new(vec![rows, cols], data.clone()).unwrap();
        let back = DenseArray::decode(&a.encode()).unwrap();
        let same = back.data.iter().zip(&data).all(|(x, y)| x.to_bits() == y.to_bits());
        prop_assert!(same && back.dims == a.dims);
    }

    #[test]
    fn matrix_market_round_trips(n in 1usize..8, m in 1usize..8, trips in vec((0usize..8, 0usize..8, -1e3..1e3f64), 0..20)) {
        let trips: Vec<_> = trips.into_iter().filter(|t| t.0 < n && t.1 < m).collect();
        let a = CsrMatrix::from_triplets(n, m, &trips).unwrap();
        let back = parse_matrix_market(&format_matrix_market(&a)).unwrap();
        prop_assert_eq!(back, a);
    }

    #[test]
    fn tensors_round_trip(n in 1usize..6, entries in vec((0usize..6, 0usize..6, 0usize..6, -1e3..1e3f64), 0..20)) {
        let entries: Vec<_> = entries.into_iter().filter(|e| e.0 < n && e.1 < n && e.2 < n).collect();
        let c = ConvectiveTensor::from_entries(n, &entries).unwrap();
        prop_assert_eq!(parse_tensor(&format_tensor(&c)).unwrap(), c);
    }

    #[test]
    fn manifests_round_trip(pairs in vec(("[a-z][a-z0-9_]{0,8}", "[A-Za-z0-9.+-][A-Za-z0-9 .+-]{0,15}[A-Za-z0-9.+-]"), 0..8)) {
        let mut m = Manifest::new();
        for (k, v) in &pairs {
            m.set(k, v);
        }
        prop_assert_eq!(Manifest::parse(&m.render()).unwrap(), m);
    }
}

fn flow_and_membrane() -> impl Strategy<Value = ([f64; 3], [f64; 4])> {
    ((1.0..4.0, 0.1..0.5, 0.3..0.8).prop_map(|(a, b, c)| [a, b, c]), membrane())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn reduced_lhs_is_affine_in_membrane_coefficients(
        seed in 0u64..200,
        order in 1usize..3,
        m1 in membrane(),
        m2 in membrane(),
        t in 0.0..1.0f64,
    ) {
        let ops = small_ops(seed);
        let bases = random_bases(&ops, 12, &[4, 2, 2, 1], &[5, 3, 2, 2], seed);
        let m = ReducedModel::build(&ops, bases, &BdfScheme::new(order).unwrap(), 0.01, &HyperSettings::default(), Execution::Sequential).unwrap();
        let c1 = MembraneParams::from_slice(&m1).unwrap().coefficients().unwrap();
        let c2 = MembraneParams::from_slice(&m2).unwrap().coefficients().unwrap();
        let mix: [f64; 3] = std::array::from_fn(|q| t * c1[q] + (1.0 - t) * c2[q]);
        let direct = m.assemble_lhs(&mix);
        let combined = m.assemble_lhs(&c1) * faer::Scale(t) + m.assemble_lhs(&c2) * faer::Scale(1.0 - t);
        prop_assert!(max_abs_diff(direct.as_ref(), combined.as_ref()) <= 1e-12 * max_abs(direct.as_ref()));
    }

    #[test]
    fn podi_reproduces_training_coordinates(seed in 0u64..500, n in 1usize..12, dim in 1usize..6) {
        let flow = ParamBox::new(vec![1.0, 0.1, 0.3], vec![4.0, 0.5, 0.8]).unwrap();
        let memb = membrane_box();
        let domain = flow.concat(&memb);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<ParameterSample> = (0..n)
            .map(|_| ParameterSample::from_vec(&domain.sample(&mut rng), 3).unwrap())
            .collect();
        let coords: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
        let store = WarmStartStore::new(domain, &params, coords.clone(), dim, WarmStartStrategy::Podi, NniWeighting::default()).unwrap();
        for (p, c) in params.iter().zip(&coords) {
            let got = store.predict(p).unwrap();
            let scale = c.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            for (g, e) in got.iter().zip(c) {
                prop_assert!((g - e).abs() <= 1e-9 * scale);
            }
        }
    }

    #[test]
    fn full_order_trajectories_satisfy_the_kinematic_relation(seed in 0u64..200, order in 1usize..3, pm in flow_and_membrane()) {
        let ops = small_ops(seed);
        let scheme = BdfScheme::new(order).unwrap();
        let grid = TimeGrid::new(0.0, 0.01, 25).unwrap();
        let p = param(pm.0, pm.1);
        let traj = solve_transient(
            &ops,
            &scheme,
            &grid,
            &Waveform::Periodic { period: 0.25 },
            &p,
            &InitialState::zero(&ops, order),
            &NewtonSettings::default(),
        )
        .unwrap();
        prop_assert!(kinematic_defect(&traj, &scheme) <= 1e-13);
    }
}
