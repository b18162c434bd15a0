mod common;

use common::*;
use stgrb_core::io::{load_model, load_warm_start, save_model, save_warm_start};
use stgrb_core::solvers::{NewtonConfig, NniWeighting, StGrbSolver, WarmStartStore, WarmStartStrategy};
use stgrb_core::Error;

#[test]
fn reduced_model_round_trips_exactly() {
    let pipe = PipelineSpec::small(1e-3).build();
    let dir = tempfile::tempdir().unwrap();
    save_model(dir.path(), &pipe.model).unwrap();
    let back = load_model(dir.path()).unwrap();
    assert_eq!(back.size(), pipe.model.size());
    assert_eq!(back.layout, pipe.model.layout);
    assert_eq!(back.bases.velocity.spatial, pipe.model.bases.velocity.spatial);
    assert_eq!(back.time.triple_nz, pipe.model.time.triple_nz);
    let coeffs = default_param().membrane.coefficients().unwrap();
    assert_eq!(back.assemble_lhs(&coeffs), pipe.model.assemble_lhs(&coeffs));

    let p = default_param();
    let solve = |m| StGrbSolver::new(m, NewtonConfig::default()).unwrap().solve(&p, &pipe.waveform, 0.0, None, None).unwrap();
    let (a, b) = (solve(&pipe.model), solve(&back));
    assert_eq!(a.w, b.w);
    assert_eq!(a.report.iterations, b.report.iterations);
}

#[test]
fn missing_model_directory_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    match load_model(&dir.path().join("nothing")) {
        Err(Error::Missing(m)) => assert!(m.contains("reduced model")),
        other => panic!("unexpected {:?}", other.map(|m| m.size())),
    }
}

#[test]
fn warm_start_store_round_trips() {
    let domain = flow_box().concat(&membrane_box());
    let params = vec![default_param(), param([2.0, 0.3, 0.6], [0.08, 1.1, 2e6, 0.4]), param([3.5, 0.45, 0.35], [0.12, 1.05, 6e6, 0.33])];
    let coords = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.25, 4.0]];
    let probe = param([2.5, 0.2, 0.5], [0.1, 1.15, 3e6, 0.45]);
    for strategy in [WarmStartStrategy::Average, WarmStartStrategy::Knn(2), WarmStartStrategy::Podi] {
        let store = WarmStartStore::new(domain.clone(), &params, coords.clone(), 2, strategy, NniWeighting::Inverse).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_warm_start(dir.path(), &store).unwrap();
        let back = load_warm_start(dir.path()).unwrap();
        assert_eq!(back, store);
        assert_eq!(back.predict(&probe).unwrap(), store.predict(&probe).unwrap());
    }
}
