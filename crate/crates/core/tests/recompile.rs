use doublon_core::circuit::run;
use doublon_core::exact::InitialConfig;
use doublon_core::model::ModelParams;
use doublon_core::recompile::{fidelity, optimize, Ansatz, Entangler, OptimizeOptions, Optimizer, RecompileResult};
use doublon_core::trotter::{build_circuit, TrotterPlan};
use doublon_core::StateVector;
use proptest::prelude::*;

fn walk_target(l: usize, t: f64) -> (StateVector, StateVector) {
    let p = ModelParams::new(l, 0.2, 10.0, 10.0).unwrap();
    let plan = TrotterPlan::new(p, InitialConfig::Walk, t, 0.1).unwrap();
    let psi0 = plan.initial_state().unwrap();
    (run(&build_circuit(&plan, false).unwrap(), &psi0).unwrap(), psi0)
}

fn small_opts() -> OptimizeOptions {
    OptimizeOptions {
        budget: 400,
        restarts: 2,
        ..Default::default()
    }
}

#[test]
fn short_walk_compiles_to_high_fidelity() {
    let (target, psi0) = walk_target(3, 0.5);
    let a = Ansatz::new(3, 4, Entangler::ChainHeavy).unwrap();
    let r = optimize(&a, &target, &psi0, None, &small_opts()).unwrap();
    assert!(r.fidelity > 0.99, "F = {}", r.fidelity);
    // the reported fidelity comes from an independent circuit run
    let out = run(&r.circuit().unwrap(), &psi0).unwrap();
    assert!((target.fidelity(&out).unwrap() - r.fidelity).abs() < 1e-12);
    assert_eq!(r.starts.len(), 3);
    assert_eq!(r.starts[0].label, "identity");
    assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
    assert!((r.history.last().unwrap() - r.fidelity).abs() < 1e-9);
}

#[test]
fn identity_start_is_stationary() {
    let (target, psi0) = walk_target(3, 0.5);
    let a = Ansatz::new(3, 4, Entangler::ChainHeavy).unwrap();
    let opts = OptimizeOptions {
        restarts: 0,
        ..small_opts()
    };
    let r = optimize(&a, &target, &psi0, None, &opts).unwrap();
    let f0 = fidelity(&a, &vec![0.0; a.n_params()], &target, &psi0).unwrap();
    assert!((r.fidelity - f0).abs() < 1e-12);
}

#[test]
fn same_seed_same_result() {
    let (target, psi0) = walk_target(3, 0.4);
    let a = Ansatz::new(3, 3, Entangler::ChainRung).unwrap();
    for optimizer in [Optimizer::Lbfgs, Optimizer::Adam] {
        let opts = OptimizeOptions {
            optimizer,
            budget: 150,
            seed: 5,
            ..small_opts()
        };
        let x = optimize(&a, &target, &psi0, None, &opts).unwrap();
        let y = optimize(&a, &target, &psi0, None, &opts).unwrap();
        assert_eq!(x, y);
        let z = optimize(&a, &target, &psi0, None, &OptimizeOptions { seed: 6, ..opts }).unwrap();
        assert_ne!(x.theta, z.theta);
    }
}

#[test]
fn warm_start_never_loses_fidelity() {
    let (target, psi0) = walk_target(3, 0.6);
    let a = Ansatz::new(3, 3, Entangler::ChainHeavy).unwrap();
    let first = optimize(&a, &target, &psi0, None, &OptimizeOptions { budget: 60, ..small_opts() }).unwrap();
    let opts = OptimizeOptions {
        restarts: 0,
        budget: 60,
        ..small_opts()
    };
    let again = optimize(&a, &target, &psi0, Some(&first.theta), &opts).unwrap();
    assert_eq!(again.starts[0].label, "warm");
    assert!(again.fidelity >= first.fidelity - 1e-12);
}

#[test]
fn results_round_trip_through_json() {
    let (target, psi0) = walk_target(3, 0.3);
    let a = Ansatz::new(3, 2, Entangler::ChainRung).unwrap();
    let mut r = optimize(&a, &target, &psi0, None, &OptimizeOptions { budget: 50, ..small_opts() }).unwrap();
    r.t = 0.3;
    r.config_hash = Some("abc".into());
    let back = RecompileResult::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
    let broken = r.to_json().unwrap().replace("\"n_rounds\": 2", "\"n_rounds\": 5");
    assert!(RecompileResult::from_json(&broken).is_err());
}

#[test]
fn unknown_option_keys_are_rejected() {
    assert!(serde_json::from_str::<OptimizeOptions>(r#"{"budgt": 10}"#).is_err());
    let o: OptimizeOptions = serde_json::from_str(r#"{"optimizer": "adam"}"#).unwrap();
    assert_eq!(o.optimizer, Optimizer::Adam);
    assert_eq!(o.budget, OptimizeOptions::default().budget);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fidelity_is_a_probability(theta in prop::collection::vec(-3.0f64..3.0, 3 * 6 * 3)) {
        let (target, psi0) = walk_target(3, 0.3);
        let a = Ansatz::new(3, 2, Entangler::ChainHeavy).unwrap();
        let f = fidelity(&a, &theta, &target, &psi0).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
        let out = run(&a.circuit(&theta).unwrap(), &psi0).unwrap();
        prop_assert!((out.norm() - 1.0).abs() < 1e-10);
    }
}
