use doublon_core::circuit::{run, run_noisy, sample, Circuit, Counts, Gate, NoiseModel};
use doublon_core::exact::{evolve, initial_state, measure, InitialConfig, Method};
use doublon_core::mitigate::{
    expectation, fold, mitigated_observable, post_select, zne, FoldSpec, MitigationConfig, Observable,
};
use doublon_core::model::{build_fock_hamiltonian, build_sector_basis, ModelParams};
use doublon_core::trotter::{build_circuit, TrotterPlan};
use doublon_core::{Error, StateVector};
use proptest::prelude::*;

fn walk(l: usize, t: f64) -> (Circuit, StateVector, f64) {
    let p = ModelParams::new(l, 0.2, 10.0, 10.0).unwrap();
    let plan = TrotterPlan::new(p.clone(), InitialConfig::Walk, t, 0.1).unwrap();
    let b = build_sector_basis(&p, 2, 1).unwrap();
    let exact = measure(
        &evolve(&build_fock_hamiltonian(&b), &initial_state(&b, InitialConfig::Walk).unwrap(), t, Method::Dense).unwrap(),
        &b,
        t,
    )
    .unwrap();
    (build_circuit(&plan, false).unwrap(), plan.initial_state().unwrap(), exact.p_updn)
}

fn gate_strategy(n: usize) -> impl Strategy<Value = Gate> {
    let q = 0..n;
    let pair = (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n));
    prop_oneof![
        (q.clone(), -3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0).prop_map(|(q, theta, phi, lambda)| Gate::U3 { q, theta, phi, lambda }),
        (q, -3.0f64..3.0).prop_map(|(q, angle)| Gate::Rz { q, angle }),
        pair.clone().prop_map(|(a, b)| Gate::Cz { a, b }),
        pair.clone().prop_map(|(control, target)| Gate::Cnot { control, target }),
        (pair, -3.0f64..3.0).prop_map(|((a, b), angle)| Gate::Rzz { a, b, angle }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn richardson_is_exact_below_point_count(
        coeffs in prop::collection::vec(-2.0f64..2.0, 1..5),
        extra in 0usize..3,
    ) {
        // degree coeffs.len() − 1, with at least that many + 1 points
        let m = (coeffs.len() + extra).max(2);
        let poly = |x: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c);
        let points: Vec<(f64, f64)> = (1..=m).map(|k| (k as f64, poly(k as f64))).collect();
        let z = zne(&points).unwrap();
        // Lagrange weights at λ = 0 for scales 1…m grow like 2^m
        prop_assert!((z.value - coeffs[0]).abs() < 1e-10, "{} vs {}", z.value, coeffs[0]);
    }

    #[test]
    fn folding_keeps_the_noiseless_output(
        gates in prop::collection::vec(gate_strategy(4), 1..30),
        lambda in prop::sample::select(vec![1.0, 2.0, 3.0, 1.5, 5.0]),
        start in 0usize..16,
    ) {
        let c = Circuit::from_gates(4, gates).unwrap();
        let folded = fold(&c, FoldSpec::new(lambda).unwrap()).unwrap();
        let psi = StateVector::qubit_basis_state(4, start);
        let f = run(&c, &psi).unwrap().fidelity(&run(&folded, &psi).unwrap()).unwrap();
        prop_assert!((f - 1.0).abs() < 1e-10);
        let n2 = c.two_qubit_count();
        prop_assert_eq!(folded.two_qubit_count(), n2 + 2 * FoldSpec::new(lambda).unwrap().n_folds(n2));
        prop_assert_eq!(folded.len() - folded.two_qubit_count(), c.len() - n2);
    }

    #[test]
    fn post_selection_is_idempotent(
        pairs in prop::collection::vec((0u64..64, 1u64..50), 1..40),
        n_up in 0usize..4,
        n_dn in 0usize..4,
    ) {
        let c = Counts::from_pairs(6, pairs);
        match post_select(&c, n_up, n_dn) {
            Ok(once) => {
                prop_assert_eq!(&post_select(&once, n_up, n_dn).unwrap(), &once);
                prop_assert!(once.total_shots() <= c.total_shots());
            }
            Err(e) => prop_assert_eq!(e, Error::FullyFiltered { discarded: c.total_shots() }),
        }
    }
}

#[test]
fn fold_half_and_full() {
    let mut c = Circuit::new(4);
    for k in 0..10 {
        c.push(Gate::Cz { a: k % 3, b: 3 }).unwrap();
    }
    let two = fold(&c, FoldSpec::new(2.0).unwrap()).unwrap();
    // the first 5 gates become G·G†·G, the last 5 stay single
    assert_eq!(two.two_qubit_count(), 5 * 3 + 5);
    assert_eq!(two.gates()[..3], [c.gates()[0]; 3]);
    assert_eq!(two.gates()[15..], c.gates()[5..]);
    assert_eq!(fold(&c, FoldSpec::new(3.0).unwrap()).unwrap().two_qubit_count(), 30);
    let odd = Circuit::from_gates(4, c.gates()[..9].to_vec()).unwrap();
    assert_eq!(fold(&odd, FoldSpec::new(2.0).unwrap()).unwrap().two_qubit_count(), 9 + 2 * 5);
}

#[test]
fn noiseless_trotter_counts_survive_post_selection() {
    let (c, psi0, _) = walk(5, 0.6);
    let counts = sample(&run(&c, &psi0).unwrap(), 4000, 3).unwrap();
    assert_eq!(post_select(&counts, 2, 1).unwrap(), counts);
}

#[test]
fn retained_fraction_falls_with_noise_scale() {
    let (c, psi0, _) = walk(3, 0.5);
    let nm = NoiseModel::new(0.001, 0.01, 9).unwrap();
    let mut prev: Option<(f64, f64)> = None;
    for lambda in [1.0, 2.0, 3.0] {
        let counts = run_noisy(&fold(&c, FoldSpec::new(lambda).unwrap()).unwrap(), &psi0, &nm, 20_000, 1).unwrap();
        let f = post_select(&counts, 2, 1).unwrap().total_shots() as f64 / 20_000.0;
        assert!(f > 0.0 && f < 1.0);
        if let Some((pf, ps)) = prev {
            let sigma = (ps * ps + f * (1.0 - f) / 20_000.0).sqrt();
            assert!(pf - f > 3.0 * sigma, "λ={lambda}: {f} not below {pf} by 3σ");
        }
        prev = Some((f, (f * (1.0 - f) / 20_000.0).sqrt()));
    }
}

#[test]
fn noiseless_pipeline_agrees_across_series() {
    let (c, psi0, _) = walk(3, 0.5);
    let cfg = MitigationConfig::default();
    let m = mitigated_observable(&c, &psi0, &NoiseModel::noiseless(4), Observable::PUpdn, &cfg).unwrap();
    assert_eq!(m.raw, m.post_selected);
    assert!((m.ps_zne - m.raw).abs() < 1e-12);
    let sampled = run_noisy(&c, &psi0, &NoiseModel::noiseless(4), 600, 10).unwrap();
    assert_eq!(m.raw, expectation(&sampled, Observable::PUpdn).unwrap());
    for p in &m.points {
        assert_eq!(p.retained_fraction, 1.0);
    }
    let csv = m.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "lambda,raw,post_selected,retained_fraction");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("0,") && lines[4].ends_with(','));
}

#[test]
fn mitigation_moves_toward_exact() {
    let (c, psi0, exact) = walk(3, 0.5);
    let nm = NoiseModel::new(0.001, 0.01, 21).unwrap();
    let cfg = MitigationConfig {
        shots: 20_000,
        ..MitigationConfig::default()
    };
    let m = mitigated_observable(&c, &psi0, &nm, Observable::PUpdn, &cfg).unwrap();
    let (raw, ps, zne) = ((m.raw - exact).abs(), (m.post_selected - exact).abs(), (m.ps_zne - exact).abs());
    assert!(zne < raw, "PS+ZNE error {zne} vs raw {raw}");
    assert!(ps < raw, "PS error {ps} vs raw {raw}");
    assert!((0.0..=1.0).contains(&m.ps_zne_clamped));
}

#[test]
fn pipeline_rejects_bad_config() {
    let (c, psi0, _) = walk(3, 0.2);
    let nm = NoiseModel::default();
    let bad = MitigationConfig {
        scales: vec![1.0, 1.0],
        ..MitigationConfig::default()
    };
    assert_eq!(
        mitigated_observable(&c, &psi0, &nm, Observable::PUpdn, &bad).unwrap_err(),
        Error::DuplicateScale(1.0)
    );
    let bad = MitigationConfig {
        scales: vec![0.5],
        ..MitigationConfig::default()
    };
    assert!(mitigated_observable(&c, &psi0, &nm, Observable::PUpdn, &bad).is_err());
    let bad_sector = MitigationConfig {
        n_up: 3,
        n_dn: 3,
        ..MitigationConfig::default()
    };
    assert!(matches!(
        mitigated_observable(&c, &psi0, &NoiseModel::noiseless(0), Observable::PUpdn, &bad_sector),
        Err(Error::FullyFiltered { .. })
    ));
}
