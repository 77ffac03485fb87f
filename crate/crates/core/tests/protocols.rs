use qmem::bounds::{feasibility_search, SearchRanges};
use qmem::code::b_exact;
use qmem::memory::{
    simulate_circuit_model, simulate_circuit_with_decode_times, simulate_clock_controlled,
    simulate_unprotected_grid, ClockMode, ProtocolParams,
};
use qmem::oracle::{lindblad_evolve, pauli_eigenstate, zero_hamiltonian, DensityMatrix};
use qmem::pauli::Pauli;

fn short_protocol(levels: u32) -> ProtocolParams {
    let mut p = ProtocolParams::from_multipliers(1.0, 0.01, 5.0, 5.0, 0.05, levels).unwrap();
    assert!((p.t_prot - 0.05).abs() < 1e-15 && (p.t_dec - 0.01).abs() < 1e-15);
    p.delta = p.t_dec / 20.0;
    p.with_sized_clock().unwrap()
}

#[test]
fn deterministic_clock_is_a_delayed_circuit() {
    let p = short_protocol(2);
    let trials = 200_000;
    let clocked = simulate_clock_controlled(&p, ClockMode::Deterministic, trials, 5).unwrap();
    let decode: Vec<f64> = (1..=p.levels).map(|l| p.level_start(l) + p.t_dec).collect();
    let circuit = simulate_circuit_with_decode_times(&p, &decode, trials, 6).unwrap();
    let (a, b) = (clocked.logical.error(), circuit.logical.error());
    let sigma = (a.std_err().powi(2) + b.std_err().powi(2)).sqrt();
    assert!((a.p_hat() - b.p_hat()).abs() <= 3.0 * sigma.max(1e-5), "{} vs {}", a.p_hat(), b.p_hat());
    assert_eq!(clocked.logical.decode_failures, 0);
}

#[test]
fn delayed_decoding_costs_at_most_the_budget() {
    let p = short_protocol(2);
    let trials = 100_000;
    let on_time = simulate_circuit_model(&p, trials, 7).unwrap();
    let clocked = simulate_clock_controlled(&p, ClockMode::Stochastic, trials, 8).unwrap();
    let (_, p_dec) = p.budget();
    let (a, b) = (clocked.logical.error(), on_time.logical.error());
    let sigma = (a.std_err().powi(2) + b.std_err().powi(2)).sqrt();
    assert!(a.p_hat() <= b.p_hat() + p_dec + 3.0 * sigma);
}

#[test]
fn single_level_round_matches_enumeration() {
    // One block decoded after t_prot: residual rate is B of the per-qubit
    // non-identity probability 3/4 (1 - e^{-r t}).
    let set = feasibility_search(1.0, 5, &SearchRanges::default()).unwrap();
    let p = ProtocolParams::from_feasible(1.0, &set, 1).unwrap();
    let run = simulate_circuit_model(&p, 400_000, 9).unwrap();
    let q = 0.75 * (-(-p.rate * p.t_prot).exp_m1());
    let exact = b_exact(q).unwrap();
    assert!(run.logical.error().consistent_with(exact, 3.0), "{} vs {exact}", run.logical.error_rate());
}

#[test]
fn runs_are_reproducible() {
    let p = short_protocol(1);
    let a = simulate_clock_controlled(&p, ClockMode::Stochastic, 2000, 11).unwrap();
    let b = simulate_clock_controlled(&p, ClockMode::Stochastic, 2000, 11).unwrap();
    assert_eq!(a, b);
    let c = simulate_circuit_model(&p, 2000, 11).unwrap();
    let d = simulate_circuit_model(&p, 2000, 11).unwrap();
    assert_eq!(c, d);
}

#[test]
fn unprotected_qubit_tracks_lindblad_evolution() {
    let times: Vec<f64> = (1..=10).map(|i| 0.25 * f64::from(i)).collect();
    let trials = 200_000;
    let est = simulate_unprotected_grid(&times, 1, 1.0, trials, 12).unwrap();
    let h = zero_hamiltonian::<f64>(1);
    let proj = pauli_eigenstate::<f64>(&[Pauli::X], &[true]);
    let plus = DensityMatrix::from_matrix(1, proj.clone()).unwrap();
    for (t, e) in times.iter().zip(&est) {
        let rho = lindblad_evolve(&plus, &h, 1.0, *t, 1e-3).unwrap();
        // For a Pauli channel the X eigenstate keeps p_I + p_X.
        let kept = rho.expectation(&proj).re;
        let mc = e.p_hat(Pauli::I) + e.p_hat(Pauli::X);
        let sigma = (kept * (1.0 - kept) / trials as f64).sqrt();
        assert!((mc - kept).abs() <= 4.0 * sigma, "t={t}: {mc} vs {kept}");
    }
}
