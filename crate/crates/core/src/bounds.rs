//! Closed-form bounds and the parameter ledger of the error analysis.
//!
//! One decoding round is certified by the recursion
//! `p_{j+1} = B(p_j + p_evol) + p_dec`, started from `p_0 = 0`, where
//! `p_evol` bounds the noise accumulated between decodes and `p_dec` the
//! noise and timing error during a decode.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::ClockParams;
use crate::code::b_exact_in;
use crate::num::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("{name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("p_star must lie in (0, 1/40] for the fixed-constant ledger, got {0}")]
    PStarOutOfRange(f64),
    #[error("epsilon must lie in (0, 1/2), got {0}")]
    EpsilonOutOfRange(f64),
    #[error("search range `{0}` is empty")]
    EmptyRange(&'static str),
    #[error("no feasible constant set in the searched range")]
    Infeasible,
}

fn positive(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

/// `λ(t) = e^{-rt}`.
pub fn depolarizing_lambda<T: Real>(t: T, rate: T) -> T {
    (-rate * t).exp()
}

/// Time at which `λ = 1/3` and the channel becomes entanglement breaking.
pub fn entanglement_breaking_time<T: Real>(rate: T) -> T {
    T::lit(3.0).ln() / rate
}

/// Haar-averaged fidelity of `ρ ↦ λρ + (1 - λ) 1/2`.
pub fn avg_fidelity_depolarizing<T: Real>(lambda: T) -> T {
    (T::one() + lambda) / T::lit(2.0)
}

/// Time after which `I(ρ) < 1/2` for `N` qubits, from `dI/dt <= -r I`.
pub fn information_decay_time<T: Real>(n_qubits: u64, rate: T) -> T {
    (T::lit(2.0) * T::count(n_qubits)).ln() / rate
}

/// Smallest `K` with `e^{rτ} / (r K^{1/2-ε}) <= δ/2`.
///
/// Returned as a real: for the intended constants `K` exceeds `u64`.
pub fn clock_size_real<T: Real>(tau: T, rate: T, delta: T, epsilon: T) -> T {
    let two = T::lit(2.0);
    let base = two * (rate * tau).exp() / (rate * delta);
    base.powf(T::one() / (T::lit(0.5) - epsilon)).ceil()
}

/// [`clock_size_real`] as an integer, bumped until the bound is met in
/// floating point.
pub fn clock_size_for(tau: f64, rate: f64, delta: f64, epsilon: f64) -> Result<u64, BoundsError> {
    positive("tau", tau)?;
    positive("rate", rate)?;
    positive("delta", delta)?;
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(BoundsError::EpsilonOutOfRange(epsilon));
    }
    let k = clock_size_real(tau, rate, delta, epsilon);
    if !(k < u64::MAX as f64) {
        return Err(BoundsError::NonPositive {
            name: "representable clock size",
            value: k,
        });
    }
    let mut k = (k as u64).max(crate::clock::MIN_CLOCK_BITS);
    let bound = |k: u64| (rate * tau).exp() / (rate * (k as f64).powf(0.5 - epsilon));
    while bound(k) > delta / 2.0 {
        k += 1 + k / 1_000_000_000_000;
    }
    Ok(k)
}

/// Multipliers that fix the protocol timescales relative to `p*`:
/// `t_prot = c_prot p*/r`, `t_dec = c_dec p*/(d r)`, `δ = c_delta t_dec`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers<T: Real = f64> {
    pub c_prot: T,
    pub c_dec: T,
    pub c_delta: T,
}

impl<T: Real> Multipliers<T> {
    /// The fixed constants: `t_prot = p*/r`, `t_dec = p*/(4dr)`,
    /// `δ = p* t_dec / (8π)`.
    pub fn standard(p_star: T) -> Self {
        Self {
            c_prot: T::one(),
            c_dec: T::lit(0.25),
            c_delta: p_star / (T::lit(8.0) * T::PI()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport<T: Real = f64> {
    pub rate: T,
    pub p_star: T,
    pub d: u32,
    pub tau: T,
    pub multipliers: Multipliers<T>,
    pub t_prot: T,
    pub t_dec: T,
    pub delta: T,
    pub h_norm: T,
    pub epsilon: T,
    /// `(2 e^{rτ} / (rδ))^{1/(1/2-ε)}`; a cube at `ε = 1/6`.
    pub clock_bits: T,
    pub levels: u32,
    /// `N = d^l`.
    pub physical_qubits: T,
    /// `r (t_prot - δ)`.
    pub p_evol: T,
    /// `e^{‖H‖δ} - 1 + d r (t_dec + δ)`.
    pub p_dec: T,
    /// Iterates `p_1..p_l` with the exact `B`.
    pub recursion_exact: Vec<T>,
    /// Iterates with `B(p) = 10 p^2`.
    pub recursion_quadratic: Vec<T>,
    pub holds_exact: bool,
    pub holds_quadratic: bool,
    /// First (1-based) step exceeding `p*` under the exact `B`.
    pub first_violation: Option<usize>,
}

impl<T: Real> LedgerReport<T> {
    /// Verdict of the exact recursion.
    pub fn holds(&self) -> bool {
        self.holds_exact
    }

    pub fn max_iterate(&self) -> T {
        self.recursion_exact
            .iter()
            .copied()
            .fold(T::zero(), T::max)
    }

    /// Clock parameters implied by the ledger, when `K` fits in `u64`.
    pub fn clock_params(&self) -> Option<ClockParams<T>> {
        let k = self.clock_bits.to_u64()?;
        ClockParams::new(k, self.epsilon, self.tau, self.rate).ok()
    }
}

/// Iterates `p ↦ b(min(p + p_evol, 1)) + p_dec` for `steps` steps from 0.
pub fn iterate_recursion<T: Real>(b: impl Fn(T) -> T, p_evol: T, p_dec: T, steps: usize) -> Vec<T> {
    let mut p = T::zero();
    (0..steps)
        .map(|_| {
            p = b((p + p_evol).min(T::one())) + p_dec;
            p
        })
        .collect()
}

fn quadratic<T: Real>(p: T) -> T {
    T::lit(10.0) * p * p
}

/// Ledger for arbitrary multipliers.
pub fn build_ledger_with<T: Real>(
    rate: T,
    p_star: T,
    d: u32,
    tau: T,
    multipliers: Multipliers<T>,
    epsilon: T,
) -> Result<LedgerReport<T>, BoundsError> {
    for (name, v) in [("rate", rate), ("p_star", p_star), ("tau", tau)] {
        positive(name, v.to_f64().unwrap_or(f64::NAN))?;
    }
    let eps = epsilon.to_f64().unwrap_or(f64::NAN);
    if !(eps > 0.0 && eps < 0.5) {
        return Err(BoundsError::EpsilonOutOfRange(eps));
    }
    let dd = T::count(u64::from(d));
    let t_prot = multipliers.c_prot * p_star / rate;
    let t_dec = multipliers.c_dec * p_star / (dd * rate);
    let delta = multipliers.c_delta * t_dec;
    let h_norm = T::lit(2.0) * T::PI() / t_dec;
    let clock_bits = clock_size_real(tau, rate, delta, epsilon);
    let levels = (tau / (t_prot + t_dec)).ceil().to_u32().unwrap_or(u32::MAX);
    let physical_qubits = dd.powi(levels.min(i32::MAX as u32) as i32);
    let p_evol = rate * (t_prot - delta);
    let p_dec = (h_norm * delta).exp_m1() + dd * rate * (t_dec + delta);

    let steps = levels as usize;
    let recursion_exact = iterate_recursion(|p: T| b_exact_in(&p), p_evol, p_dec, steps);
    let recursion_quadratic = iterate_recursion(quadratic, p_evol, p_dec, steps);
    let first_violation = recursion_exact.iter().position(|&p| p > p_star).map(|i| i + 1);
    let holds_quadratic = recursion_quadratic.iter().all(|&p| p <= p_star);
    Ok(LedgerReport {
        rate,
        p_star,
        d,
        tau,
        multipliers,
        t_prot,
        t_dec,
        delta,
        h_norm,
        epsilon,
        clock_bits,
        levels,
        physical_qubits,
        p_evol,
        p_dec,
        recursion_exact,
        recursion_quadratic,
        holds_exact: first_violation.is_none(),
        holds_quadratic,
        first_violation,
    })
}

/// Ledger with the fixed constants and `ε = 1/6`.
pub fn build_ledger<T: Real>(rate: T, p_star: T, d: u32, tau: T) -> Result<LedgerReport<T>, BoundsError> {
    let ps = p_star.to_f64().unwrap_or(f64::NAN);
    if !(ps > 0.0 && ps <= 1.0 / 40.0 * (1.0 + 1e-6)) {
        return Err(BoundsError::PStarOutOfRange(ps));
    }
    build_ledger_with(rate, p_star, d, tau, Multipliers::standard(p_star), T::one() / T::lit(6.0))
}

/// Grid searched by [`feasibility_search`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchRanges {
    pub p_star: Vec<f64>,
    pub c_prot: Vec<f64>,
    pub c_dec: Vec<f64>,
    /// `c_delta` as a multiple of `p*/(8π)`.
    pub c_delta_rel: Vec<f64>,
    /// Recursion steps checked for each candidate.
    pub steps: usize,
    /// Required relative margin: every iterate must be `<= (1 - margin) p*`.
    pub margin: f64,
}

impl Default for SearchRanges {
    fn default() -> Self {
        Self {
            p_star: vec![0.005, 0.01, 0.015, 0.02, 0.025],
            c_prot: vec![0.25, 0.5, 0.75, 1.0],
            c_dec: vec![0.05, 0.1, 0.25],
            c_delta_rel: vec![0.5, 1.0],
            steps: 64,
            margin: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSet {
    pub p_star: f64,
    pub multipliers: Multipliers<f64>,
    pub t_prot: f64,
    pub t_dec: f64,
    pub delta: f64,
    pub p_evol: f64,
    pub p_dec: f64,
    /// Largest iterate over the checked steps (the fixed point from below).
    pub fixed_point: f64,
    /// `1 - fixed_point / p*`.
    pub margin: f64,
    pub candidates_checked: usize,
}

impl FeasibleSet {
    /// Recomputes the recursion for `steps` steps and checks every iterate.
    pub fn verify(&self, rate: f64, d: u32, steps: usize, margin: f64) -> bool {
        let (p_evol, p_dec) = budget(rate, self.p_star, d, &self.multipliers);
        iterate_recursion(|p: f64| b_exact_in(&p), p_evol, p_dec, steps)
            .iter()
            .all(|&p| p <= (1.0 - margin) * self.p_star)
    }
}

fn budget(rate: f64, p_star: f64, d: u32, m: &Multipliers<f64>) -> (f64, f64) {
    let t_prot = m.c_prot * p_star / rate;
    let t_dec = m.c_dec * p_star / (f64::from(d) * rate);
    let delta = m.c_delta * t_dec;
    let h = 2.0 * std::f64::consts::PI / t_dec;
    (
        rate * (t_prot - delta),
        (h * delta).exp_m1() + f64::from(d) * rate * (t_dec + delta),
    )
}

/// Searches the grid for constants whose recursion stays below
/// `(1 - margin) p*`. Prefers the longest `t_prot`, then the larger margin.
pub fn feasibility_search(rate: f64, d: u32, ranges: &SearchRanges) -> Result<FeasibleSet, BoundsError> {
    positive("rate", rate)?;
    for (name, v) in [
        ("p_star", &ranges.p_star),
        ("c_prot", &ranges.c_prot),
        ("c_dec", &ranges.c_dec),
        ("c_delta_rel", &ranges.c_delta_rel),
    ] {
        if v.is_empty() {
            return Err(BoundsError::EmptyRange(name));
        }
    }
    if ranges.steps == 0 {
        return Err(BoundsError::EmptyRange("steps"));
    }
    let mut best: Option<FeasibleSet> = None;
    let mut checked = 0;
    for &p_star in &ranges.p_star {
        for &c_prot in &ranges.c_prot {
            for &c_dec in &ranges.c_dec {
                for &rel in &ranges.c_delta_rel {
                    checked += 1;
                    let m = Multipliers {
                        c_prot,
                        c_dec,
                        c_delta: rel * p_star / (8.0 * std::f64::consts::PI),
                    };
                    let (p_evol, p_dec) = budget(rate, p_star, d, &m);
                    let iter = iterate_recursion(|p: f64| b_exact_in(&p), p_evol, p_dec, ranges.steps);
                    let fixed_point = iter.iter().copied().fold(0.0, f64::max);
                    if !(fixed_point <= (1.0 - ranges.margin) * p_star) {
                        continue;
                    }
                    let t_dec = c_dec * p_star / (f64::from(d) * rate);
                    let cand = FeasibleSet {
                        p_star,
                        multipliers: m,
                        t_prot: c_prot * p_star / rate,
                        t_dec,
                        delta: m.c_delta * t_dec,
                        p_evol,
                        p_dec,
                        fixed_point,
                        margin: 1.0 - fixed_point / p_star,
                        candidates_checked: 0,
                    };
                    let better = match &best {
                        None => true,
                        Some(b) => {
                            cand.t_prot > b.t_prot * (1.0 + 1e-12)
                                || (cand.t_prot >= b.t_prot * (1.0 - 1e-12) && cand.margin > b.margin)
                        }
                    };
                    if better {
                        best = Some(cand);
                    }
                }
            }
        }
    }
    let mut best = best.ok_or(BoundsError::Infeasible)?;
    best.candidates_checked = checked;
    assert!(best.verify(rate, d, ranges.steps, ranges.margin));
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(depolarizing_lambda(0.0f64, 1.0), 1.0);
        let t_cl: f64 = entanglement_breaking_time(1.0);
        assert!((t_cl - 1.0986122886681098).abs() < 1e-15);
        assert!((depolarizing_lambda(t_cl, 1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(avg_fidelity_depolarizing(1.0f64), 1.0);
        assert!((avg_fidelity_depolarizing(1.0f64 / 3.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(avg_fidelity_depolarizing(0.0f64), 0.5);
        assert!((avg_fidelity_depolarizing(1.0f32 / 3.0) - 2.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn information_decay() {
        let t: f64 = information_decay_time(8, 1.0);
        assert!((t - 16f64.ln()).abs() < 1e-15);
        let d = information_decay_time(16, 2.0) - information_decay_time(8, 2.0);
        assert!((d - 2f64.ln() / 2.0).abs() < 1e-14);
        // N = e^{rt}/2 inverts to t.
        let t0 = 3.0f64.ln() + 2f64.ln();
        assert!((information_decay_time(3, 1.0) - t0).abs() < 1e-14);
    }

    #[test]
    fn ledger_with_fixed_constants() {
        let l = build_ledger(1.0f64, 0.025, 5, 1.0).unwrap();
        assert!((l.t_prot - 0.025).abs() < 1e-15);
        assert!((l.t_dec - 1.25e-3).abs() < 1e-15);
        assert!((l.delta - 0.025 * 1.25e-3 / (8.0 * std::f64::consts::PI)).abs() < 1e-20);
        assert!((l.delta - 1.2434e-6).abs() < 1e-9);
        assert!((l.h_norm - 5026.548245743669).abs() < 1e-9);
        // ‖H‖δ = p*/4.
        assert!((l.h_norm * l.delta - 0.025 / 4.0).abs() < 1e-15);
        assert!((l.p_dec - 1.2526e-2).abs() < 1e-5, "{}", l.p_dec);
        assert!((l.p_evol - 0.0249988).abs() < 1e-7);
        assert_eq!(l.levels, 39);
        assert_eq!(l.epsilon, 1.0 / 6.0);
        let cube = (2.0 * 1f64.exp() / l.delta).powi(3);
        assert!((l.clock_bits / cube - 1.0).abs() < 1e-9);
        assert!(!l.holds());
        assert_eq!(l.first_violation, Some(2));
        assert!(!l.holds_quadratic);
        assert!(l.recursion_exact[0] <= 0.025 && l.recursion_exact[1] > 0.025);
    }

    #[test]
    fn ledger_in_f32_tracks_f64() {
        let a = build_ledger(1.0f64, 0.025, 5, 1.0).unwrap();
        let b = build_ledger(1.0f32, 0.025, 5, 1.0).unwrap();
        assert_eq!(a.levels, b.levels);
        assert!((a.p_dec as f32 - b.p_dec).abs() < 1e-6);
        assert_eq!(a.first_violation, b.first_violation);
    }

    #[test]
    fn ledger_preconditions() {
        assert!(matches!(build_ledger(1.0, 0.05, 5, 1.0), Err(BoundsError::PStarOutOfRange(_))));
        assert!(build_ledger(1.0, 0.02, 5, 0.0).is_err());
    }

    #[test]
    fn worked_feasible_example() {
        let m = Multipliers {
            c_prot: 0.5,
            c_dec: 0.05,
            c_delta: 0.01 / (8.0 * std::f64::consts::PI),
        };
        let (p_evol, p_dec) = budget(1.0, 0.01, 5, &m);
        assert!((p_evol - 0.005).abs() < 1e-5);
        assert!((p_dec - 0.003).abs() < 5e-5);
        let q = iterate_recursion(|p: f64| 10.0 * p * p, p_evol, p_dec, 200);
        let fp = *q.last().unwrap();
        assert!((fp - 0.0038).abs() < 2e-4, "{fp}");
        let ex = iterate_recursion(|p: f64| b_exact_in(&p), p_evol, p_dec, 200);
        assert!(*ex.last().unwrap() <= fp);
    }

    #[test]
    fn search_returns_verified_set() {
        let ranges = SearchRanges::default();
        let s = feasibility_search(1.0, 5, &ranges).unwrap();
        assert!(s.margin >= 0.1);
        assert!(s.verify(1.0, 5, 200, 0.1));
        assert_eq!(s.candidates_checked, 5 * 4 * 3 * 2);
    }

    #[test]
    fn search_beyond_threshold_is_infeasible() {
        let ranges = SearchRanges {
            p_star: vec![0.5],
            ..SearchRanges::default()
        };
        assert_eq!(feasibility_search(1.0, 5, &ranges), Err(BoundsError::Infeasible));
        let empty = SearchRanges {
            c_dec: vec![],
            ..SearchRanges::default()
        };
        assert_eq!(feasibility_search(1.0, 5, &empty), Err(BoundsError::EmptyRange("c_dec")));
    }

    #[test]
    fn clock_size_exponents() {
        let (tau, r, delta) = (1.0, 1.0, 1e-2);
        let base: f64 = 2.0 * 1f64.exp() / delta;
        let k3 = clock_size_real(tau, r, delta, 1.0 / 6.0);
        // Equal up to the ceiling.
        assert!(k3 >= base.powi(3) * (1.0 - 1e-12) && k3 - base.powi(3) < 1.0 + 1e-9 * k3);
        let k4 = clock_size_real(tau, r, delta, 0.25);
        assert!(k4 >= base.powi(4) * (1.0 - 1e-12) && k4 - base.powi(4) < 1.0 + 1e-9 * k4);
    }

    proptest! {
        #[test]
        fn clock_size_meets_accuracy(
            tau in 0.01f64..2.0,
            r in 0.2f64..3.0,
            delta in 1e-3f64..0.5,
            eps in 0.05f64..0.3,
        ) {
            prop_assume!(clock_size_real(tau, r, delta, eps) < 1e17);
            let k = clock_size_for(tau, r, delta, eps).unwrap();
            let p = ClockParams::new(k, eps, tau, r).unwrap();
            prop_assert!(p.time_error_bound() <= delta / 2.0);
        }
    }
}
