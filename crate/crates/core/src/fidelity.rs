//! Mean teleportation fidelity: exact, Monte-Carlo, and the optimal bound
//! `[1 + (Σ_k λ_k)²] / (d+1)`.
//!
//! With `A_r = Σ_k λ_k |k⟩⟨φ_r^k|` the mean fidelity reduces to
//!
//! ```text
//! f = 1/(d(d+1)) · Σ_r [ Σ_k λ_k² ‖φ_r^k‖² + Σ_s |Tr(B_rs A_r)|² ]
//! ```
//!
//! and for a fixed measurement the best unitary corrections give
//! `(d + Σ_r ‖A_r‖_*²) / (d(d+1))`, `‖·‖_*` the nuclear norm.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::haar::{integrate_states, m_kl_exact, McEstimate, SeededRng};
use crate::protocol::{AliceMeasurement, Protocol};
use crate::qcore::{check_lambdas, nuclear_norm, CMatrix, PureState};

/// `A_r` for every outcome. Column `k` of `A_r` is `|u_r^k⟩ = A_r|k⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct AOperators {
    ops: Vec<CMatrix>,
}

impl AOperators {
    pub fn get(&self, r: usize) -> &CMatrix {
        &self.ops[r]
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &CMatrix> {
        self.ops.iter()
    }

    /// `Σ_r Tr(A_r†A_r)`; equals `d` for a complete measurement.
    pub fn trace_sum(&self) -> f64 {
        self.ops.iter().map(|a| a.norm_squared()).sum()
    }
}

pub fn compute_a_operators(meas: &AliceMeasurement, lambdas: &[f64]) -> Result<AOperators> {
    if lambdas.len() != meas.dim() {
        return Err(Error::DimensionMismatch {
            expected: meas.dim(),
            found: lambdas.len(),
        });
    }
    Ok(AOperators {
        ops: (0..meas.n_outcomes())
            .map(|r| meas.a_operator(r, lambdas))
            .collect(),
    })
}

fn prefactor(d: usize) -> f64 {
    1.0 / (d * (d + 1)) as f64
}

/// Exact mean fidelity of `proto` over the invariant measure.
pub fn mean_fidelity_exact(proto: &Protocol) -> f64 {
    let lambdas = proto.lambdas();
    let meas = proto.measurement();
    let mut total = 0.0;
    for r in 0..meas.n_outcomes() {
        let a = meas.a_operator(r, lambdas);
        // Σ_k λ_k² ‖φ_r^k‖² = Tr(A_r†A_r)
        total += a.norm_squared();
        for b in proto.corrections().kraus(r) {
            total += (b.matrix() * &a).trace().norm_sqr();
        }
    }
    prefactor(proto.dim()) * total
}

/// Exact mean fidelity assembled from the moment operators,
/// `Σ_rs Σ_kl ⟨u_r^k| B_rs† M_kl B_rs |u_r^l⟩`. Slower than
/// [`mean_fidelity_exact`]; the two agree.
pub fn mean_fidelity_from_moments(proto: &Protocol) -> f64 {
    let d = proto.dim();
    let moments: Vec<Vec<CMatrix>> = (0..d)
        .map(|k| {
            (0..d)
                .map(|l| m_kl_exact(d, k, l).expect("indices in range").into_matrix())
                .collect()
        })
        .collect();
    let meas = proto.measurement();
    let mut total = Complex64::new(0.0, 0.0);
    for r in 0..meas.n_outcomes() {
        let a = meas.a_operator(r, proto.lambdas());
        for b in proto.corrections().kraus(r) {
            let bu = b.matrix() * &a;
            for (k, row) in moments.iter().enumerate() {
                for (l, m) in row.iter().enumerate() {
                    total += bu.column(k).dotc(&(m * bu.column(l)));
                }
            }
        }
    }
    total.re
}

/// `Σ_rs |⟨ψ|B_rs|b_r⟩|²`: fidelity for input `psi`, already averaged over
/// outcomes and Kraus branches.
pub fn conditional_fidelity(proto: &Protocol, psi: &PureState) -> Result<f64> {
    let states = proto.bob_states(psi)?;
    let mut f = 0.0;
    for (r, b) in states.iter().enumerate() {
        for op in proto.corrections().kraus(r) {
            f += psi.amplitudes().dotc(&op.apply(b)).norm_sqr();
        }
    }
    Ok(f)
}

/// Monte-Carlo mean fidelity from `n` invariant-measure inputs split over
/// `workers` substreams of `rng`.
pub fn mean_fidelity_monte_carlo(
    proto: &Protocol,
    n: usize,
    rng: &SeededRng,
    workers: usize,
) -> Result<McEstimate<f64>> {
    integrate_states(proto.dim(), n, rng, workers, |psi| {
        conditional_fidelity(proto, psi).expect("dimension checked")
    })
}

/// `[1 + (Σ_k λ_k)²] / (d+1)`
pub fn fidelity_bound(lambdas: &[f64]) -> Result<f64> {
    check_lambdas(lambdas)?;
    let d = lambdas.len() as f64;
    let sum: f64 = lambdas.iter().sum();
    Ok((1.0 + sum * sum) / (d + 1.0))
}

/// Best fidelity reachable with `meas` and unitary corrections,
/// `(d + Σ_r ‖A_r‖_*²) / (d(d+1))`.
pub fn optimal_fidelity_given_measurement(meas: &AliceMeasurement, lambdas: &[f64]) -> Result<f64> {
    let a_ops = compute_a_operators(meas, lambdas)?;
    let d = meas.dim();
    let second: f64 = a_ops.iter().map(|a| nuclear_norm(a).powi(2)).sum();
    Ok(prefactor(d) * (d as f64 + second))
}

/// `(Σ_k λ_k)² / d`, the largest overlap of the state with a maximally
/// entangled state.
pub fn max_singlet_fraction(lambdas: &[f64]) -> Result<f64> {
    check_lambdas(lambdas)?;
    let sum: f64 = lambdas.iter().sum();
    Ok(sum * sum / lambdas.len() as f64)
}

/// `(F·d + 1) / (d + 1)`
pub fn fidelity_from_singlet_fraction(singlet_fraction: f64, d: usize) -> f64 {
    (singlet_fraction * d as f64 + 1.0) / (d as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{standard_measurement, BobCorrections};
    use crate::qcore::{singular_values, SchmidtDecomposition};
    use crate::search::random_povm;
    use crate::testutil::{random_lambdas, rng};
    use std::f64::consts::PI;

    fn uniform(d: usize) -> Vec<f64> {
        vec![1.0 / (d as f64).sqrt(); d]
    }

    fn product(d: usize) -> Vec<f64> {
        let mut l = vec![0.0; d];
        l[0] = 1.0;
        l
    }

    fn qubit(theta: f64) -> Vec<f64> {
        let mut l = vec![theta.cos(), theta.sin()];
        l.sort_by(|a, b| b.total_cmp(a));
        l
    }

    #[test]
    fn a_operators_of_bell_measurement() {
        let a = compute_a_operators(&standard_measurement(2).unwrap(), &uniform(2)).unwrap();
        for op in a.iter() {
            for s in singular_values(op) {
                assert!((s - 0.5).abs() < 1e-14);
            }
        }
        assert!((a.trace_sum() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn a_operators_of_product_state_are_rank_one() {
        let mut r = rng(60);
        let meas = random_povm(3, 9, &mut r).unwrap();
        let a = compute_a_operators(&meas, &product(3)).unwrap();
        for (out, op) in a.iter().enumerate() {
            let s = singular_values(op);
            assert!(s[1] < 1e-12);
            assert!((nuclear_norm(op) - meas.phi(out, 0).norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn a_operator_trace_invariant_on_random_measurements() {
        let mut r = rng(61);
        for i in 0..50 {
            let d = 2 + i % 3;
            let meas = random_povm(d, d * d + i % 4, &mut r).unwrap();
            let a = compute_a_operators(&meas, &random_lambdas(d, &mut r)).unwrap();
            assert!((a.trace_sum() - d as f64).abs() < 1e-10);
        }
        assert!(compute_a_operators(&standard_measurement(2).unwrap(), &uniform(3)).is_err());
    }

    #[test]
    fn exact_fidelity_endpoints() {
        for d in 2..=6 {
            let f = mean_fidelity_exact(&Protocol::standard(uniform(d)).unwrap());
            assert!((f - 1.0).abs() < 1e-12, "d={d} f={f}");
            let f = mean_fidelity_exact(&Protocol::standard(product(d)).unwrap());
            assert!((f - 2.0 / (d as f64 + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_fidelity_qubit_pi_over_8() {
        let t = PI / 8.0;
        let want = (1.0 + (t.cos() + t.sin()).powi(2)) / 3.0;
        let f = mean_fidelity_exact(&Protocol::standard(qubit(t)).unwrap());
        assert!((f - want).abs() < 1e-12);
    }

    #[test]
    fn moment_route_matches_reduced_form() {
        let mut r = rng(62);
        for d in 2..=3 {
            for _ in 0..5 {
                let schmidt =
                    SchmidtDecomposition::from_lambdas(random_lambdas(d, &mut r)).unwrap();
                let meas = random_povm(d, d * d, &mut r).unwrap();
                let proto = Protocol::with_optimal_corrections(schmidt, meas).unwrap();
                let a = mean_fidelity_exact(&proto);
                let b = mean_fidelity_from_moments(&proto);
                assert!((a - b).abs() < 1e-12, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn monte_carlo_deterministic_integrand() {
        let proto = Protocol::standard(uniform(2)).unwrap();
        let est = mean_fidelity_monte_carlo(&proto, 100_000, &rng(1), 4).unwrap();
        assert!((est.value - 1.0).abs() < 1e-10);
        assert!(est.std_error < 1e-10);
    }

    #[test]
    fn monte_carlo_matches_exact_partial_entanglement() {
        let proto = Protocol::standard(vec![0.9, 0.19f64.sqrt()]).unwrap();
        let est = mean_fidelity_monte_carlo(&proto, 200_000, &rng(2), 4).unwrap();
        let exact = mean_fidelity_exact(&proto);
        assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
    }

    #[test]
    fn identity_corrections_underperform() {
        let schmidt = SchmidtDecomposition::from_lambdas(uniform(2)).unwrap();
        let proto = Protocol::new(
            schmidt,
            standard_measurement(2).unwrap(),
            BobCorrections::identity(2, 4),
        )
        .unwrap();
        let exact = mean_fidelity_exact(&proto);
        assert!((exact - 0.5).abs() < 1e-12);
        let est = mean_fidelity_monte_carlo(&proto, 100_000, &rng(3), 4).unwrap();
        assert!(est.within(exact, 4.0), "{est:?}");
        assert!(est.value < 1.0);
    }

    #[test]
    fn monte_carlo_rejects_few_samples() {
        let proto = Protocol::standard(uniform(2)).unwrap();
        assert!(mean_fidelity_monte_carlo(&proto, 999, &rng(0), 1).is_err());
    }

    #[test]
    fn monte_carlo_reproducible_per_worker_count() {
        let proto = Protocol::standard(vec![0.8, 0.6]).unwrap();
        let a = mean_fidelity_monte_carlo(&proto, 5000, &rng(4), 3).unwrap();
        let b = mean_fidelity_monte_carlo(&proto, 5000, &rng(4), 3).unwrap();
        assert_eq!(a, b);
        let c = mean_fidelity_monte_carlo(&proto, 5000, &rng(4), 1).unwrap();
        assert!((a.value - c.value).abs() < 5.0 * (a.std_error + c.std_error));
    }

    #[test]
    fn bound_examples() {
        for d in 2..=6 {
            assert!((fidelity_bound(&uniform(d)).unwrap() - 1.0).abs() < 1e-14);
            let want = 2.0 / (d as f64 + 1.0);
            assert!((fidelity_bound(&product(d)).unwrap() - want).abs() < 1e-15);
        }
        let t = PI / 6.0;
        let want = (2.0 + (2.0 * t).sin()) / 3.0;
        assert!((fidelity_bound(&qubit(t)).unwrap() - want).abs() < 1e-14);
        assert!(fidelity_bound(&[0.8, 0.5]).is_err());
    }

    #[test]
    fn standard_measurement_attains_bound() {
        let mut r = rng(63);
        for d in 2..=5 {
            for _ in 0..20 {
                let l = random_lambdas(d, &mut r);
                let opt = optimal_fidelity_given_measurement(&standard_measurement(d).unwrap(), &l)
                    .unwrap();
                assert!((opt - fidelity_bound(&l).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_measurement_product_state() {
        let phi = vec![(0..2)
            .map(|k| PureState::basis(2, k).unwrap().into_vector())
            .collect()];
        let meas = AliceMeasurement::new(2, phi).unwrap();
        let f = optimal_fidelity_given_measurement(&meas, &product(2)).unwrap();
        assert!((f - 0.5).abs() < 1e-15);
    }

    #[test]
    fn random_measurements_respect_bound() {
        let mut r = rng(64);
        for i in 0..300 {
            let d = 2 + i % 2;
            let l = random_lambdas(d, &mut r);
            let meas = random_povm(d, d * d + i % 5, &mut r).unwrap();
            let opt = optimal_fidelity_given_measurement(&meas, &l).unwrap();
            assert!(opt <= fidelity_bound(&l).unwrap() + 1e-9);
        }
    }

    #[test]
    fn suboptimal_corrections_never_help() {
        let mut r = rng(65);
        for _ in 0..30 {
            let d = 3;
            let l = random_lambdas(d, &mut r);
            let meas = random_povm(d, d * d, &mut r).unwrap();
            let schmidt = SchmidtDecomposition::from_lambdas(l.clone()).unwrap();
            let opt = optimal_fidelity_given_measurement(&meas, &l).unwrap();
            let idle = Protocol::new(
                schmidt.clone(),
                meas.clone(),
                BobCorrections::identity(d, d * d),
            )
            .unwrap();
            assert!(mean_fidelity_exact(&idle) <= opt + 1e-10);
            let best = Protocol::with_optimal_corrections(schmidt, meas).unwrap();
            assert!((mean_fidelity_exact(&best) - opt).abs() < 1e-12);
        }
    }

    #[test]
    fn bound_grows_under_robin_hood_transfers() {
        // Move weight from the largest to the smallest coefficient while
        // keeping Σλ² fixed: rotate (λ_0, λ_last) toward equal values.
        let mut r = rng(66);
        for d in 2..=5 {
            for _ in 0..20 {
                let l = random_lambdas(d, &mut r);
                let (a, b) = (l[0], l[d - 1]);
                let radius = (a * a + b * b).sqrt();
                let start = b.atan2(a);
                let mut prev = fidelity_bound(&l).unwrap();
                for step in 1..=10 {
                    let angle = start + (PI / 4.0 - start) * step as f64 / 10.0;
                    let mut moved = l.clone();
                    moved[0] = radius * angle.cos();
                    moved[d - 1] = radius * angle.sin();
                    moved.sort_by(|x, y| y.total_cmp(x));
                    let norm = moved.iter().map(|x| x * x).sum::<f64>().sqrt();
                    moved.iter_mut().for_each(|x| *x /= norm);
                    let next = fidelity_bound(&moved).unwrap();
                    assert!(next >= prev - 1e-12);
                    prev = next;
                }
            }
        }
    }

    #[test]
    fn singlet_fraction_examples() {
        assert!((max_singlet_fraction(&uniform(4)).unwrap() - 1.0).abs() < 1e-14);
        assert!((max_singlet_fraction(&product(4)).unwrap() - 0.25).abs() < 1e-15);
        for t in [0.1, 0.3, PI / 4.0] {
            let want = (1.0 + (2.0 * t).sin()) / 2.0;
            assert!((max_singlet_fraction(&qubit(t)).unwrap() - want).abs() < 1e-14);
        }
        let mut r = rng(67);
        for d in 2..=5 {
            let l = random_lambdas(d, &mut r);
            let f = fidelity_from_singlet_fraction(max_singlet_fraction(&l).unwrap(), d);
            assert!((f - fidelity_bound(&l).unwrap()).abs() < 1e-12);
        }
        assert!(max_singlet_fraction(&[0.5, 0.5]).is_err());
    }
}
