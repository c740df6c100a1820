//! Alice's guess of the teleported state from her outcome alone.
//!
//! Outcome `r` occurs with probability `Σ_k λ_k² |⟨φ_r^k|ψ⟩|²`; Alice then
//! guesses `|g_r⟩`. The mean estimation fidelity is
//! `(d + Σ_k λ_k² Σ_r |⟨φ_r^k|g_r⟩|²) / (d(d+1))`, bounded by
//! `(1 + λ_0²)/(d+1)` for optimal measurements and attained by
//! `g_r ∝ φ_r^0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::{integrate_states, McEstimate, SeededRng};
use crate::protocol::{check_optimality, AliceMeasurement};
use crate::qcore::{check_lambdas, PureState, SchmidtDecomposition, EQ_TOL};

/// One normalized guess per outcome. Only the image `Û_r|0⟩` of Alice's
/// unitary matters, so that is what is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStrategy {
    guesses: Vec<PureState>,
    arbitrary: Vec<usize>,
}

impl EstimationStrategy {
    pub fn new(guesses: Vec<PureState>) -> Self {
        Self {
            guesses,
            arbitrary: Vec::new(),
        }
    }

    pub fn guess(&self, r: usize) -> &PureState {
        &self.guesses[r]
    }

    pub fn guesses(&self) -> &[PureState] {
        &self.guesses
    }

    /// Outcomes with `φ_r^0 = 0`, which received the placeholder `|0⟩`.
    pub fn arbitrary_outcomes(&self) -> &[usize] {
        &self.arbitrary
    }
}

/// `g_r = φ_r^0 / ‖φ_r^0‖`; outcomes with vanishing `φ_r^0` get `|0⟩` and
/// are listed in [`EstimationStrategy::arbitrary_outcomes`].
pub fn optimal_estimates(meas: &AliceMeasurement) -> EstimationStrategy {
    let d = meas.dim();
    let mut arbitrary = Vec::new();
    let guesses = (0..meas.n_outcomes())
        .map(|r| {
            PureState::normalize(meas.phi(r, 0).clone()).unwrap_or_else(|_| {
                arbitrary.push(r);
                PureState::basis(d, 0).expect("d >= 2")
            })
        })
        .collect();
    EstimationStrategy { guesses, arbitrary }
}

fn check_strategy(meas: &AliceMeasurement, lambdas: &[f64], s: &EstimationStrategy) -> Result<()> {
    if lambdas.len() != meas.dim() {
        return Err(Error::DimensionMismatch {
            expected: meas.dim(),
            found: lambdas.len(),
        });
    }
    if s.guesses.len() != meas.n_outcomes() {
        return Err(Error::OutcomeCountMismatch {
            measurement: meas.n_outcomes(),
            corrections: s.guesses.len(),
        });
    }
    if let Some(g) = s.guesses.iter().find(|g| g.dim() != meas.dim()) {
        return Err(Error::DimensionMismatch {
            expected: meas.dim(),
            found: g.dim(),
        });
    }
    Ok(())
}

pub fn estimation_fidelity_exact(
    meas: &AliceMeasurement,
    lambdas: &[f64],
    strategy: &EstimationStrategy,
) -> Result<f64> {
    check_strategy(meas, lambdas, strategy)?;
    let d = meas.dim();
    let mut total = 0.0;
    for (r, g) in strategy.guesses.iter().enumerate() {
        for (k, &lambda) in lambdas.iter().enumerate() {
            let phi = meas.phi(r, k);
            // ∫ |⟨ψ|g⟩|² |⟨φ|ψ⟩|² dψ = (‖φ‖² + |⟨φ|g⟩|²) / (d(d+1))
            total += lambda * lambda * (phi.norm_squared() + phi.dotc(g.amplitudes()).norm_sqr());
        }
    }
    Ok(total / (d * (d + 1)) as f64)
}

/// `(1 + λ_0²) / (d+1)`
pub fn estimation_fidelity_bound(lambdas: &[f64]) -> Result<f64> {
    check_lambdas(lambdas)?;
    let d = lambdas.len() as f64;
    Ok((1.0 + lambdas[0] * lambdas[0]) / (d + 1.0))
}

pub fn estimation_fidelity_mc(
    meas: &AliceMeasurement,
    lambdas: &[f64],
    strategy: &EstimationStrategy,
    n: usize,
    rng: &SeededRng,
    workers: usize,
) -> Result<McEstimate<f64>> {
    check_strategy(meas, lambdas, strategy)?;
    integrate_states(meas.dim(), n, rng, workers, |psi| {
        let mut f = 0.0;
        for (r, g) in strategy.guesses.iter().enumerate() {
            let p: f64 = lambdas
                .iter()
                .enumerate()
                .map(|(k, l)| l * l * meas.phi(r, k).dotc(psi.amplitudes()).norm_sqr())
                .sum();
            f += p * psi.fidelity(g);
        }
        f
    })
}

/// The estimation bound together with whether it is known to be reachable:
/// the bound is tight only for measurements satisfying the optimality
/// conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationBound {
    pub bound: f64,
    pub tight_guaranteed: bool,
}

pub fn estimation_bound_for(meas: &AliceMeasurement, lambdas: &[f64]) -> Result<EstimationBound> {
    let schmidt = SchmidtDecomposition::from_lambdas(lambdas.to_vec())?;
    let report = check_optimality(meas, &schmidt, EQ_TOL)?;
    Ok(EstimationBound {
        bound: estimation_fidelity_bound(lambdas)?,
        tight_guaranteed: report.pass,
    })
}
