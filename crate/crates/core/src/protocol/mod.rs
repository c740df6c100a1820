//! Teleportation protocols in the Schmidt frame of the shared state.
//!
//! Alice's rank-one POVM elements are `|Φ_r⟩⟨Φ_r|` with
//! `|Φ_r⟩ = Σ_k |φ_r^k⟩ ⊗ |k⟩`; the measurement stores the blocks
//! `|φ_r^k⟩`. After outcome `r`, Bob holds
//! `|b_r⟩ = Σ_k λ_k ⟨φ_r^k|ψ⟩ |k⟩ = A_r |ψ⟩` with
//! `A_r = Σ_k λ_k |k⟩⟨φ_r^k|`, and applies the Kraus operators `B_rs`.

mod document;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::haar::SeededRng;
use crate::qcore::{
    max_abs_diff, polar_unitary, BipartiteVector, CMatrix, CVector, Operator, PureState,
    SchmidtDecomposition, EQ_TOL,
};

pub use document::ProtocolDocument;

/// Blocks `|φ_r^k⟩` of a rank-one POVM, `phi[r][k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AliceMeasurement {
    d: usize,
    phi: Vec<Vec<CVector>>,
}

impl AliceMeasurement {
    /// Checks shapes only; completeness is reported by
    /// [`validate_completeness`].
    pub fn new(d: usize, phi: Vec<Vec<CVector>>) -> Result<Self> {
        if d < 2 {
            return Err(Error::DimensionTooSmall(d));
        }
        if phi.is_empty() {
            return Err(Error::TooFewOutcomes {
                outcomes: 0,
                dim: d * d,
            });
        }
        for blocks in &phi {
            if blocks.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: blocks.len(),
                });
            }
            if let Some(v) = blocks.iter().find(|v| v.len() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        Ok(Self { d, phi })
    }

    /// Splits each `|Φ_r⟩` (indexed particle 1, particle 2) into its
    /// column blocks.
    pub fn from_outcome_vectors(outcomes: &[BipartiteVector]) -> Result<Self> {
        let d = outcomes.first().map_or(0, |o| o.dims().0);
        let mut phi = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            let (da, db) = o.dims();
            if da != d || db != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if da != d { da } else { db },
                });
            }
            phi.push((0..d).map(|k| o.coeffs().column(k).into_owned()).collect());
        }
        Self::new(d, phi)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_outcomes(&self) -> usize {
        self.phi.len()
    }

    pub fn phi(&self, r: usize, k: usize) -> &CVector {
        &self.phi[r][k]
    }

    pub fn outcome(&self, r: usize) -> &[CVector] {
        &self.phi[r]
    }

    pub fn outcomes(&self) -> &[Vec<CVector>] {
        &self.phi
    }

    pub fn into_blocks(self) -> Vec<Vec<CVector>> {
        self.phi
    }

    /// `|Φ_r⟩` as a (particle 1, particle 2) coefficient matrix.
    pub fn outcome_vector(&self, r: usize) -> BipartiteVector {
        let mut coeffs = CMatrix::zeros(self.d, self.d);
        for (k, v) in self.phi[r].iter().enumerate() {
            coeffs.set_column(k, v);
        }
        BipartiteVector::unnormalized(coeffs)
    }

    /// `A_r = Σ_k λ_k |k⟩⟨φ_r^k|`; row `k` is `λ_k ⟨φ_r^k|`.
    pub fn a_operator(&self, r: usize, lambdas: &[f64]) -> CMatrix {
        let d = self.d;
        let mut a = CMatrix::zeros(d, d);
        for (k, v) in self.phi[r].iter().enumerate() {
            let scale = Complex64::new(lambdas[k], 0.0);
            for j in 0..d {
                a[(k, j)] = v[j].conj() * scale;
            }
        }
        a
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: d,
            });
        }
        Ok(())
    }
}

/// Per-outcome Kraus operators `B_rs` with `Σ_s B_rs†B_rs = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct BobCorrections {
    d: usize,
    kraus: Vec<Vec<Operator>>,
}

impl BobCorrections {
    pub fn new(d: usize, kraus: Vec<Vec<Operator>>) -> Result<Self> {
        for (r, ops) in kraus.iter().enumerate() {
            if let Some(op) = ops.iter().find(|op| op.dim() != d) {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: op.dim(),
                });
            }
            let deviation = kraus_deviation(d, ops);
            if deviation > EQ_TOL {
                return Err(Error::KrausIncomplete {
                    outcome: r,
                    deviation,
                });
            }
        }
        Ok(Self { d, kraus })
    }

    /// One unitary per outcome.
    pub fn unitary(d: usize, unitaries: Vec<Operator>) -> Result<Self> {
        Self::new(d, unitaries.into_iter().map(|u| vec![u]).collect())
    }

    /// Bob does nothing, whatever the outcome.
    pub fn identity(d: usize, n_outcomes: usize) -> Self {
        Self {
            d,
            kraus: vec![vec![Operator::identity(d)]; n_outcomes],
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn n_outcomes(&self) -> usize {
        self.kraus.len()
    }

    pub fn kraus(&self, r: usize) -> &[Operator] {
        &self.kraus[r]
    }

    pub fn all(&self) -> &[Vec<Operator>] {
        &self.kraus
    }

    /// True when every outcome is corrected by a single operator, which the
    /// Kraus condition then forces to be unitary.
    pub fn is_unitary(&self) -> bool {
        self.kraus.iter().all(|ops| ops.len() == 1)
    }
}

/// Largest entrywise deviation of `Σ_s B_s†B_s` from the identity. An empty
/// list deviates by one.
pub fn kraus_deviation(d: usize, ops: &[Operator]) -> f64 {
    let mut sum = CMatrix::zeros(d, d);
    for op in ops {
        sum += op.matrix().adjoint() * op.matrix();
    }
    max_abs_diff(&sum, &CMatrix::identity(d, d))
}

/// Shared state (via its Schmidt coefficients), Alice's measurement and
/// Bob's corrections, all written in the Schmidt frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    schmidt: SchmidtDecomposition,
    measurement: AliceMeasurement,
    corrections: BobCorrections,
}

impl Protocol {
    pub fn new(
        schmidt: SchmidtDecomposition,
        measurement: AliceMeasurement,
        corrections: BobCorrections,
    ) -> Result<Self> {
        measurement.check_dim(schmidt.dim())?;
        measurement.check_dim(corrections.dim())?;
        if measurement.n_outcomes() != corrections.n_outcomes() {
            return Err(Error::OutcomeCountMismatch {
                measurement: measurement.n_outcomes(),
                corrections: corrections.n_outcomes(),
            });
        }
        let report = validate_completeness(&measurement, EQ_TOL);
        if !report.pass {
            return Err(Error::IncompleteMeasurement {
                max_error: report.max_entrywise_error,
                k: report.worst.0,
                l: report.worst.1,
            });
        }
        Ok(Self {
            schmidt,
            measurement,
            corrections,
        })
    }

    /// Standard measurement with polar-optimal corrections for `lambdas`.
    pub fn standard(lambdas: Vec<f64>) -> Result<Self> {
        let schmidt = SchmidtDecomposition::from_lambdas(lambdas)?;
        let measurement = standard_measurement(schmidt.dim())?;
        let corrections = optimal_bob_corrections(&measurement, &schmidt)?;
        Self::new(schmidt, measurement, corrections)
    }

    /// `measurement` with polar-optimal corrections.
    pub fn with_optimal_corrections(
        schmidt: SchmidtDecomposition,
        measurement: AliceMeasurement,
    ) -> Result<Self> {
        let corrections = optimal_bob_corrections(&measurement, &schmidt)?;
        Self::new(schmidt, measurement, corrections)
    }

    pub fn dim(&self) -> usize {
        self.schmidt.dim()
    }

    pub fn lambdas(&self) -> &[f64] {
        self.schmidt.lambdas()
    }

    pub fn schmidt(&self) -> &SchmidtDecomposition {
        &self.schmidt
    }

    pub fn measurement(&self) -> &AliceMeasurement {
        &self.measurement
    }

    pub fn corrections(&self) -> &BobCorrections {
        &self.corrections
    }

    /// Unnormalized `|b_r⟩` for every outcome.
    pub fn bob_states(&self, psi: &PureState) -> Result<Vec<CVector>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok((0..self.measurement.n_outcomes())
            .map(|r| self.measurement.a_operator(r, self.lambdas()) * psi.amplitudes())
            .collect())
    }
}

/// Outcome of a simulated run: the sampled outcome and Kraus branch, the
/// outcome probability and Bob's normalized final state.
#[derive(Debug, Clone, PartialEq)]
pub struct TeleportOutcome {
    pub outcome: usize,
    pub kraus_branch: usize,
    pub probability: f64,
    pub output_state: PureState,
}

/// The generalized Bell measurement, `r = p + q·d`,
/// `|φ^k_r⟩ = d^{-1/2} e^{2πi kp/d} |(k+q) mod d⟩`.
///
/// The `d^{-1/2}` factor makes `Σ_r |φ_r^k⟩⟨φ_r^l| = δ_kl·I` hold exactly.
pub fn standard_measurement(d: usize) -> Result<AliceMeasurement> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    let scale = 1.0 / (d as f64).sqrt();
    let mut phi = Vec::with_capacity(d * d);
    for q in 0..d {
        for p in 0..d {
            let blocks = (0..d)
                .map(|k| {
                    let angle = 2.0 * std::f64::consts::PI * ((k * p) % d) as f64 / d as f64;
                    let mut v = CVector::zeros(d);
                    v[(k + q) % d] = Complex64::from_polar(scale, angle);
                    v
                })
                .collect();
            phi.push(blocks);
        }
    }
    AliceMeasurement::new(d, phi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub pass: bool,
    pub max_entrywise_error: f64,
    /// Block `(k, l)` holding the largest error.
    pub worst: (usize, usize),
}

/// Compares `Σ_r |φ_r^k⟩⟨φ_r^l|` with `δ_kl·I` entrywise.
pub fn validate_completeness(meas: &AliceMeasurement, tol: f64) -> CompletenessReport {
    let d = meas.dim();
    let mut max_err = 0.0;
    let mut worst = (0, 0);
    for k in 0..d {
        for l in 0..d {
            let mut block = CMatrix::zeros(d, d);
            for blocks in meas.outcomes() {
                block += &blocks[k] * blocks[l].adjoint();
            }
            if k == l {
                for i in 0..d {
                    block[(i, i)] -= Complex64::new(1.0, 0.0);
                }
            }
            let err = block.iter().map(|z| z.norm()).fold(0.0, f64::max);
            if err > max_err {
                max_err = err;
                worst = (k, l);
            }
        }
    }
    CompletenessReport {
        pass: max_err <= tol,
        max_entrywise_error: max_err,
        worst,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationClass {
    BrokenCompleteness,
    UnequalNorms,
    NonOrthogonal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Violation {
    BrokenCompleteness {
        k: usize,
        l: usize,
        error: f64,
    },
    /// `‖φ_r^k‖² ≠ ‖φ_r^0‖²`
    UnequalNorms {
        outcome: usize,
        k: usize,
        deviation: f64,
    },
    /// `⟨φ_r^k|φ_r^l⟩ ≠ 0`, `k < l`
    NonOrthogonal {
        outcome: usize,
        k: usize,
        l: usize,
        overlap: f64,
    },
}

impl Violation {
    pub fn class(&self) -> ViolationClass {
        match self {
            Violation::BrokenCompleteness { .. } => ViolationClass::BrokenCompleteness,
            Violation::UnequalNorms { .. } => ViolationClass::UnequalNorms,
            Violation::NonOrthogonal { .. } => ViolationClass::NonOrthogonal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimalityReport {
    pub pass: bool,
    pub completeness: CompletenessReport,
    pub effective_rank: usize,
    pub max_deviation: f64,
    pub violations: Vec<Violation>,
}

impl OptimalityReport {
    pub fn has(&self, class: ViolationClass) -> bool {
        self.violations.iter().any(|v| v.class() == class)
    }
}

/// Checks that the measurement can saturate the fidelity bound: it must be
/// complete and, for every outcome, the blocks `φ_r^k` with `k ≤ m` must be
/// mutually orthogonal with equal norms.
pub fn check_optimality(
    meas: &AliceMeasurement,
    schmidt: &SchmidtDecomposition,
    tol: f64,
) -> Result<OptimalityReport> {
    meas.check_dim(schmidt.dim())?;
    let completeness = validate_completeness(meas, tol);
    let mut violations = Vec::new();
    if !completeness.pass {
        violations.push(Violation::BrokenCompleteness {
            k: completeness.worst.0,
            l: completeness.worst.1,
            error: completeness.max_entrywise_error,
        });
    }

    let rank = schmidt.effective_rank();
    let mut max_deviation: f64 = 0.0;
    for (r, blocks) in meas.outcomes().iter().enumerate() {
        let reference = blocks[0].norm_squared();
        for k in 0..rank {
            for l in k..rank {
                let gram = blocks[k].dotc(&blocks[l]);
                if k == l {
                    let deviation = (gram.re - reference).abs();
                    max_deviation = max_deviation.max(deviation);
                    if deviation > tol {
                        violations.push(Violation::UnequalNorms {
                            outcome: r,
                            k,
                            deviation,
                        });
                    }
                } else {
                    let overlap = gram.norm();
                    max_deviation = max_deviation.max(overlap);
                    if overlap > tol {
                        violations.push(Violation::NonOrthogonal {
                            outcome: r,
                            k,
                            l,
                            overlap,
                        });
                    }
                }
            }
        }
    }

    Ok(OptimalityReport {
        pass: violations.is_empty(),
        completeness,
        effective_rank: rank,
        max_deviation,
        violations,
    })
}

/// Per outcome, the unitary maximizing `|Tr(B·A_r)|`: the polar factor
/// `W V†` of `A_r = V Σ W†`. Outcomes whose `A_r` vanishes never occur and
/// get the identity.
pub fn optimal_bob_corrections(
    meas: &AliceMeasurement,
    schmidt: &SchmidtDecomposition,
) -> Result<BobCorrections> {
    meas.check_dim(schmidt.dim())?;
    let d = meas.dim();
    let unitaries = (0..meas.n_outcomes())
        .map(|r| {
            let a = meas.a_operator(r, schmidt.lambdas());
            if a.iter().all(|z| *z == Complex64::new(0.0, 0.0)) {
                Operator::identity(d)
            } else {
                Operator::new(polar_unitary(&a)).expect("square")
            }
        })
        .collect();
    BobCorrections::unitary(d, unitaries)
}

/// Probability `‖b_r‖²` of each outcome for input `psi`.
pub fn outcome_distribution(proto: &Protocol, psi: &PureState) -> Result<Vec<f64>> {
    Ok(proto
        .bob_states(psi)?
        .iter()
        .map(|b| b.norm_squared())
        .collect())
}

fn sample_index(weights: &[f64], rng: &mut SeededRng) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(i);
            if target < acc {
                return Some(i);
            }
        }
    }
    last
}

/// One run of the protocol: sample Alice's outcome with probability
/// `‖b_r‖²`, then Bob's Kraus branch with probability `‖B_rs b_r‖²/‖b_r‖²`.
pub fn teleport_once(
    proto: &Protocol,
    psi: &PureState,
    rng: &mut SeededRng,
) -> Result<TeleportOutcome> {
    let states = proto.bob_states(psi)?;
    let weights: Vec<f64> = states.iter().map(|b| b.norm_squared()).collect();
    let outcome = sample_index(&weights, rng)
        .ok_or_else(|| Error::Inconsistent("all outcome probabilities are zero".into()))?;
    let b = &states[outcome];

    let branches: Vec<CVector> = proto
        .corrections()
        .kraus(outcome)
        .iter()
        .map(|op| op.apply(b))
        .collect();
    let branch_weights: Vec<f64> = branches.iter().map(|v| v.norm_squared()).collect();
    let kraus_branch = sample_index(&branch_weights, rng)
        .ok_or_else(|| Error::Inconsistent("Kraus operators annihilate Bob's state".into()))?;
    let output_state = PureState::normalize(branches[kraus_branch].clone())?;

    Ok(TeleportOutcome {
        outcome,
        kraus_branch,
        probability: weights[outcome],
        output_state,
    })
}
