//! Dense complex linear algebra for single and bipartite d-level systems.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Tolerance for normalization checks when a value is constructed.
pub const NORM_TOL: f64 = 1e-12;
/// Tolerance for reconstruction and equality checks downstream of an SVD.
pub const EQ_TOL: f64 = 1e-10;
/// Schmidt coefficients at or below this value do not count toward the rank.
pub const RANK_TOL: f64 = 1e-12;
/// Largest dimension the numerics are tuned for.
pub const MAX_DIM: usize = 16;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::DimensionTooSmall(d));
    }
    Ok(())
}

/// Validates a list of Schmidt coefficients: finite, nonnegative, sorted
/// descending and with unit sum of squares.
pub fn check_lambdas(lambdas: &[f64]) -> Result<()> {
    check_dim(lambdas.len())?;
    if let Some(bad) = lambdas.iter().find(|l| !l.is_finite() || **l < 0.0) {
        return Err(Error::InvalidLambdas(format!(
            "coefficient {bad} is negative or not finite"
        )));
    }
    if lambdas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::InvalidLambdas(
            "coefficients are not sorted in descending order".into(),
        ));
    }
    let norm: f64 = lambdas.iter().map(|l| l * l).sum();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::InvalidLambdas(format!(
            "sum of squares is {norm}, expected 1"
        )));
    }
    Ok(())
}

/// A normalized vector of `d >= 2` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amplitudes: CVector,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        Self::from_vector(CVector::from_vec(amplitudes))
    }

    pub fn from_vector(amplitudes: CVector) -> Result<Self> {
        check_dim(amplitudes.len())?;
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    /// Rescales `v` to unit norm.
    pub fn normalize(v: CVector) -> Result<Self> {
        check_dim(v.len())?;
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm * norm));
        }
        Ok(Self {
            amplitudes: v.unscale(norm),
        })
    }

    /// Computational basis ket `|k⟩`.
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        check_dim(d)?;
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, dim: d });
        }
        let mut v = CVector::zeros(d);
        v[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes: v })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn into_vector(self) -> CVector {
        self.amplitudes
    }

    /// `⟨self|other⟩`
    pub fn overlap(&self, other: &PureState) -> Complex64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    /// `|⟨self|other⟩|²`
    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.overlap(other).norm_sqr()
    }
}

/// A square complex matrix. Carries unitaries, Kraus operators and the
/// moment operators alike, so no normalization is implied.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: CMatrix,
}

impl Operator {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        Ok(Self { entries })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: CMatrix::identity(d, d),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> CMatrix {
        self.entries
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    pub fn nuclear_norm(&self) -> f64 {
        nuclear_norm(&self.entries)
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        max_abs_diff(
            &(self.entries.adjoint() * &self.entries),
            &CMatrix::identity(d, d),
        ) <= tol
    }
}

pub(crate) fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Coefficients `c_jk` of `Σ c_jk |j⟩⊗|k⟩`.
///
/// Physical states are unit norm. Measurement vectors `|Φ_r⟩` are not, and
/// are built with [`BipartiteVector::unnormalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteVector {
    coeffs: CMatrix,
    normalized: bool,
}

impl BipartiteVector {
    pub fn state(coeffs: CMatrix) -> Result<Self> {
        let norm = coeffs.norm_squared();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            coeffs,
            normalized: true,
        })
    }

    pub fn unnormalized(coeffs: CMatrix) -> Self {
        Self {
            coeffs,
            normalized: false,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.coeffs.nrows(), self.coeffs.ncols())
    }

    pub fn coeffs(&self) -> &CMatrix {
        &self.coeffs
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn norm_squared(&self) -> f64 {
        self.coeffs.norm_squared()
    }
}

/// `Σ_k λ_k |left_k⟩⊗|right_k⟩` with `λ` sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDecomposition {
    lambdas: Vec<f64>,
    /// Columns are the basis vectors.
    left: CMatrix,
    right: CMatrix,
    effective_rank: usize,
}

impl SchmidtDecomposition {
    /// Takes the computational basis as the Schmidt basis on both sides.
    /// This is the frame every protocol is written in.
    pub fn from_lambdas(lambdas: Vec<f64>) -> Result<Self> {
        check_lambdas(&lambdas)?;
        let d = lambdas.len();
        Ok(Self {
            effective_rank: rank_of(&lambdas),
            lambdas,
            left: CMatrix::identity(d, d),
            right: CMatrix::identity(d, d),
        })
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn left_basis(&self) -> &CMatrix {
        &self.left
    }

    pub fn right_basis(&self) -> &CMatrix {
        &self.right
    }

    /// Number of coefficients above [`RANK_TOL`]; `m + 1` where `λ_m` is the
    /// last nonzero coefficient.
    pub fn effective_rank(&self) -> usize {
        self.effective_rank
    }

    pub fn reconstruct(&self) -> BipartiteVector {
        let d = self.dim();
        let mut coeffs = CMatrix::zeros(d, d);
        for (k, &lambda) in self.lambdas.iter().enumerate() {
            let outer = self.left.column(k) * self.right.column(k).transpose();
            coeffs += outer * Complex64::new(lambda, 0.0);
        }
        BipartiteVector::unnormalized(coeffs)
    }
}

fn rank_of(lambdas: &[f64]) -> usize {
    lambdas.iter().filter(|&&l| l > RANK_TOL).count()
}

/// Schmidt decomposition of a normalized `d x d` bipartite state, from the
/// SVD of its coefficient matrix.
pub fn schmidt_decompose(state: &BipartiteVector) -> Result<SchmidtDecomposition> {
    let (da, db) = state.dims();
    if da != db {
        return Err(Error::DimensionMismatch {
            expected: da,
            found: db,
        });
    }
    check_dim(da)?;
    let norm = state.norm_squared();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(norm));
    }

    let Svd { u, s: lambdas, v } = svd(&state.coeffs);
    let left = u;
    // C = Σ σ u v†, so Bob's basis vectors are the conjugated columns of V.
    let right = v.conjugate();

    Ok(SchmidtDecomposition {
        effective_rank: rank_of(&lambdas),
        lambdas,
        left,
        right,
    })
}

/// `|a⟩⊗|b⟩` as a coefficient matrix `c_jk = a_j b_k`.
pub fn tensor_product(a: &PureState, b: &PureState) -> BipartiteVector {
    BipartiteVector {
        coeffs: a.amplitudes() * b.amplitudes().transpose(),
        normalized: true,
    }
}

/// Bob's unnormalized conditional state `⟨Φ|₁₂ (|ψ⟩₁ ⊗ |tele⟩₂₃)` together
/// with its squared norm, the weight of this outcome.
///
/// `phi` is indexed (particle 1, particle 2) and `tele` (particle 2,
/// particle 3).
pub fn project_alice(
    phi: &BipartiteVector,
    psi: &PureState,
    tele: &BipartiteVector,
) -> Result<(CVector, f64)> {
    let d = psi.dim();
    for found in [phi.dims().0, phi.dims().1, tele.dims().0, tele.dims().1] {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    // w_k = Σ_i conj(c_ik) ψ_i, then b_j = Σ_k w_k t_kj.
    let w = phi.coeffs().ad_mul(psi.amplitudes());
    let b = tele.coeffs().tr_mul(&w);
    let weight = b.norm_squared();
    Ok((b, weight))
}

/// Singular value decomposition `A = U·diag(s)·V†` of a square matrix, with
/// `s` descending and `U`, `V` unitary.
///
/// One-sided (Hestenes) Jacobi: accurate singular vectors even for clustered
/// singular values. Columns of `U` for zero singular values are an
/// orthonormal completion.
pub(crate) struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

const JACOBI_SWEEPS: usize = 60;

pub(crate) fn svd(a: &CMatrix) -> Svd {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "svd expects a square matrix");
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let phase = gamma.conj() / g;
                for m in [&mut w, &mut v] {
                    for i in 0..n {
                        let xp = m[(i, p)];
                        let xq = m[(i, q)] * phase;
                        m[(i, p)] = xp * c - xq * s;
                        m[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|j| w.column(j).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let scale = norms.iter().copied().fold(0.0, f64::max);

    let mut u = CMatrix::zeros(n, n);
    let mut v_sorted = CMatrix::zeros(n, n);
    let mut s = Vec::with_capacity(n);
    let mut filled = 0;
    for (dst, &src) in order.iter().enumerate() {
        let sigma = norms[src];
        s.push(sigma);
        v_sorted.set_column(dst, &v.column(src));
        if sigma > RANK_TOL * scale && sigma > 0.0 {
            u.set_column(dst, &(w.column(src) / Complex64::new(sigma, 0.0)));
            filled += 1;
        }
    }
    complete_columns(&mut u, filled);
    Svd { u, s, v: v_sorted }
}

/// Fills columns `filled..` of `u` with an orthonormal completion of the first
/// `filled` orthonormal columns, by Gram-Schmidt over the standard basis.
fn complete_columns(u: &mut CMatrix, filled: usize) {
    let n = u.nrows();
    let mut next = filled;
    for e in 0..n {
        if next == n {
            break;
        }
        let mut x = CVector::zeros(n);
        x[e] = Complex64::new(1.0, 0.0);
        for _ in 0..2 {
            for j in 0..next {
                let proj = u.column(j).dotc(&x);
                x -= u.column(j) * proj;
            }
        }
        let norm = x.norm();
        if norm > 1e-6 {
            u.set_column(next, &(x / Complex64::new(norm, 0.0)));
            next += 1;
        }
    }
}

pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    svd(a).s
}

/// Sum of singular values.
pub fn nuclear_norm(a: &CMatrix) -> f64 {
    svd(a).s.iter().sum()
}

/// Unitary `B` maximizing `|Tr(B·A)|`. For `A = V Σ W†` this is `W V†`; on a
/// rank-deficient `A` any unitary completion of the null space is optimal.
pub fn polar_unitary(a: &CMatrix) -> CMatrix {
    let Svd { u, v, .. } = svd(a);
    v * u.adjoint()
}
