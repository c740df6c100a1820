//! Shared helpers for unit tests.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::haar::{sample_haar_state, SeededRng};
use crate::qcore::{CMatrix, PureState};

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rng(seed: u64) -> SeededRng {
    SeededRng::new(seed)
}

pub fn random_state(d: usize, rng: &mut SeededRng) -> PureState {
    sample_haar_state(d, rng).unwrap()
}

pub fn random_matrix(d: usize, rng: &mut SeededRng) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// QR of a Gaussian matrix with the phases of R's diagonal pushed into Q.
pub fn random_unitary(d: usize, rng: &mut SeededRng) -> CMatrix {
    let qr = random_matrix(d, rng).qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random Schmidt coefficients, sorted descending, unit sum of squares.
pub fn random_lambdas(d: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut l: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let n = l.iter().map(|x| x * x).sum::<f64>().sqrt();
    l.iter_mut().for_each(|x| *x /= n);
    l.sort_by(|a, b| b.total_cmp(a));
    l
}
