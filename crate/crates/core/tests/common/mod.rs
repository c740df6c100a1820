#![allow(dead_code)]

use qudit_tele::qcore::CMatrix;
use qudit_tele::{Complex64, Operator, SeededRng};
use rand::Rng;
use rand_distr::StandardNormal;

pub fn uniform(d: usize) -> Vec<f64> {
    vec![1.0 / (d as f64).sqrt(); d]
}

pub fn product(d: usize) -> Vec<f64> {
    let mut l = vec![0.0; d];
    l[0] = 1.0;
    l
}

pub fn random_lambdas(d: usize, rng: &mut SeededRng) -> Vec<f64> {
    let mut l: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
    let n = l.iter().map(|x| x * x).sum::<f64>().sqrt();
    l.iter_mut().for_each(|x| *x /= n);
    l.sort_by(|a, b| b.total_cmp(a));
    l
}

fn gaussian(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Orthonormal columns from the QR of a Gaussian `rows x cols` matrix.
pub fn random_isometry(rows: usize, cols: usize, rng: &mut SeededRng) -> CMatrix {
    let (mut q, r) = gaussian(rows, cols, rng).qr().unpack();
    for j in 0..cols {
        let phase = r[(j, j)] / r[(j, j)].norm();
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    q
}

pub fn random_unitary(d: usize, rng: &mut SeededRng) -> CMatrix {
    random_isometry(d, d, rng)
}

/// `branches` Kraus operators cut from a random `branches·d x d` isometry.
pub fn random_kraus(d: usize, branches: usize, rng: &mut SeededRng) -> Vec<Operator> {
    let v = random_isometry(branches * d, d, rng);
    (0..branches)
        .map(|s| Operator::new(v.rows(s * d, d).into_owned()).unwrap())
        .collect()
}
