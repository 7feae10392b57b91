#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zerorays::linalg::Matrix;
use zerorays::poly::multinomial;
use zerorays::{Monomial, Polynomial, PolynomialSystem, SpherePoint};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Exponent vectors of total degree `degree` in `vars` variables.
pub fn exponents(vars: usize, degree: u32) -> Vec<Vec<u32>> {
    if vars == 1 {
        return vec![vec![degree]];
    }
    let mut out = Vec::new();
    for first in (0..=degree).rev() {
        for mut rest in exponents(vars - 1, degree - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Dense random form with coefficients `u·sqrt(d choose J)`, `u` uniform
/// in `[-1, 1]`.
pub fn random_form(rng: &mut ChaCha8Rng, vars: usize, degree: u32) -> Polynomial {
    let terms = exponents(vars, degree)
        .into_iter()
        .map(|e| {
            let c = rng.gen_range(-1.0..1.0) * multinomial(&e).sqrt();
            Monomial::new(e, c)
        })
        .collect();
    Polynomial::new(vars, degree, terms).unwrap()
}

pub fn random_system(rng: &mut ChaCha8Rng, n: usize, max_degree: u32) -> PolynomialSystem {
    let polys = (0..n)
        .map(|_| {
            let d = rng.gen_range(1..=max_degree);
            random_form(rng, n + 1, d)
        })
        .collect();
    PolynomialSystem::new(polys).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, dim: usize) -> SpherePoint {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Ok(p) = SpherePoint::normalize(&v) {
            return p;
        }
    }
}

/// Random orthogonal matrix by Gram–Schmidt on random rows.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for r in &rows {
            let p: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= p * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-3 {
            rows.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    Matrix::from_rows(&rows)
}
