//! Fixed inputs shared by the benchmarks.

use zerorays::oracle::{make_linear_product_system, random_binary_form};
use zerorays::PolynomialSystem;

/// A binary form of the given degree from a fixed seed, normalized.
pub fn binary_form(degree: u32) -> PolynomialSystem {
    let mut seed = 0;
    loop {
        let case = random_binary_form(seed, degree);
        if case.form.degree() == degree {
            let f = PolynomialSystem::new(vec![case.form]).expect("one form in two variables");
            return f.normalized().0;
        }
        seed += 1;
    }
}

/// A planar product-of-lines system, normalized.
pub fn planar_product(degrees: [u32; 2], seed: u64) -> PolynomialSystem {
    make_linear_product_system(2, &degrees, seed)
        .expect("fixed seeds construct")
        .system()
        .normalized()
        .0
}

/// A point on the sphere away from the coordinate axes.
pub fn generic_point(vars: usize) -> Vec<f64> {
    let x: Vec<f64> = (0..vars).map(|i| 1.0 + 0.37 * i as f64).collect();
    let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    x.into_iter().map(|a| a / norm).collect()
}
