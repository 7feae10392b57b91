mod common;

use common::rng;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use zerorays::linalg::{sigma_min, singular_values_with, Matrix};
use zerorays::HostArithmetic;

proptest! {
    #[test]
    fn singular_values_match_nalgebra(seed in any::<u64>(), rows in 1usize..=5) {
        let mut r = rng(seed);
        // square or tall
        let cols = r.gen_range(1..=rows);
        let data: Vec<f64> = (0..rows * cols).map(|_| r.gen_range(-3.0..3.0)).collect();
        let ours = Matrix::from_row_major(rows, cols, data.clone());
        let reference = DMatrix::from_row_slice(rows, cols, &data);
        let mut expected: Vec<f64> = reference.singular_values().iter().copied().collect();
        expected.sort_by(|a, b| b.total_cmp(a));
        let mut got = singular_values_with(&HostArithmetic, &ours);
        got.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(got.len(), expected.len());
        let scale = expected[0].max(1.0);
        for (a, b) in got.iter().zip(&expected) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{:?} vs {:?}", got, expected);
        }
        if rows == cols {
            prop_assert!((sigma_min(&ours) - expected[rows - 1]).abs() <= 1e-12 * scale);
        }
    }
}
