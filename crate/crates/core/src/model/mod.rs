//! The toy dual-encoder: encoders into a shared space, alignment scores,
//! grounding loss, exact analytic gradients, and Adam.

mod adam;
mod backward;
mod checkpoint;
mod forward;
mod params;

pub use adam::{adam_step, AdamHyper, OptState};
pub use backward::{backward, finite_diff_grad, max_rel_err, rel_err};
pub use checkpoint::{CheckpointFile, FlatOptState, FlatTensors};
pub use forward::{
    alignment_scores, batch_loss, encode_image, encode_text, grounding_loss, sample_scores,
};
pub use params::{init_params, is_text_group, Gradients, ModelParams};

#[cfg(test)]
mod prop_tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;

    fn small_matrix(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
        proptest::collection::vec(-3.0..3.0f64, rows * cols)
            .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        // Scaling O by a power of two scales S exactly.
        #[test]
        fn alignment_scores_scale_exactly_by_two(o in small_matrix(3, 4), p in small_matrix(2, 4)) {
            let s = alignment_scores(&o, &p).unwrap();
            let s2 = alignment_scores(&(o.mapv(|x| 2.0 * x)), &p).unwrap();
            for (&a, &b) in s.iter().zip(s2.iter()) {
                prop_assert_eq!(2.0 * a, b);
            }
        }

        #[test]
        fn alignment_scores_are_bilinear(alpha in -4.0..4.0f64, o in small_matrix(2, 3), p in small_matrix(2, 3)) {
            let s = alignment_scores(&o, &p).unwrap();
            let scaled = alignment_scores(&(o.mapv(|x| alpha * x)), &p).unwrap();
            for (&a, &b) in s.iter().zip(scaled.iter()) {
                prop_assert!((alpha * a - b).abs() <= 1e-12 * (1.0 + a.abs() * alpha.abs()));
            }
        }

        #[test]
        fn loss_is_nonnegative(s in small_matrix(3, 2), mask in proptest::collection::vec(0u8..2, 6)) {
            let t = Array2::from_shape_vec((3, 2), mask.iter().map(|&b| f64::from(b)).collect()).unwrap();
            let loss = grounding_loss(&s, &t).unwrap();
            prop_assert!(loss >= 0.0);
        }
    }
}
