use std::collections::HashMap;

use super::ClusterError;

/// Fraction of samples that belong to the majority class of their cluster:
/// `(1/N) Σ_k max_j |cluster_k ∩ class_j|`.
pub fn purity(predicted: &[usize], truth: &[usize]) -> Result<f64, ClusterError> {
    if predicted.len() != truth.len() {
        return Err(ClusterError::LengthMismatch {
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(ClusterError::TooFewSamples { needed: 1, got: 0 });
    }
    let mut table: HashMap<usize, HashMap<usize, usize>> = HashMap::new();
    for (&c, &t) in predicted.iter().zip(truth) {
        *table.entry(c).or_default().entry(t).or_default() += 1;
    }
    let majority: usize = table
        .values()
        .map(|row| row.values().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / predicted.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_examples() {
        assert_eq!(purity(&[0, 0, 1, 2], &[5, 5, 7, 9]).unwrap(), 1.0);
        // clusters {A,A,B} and {A,B,B}
        let p = purity(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 0, 1, 1]).unwrap();
        assert!((p - 4.0 / 6.0).abs() < 1e-4);
        assert_eq!(purity(&[0, 0, 0, 0], &[0, 0, 0, 1]).unwrap(), 0.75);
    }

    #[test]
    fn errors() {
        assert!(matches!(purity(&[0], &[0, 1]), Err(ClusterError::LengthMismatch { .. })));
        assert!(matches!(purity(&[], &[]), Err(ClusterError::TooFewSamples { .. })));
    }

    proptest! {
        #[test]
        fn invariant_under_relabeling(
            pairs in prop::collection::vec((0usize..5, 0usize..4), 1..60),
            shift_c in 0usize..5,
            shift_t in 0usize..4,
        ) {
            let (pred, truth): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
            let base = purity(&pred, &truth).unwrap();
            prop_assert!(base > 0.0 && base <= 1.0);
            let pred2: Vec<_> = pred.iter().map(|c| (c + shift_c) % 5 + 10).collect();
            let truth2: Vec<_> = truth.iter().map(|t| (t + shift_t) % 4).collect();
            prop_assert_eq!(base, purity(&pred2, &truth2).unwrap());

            let singletons: Vec<_> = (0..truth.len()).collect();
            prop_assert_eq!(purity(&singletons, &truth).unwrap(), 1.0);

            let mut counts = [0usize; 4];
            truth.iter().for_each(|&t| counts[t] += 1);
            let largest = *counts.iter().max().unwrap() as f64 / truth.len() as f64;
            prop_assert_eq!(purity(&vec![0; truth.len()], &truth).unwrap(), largest);
        }
    }
}
