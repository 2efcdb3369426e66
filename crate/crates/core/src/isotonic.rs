//! Pool-adjacent-violators projection onto nondecreasing sequences.

use crate::scalar::Real;

/// Least-squares projection of `values` onto nondecreasing sequences (equal weights).
pub fn isotonic_nondecreasing<T: Real>(values: &[T]) -> Vec<T> {
    // blocks of (mean, count)
    let mut means: Vec<T> = Vec::with_capacity(values.len());
    let mut counts: Vec<usize> = Vec::with_capacity(values.len());
    for &v in values {
        means.push(v);
        counts.push(1);
        while means.len() > 1 && means[means.len() - 2] > means[means.len() - 1] {
            let m2 = means.pop().unwrap();
            let c2 = counts.pop().unwrap();
            let last = means.len() - 1;
            let c1 = counts[last];
            let total = c1 + c2;
            means[last] = (means[last] * T::from_usize_lossy(c1) + m2 * T::from_usize_lossy(c2))
                / T::from_usize_lossy(total);
            counts[last] = total;
        }
    }
    means
        .into_iter()
        .zip(counts)
        .flat_map(|(m, k)| std::iter::repeat_n(m, k))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pools_a_single_violation() {
        let out = isotonic_nondecreasing(&[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(out, vec![1.0, 2.5, 2.5, 4.0]);
    }

    proptest! {
        #[test]
        fn output_is_monotone_and_mean_preserving(v in prop::collection::vec(-10.0f64..10.0, 1..60)) {
            let out = isotonic_nondecreasing(&v);
            prop_assert_eq!(out.len(), v.len());
            prop_assert!(out.windows(2).all(|w| w[0] <= w[1] + 1e-12));
            let s1: f64 = v.iter().sum();
            let s2: f64 = out.iter().sum();
            prop_assert!((s1 - s2).abs() < 1e-9);
        }

        #[test]
        fn sorted_input_is_fixed_point(mut v in prop::collection::vec(-10.0f64..10.0, 1..60)) {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            prop_assert_eq!(isotonic_nondecreasing(&v), v);
        }
    }
}
