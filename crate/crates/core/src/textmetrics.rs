//! Sequence metrics used across the pipeline: edit distance over strings and
//! arbitrary symbol slices, a normalized similarity on top of it, and Pearson
//! correlation for the feature-analysis report.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CorrelationError {
    #[error("input sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("correlation is undefined: the {0} sequence has zero variance")]
    ZeroVariance(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationResult {
    pub coefficient: f64,
    /// Number of paired samples the coefficient was computed from.
    pub n: usize,
}

/// Edit distance between two strings, counted over Unicode scalar values so a
/// single multi-byte character is one edit, not several.
pub fn levenshtein(x: &str, y: &str) -> usize {
    let xs: Vec<char> = x.chars().collect();
    let ys: Vec<char> = y.chars().collect();
    levenshtein_seq(&xs, &ys)
}

/// Edit distance over arbitrary symbol slices (unit cost for insert, delete,
/// substitute). Two-row dynamic program: O(|x|*|y|) time, O(min side) memory
/// would be possible but two full rows keep the indexing obvious.
pub fn levenshtein_seq<T: PartialEq>(x: &[T], y: &[T]) -> usize {
    if x.is_empty() {
        return y.len();
    }
    if y.is_empty() {
        return x.len();
    }
    let mut prev: Vec<usize> = (0..=y.len()).collect();
    let mut cur: Vec<usize> = vec![0; y.len() + 1];
    for (i, xi) in x.iter().enumerate() {
        cur[0] = i + 1;
        for (j, yj) in y.iter().enumerate() {
            let substitution = prev[j] + usize::from(xi != yj);
            cur[j + 1] = substitution.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[y.len()]
}

/// `1 - distance / max(len)`, so 1.0 means identical and 0.0 means every
/// position differs. Two empty inputs are identical by definition.
pub fn normalized_similarity(x: &str, y: &str) -> f64 {
    let xs: Vec<char> = x.chars().collect();
    let ys: Vec<char> = y.chars().collect();
    normalized_similarity_seq(&xs, &ys)
}

/// Slice form of [`normalized_similarity`].
pub fn normalized_similarity_seq<T: PartialEq>(x: &[T], y: &[T]) -> f64 {
    let longest = x.len().max(y.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_seq(x, y) as f64 / longest as f64
}

/// Pearson correlation coefficient of two equally long series.
///
/// Uses the sample (n-1) form; the n-1 factor cancels between numerator and
/// denominator so it never appears explicitly. Inputs must be finite; a
/// constant series is reported as an error rather than NaN.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult, CorrelationError> {
    if xs.len() != ys.len() {
        return Err(CorrelationError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(CorrelationError::TooFewSamples(xs.len()));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in xs.iter().zip(ys.iter()) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(CorrelationError::ZeroVariance("first"));
    }
    if syy == 0.0 {
        return Err(CorrelationError::ZeroVariance("second"));
    }
    // sqrt of the product (rather than the product of sqrts) keeps perfectly
    // linear inputs at exactly +/-1 when the sums happen to be exact.
    let coefficient = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    Ok(CorrelationResult {
        coefficient,
        n: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent full-matrix implementation of the textbook recurrence,
    /// kept deliberately separate from the two-row version above.
    fn matrix_levenshtein(x: &str, y: &str) -> usize {
        let xs: Vec<char> = x.chars().collect();
        let ys: Vec<char> = y.chars().collect();
        let (n, m) = (xs.len(), ys.len());
        let mut d = vec![vec![0usize; m + 1]; n + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=m {
            d[0][j] = j;
        }
        for i in 1..=n {
            for j in 1..=m {
                let cost = usize::from(xs[i - 1] != ys[j - 1]);
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + cost);
            }
        }
        d[n][m]
    }

    #[test]
    fn distance_base_cases() {
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
        assert_eq!(levenshtein("", ""), 0);
        assert_eq!(levenshtein("login", "login"), 0);
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        assert_eq!(levenshtein("flaw", "lawn"), 2);
    }

    #[test]
    fn distance_counts_scalar_values_not_bytes() {
        // One two-byte character substituted for one ASCII character.
        assert_eq!(levenshtein("caf\u{e9}", "cafe"), 1);
        assert_eq!(levenshtein("\u{1f513}", ""), 1);
    }

    #[test]
    fn generic_sequences_share_the_recurrence() {
        let a = ["html", "body", "p"];
        let b = ["html", "body", "div"];
        assert_eq!(levenshtein_seq(&a, &b), 1);
        assert_eq!(levenshtein_seq::<u8>(&[], &[]), 0);
        assert_eq!(levenshtein_seq(&[1, 2, 3], &[3, 2, 1]), 2);
    }

    #[test]
    fn similarity_examples() {
        assert_eq!(normalized_similarity("abcd", "abcd"), 1.0);
        assert_eq!(normalized_similarity("abcd", "wxyz"), 0.0);
        assert_eq!(normalized_similarity("abcd", "abce"), 0.75);
        assert_eq!(normalized_similarity("", ""), 1.0);
        assert_eq!(normalized_similarity("", "xy"), 0.0);
    }

    #[test]
    fn pearson_perfectly_linear_is_exactly_one() {
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert_eq!(r.coefficient, 1.0);
        assert_eq!(r.n, 3);
        let r = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.coefficient, -1.0);
    }

    #[test]
    fn pearson_error_cases() {
        assert_eq!(
            pearson(&[1.0, 1.0, 1.0], &[2.0, 4.0, 6.0]),
            Err(CorrelationError::ZeroVariance("first"))
        );
        assert_eq!(
            pearson(&[2.0, 4.0, 6.0], &[5.0, 5.0, 5.0]),
            Err(CorrelationError::ZeroVariance("second"))
        );
        assert_eq!(
            pearson(&[1.0], &[2.0]),
            Err(CorrelationError::TooFewSamples(1))
        );
        assert_eq!(
            pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]),
            Err(CorrelationError::LengthMismatch { left: 2, right: 3 })
        );
    }

    proptest! {
        #[test]
        fn matches_matrix_oracle(x in "[a-e]{0,24}", y in "[a-e]{0,24}") {
            prop_assert_eq!(levenshtein(&x, &y), matrix_levenshtein(&x, &y));
        }

        #[test]
        fn distance_is_symmetric(x in ".{0,16}", y in ".{0,16}") {
            prop_assert_eq!(levenshtein(&x, &y), levenshtein(&y, &x));
        }

        #[test]
        fn distance_is_zero_iff_equal(x in ".{0,16}", y in ".{0,16}") {
            let xs: Vec<char> = x.chars().collect();
            let ys: Vec<char> = y.chars().collect();
            prop_assert_eq!(levenshtein(&x, &y) == 0, xs == ys);
        }

        #[test]
        fn distance_bounded_by_longer_input(x in ".{0,16}", y in ".{0,16}") {
            let bound = x.chars().count().max(y.chars().count());
            prop_assert!(levenshtein(&x, &y) <= bound);
        }

        #[test]
        fn triangle_inequality(
            x in "[a-c]{0,10}",
            y in "[a-c]{0,10}",
            z in "[a-c]{0,10}",
        ) {
            prop_assert!(levenshtein(&x, &z) <= levenshtein(&x, &y) + levenshtein(&y, &z));
        }

        #[test]
        fn similarity_within_unit_interval(x in ".{0,16}", y in ".{0,16}") {
            let s = normalized_similarity(&x, &y);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn pearson_invariant_under_affine_maps(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..20),
            scale in 0.1f64..10.0,
            shift in -50.0f64..50.0,
        ) {
            let ys: Vec<f64> = xs.iter().map(|v| v * 2.0 + 1.0).collect();
            let scaled: Vec<f64> = xs.iter().map(|v| v * scale + shift).collect();
            let base = pearson(&xs, &ys);
            let mapped = pearson(&scaled, &ys);
            if let (Ok(a), Ok(b)) = (base, mapped) {
                prop_assert!((a.coefficient - b.coefficient).abs() < 1e-9);
            }
        }
    }
}
