//! Descriptive statistics used by feature selection and metric correlation.

use crate::types::Direction;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator). `NaN` for fewer than two values.
pub fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Pearson correlation, or `None` if either series has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return None;
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Fractional ranks (1 = best); ties share the mean of their positions and
/// absent values tie for last.
pub fn average_ranks(values: &[Option<f64>], direction: Direction) -> Vec<f64> {
    let key = |v: Option<f64>| match (v.filter(|x| !x.is_nan()), direction) {
        (Some(x), Direction::HigherBetter) => -x,
        (Some(x), Direction::LowerBetter) => x,
        (None, _) => f64::INFINITY,
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| key(values[a]).total_cmp(&key(values[b])));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let k = key(values[order[i]]);
        let mut j = i + 1;
        while j < order.len() && key(values[order[j]]) == k {
            j += 1;
        }
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    ranks
}

/// Spearman correlation with average-rank tie handling.
pub fn spearman(x: &[Option<f64>], y: &[Option<f64>], direction: Direction) -> Option<f64> {
    pearson(&average_ranks(x, direction), &average_ranks(y, direction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Direction::*;

    #[test]
    fn average_ranks_with_ties_and_absent() {
        let v = [Some(3.0), Some(1.0), Some(3.0), None, None];
        assert_eq!(average_ranks(&v, HigherBetter), [1.5, 3.0, 1.5, 4.5, 4.5]);
        assert_eq!(average_ranks(&v, LowerBetter), [2.5, 1.0, 2.5, 4.5, 4.5]);
        assert!(average_ranks(&[], HigherBetter).is_empty());
    }

    #[test]
    fn spearman_examples() {
        let gold = [Some(3.0), Some(2.0), Some(1.0)];
        let feat = [Some(0.2), Some(0.9), Some(0.5)];
        assert!((spearman(&gold, &feat, HigherBetter).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(spearman(&gold, &gold, HigherBetter), Some(1.0));
        let rev = [Some(1.0), Some(2.0), Some(3.0)];
        assert_eq!(spearman(&gold, &rev, HigherBetter), Some(-1.0));
        assert_eq!(spearman(&gold, &[None, None, None], HigherBetter), None);
    }

    #[test]
    fn pearson_and_sd() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x), Some(1.0));
        assert_eq!(pearson(&x, &neg), Some(-1.0));
        assert_eq!(pearson(&x, &[2.0; 4]), None);
        assert!((sample_sd(&x) - 1.2909944487358056).abs() < 1e-12);
        assert!(sample_sd(&[1.0]).is_nan());
    }
}
