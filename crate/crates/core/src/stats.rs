//! Pearson's χ² test on 2×k rating contingency tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Scalar;

/// Number of Likert levels.
pub const LEVELS: usize = 5;

/// Histogram of ratings: index 0 counts rating 1, index 4 counts rating 5.
pub type RatingCounts = [u64; LEVELS];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquare<S> {
    pub statistic: S,
    pub df: usize,
    pub p_value: S,
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    let half = S::lit(0.5);
    if x < half {
        // reflection
        let pi = S::lit(std::f64::consts::PI);
        return (pi / (pi * x).sin()).ln() - ln_gamma(S::one() - x);
    }
    let x = x - S::one();
    let mut acc = S::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc = acc + S::lit(c) / (x + S::from_count(i as u64));
    }
    let t = x + S::lit(LANCZOS_G) + half;
    S::lit(0.5 * (2.0 * std::f64::consts::PI).ln()) + (x + half) * t.ln() - t + acc.ln()
}

const MAX_ITER: usize = 500;

fn lower_series<S: Scalar>(a: S, x: S, ln_ga: S) -> S {
    let mut ap = a;
    let mut term = S::one() / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap = ap + S::one();
        term = term * x / ap;
        sum = sum + term;
        if term.abs() < sum.abs() * S::epsilon() {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_ga).exp()
}

fn upper_continued_fraction<S: Scalar>(a: S, x: S, ln_ga: S) -> S {
    let tiny = S::min_positive_value() / S::epsilon();
    let mut b = x + S::one() - a;
    let mut c = S::one() / tiny;
    let mut d = S::one() / b;
    let mut h = d;
    for i in 1..=MAX_ITER {
        let i = S::from_count(i as u64);
        let an = -i * (i - a);
        b = b + S::lit(2.0);
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = S::one() / d;
        let delta = d * c;
        h = h * delta;
        if (delta - S::one()).abs() < S::epsilon() {
            break;
        }
    }
    (-x + a * x.ln() - ln_ga).exp() * h
}

/// Upper regularized incomplete gamma function Q(a, x) = Γ(a, x) / Γ(a).
pub fn gamma_q<S: Scalar>(a: S, x: S) -> S {
    if x <= S::zero() {
        return S::one();
    }
    let ln_ga = ln_gamma(a);
    if x < a + S::one() {
        S::one() - lower_series(a, x, ln_ga)
    } else {
        upper_continued_fraction(a, x, ln_ga)
    }
}

/// Survival function of the χ² distribution with `df` degrees of freedom.
pub fn chi2_sf<S: Scalar>(statistic: S, df: usize) -> S {
    let two = S::lit(2.0);
    gamma_q(S::from_count(df as u64) / two, statistic / two)
        .max(S::zero())
        .min(S::one())
}

/// Pearson χ² test of homogeneity between two rating histograms.
///
/// Rating levels empty in both rows are pruned before the test; no continuity
/// correction is applied.
pub fn chi_square_test<S: Scalar>(a: &RatingCounts, b: &RatingCounts) -> Result<ChiSquare<S>> {
    let total_a: u64 = a.iter().sum();
    let total_b: u64 = b.iter().sum();
    if total_a == 0 && total_b == 0 {
        return Err(Error::InvalidArgument("both rating vectors are empty".into()));
    }
    if total_a == 0 || total_b == 0 {
        return Err(Error::InvalidArgument("a rating vector is empty".into()));
    }
    let columns: Vec<(u64, u64)> = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x, y))
        .filter(|&(x, y)| x + y > 0)
        .collect();
    if columns.len() < 2 {
        return Err(Error::DegenerateTest { levels: columns.len() });
    }

    let n = S::from_count(total_a + total_b);
    let row_a = S::from_count(total_a);
    let row_b = S::from_count(total_b);
    let cell = |observed: u64, row: S, col: S| {
        let expected = row * col / n;
        let diff = S::from_count(observed) - expected;
        diff * diff / expected
    };
    let statistic = columns
        .iter()
        .map(|&(x, y)| {
            let col = S::from_count(x + y);
            cell(x, row_a, col) + cell(y, row_b, col)
        })
        .fold(S::zero(), |acc, v| acc + v);

    let df = columns.len() - 1;
    let p_value = chi2_sf(statistic, df).max(S::min_positive_value());
    Ok(ChiSquare { statistic, df, p_value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn identical_distributions() {
        let c = [1, 2, 3, 2, 1];
        let r: ChiSquare<f64> = chi_square_test(&c, &c).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df, 4);
    }

    #[test]
    fn two_by_two_reference() {
        // scipy.stats.chi2_contingency([[10,20],[20,10]], correction=False)
        let r: ChiSquare<f64> = chi_square_test(&[10, 20, 0, 0, 0], &[20, 10, 0, 0, 0]).unwrap();
        assert_eq!(r.df, 1);
        assert_abs_diff_eq!(r.statistic, 6.666_666_666_666_667, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.009_823_274_507_519_235, epsilon = 1e-10);
    }

    #[test]
    fn critical_values() {
        assert_abs_diff_eq!(chi2_sf(3.841_f64, 1), 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(chi2_sf(9.488_f64, 4), 0.05, epsilon = 1e-3);
        assert_abs_diff_eq!(chi2_sf(3.841_f32, 1), 0.05, epsilon = 1e-3);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert_abs_diff_eq!(ln_gamma(1.0_f64), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(0.5_f64), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(10.0_f64), 362_880.0_f64.ln(), epsilon = 1e-11);
    }

    #[test]
    fn error_paths() {
        let z = [0; LEVELS];
        assert!(matches!(chi_square_test::<f64>(&z, &z), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            chi_square_test::<f64>(&[0, 0, 4, 0, 0], &[0, 0, 7, 0, 0]),
            Err(Error::DegenerateTest { levels: 1 })
        ));
    }

    #[test]
    fn sf_matches_reference_distribution() {
        for df in 1..=6 {
            let dist = ChiSquared::new(df as f64).unwrap();
            for i in 0..60 {
                let x = i as f64 * 0.5;
                assert_abs_diff_eq!(chi2_sf(x, df), dist.sf(x), epsilon = 1e-10);
            }
        }
    }

    fn counts() -> impl Strategy<Value = RatingCounts> {
        prop::array::uniform5(0u64..40).prop_filter("non-empty", |c| c.iter().sum::<u64>() > 0)
    }

    proptest! {
        #[test]
        fn symmetric(a in counts(), b in counts()) {
            let ab = chi_square_test::<f64>(&a, &b);
            let ba = chi_square_test::<f64>(&b, &a);
            match (ab, ba) {
                (Ok(x), Ok(y)) => prop_assert_eq!(x, y),
                (Err(_), Err(_)) => {}
                other => prop_assert!(false, "asymmetric outcome {:?}", other),
            }
        }

        #[test]
        fn scaling_multiplies_statistic(a in counts(), b in counts(), k in 2u64..6) {
            let base = chi_square_test::<f64>(&a, &b);
            prop_assume!(base.is_ok());
            let base = base.unwrap();
            let scaled = chi_square_test::<f64>(&a.map(|v| v * k), &b.map(|v| v * k)).unwrap();
            prop_assert_eq!(scaled.df, base.df);
            prop_assert!((scaled.statistic - base.statistic * k as f64).abs() <= 1e-9 * (1.0 + scaled.statistic));
            prop_assert!(scaled.p_value <= base.p_value + 1e-12);
        }

        #[test]
        fn p_value_in_unit_interval(a in counts(), b in counts()) {
            if let Ok(r) = chi_square_test::<f64>(&a, &b) {
                prop_assert!(r.p_value > 0.0 && r.p_value <= 1.0);
                prop_assert!(r.statistic >= 0.0);
                let reference = ChiSquared::new(r.df as f64).unwrap().sf(r.statistic);
                prop_assert!((r.p_value - reference).abs() < 1e-9);
            }
        }
    }
}
