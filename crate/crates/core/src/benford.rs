//! Empirical Benford diagnostics on the points `y_n = log10|a_n| mod 1`.
//!
//! A sequence is Benford exactly when these points are equidistributed in
//! `[0, 1)`, so the report combines first-digit frequencies with
//! equidistribution measures: the star discrepancy and Weyl sums. The
//! significand KS distance is the strong-Benford check; at finite N it cannot
//! separate Benford from strong Benford any further than that statistic does.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::recurrence::SequenceSample;

/// `log10(1 + 1/d)`.
pub fn benford_probability(d: u8) -> f64 {
    (1.0 + 1.0 / d as f64).log10()
}

fn digit_thresholds() -> [f64; 10] {
    let mut t = [0.0; 10];
    for (d, v) in t.iter_mut().enumerate().skip(1) {
        *v = (d as f64).log10();
    }
    t
}

/// Leading digit of `10^y` for `y ∈ [0, 1)`: the `d` with
/// `log10 d ≤ y < log10(d+1)`.
pub fn digit_of(y: f64) -> u8 {
    let t = digit_thresholds();
    (1..=9u8).rev().find(|&d| y >= t[d as usize]).unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DigitHistogram {
    pub counts: [u64; 9],
    pub total: u64,
    pub excluded_zeros: u64,
}

impl DigitHistogram {
    pub fn from_points(points: &[f64], excluded_zeros: u64) -> Self {
        let mut counts = [0u64; 9];
        for &y in points {
            counts[digit_of(y) as usize - 1] += 1;
        }
        DigitHistogram {
            counts,
            total: points.len() as u64,
            excluded_zeros,
        }
    }

    pub fn frequency(&self, d: u8) -> f64 {
        self.counts[d as usize - 1] as f64 / self.total as f64
    }

    pub fn frequencies(&self) -> [f64; 9] {
        let mut f = [0.0; 9];
        for d in 1..=9u8 {
            f[d as usize - 1] = self.frequency(d);
        }
        f
    }

    pub fn max_deviation(&self) -> f64 {
        (1..=9u8)
            .map(|d| (self.frequency(d) - benford_probability(d)).abs())
            .fold(0.0, f64::max)
    }

    pub fn chi2(&self) -> f64 {
        let n = self.total as f64;
        (1..=9u8)
            .map(|d| {
                let e = n * benford_probability(d);
                let o = self.counts[d as usize - 1] as f64;
                (o - e) * (o - e) / e
            })
            .sum()
    }
}

/// `D*_N = max_i max(i/N - u_(i), u_(i) - (i-1)/N)` on the sorted points.
pub fn star_discrepancy(points: &[f64]) -> f64 {
    let mut u = points.to_vec();
    u.sort_by(f64::total_cmp);
    ks_uniform_sorted(&u)
}

fn ks_uniform_sorted(u: &[f64]) -> f64 {
    let n = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

/// Sup distance between the empirical CDF of the significands `10^y` and
/// `s ↦ log10 s` on `[1, 10)`.
pub fn ks_significand(points: &[f64]) -> f64 {
    let mut s: Vec<f64> = points.iter().map(|y| 10f64.powf(*y)).collect();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x.log10();
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// `|S_m| = |N⁻¹ Σ exp(2πi m y_n)|` for `m = 1..=max_m`.
pub fn weyl_sums(points: &[f64], max_m: usize) -> Vec<f64> {
    let n = points.len() as f64;
    (1..=max_m)
        .map(|m| {
            let (mut re, mut im) = (0.0, 0.0);
            for &y in points {
                let phase = (m as f64 * y).rem_euclid(1.0) * TAU;
                let (s, c) = phase.sin_cos();
                re += c;
                im += s;
            }
            (re * re + im * im).sqrt() / n
        })
        .collect()
}

/// Smallest `n ≤ n_max` with `|{nα} - target| < eps`.
pub fn kronecker_probe(alpha: f64, target: f64, eps: f64, n_max: u64) -> Option<u64> {
    (1..=n_max).find(|&n| ((n as f64 * alpha).rem_euclid(1.0) - target).abs() < eps)
}

pub const KRONECKER_DEFAULT_MAX: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub max_digit_dev: f64,
    pub star_discrepancy: f64,
    pub weyl: f64,
    /// Weyl sums up to this frequency enter the verdict.
    pub weyl_m: usize,
    pub min_n: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_digit_dev: 0.01,
            star_discrepancy: 0.02,
            weyl: 0.05,
            weyl_m: 10,
            min_n: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    InsufficientSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenfordReport {
    pub n: usize,
    pub digit_hist: DigitHistogram,
    pub frequencies: [f64; 9],
    pub expected: [f64; 9],
    pub max_digit_dev: f64,
    pub chi2: f64,
    pub chi2_df: u32,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub chi2_p_value: Option<f64>,
    pub ks_significand: f64,
    pub star_discrepancy: f64,
    pub weyl_sums: Vec<f64>,
    pub thresholds: Thresholds,
    pub verdict: Verdict,
}

/// Full report on a set of points in `[0, 1)`.
pub fn analyze(points: &[f64], max_m: usize, thresholds: &Thresholds) -> Result<BenfordReport> {
    analyze_with_zeros(points, 0, max_m, thresholds)
}

pub fn analyze_with_zeros(points: &[f64], zeros: u64, max_m: usize, thresholds: &Thresholds) -> Result<BenfordReport> {
    if points.is_empty() {
        return Err(Error::Empty("no nonzero terms to analyze".into()));
    }
    if max_m == 0 {
        return Err(Error::InvalidSpec("at least one Weyl frequency is needed".into()));
    }
    if let Some(bad) = points.iter().find(|y| !(0.0..1.0).contains(*y)) {
        return Err(Error::Domain(format!("point {bad} is outside [0, 1)")));
    }
    let hist = DigitHistogram::from_points(points, zeros);
    let weyl = weyl_sums(points, max_m);
    let star = star_discrepancy(points);
    let max_dev = hist.max_deviation();
    let weyl_max = weyl.iter().take(thresholds.weyl_m).fold(0.0f64, |m, w| m.max(*w));
    let verdict = if points.len() < thresholds.min_n {
        Verdict::InsufficientSample
    } else if max_dev < thresholds.max_digit_dev && star < thresholds.star_discrepancy && weyl_max < thresholds.weyl {
        Verdict::Consistent
    } else {
        Verdict::Inconsistent
    };
    let mut expected = [0.0; 9];
    for d in 1..=9u8 {
        expected[d as usize - 1] = benford_probability(d);
    }
    Ok(BenfordReport {
        n: points.len(),
        frequencies: hist.frequencies(),
        expected,
        max_digit_dev: max_dev,
        chi2: hist.chi2(),
        chi2_df: 8,
        chi2_p_value: None,
        ks_significand: ks_significand(points),
        star_discrepancy: star,
        weyl_sums: weyl,
        thresholds: *thresholds,
        verdict,
        digit_hist: hist,
    })
}

/// Report on a sequence: zeros are excluded and counted, negative terms are
/// taken by absolute value.
pub fn analyze_sample(sample: &SequenceSample, max_m: usize, thresholds: &Thresholds) -> Result<BenfordReport> {
    analyze_with_zeros(&sample.points(), sample.zero_count() as u64, max_m, thresholds)
}

/// Upper-tail probability of χ² with 8 degrees of freedom.
pub fn chi2_p_value(chi2: f64) -> f64 {
    ChiSquared::new(8.0).map(|d| d.sf(chi2)).unwrap_or(f64::NAN)
}

impl BenfordReport {
    pub fn max_weyl(&self) -> f64 {
        self.weyl_sums
            .iter()
            .take(self.thresholds.weyl_m)
            .fold(0.0, |m, w| m.max(*w))
    }

    /// `d,observed,expected` rows.
    pub fn digit_csv(&self) -> String {
        let mut out = String::from("d,observed,expected\n");
        for d in 0..9 {
            out.push_str(&format!("{},{:?},{:?}\n", d + 1, self.frequencies[d], self.expected[d]));
        }
        out
    }

    /// Two-column `bin frequency` text for plotting.
    pub fn plot_data(&self) -> String {
        (0..9).map(|d| format!("{} {:?}\n", d + 1, self.frequencies[d])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn thresholds() -> Thresholds {
        Thresholds::default()
    }

    #[test]
    fn digit_thresholds_are_exact_at_boundaries() {
        assert_eq!(digit_of(0.0), 1);
        assert_eq!(digit_of(2f64.log10()), 2);
        assert_eq!(digit_of(2f64.log10() - 1e-15), 1);
        assert_eq!(digit_of(0.999_999_999), 9);
        for d in 1..=9u8 {
            assert_eq!(digit_of((d as f64 + 0.5).log10()), d);
        }
    }

    #[test]
    fn single_atom() {
        let pts = vec![1.5f64.log10(); 100];
        let r = analyze(&pts, 10, &thresholds()).unwrap();
        assert_eq!(r.frequencies[0], 1.0);
        assert!((r.max_digit_dev - (1.0 - 2f64.log10())).abs() < 1e-15);
        assert_eq!(r.verdict, Verdict::InsufficientSample);
        assert!(r.weyl_sums.iter().all(|w| (w - 1.0).abs() < 1e-12));
    }

    #[test]
    fn powers_of_hundred_are_inconsistent() {
        let pts = vec![0.0; 2000];
        let r = analyze(&pts, 10, &thresholds()).unwrap();
        assert_eq!(r.frequencies[0], 1.0);
        assert_eq!(r.verdict, Verdict::Inconsistent);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(analyze(&[], 10, &thresholds()), Err(Error::Empty(_))));
    }

    #[test]
    fn star_discrepancy_hand_values() {
        assert!((star_discrepancy(&[0.0, 0.25, 0.5, 0.75]) - 0.25).abs() < 1e-15);
        let n = 1000;
        let grid: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        assert!((star_discrepancy(&grid) - 1.0 / n as f64).abs() < 1e-12);
    }

    fn brute_discrepancy(points: &[f64]) -> f64 {
        // sup over [0, t) with t at every point and just after it.
        let n = points.len() as f64;
        let mut best = 0.0f64;
        let mut ts: Vec<f64> = points.to_vec();
        ts.push(1.0);
        for &t in &ts {
            let below = points.iter().filter(|&&x| x < t).count() as f64;
            let upto = points.iter().filter(|&&x| x <= t).count() as f64;
            best = best.max((below / n - t).abs()).max((upto / n - t).abs());
        }
        best
    }

    #[test]
    fn weyl_exact_cases() {
        let n = 360;
        let grid: Vec<f64> = (0..n).map(|k| k as f64 / n as f64).collect();
        for w in weyl_sums(&grid, 50) {
            assert!(w < 1e-12);
        }
        let s2 = 2f64.sqrt();
        let pts: Vec<f64> = (1..=10_000).map(|k| (k as f64 * s2).rem_euclid(1.0)).collect();
        for (m, w) in weyl_sums(&pts, 10).iter().enumerate() {
            let m = m as f64 + 1.0;
            let ratio = (TAU * m * s2).sin_cos();
            let denom = ((1.0 - ratio.1).powi(2) + ratio.0.powi(2)).sqrt();
            let bound = 2.0 / (10_000.0 * denom);
            assert!(*w <= bound + 1e-12, "m={m} w={w} bound={bound}");
            assert!(*w < 0.05);
        }
    }

    #[test]
    fn kronecker_cases() {
        assert_eq!(kronecker_probe(0.5, 0.5, 0.01, 100), Some(1));
        assert_eq!(kronecker_probe(1.0 / 3.0, 0.5, 0.01, 100_000), None);
        let a = 2f64.log10();
        let n = kronecker_probe(a, 0.5, 1e-4, KRONECKER_DEFAULT_MAX).unwrap();
        assert!(((n as f64 * a).rem_euclid(1.0) - 0.5).abs() < 1e-4);
        assert!((1..n).all(|k| ((k as f64 * a).rem_euclid(1.0) - 0.5).abs() >= 1e-4));
    }

    #[test]
    fn chi2_and_p_value() {
        let pts: Vec<f64> = (1..=5000).map(|k| (k as f64 * 2f64.log10()).rem_euclid(1.0)).collect();
        let r = analyze(&pts, 10, &thresholds()).unwrap();
        assert!(r.chi2 >= 0.0);
        assert_eq!(r.verdict, Verdict::Consistent);
        let p = chi2_p_value(15.507_313_055_865_45);
        assert!((p - 0.05).abs() < 1e-9);
        let csv = r.digit_csv();
        assert_eq!(csv.lines().count(), 10);
        assert!(csv.starts_with("d,observed,expected\n1,"));
    }

    proptest! {
        #[test]
        fn discrepancy_matches_brute_force(pts in prop::collection::vec(0.0f64..1.0, 1..200)) {
            let fast = star_discrepancy(&pts);
            let slow = brute_discrepancy(&pts);
            prop_assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }

        #[test]
        fn permutation_invariance(mut pts in prop::collection::vec(0.0f64..1.0, 1..200), seed in any::<u64>()) {
            let a = analyze(&pts, 5, &Thresholds::default()).unwrap();
            // Deterministic shuffle.
            let n = pts.len();
            let mut state = seed;
            for i in (1..n).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                pts.swap(i, (state >> 33) as usize % (i + 1));
            }
            let b = analyze(&pts, 5, &Thresholds::default()).unwrap();
            prop_assert_eq!(a.digit_hist, b.digit_hist);
            prop_assert_eq!(a.star_discrepancy, b.star_discrepancy);
            prop_assert_eq!(a.ks_significand, b.ks_significand);
            for (x, y) in a.weyl_sums.iter().zip(&b.weyl_sums) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn ks_change_of_variables(pts in prop::collection::vec(0.0f64..1.0, 1..300)) {
            prop_assert!((ks_significand(&pts) - star_discrepancy(&pts)).abs() < 1e-12);
        }

        #[test]
        fn discrepancy_bounds_digit_deviation(pts in prop::collection::vec(0.0f64..1.0, 1..300)) {
            let d = star_discrepancy(&pts);
            let h = DigitHistogram::from_points(&pts, 0);
            for k in 1..=9u8 {
                prop_assert!((h.frequency(k) - benford_probability(k)).abs() <= 2.0 * d + 1e-12);
            }
        }
    }
}
