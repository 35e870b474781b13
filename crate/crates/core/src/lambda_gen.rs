//! Regularization sequences built from chi quantiles.
//!
//! Each generator takes the group weights and ranks describing the chi
//! components, plus `m`, the sequence length that also sets the quantile
//! levels `1 - q i / m`. Usually `m` equals the number of components; the
//! genotype pipeline sets it to the number of tested markers instead.

use crate::error::{check_len, Error, Result};
use crate::sorted_l1::{LambdaKind, LambdaSequence};
use crate::special_fns::{chi_quantile, ChiMixture, PROB_CAP};

fn validate(q: f64, weights: &[f64], ranks: &[usize], m: usize) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!("q must lie in (0, 1), got {q}")));
    }
    if m == 0 {
        return Err(Error::domain("lambda length m must be positive"));
    }
    if weights.is_empty() {
        return Err(Error::domain("at least one group is required"));
    }
    check_len("ranks", weights.len(), ranks.len())?;
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::domain("weights must be positive"));
    }
    if ranks.iter().any(|&l| l == 0) {
        return Err(Error::domain("ranks must be positive"));
    }
    Ok(())
}

fn level(q: f64, i: usize, m: usize) -> f64 {
    (1.0 - q * i as f64 / m as f64).clamp(PROB_CAP, 1.0 - PROB_CAP)
}

/// `lambda_i = max_j F^{-1}_{chi_{l_j}}(1 - q i / m) / w_j`.
pub fn lambda_max(q: f64, weights: &[f64], ranks: &[usize], m: usize) -> Result<LambdaSequence> {
    validate(q, weights, ranks, m)?;
    let mut distinct: Vec<(usize, f64)> =
        ranks.iter().copied().zip(weights.iter().copied()).collect();
    distinct.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    distinct.dedup();
    let mut values = Vec::with_capacity(m);
    for i in 1..=m {
        let p = level(q, i, m);
        let mut best: f64 = 0.0;
        for &(l, w) in &distinct {
            best = best.max(chi_quantile(l as u32, p)? / w);
        }
        values.push(best);
    }
    monotone(&mut values);
    LambdaSequence::new(values, LambdaKind::Max)
}

/// `lambda_r = Fbar^{-1}(1 - q r / m)` where `Fbar` averages the CDFs of
/// `chi_{l_j} / w_j`.
pub fn lambda_mean(q: f64, weights: &[f64], ranks: &[usize], m: usize) -> Result<LambdaSequence> {
    validate(q, weights, ranks, m)?;
    let mix = mixture(ranks, weights.iter().map(|w| 1.0 / w).collect())?;
    let values = (1..=m)
        .map(|r| mix.quantile(level(q, r, m)))
        .collect::<Result<Vec<_>>>()?;
    let mut values = values;
    monotone(&mut values);
    LambdaSequence::new(values, LambdaKind::Mean)
}

/// Sequence corrected for independent Gaussian groups with `n` observations.
///
/// Starts from the first entry of [`lambda_mean`]; entry `i` inflates every
/// component scale by
/// `S_j = sqrt((n - l_j (i-1)) / n + w_j^2 ||lambda_{1..i-1}||^2 / (n - l_j (i-1) - 1))`
/// and is accepted while it does not exceed its predecessor. Once an entry
/// fails that test, or some denominator is no longer positive, the rest of the
/// sequence is flat.
pub fn lambda_corrected(
    q: f64,
    weights: &[f64],
    ranks: &[usize],
    m: usize,
    n: usize,
) -> Result<LambdaSequence> {
    validate(q, weights, ranks, m)?;
    if n < 2 {
        return Err(Error::domain("sample size must be at least 2"));
    }
    let base_scales: Vec<f64> = weights.iter().map(|w| 1.0 / w).collect();
    let first = mixture(ranks, base_scales)?.quantile(level(q, 1, m))?;
    let mut values = vec![first];
    let mut sum_sq = first * first;
    let nf = n as f64;

    for i in 2..=m {
        let prev = values[i - 2];
        let shift = (i - 1) as f64;
        let mut scales = Vec::with_capacity(weights.len());
        let mut degenerate = false;
        for (&w, &l) in weights.iter().zip(ranks) {
            let used = l as f64 * shift;
            let denom = nf - used - 1.0;
            if denom <= 0.0 {
                degenerate = true;
                break;
            }
            let s = ((nf - used) / nf + w * w * sum_sq / denom).sqrt();
            scales.push(s / w);
        }
        let candidate = if degenerate {
            None
        } else {
            Some(mixture(ranks, scales)?.quantile(level(q, i, m))?)
        };
        match candidate {
            Some(v) if v <= prev => {
                values.push(v);
                sum_sq += v * v;
            }
            _ => {
                values.resize(m, prev);
                break;
            }
        }
    }
    LambdaSequence::new(values, LambdaKind::Corrected)
}

/// Dispatches on `kind`; the corrected sequence needs the sample size `n`.
pub fn lambda_sequence(
    kind: LambdaKind,
    q: f64,
    weights: &[f64],
    ranks: &[usize],
    m: usize,
    n: Option<usize>,
) -> Result<LambdaSequence> {
    match kind {
        LambdaKind::Max => lambda_max(q, weights, ranks, m),
        LambdaKind::Mean => lambda_mean(q, weights, ranks, m),
        LambdaKind::Corrected => {
            let n = n.ok_or_else(|| {
                Error::Config("the corrected sequence needs the sample size".into())
            })?;
            lambda_corrected(q, weights, ranks, m, n)
        }
        LambdaKind::Custom => Err(Error::Config(
            "custom sequences are supplied, not generated".into(),
        )),
    }
}

fn mixture(ranks: &[usize], scales: Vec<f64>) -> Result<ChiMixture> {
    ChiMixture::new(ranks.iter().map(|&l| l as u32).collect(), scales)
}

// Quantiles are exactly nonincreasing in the level; this only removes
// last-ulp wobble from the root finder.
fn monotone(values: &mut [f64]) {
    for i in 1..values.len() {
        if values[i] > values[i - 1] {
            values[i] = values[i - 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_fns::chi_sf;

    #[test]
    fn max_with_equal_groups() {
        let lam = lambda_max(0.1, &[2.0; 10], &[3; 10], 10).unwrap();
        for (i, v) in lam.iter().enumerate() {
            let expect = chi_quantile(3, 1.0 - 0.1 * (i + 1) as f64 / 10.0).unwrap() / 2.0;
            assert!((v - expect).abs() < 1e-12);
        }
        assert_eq!(lam.kind(), LambdaKind::Max);
    }

    #[test]
    fn max_first_entry_closed_form() {
        let lam = lambda_max(0.1, &[1.0; 100], &[2; 100], 100).unwrap();
        assert!((lam[0] - (-2.0 * 0.001f64.ln()).sqrt()).abs() < 1e-10);
        assert!((lam[0] - 3.71692).abs() < 1e-5);
    }

    #[test]
    fn mean_collapses_to_max_for_equal_groups() {
        let w = [5f64.sqrt(); 40];
        let a = lambda_max(0.2, &w, &[5; 40], 40).unwrap();
        let b = lambda_mean(0.2, &w, &[5; 40], 40).unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn mean_below_max_and_defining_identity() {
        let ranks: Vec<usize> = (0..50).map(|i| 3 + i % 5).collect();
        let w: Vec<f64> = ranks.iter().map(|&l| (l as f64).sqrt()).collect();
        let q = 0.1;
        let mx = lambda_max(q, &w, &ranks, 50).unwrap();
        let mn = lambda_mean(q, &w, &ranks, 50).unwrap();
        for r in 0..50 {
            assert!(mn[r] <= mx[r] + 1e-12);
            let tail: f64 = ranks
                .iter()
                .zip(&w)
                .map(|(&l, &wi)| chi_sf(l as u32, mn[r] * wi).unwrap())
                .sum();
            assert!(
                (tail - q * (r + 1) as f64).abs() < 1e-6,
                "r={r} tail={tail}"
            );
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(lambda_max(0.0, &[1.0], &[1], 1).is_err());
        assert!(lambda_mean(1.0, &[1.0], &[1], 1).is_err());
        assert!(lambda_max(0.1, &[1.0, 1.0], &[1], 2).is_err());
        assert!(lambda_max(0.1, &[1.0], &[0], 1).is_err());
        assert!(lambda_corrected(0.1, &[1.0], &[1], 1, 1).is_err());
    }

    #[test]
    fn corrected_starts_at_mean_and_flattens() {
        let ranks: Vec<usize> = (0..100).map(|i| 1 + i % 4).collect();
        let w: Vec<f64> = ranks.iter().map(|&l| (l as f64).sqrt()).collect();
        let mean = lambda_mean(0.1, &w, &ranks, 100).unwrap();
        let corr = lambda_corrected(0.1, &w, &ranks, 100, 300).unwrap();
        assert_eq!(corr[0], mean[0]);
        assert_eq!(corr.len(), 100);
        assert!(corr.windows(2).all(|p| p[1] <= p[0]));
        // small n: the correction must stop and flatten well before the end
        let tail = corr[99];
        let flat_from = corr.iter().position(|&v| v == tail).unwrap();
        assert!(flat_from < 99);
        assert!(corr[flat_from..].iter().all(|&v| v == tail));
        assert_eq!(corr.kind(), LambdaKind::Corrected);
    }

    #[test]
    fn corrected_guards_small_denominators() {
        // n - l (i - 1) - 1 hits zero at i = 4 for l = 3, n = 10
        let corr = lambda_corrected(0.3, &[1.0; 20], &[3; 20], 20, 10).unwrap();
        assert!(corr[3..].iter().all(|&v| v == corr[2]) || corr[2..].iter().all(|&v| v == corr[1]));
    }

    #[test]
    fn corrected_tends_to_mean_for_huge_n() {
        // S_j - 1 is of order w_j^2 ||lambda||^2 / (2n); keep that below 1e-6
        let ranks: Vec<usize> = (0..10).map(|i| 1 + i % 2).collect();
        let w: Vec<f64> = ranks.iter().map(|&l| (l as f64).sqrt()).collect();
        let mean = lambda_mean(0.1, &w, &ranks, 10).unwrap();
        let corr = lambda_corrected(0.1, &w, &ranks, 10, 100_000_000).unwrap();
        for (a, b) in mean.iter().zip(corr.iter()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
        // and the gap keeps shrinking like 1/n
        let ranks: Vec<usize> = (0..30).map(|i| 2 + i % 3).collect();
        let w: Vec<f64> = ranks.iter().map(|&l| (l as f64).sqrt()).collect();
        let mean = lambda_mean(0.1, &w, &ranks, 30).unwrap();
        let dev = |n: usize| {
            let c = lambda_corrected(0.1, &w, &ranks, 30, n).unwrap();
            mean.iter()
                .zip(c.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let (d8, d10) = (dev(100_000_000), dev(10_000_000_000));
        assert!(d10 < 1e-6 && d10 < 0.05 * d8, "{d8} {d10}");
    }
}
