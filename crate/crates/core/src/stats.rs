//! Small estimators shared by the Monte Carlo drivers.

use serde::Serialize;

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    /// `|mean - target| <= k · se`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.se
    }
}

pub fn mean_se<I: IntoIterator<Item = f64>>(xs: I) -> Estimate {
    let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
    for x in xs {
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    let se = if n > 1 {
        (m2 / (n - 1) as f64 / n as f64).sqrt()
    } else {
        f64::NAN
    };
    Estimate {
        mean: if n == 0 { f64::NAN } else { mean },
        se,
        n,
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: usize, n: usize, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0.0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// Half-width of the Dvoretzky–Kiefer–Wolfowitz band at confidence `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Sup distance between the empirical survival function of `samples` and
/// `survival`, which must be continuous and nonincreasing.
pub fn ks_survival<F: Fn(f64) -> f64>(samples: &[f64], survival: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = survival(x);
            // empirical survival just before and at x
            let before = 1.0 - i as f64 / n;
            let after = 1.0 - (i + 1) as f64 / n;
            (before - s).abs().max((after - s).abs())
        })
        .fold(0.0, f64::max)
}

/// Ordinary least squares fit `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub points: usize,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 3 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    Some(LinearFit {
        slope,
        intercept,
        slope_se: (rss / (nf - 2.0) / sxx).sqrt(),
        points: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_se() {
        let e = mean_se([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        assert!((e.se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson(30, 100, 1.96);
        assert!(lo < 0.3 && 0.3 < hi);
        let (lo0, hi0) = wilson(0, 100, 1.96);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0);
    }

    #[test]
    fn ols_exact_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y = [1.0, 3.0, 5.0, 7.0];
        let f = ols(&x, &y).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(f.slope_se < 1e-12);
    }

    #[test]
    fn ks_of_quantiles_is_small() {
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| -(1.0 - (i as f64 + 0.5) / n as f64).ln()).collect();
        assert!(ks_survival(&xs, |t| (-t).exp()) <= 0.5 / n as f64 + 1e-12);
    }
}
