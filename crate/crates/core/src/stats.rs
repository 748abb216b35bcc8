//! Monte Carlo aggregation: mergeable moments, Wilson intervals for rare
//! proportions, log-log regression and the two-sample Kolmogorov–Smirnov test.

use crate::error::{Error, Result};

const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCResult {
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
}

impl MCResult {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn within(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.stderr
    }

    pub fn excludes_zero(&self) -> bool {
        self.ci95.0 > 0.0 || self.ci95.1 < 0.0
    }
}

/// Running count, mean and centred sum of squares. Partials from different
/// shards merge with the pairwise update, so the merge order only affects
/// rounding.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let (na, nb) = (self.n as f64, other.n as f64);
        self.mean += delta * nb / n as f64;
        self.m2 += other.m2 + delta * delta * na * nb / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn result(&self) -> Result<MCResult> {
        if self.n == 0 {
            return Err(Error::Empty("no samples to aggregate"));
        }
        let stderr = (self.variance() / self.n as f64).sqrt();
        Ok(MCResult {
            n: self.n,
            mean: self.mean,
            stderr,
            ci95: (self.mean - Z95 * stderr, self.mean + Z95 * stderr),
        })
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

pub fn aggregate(samples: &[f64]) -> Result<MCResult> {
    samples.iter().copied().collect::<Moments>().result()
}

/// Proportion estimate with the Wilson score interval as `ci95`.
pub fn wilson(successes: u64, n: u64) -> Result<MCResult> {
    if n == 0 {
        return Err(Error::Empty("no trials"));
    }
    if successes > n {
        return Err(Error::param("successes", format!("{successes} > {n} trials")));
    }
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = Z95 * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    Ok(MCResult {
        n,
        mean: p,
        stderr: (p * (1.0 - p) / nf).sqrt(),
        ci95: (
            if successes == 0 { 0.0 } else { (centre - half).max(0.0) },
            if successes == n { 1.0 } else { (centre + half).min(1.0) },
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slope {
    pub slope: f64,
    pub stderr: f64,
    pub intercept: f64,
}

/// Least-squares fit of `log y` against `log x`.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> Result<Slope> {
    if pairs.len() < 2 {
        return Err(Error::param("pairs", "need at least two points"));
    }
    if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::Domain(format!("log of nonpositive pair ({x}, {y})")));
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::param("pairs", "all abscissae coincide"));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let stderr = if pts.len() > 2 {
        let rss: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(Slope {
        slope,
        stderr,
        intercept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub critical: f64,
    pub pass: bool,
}

/// Asymptotic critical coefficient c(α) for α = 0.01, `sqrt(-ln(α/2)/2)`.
const KS_C_001: f64 = 1.627_615_493_972_482_7;

/// Two-sample Kolmogorov–Smirnov statistic with the asymptotic α = 0.01
/// rejection threshold. `pass` means "no evidence the laws differ".
pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<KsTest> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < n && j < m {
        let v = xs[i].min(ys[j]);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical = KS_C_001 * ((nf + mf) / (nf * mf)).sqrt();
    Ok(KsTest {
        statistic: d,
        critical,
        pass: d <= critical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples_have_zero_stderr() {
        let r = aggregate(&[2.5; 10]).unwrap();
        assert_eq!(r.mean, 2.5);
        assert_eq!(r.stderr, 0.0);
        assert_eq!(r.ci95, (2.5, 2.5));
    }

    #[test]
    fn empty_is_error() {
        assert!(aggregate(&[]).is_err());
        assert!(wilson(0, 0).is_err());
    }

    #[test]
    fn known_small_sample() {
        let r = aggregate(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r.mean - 2.5).abs() < 1e-15);
        // sample variance 5/3
        assert!((r.stderr - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn merge_equals_whole() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1013) as f64 * 0.37 - 50.0).collect();
        let whole: Moments = xs.iter().copied().collect();
        let mut merged = Moments::new();
        for chunk in xs.chunks(77) {
            merged.merge(&chunk.iter().copied().collect());
        }
        assert_eq!(whole.count(), merged.count());
        assert!((whole.mean() - merged.mean()).abs() < 1e-12);
        assert!((whole.variance() - merged.variance()).abs() < 1e-12 * whole.variance());
    }

    #[test]
    fn wilson_zero_successes_has_positive_upper() {
        let r = wilson(0, 500).unwrap();
        assert_eq!(r.ci95.0, 0.0);
        assert!(r.ci95.1 > 0.0 && r.ci95.1 < 0.01);
        assert!(!r.excludes_zero());
        assert!(wilson(3, 500).unwrap().excludes_zero());
    }

    #[test]
    fn wilson_matches_reference() {
        // 10 of 100: Wilson interval (0.0552, 0.1744).
        let r = wilson(10, 100).unwrap();
        assert!((r.ci95.0 - 0.05523).abs() < 1e-4, "{:?}", r.ci95);
        assert!((r.ci95.1 - 0.17437).abs() < 1e-4, "{:?}", r.ci95);
    }

    #[test]
    fn exact_power_law() {
        let pairs: Vec<(f64, f64)> = [4.0, 16.0, 64.0, 256.0]
            .iter()
            .map(|&t: &f64| (t, 3.0 * t.powf(-2.0 / 3.0)))
            .collect();
        let s = loglog_slope(&pairs).unwrap();
        assert!((s.slope + 2.0 / 3.0).abs() < 1e-12);
        assert!(s.stderr < 1e-12);
        assert!((s.intercept - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn slope_rejects_bad_input() {
        assert!(loglog_slope(&[(1.0, 1.0)]).is_err());
        assert!(loglog_slope(&[(1.0, 1.0), (2.0, 0.0)]).is_err());
        assert!(loglog_slope(&[(2.0, 1.0), (2.0, 3.0)]).is_err());
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let t = ks_distance(&a, &a).unwrap();
        assert_eq!(t.statistic, 0.0);
        assert!(t.pass);
        let b: Vec<f64> = (0..200).map(|i| 1000.0 + i as f64).collect();
        let t = ks_distance(&a, &b).unwrap();
        assert_eq!(t.statistic, 1.0);
        assert!(!t.pass);
    }

    #[test]
    fn ks_statistic_with_ties() {
        let a = [1.0, 2.0, 2.0, 3.0];
        let b = [2.0, 2.0, 4.0, 5.0];
        // F_a(2) = 3/4, F_b(2) = 1/2; F_a(3) = 1, F_b(3) = 1/2.
        assert!((ks_distance(&a, &b).unwrap().statistic - 0.5).abs() < 1e-15);
    }
}
