//! Small Monte Carlo summaries: means with standard errors and binomial
//! confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const DEFAULT_CONFIDENCE: f64 = 0.95;

/// Two-sided standard-normal quantile for `confidence`.
pub fn z_value(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param(format!(
            "confidence must lie in (0,1), got {confidence}"
        )));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 + confidence / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityEstimate {
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_samples: u64,
    pub confidence: f64,
}

impl ProbabilityEstimate {
    /// Wilson score interval. The bounds are pinned to `p_hat` when it sits at
    /// 0 or 1, so `ci_low ≤ p_hat ≤ ci_high` holds exactly.
    pub fn wilson(successes: u64, n: u64, confidence: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("binomial estimate needs at least one sample"));
        }
        if successes > n {
            return Err(Error::param("more successes than trials"));
        }
        let z = z_value(confidence)?;
        let nf = n as f64;
        let p = successes as f64 / nf;
        let z2 = z * z;
        let denom = 1.0 + z2 / nf;
        let centre = (p + z2 / (2.0 * nf)) / denom;
        let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
        let mut lo = (centre - half).max(0.0);
        let mut hi = (centre + half).min(1.0);
        if successes == 0 {
            lo = 0.0;
        }
        if successes == n {
            hi = 1.0;
        }
        Ok(Self {
            p_hat: p,
            ci_low: lo.min(p),
            ci_high: hi.max(p),
            n_samples: n,
            confidence,
        })
    }

    pub fn width(&self) -> f64 {
        self.ci_high - self.ci_low
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: u64,
}

impl MeanEstimate {
    /// Sample mean and `s / √n` with the unbiased sample variance.
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(Error::param("mean of an empty sample"));
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let stderr = if xs.len() < 2 {
            0.0
        } else {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1.0)).sqrt() / n.sqrt()
        };
        Ok(Self {
            mean,
            stderr,
            n_samples: xs.len() as u64,
        })
    }

    /// Normal-approximation interval, clipped to `[lo, hi]`.
    pub fn interval(&self, confidence: f64, lo: f64, hi: f64) -> Result<(f64, f64)> {
        let z = z_value(confidence)?;
        Ok((
            (self.mean - z * self.stderr).max(lo),
            (self.mean + z * self.stderr).min(hi),
        ))
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return 0.0;
    }
    let mx = xs[..n].iter().sum::<f64>() / n as f64;
    let my = ys[..n].iter().sum::<f64>() / n as f64;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs[..n].iter().zip(&ys[..n]) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_for_95() {
        assert!((z_value(0.95).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
        assert!(z_value(1.0).is_err());
    }

    #[test]
    fn wilson_edges() {
        let all = ProbabilityEstimate::wilson(50, 50, 0.95).unwrap();
        assert_eq!(all.p_hat, 1.0);
        assert_eq!(all.ci_high, 1.0);
        assert!(all.ci_low < 1.0);
        let none = ProbabilityEstimate::wilson(0, 50, 0.95).unwrap();
        assert_eq!(none.p_hat, 0.0);
        assert_eq!(none.ci_low, 0.0);
        assert!(none.ci_high > 0.0);
    }

    #[test]
    fn wilson_reference_value() {
        // 40/100 at 95%: centre 0.40586, half-width 0.09389 (textbook values).
        let e = ProbabilityEstimate::wilson(40, 100, 0.95).unwrap();
        assert!((e.ci_low - 0.3094).abs() < 1e-3, "{e:?}");
        assert!((e.ci_high - 0.4980).abs() < 1e-3, "{e:?}");
    }

    #[test]
    fn mean_estimate() {
        let e = MeanEstimate::from_samples(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!((e.mean, e.stderr), (1.0, 0.0));
        let e = MeanEstimate::from_samples(&[0.0, 2.0]).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!((e.stderr - 1.0).abs() < 1e-15);
    }

    #[test]
    fn slope() {
        assert!((ls_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-15);
        assert_eq!(ls_slope(&[1.0], &[1.0]), 0.0);
    }
}
