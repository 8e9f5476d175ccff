use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::unit;

/// Discrete power law `P(k) ∝ k^-exponent` on `min..=max`, sampled by
/// inverse CDF over a precomputed table.
#[derive(Debug, Clone)]
pub struct DiscretePowerLaw {
    min: u64,
    exponent: f64,
    cdf: Vec<f64>,
}

impl DiscretePowerLaw {
    pub fn new(exponent: f64, min: u64, max: u64) -> Result<Self> {
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(Error::param(format!(
                "power-law exponent must be finite and >= 0, got {exponent}"
            )));
        }
        if min == 0 || max < min {
            return Err(Error::param(format!("power-law support {min}..={max} is invalid")));
        }
        if max - min > 50_000_000 {
            return Err(Error::param("power-law support too large to tabulate"));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (min..=max)
            .map(|k| {
                acc += (k as f64).powf(-exponent);
                acc
            })
            .collect();
        let norm = acc;
        for c in &mut cdf {
            *c /= norm;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(Self { min, exponent, cdf })
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn min(&self) -> u64 {
        self.min
    }

    pub fn max(&self) -> u64 {
        self.min + self.cdf.len() as u64 - 1
    }

    pub fn pmf(&self, k: u64) -> f64 {
        if k < self.min || k > self.max() {
            return 0.0;
        }
        let i = (k - self.min) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    /// `E[k^p]` by direct summation over the support.
    pub fn moment(&self, p: f64) -> f64 {
        let norm: f64 = (self.min..=self.max()).map(|k| (k as f64).powf(-self.exponent)).sum();
        let num: f64 = (self.min..=self.max())
            .map(|k| (k as f64).powf(p - self.exponent))
            .sum();
        num / norm
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = unit(rng);
        let i = self.cdf.partition_point(|&c| c <= u);
        self.min + i.min(self.cdf.len() - 1) as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn pmf_sums_to_one() {
        let d = DiscretePowerLaw::new(2.5, 1, 500).unwrap();
        let total: f64 = (1..=500).map(|k| d.pmf(k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(d.pmf(0), 0.0);
        assert_eq!(d.pmf(501), 0.0);
    }

    #[test]
    fn samples_stay_in_support() {
        let d = DiscretePowerLaw::new(1.7, 3, 40).unwrap();
        let mut rng = replicate_rng(3, 0);
        for _ in 0..20_000 {
            let k = d.sample(&mut rng);
            assert!((3..=40).contains(&k));
        }
    }

    #[test]
    fn first_moment_matches_frequency() {
        let d = DiscretePowerLaw::new(2.5, 1, 1000).unwrap();
        let mut rng = replicate_rng(11, 0);
        let n = 400_000;
        let mean = (0..n).map(|_| d.sample(&mut rng) as f64).sum::<f64>() / n as f64;
        assert!((mean - d.moment(1.0)).abs() < 0.05 * d.moment(1.0));
    }

    #[test]
    fn rejects_bad_support() {
        assert!(DiscretePowerLaw::new(2.0, 0, 10).is_err());
        assert!(DiscretePowerLaw::new(2.0, 5, 4).is_err());
        assert!(DiscretePowerLaw::new(f64::NAN, 1, 4).is_err());
    }
}
