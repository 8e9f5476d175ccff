//! Cohort team sizes and the intrinsic (direct-citation) weight derived from them.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::dist::DiscretePowerLaw;
use crate::error::{Error, Result};
use crate::stats::Histogram;

/// Author counts, one per paper. Paper ids are positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TeamSizeVector(Vec<u32>);

impl TeamSizeVector {
    pub fn new(sizes: Vec<u32>) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::EmptyCohort);
        }
        if let Some(row) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::Ingestion {
                row,
                message: "team size must be a positive integer, got 0".into(),
            });
        }
        Ok(Self(sizes))
    }

    /// A cohort where every paper has the same team size.
    pub fn uniform(n: usize, size: u32) -> Result<Self> {
        Self::new(vec![size; n])
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

/// Two-component mixture: a shifted-Poisson core (`1 + Poisson(core_mean - 1)`)
/// and a discrete power-law tail on `1..=max_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TeamGenParams {
    pub core_mean: f64,
    pub tail_exponent: f64,
    pub tail_fraction: f64,
    pub max_size: u32,
}

impl Default for TeamGenParams {
    fn default() -> Self {
        Self {
            core_mean: 2.6,
            tail_exponent: 1.7,
            tail_fraction: 0.15,
            max_size: 500,
        }
    }
}

impl TeamGenParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.core_mean.is_finite() && self.core_mean >= 1.0) {
            return Err(Error::param(format!(
                "core_mean must be >= 1 (the core is shifted to start at 1), got {}",
                self.core_mean
            )));
        }
        if !(self.tail_exponent.is_finite() && self.tail_exponent > 1.0) {
            return Err(Error::param(format!(
                "tail_exponent must be > 1, got {}",
                self.tail_exponent
            )));
        }
        if !(0.0..=1.0).contains(&self.tail_fraction) {
            return Err(Error::param(format!(
                "tail_fraction must lie in [0, 1], got {}",
                self.tail_fraction
            )));
        }
        if self.max_size == 0 {
            return Err(Error::param("max_size must be >= 1"));
        }
        Ok(())
    }
}

pub fn gen_team_sizes<R: Rng + ?Sized>(params: &TeamGenParams, n: usize, rng: &mut R) -> Result<TeamSizeVector> {
    params.validate()?;
    if n == 0 {
        return Err(Error::param("cohort size must be >= 1"));
    }
    let tail = DiscretePowerLaw::new(params.tail_exponent, 1, u64::from(params.max_size))?;
    let core_lambda = params.core_mean - 1.0;
    let core = if core_lambda > 0.0 {
        Some(Poisson::new(core_lambda).map_err(|e| Error::param(e.to_string()))?)
    } else {
        None
    };
    let max = f64::from(params.max_size);

    let sizes = (0..n)
        .map(|_| {
            let from_tail = params.tail_fraction > 0.0 && rng.random::<f64>() < params.tail_fraction;
            if from_tail {
                tail.sample(rng) as u32
            } else {
                let extra = core.map_or(0.0, |p| p.sample(rng));
                (1.0 + extra).min(max) as u32
            }
        })
        .collect();
    TeamSizeVector::new(sizes)
}

/// Validates ingested team sizes. `rows` holds the raw size field of each
/// data row in file order.
pub fn load_team_sizes<S: AsRef<str>>(rows: &[S]) -> Result<TeamSizeVector> {
    if rows.is_empty() {
        return Err(Error::EmptyCohort);
    }
    let sizes = rows
        .iter()
        .enumerate()
        .map(|(row, raw)| {
            let raw = raw.as_ref().trim();
            match raw.parse::<i64>() {
                Ok(v) if v >= 1 && v <= i64::from(u32::MAX) => Ok(v as u32),
                Ok(v) => Err(Error::Ingestion {
                    row,
                    message: format!("team size must be a positive integer, got {v}"),
                }),
                Err(_) => Err(Error::Ingestion {
                    row,
                    message: format!("team size {raw:?} is not an integer"),
                }),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    TeamSizeVector::new(sizes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Identity,
    Power,
    Constant,
}

/// Maps a team size onto a direct-citation weight: `c * min(n, cap)^gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectTransform {
    pub kind: TransformKind,
    pub c: f64,
    pub gamma: f64,
    pub cap: u32,
}

impl Default for DirectTransform {
    fn default() -> Self {
        Self::identity(30)
    }
}

impl DirectTransform {
    pub fn identity(cap: u32) -> Self {
        Self {
            kind: TransformKind::Identity,
            c: 1.0,
            gamma: 1.0,
            cap,
        }
    }

    pub fn power(c: f64, gamma: f64, cap: u32) -> Self {
        Self {
            kind: TransformKind::Power,
            c,
            gamma,
            cap,
        }
    }

    pub fn constant(c: f64) -> Self {
        Self {
            kind: TransformKind::Constant,
            c,
            gamma: 0.0,
            cap: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::param(format!(
                "transform multiplier c must be > 0, got {}",
                self.c
            )));
        }
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(Error::param(format!(
                "transform exponent gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if self.cap == 0 {
            return Err(Error::param("transform cap must be >= 1"));
        }
        if self.kind == TransformKind::Identity && (self.c != 1.0 || self.gamma != 1.0) {
            return Err(Error::param(format!(
                "identity transform ignores c and gamma (got c={}, gamma={}); use kind \"power\"",
                self.c, self.gamma
            )));
        }
        Ok(())
    }

    /// Sets the exponent. An identity transform becomes the equivalent power
    /// transform first, so the new value takes effect.
    pub fn set_gamma(&mut self, gamma: f64) {
        self.promote();
        self.gamma = gamma;
    }

    /// Sets the multiplier; promotes identity like [`Self::set_gamma`].
    pub fn set_c(&mut self, c: f64) {
        self.promote();
        self.c = c;
    }

    fn promote(&mut self) {
        if self.kind == TransformKind::Identity {
            *self = Self::power(1.0, 1.0, self.cap);
        }
    }
}

pub fn intrinsic_weight(team_size: u32, t: &DirectTransform) -> f64 {
    debug_assert!(team_size >= 1);
    let capped = team_size.min(t.cap);
    match t.kind {
        TransformKind::Identity => f64::from(capped),
        TransformKind::Power => t.c * f64::from(capped).powf(t.gamma),
        TransformKind::Constant => t.c,
    }
}

pub fn team_size_histogram(v: &[u32]) -> Histogram {
    let mut h = Histogram::new();
    for &s in v {
        *h.entry(u64::from(s)).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;
    use crate::stats::histogram_mode;
    use proptest::prelude::*;

    #[test]
    fn degenerate_core_is_all_ones() {
        let params = TeamGenParams {
            core_mean: 1.0,
            tail_fraction: 0.0,
            ..Default::default()
        };
        let v = gen_team_sizes(&params, 5, &mut replicate_rng(0, 0)).unwrap();
        assert_eq!(v.as_slice(), &[1, 1, 1, 1, 1]);
    }

    #[test]
    fn defaults_peak_at_two_or_three_with_a_long_tail() {
        let v = gen_team_sizes(&TeamGenParams::default(), 6430, &mut replicate_rng(7, 0)).unwrap();
        let h = team_size_histogram(v.as_slice());
        let mode = histogram_mode(&h).unwrap();
        assert!(mode == 2 || mode == 3, "mode {mode}");
        assert!(h.get(&1).copied().unwrap_or(0) > 0);
        assert!(h.range(101..).map(|(_, c)| c).sum::<u64>() > 0);
    }

    /// CCDF of `k^-2.5` truncated at 500, computed by direct summation.
    fn exact_ccdf_slope(lo: u64, hi: u64) -> f64 {
        let w: Vec<f64> = (1..=500u64).map(|k| (k as f64).powf(-2.5)).collect();
        let norm: f64 = w.iter().sum();
        let pts: Vec<(f64, f64)> = (lo..=hi)
            .map(|k| {
                let tail: f64 = w[(k - 1) as usize..].iter().sum::<f64>() / norm;
                ((k as f64).log10(), tail.log10())
            })
            .collect();
        ls_slope(&pts)
    }

    fn ls_slope(pts: &[(f64, f64)]) -> f64 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }

    #[test]
    fn pure_tail_ccdf_slope() {
        let params = TeamGenParams {
            core_mean: 1.0,
            tail_exponent: 2.5,
            tail_fraction: 1.0,
            max_size: 500,
        };
        let n = 1_000_000;
        let v = gen_team_sizes(&params, n, &mut replicate_rng(42, 0)).unwrap();
        let h = team_size_histogram(v.as_slice());
        let pts: Vec<(f64, f64)> = (5..=50u64)
            .map(|k| {
                let tail: u64 = h.range(k..).map(|(_, c)| c).sum();
                ((k as f64).log10(), (tail as f64 / n as f64).log10())
            })
            .collect();
        let empirical = ls_slope(&pts);
        let exact = exact_ccdf_slope(5, 50);
        // frozen from the summation oracle: -1.5612
        assert!((exact - (-1.5612)).abs() < 1e-3);
        assert!((empirical - exact).abs() < 0.03, "empirical {empirical} exact {exact}");
        assert!((empirical + 1.5).abs() < 0.1);
    }

    #[test]
    fn load_passes_sizes_through() {
        let v = load_team_sizes(&["3", "1", "200"]).unwrap();
        assert_eq!(v.as_slice(), &[3, 1, 200]);
    }

    #[test]
    fn load_rejects_bad_rows() {
        assert!(matches!(load_team_sizes::<&str>(&[]), Err(Error::EmptyCohort)));
        assert!(matches!(
            load_team_sizes(&["2", "0"]),
            Err(Error::Ingestion { row: 1, .. })
        ));
        assert!(matches!(load_team_sizes(&["-4"]), Err(Error::Ingestion { row: 0, .. })));
        assert!(matches!(
            load_team_sizes(&["1", "2", "2.5"]),
            Err(Error::Ingestion { row: 2, .. })
        ));
    }

    #[test]
    fn intrinsic_weight_examples() {
        assert_eq!(intrinsic_weight(5, &DirectTransform::identity(30)), 5.0);
        assert_eq!(intrinsic_weight(200, &DirectTransform::identity(30)), 30.0);
        // 4^0.3 to 40 digits: 1.515716566510398082347259801306445238681
        let w = intrinsic_weight(4, &DirectTransform::power(1.0, 0.3, 30));
        assert!((w - 1.515_716_566_510_398).abs() < 1e-15);
        assert_eq!(intrinsic_weight(17, &DirectTransform::constant(2.5)), 2.5);
    }

    #[test]
    fn histogram_counts() {
        let h = team_size_histogram(&[1, 2, 2, 3]);
        assert_eq!(h, Histogram::from([(1, 1), (2, 2), (3, 1)]));
        assert!(team_size_histogram(&[]).is_empty());
    }

    #[test]
    fn invalid_params_rejected() {
        let p = TeamGenParams {
            tail_fraction: 1.5,
            ..Default::default()
        };
        assert!(gen_team_sizes(&p, 10, &mut replicate_rng(0, 0)).is_err());
        assert!(gen_team_sizes(&TeamGenParams::default(), 0, &mut replicate_rng(0, 0)).is_err());
    }

    #[test]
    fn identity_promotes_on_parameter_change() {
        let mut t = DirectTransform::identity(30);
        assert!(DirectTransform { gamma: 0.5, ..t }.validate().is_err());
        t.set_gamma(0.5);
        assert_eq!(t, DirectTransform::power(1.0, 0.5, 30));
        assert_eq!(intrinsic_weight(4, &t), 2.0);
        let mut t = DirectTransform::identity(10);
        t.set_c(2.0);
        assert_eq!(intrinsic_weight(20, &t), 20.0);
        let mut t = DirectTransform::constant(3.0);
        t.set_c(1.5);
        assert_eq!(t.kind, TransformKind::Constant);
    }

    proptest! {
        #[test]
        fn generated_sizes_in_range_and_reproducible(seed in any::<u64>(), max in 1u32..300, frac in 0.0f64..=1.0) {
            let params = TeamGenParams { max_size: max, tail_fraction: frac, ..Default::default() };
            let a = gen_team_sizes(&params, 200, &mut replicate_rng(seed, 0)).unwrap();
            let b = gen_team_sizes(&params, 200, &mut replicate_rng(seed, 0)).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.as_slice().iter().all(|&s| s >= 1 && s <= max));
        }

        #[test]
        fn weight_monotone_and_flat_past_cap(k in 1u32..1000, gamma in 0.0f64..2.0, c in 0.01f64..10.0, cap in 1u32..100) {
            let t = DirectTransform::power(c, gamma, cap);
            prop_assert!(intrinsic_weight(k + 1, &t) >= intrinsic_weight(k, &t));
            if k >= cap {
                prop_assert_eq!(intrinsic_weight(k, &t), intrinsic_weight(cap, &t));
            }
            prop_assert_eq!(intrinsic_weight(k, &DirectTransform::identity(cap)), f64::from(k.min(cap)));
        }
    }
}
