//! Logarithmic binning on the shifted axis `x = n_cit + 1`.
//!
//! Values up to `integer_bins_up_to` get unit-width bins centred on the
//! integer; above that, contiguous bins of `log_width` decades start at
//! `integer_bins_up_to + 0.5`. Density is `count / (width * n_total)`, so
//! the binned curve integrates to one.

use serde::{Deserialize, Serialize};

use super::Histogram;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BinningScheme {
    pub integer_bins_up_to: u64,
    pub log_width: f64,
}

impl Default for BinningScheme {
    fn default() -> Self {
        Self {
            integer_bins_up_to: 10,
            log_width: 0.1,
        }
    }
}

impl BinningScheme {
    pub fn new(integer_bins_up_to: u64, log_width: f64) -> Result<Self> {
        let s = Self {
            integer_bins_up_to,
            log_width,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.integer_bins_up_to == 0 {
            return Err(Error::param("integer_bins_up_to must be >= 1"));
        }
        if !(self.log_width.is_finite() && self.log_width > 0.0) {
            return Err(Error::param(format!("log_width must be > 0, got {}", self.log_width)));
        }
        Ok(())
    }

    fn log_start(&self) -> f64 {
        self.integer_bins_up_to as f64 + 0.5
    }

    fn log_edge(&self, k: u64) -> f64 {
        self.log_start() * 10f64.powf(k as f64 * self.log_width)
    }

    /// Bin index of `x >= 1`. Unit bins come first, then log bins.
    pub fn index_of(&self, x: u64) -> usize {
        debug_assert!(x >= 1);
        let t = self.integer_bins_up_to;
        if x <= t {
            return (x - 1) as usize;
        }
        let xf = x as f64;
        let mut k = ((xf / self.log_start()).log10() / self.log_width).floor().max(0.0) as u64;
        while k > 0 && xf < self.log_edge(k) {
            k -= 1;
        }
        while xf >= self.log_edge(k + 1) {
            k += 1;
        }
        t as usize + k as usize
    }

    /// `(lo, hi)` of bin `index`.
    pub fn edges(&self, index: usize) -> (f64, f64) {
        let t = self.integer_bins_up_to as usize;
        if index < t {
            let x = (index + 1) as f64;
            (x - 0.5, x + 0.5)
        } else {
            let k = (index - t) as u64;
            (self.log_edge(k), self.log_edge(k + 1))
        }
    }

    /// Unit bins are centred on their integer; log bins on the geometric mean.
    pub fn center(&self, index: usize) -> f64 {
        let (lo, hi) = self.edges(index);
        if index < self.integer_bins_up_to as usize {
            (lo + hi) / 2.0
        } else {
            (lo * hi).sqrt()
        }
    }

    /// Recovers the bin index from stored edges, or reports that the edges
    /// do not belong to this scheme.
    pub fn index_from_edges(&self, lo: f64, hi: f64) -> Result<usize> {
        let guess = if hi <= self.integer_bins_up_to as f64 + 0.5 + 1e-9 {
            (lo + 0.5).round().max(1.0) as u64
        } else {
            // largest integer strictly below hi
            (hi.ceil() as u64).saturating_sub(1).max(1)
        };
        let index = self.index_of(guess.max(1));
        let (elo, ehi) = self.edges(index);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1.0);
        if close(lo, elo) && close(hi, ehi) {
            Ok(index)
        } else {
            Err(Error::SchemeMismatch(format!(
                "bin [{lo}, {hi}) is not a bin of the scheme (unit bins to {}, {} decades above)",
                self.integer_bins_up_to, self.log_width
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub count: f64,
    pub density: f64,
}

impl Bin {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Nonempty bins in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedDistribution {
    pub scheme: BinningScheme,
    pub bins: Vec<Bin>,
    pub n_total: f64,
}

impl BinnedDistribution {
    /// `Σ density * width`; 1 for any nonempty distribution.
    pub fn mass(&self) -> f64 {
        self.bins.iter().map(|b| b.density * b.width()).sum()
    }

    /// Bin with the largest density, ties to the lowest.
    pub fn modal_bin(&self) -> Option<&Bin> {
        self.bins.iter().fold(None, |best: Option<&Bin>, b| match best {
            Some(m) if m.density >= b.density => best,
            _ => Some(b),
        })
    }

    /// Rebuilds a distribution from stored `(lo, hi, count)` rows, checking
    /// each bin against `scheme`. Density is recomputed from counts.
    pub fn from_rows(scheme: BinningScheme, rows: &[(f64, f64, f64)]) -> Result<Self> {
        scheme.validate()?;
        let mut bins = Vec::with_capacity(rows.len());
        for &(lo, hi, count) in rows {
            let index = scheme.index_from_edges(lo, hi)?;
            if !(count.is_finite() && count >= 0.0) {
                return Err(Error::param(format!("bin [{lo}, {hi}) has invalid count {count}")));
            }
            bins.push((index, count));
        }
        bins.sort_by_key(|b| b.0);
        if bins.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::SchemeMismatch("duplicate bins".into()));
        }
        let n_total: f64 = bins.iter().map(|b| b.1).sum();
        Ok(assemble(scheme, bins.into_iter().filter(|b| b.1 > 0.0), n_total))
    }
}

fn assemble(scheme: BinningScheme, counts: impl Iterator<Item = (usize, f64)>, n_total: f64) -> BinnedDistribution {
    let bins = counts
        .map(|(index, count)| {
            let (lo, hi) = scheme.edges(index);
            Bin {
                index,
                lo,
                hi,
                center: scheme.center(index),
                count,
                density: count / ((hi - lo) * n_total),
            }
        })
        .collect();
    BinnedDistribution { scheme, bins, n_total }
}

/// Bins a citation histogram (keys are raw counts, shifted by one here).
pub fn log_binned(h: &Histogram, scheme: &BinningScheme) -> BinnedDistribution {
    let mut counts: std::collections::BTreeMap<usize, u64> = Default::default();
    for (&value, &c) in h {
        if c > 0 {
            *counts.entry(scheme.index_of(value + 1)).or_insert(0) += c;
        }
    }
    let n_total: u64 = counts.values().sum();
    assemble(*scheme, counts.into_iter().map(|(i, c)| (i, c as f64)), n_total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    /// RMS of log10 density differences over common bins.
    pub decades: f64,
    pub common_bins: usize,
    /// Bins nonempty in exactly one of the two distributions.
    pub excluded_bins: usize,
}

pub fn distance(a: &BinnedDistribution, b: &BinnedDistribution) -> Result<DistanceReport> {
    if a.scheme != b.scheme {
        return Err(Error::SchemeMismatch(format!("{:?} vs {:?}", a.scheme, b.scheme)));
    }
    let (mut i, mut j) = (0, 0);
    let (mut sum_sq, mut common, mut excluded) = (0.0, 0usize, 0usize);
    while i < a.bins.len() || j < b.bins.len() {
        match (a.bins.get(i), b.bins.get(j)) {
            (Some(x), Some(y)) if x.index == y.index => {
                let d = x.density.log10() - y.density.log10();
                sum_sq += d * d;
                common += 1;
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x.index < y.index => {
                excluded += 1;
                i += 1;
            }
            (Some(_), Some(_)) => {
                excluded += 1;
                j += 1;
            }
            (Some(_), None) => {
                excluded += 1;
                i += 1;
            }
            (None, Some(_)) => {
                excluded += 1;
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    if common == 0 {
        return Err(Error::UndefinedDistance);
    }
    Ok(DistanceReport {
        decades: (sum_sq / common as f64).sqrt(),
        common_bins: common,
        excluded_bins: excluded,
    })
}
