//! Analysis products computed from run results.

mod binning;
mod gof;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use binning::{distance, log_binned, Bin, BinnedDistribution, BinningScheme, DistanceReport};
pub use gof::{poisson_chi_square, ChiSquareResult};

use crate::engine::{RunResult, Snapshot};

/// Value → number of occurrences. Keys with zero count are never stored.
pub type Histogram = BTreeMap<u64, u64>;

pub fn citation_histogram(snapshot: &Snapshot) -> Histogram {
    counts_histogram(&snapshot.n_cit)
}

pub fn counts_histogram(counts: &[u64]) -> Histogram {
    let mut h = Histogram::new();
    for &c in counts {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

/// Sums histograms, e.g. the final states of an ensemble.
pub fn pooled_histogram<'a>(hs: impl IntoIterator<Item = &'a Histogram>) -> Histogram {
    let mut out = Histogram::new();
    for h in hs {
        for (&k, &c) in h {
            *out.entry(k).or_insert(0) += c;
        }
    }
    out
}

/// Smallest value with the largest count.
pub fn histogram_mode(h: &Histogram) -> Option<u64> {
    h.iter()
        .fold(None, |best: Option<(u64, u64)>, (&k, &c)| match best {
            Some((_, bc)) if bc >= c => best,
            _ => Some((k, c)),
        })
        .map(|(k, _)| k)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodShare {
    pub label: String,
    pub events: u64,
    pub direct: u64,
    pub indirect: u64,
    /// `None` for periods without events.
    pub direct_share: Option<f64>,
}

pub fn direct_share_by_period(rr: &RunResult) -> Vec<PeriodShare> {
    rr.periods
        .iter()
        .map(|p| {
            let events = p.events();
            PeriodShare {
                label: p.label.clone(),
                events,
                direct: p.direct,
                indirect: p.indirect,
                direct_share: (events > 0).then(|| p.direct as f64 / events as f64),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionBucket {
    pub lo: f64,
    pub hi: f64,
    pub n_papers: u64,
    pub mean_fraction: f64,
}

/// Mean of `n_direct / n_cit` over papers grouped by final citation count:
/// one bucket per count up to the scheme's integer threshold, log buckets
/// above it. Uncited papers are skipped.
pub fn direct_fraction_by_final_count(snapshot: &Snapshot, scheme: &BinningScheme) -> Vec<FractionBucket> {
    let mut acc: BTreeMap<usize, (u64, f64)> = BTreeMap::new();
    for (&c, &d) in snapshot.n_cit.iter().zip(&snapshot.n_direct) {
        if c == 0 {
            continue;
        }
        let e = acc.entry(scheme.index_of(c)).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += d as f64 / c as f64;
    }
    acc.into_iter()
        .map(|(i, (n, sum))| {
            let (lo, hi) = scheme.edges(i);
            FractionBucket {
                lo,
                hi,
                n_papers: n,
                mean_fraction: sum / n as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometricMean {
    /// `exp(mean(ln(n + 1))) - 1`, defined for uncited papers.
    #[default]
    Shifted,
    /// `exp(mean(ln n))` over cited papers only.
    ExcludeZeros,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmBucket {
    pub team_lo: f64,
    pub team_hi: f64,
    pub n_papers: u64,
    pub gm: f64,
}

/// Geometric-mean citations by team-size bucket (unit buckets up to the
/// scheme threshold, log buckets above).
pub fn geometric_mean_by_team_size(
    snapshot: &Snapshot,
    teams: &[u32],
    scheme: &BinningScheme,
    variant: GeometricMean,
) -> Vec<GmBucket> {
    let mut acc: BTreeMap<usize, (u64, f64)> = BTreeMap::new();
    for (&c, &t) in snapshot.n_cit.iter().zip(teams) {
        let log = match variant {
            GeometricMean::Shifted => (c as f64 + 1.0).ln(),
            GeometricMean::ExcludeZeros if c == 0 => continue,
            GeometricMean::ExcludeZeros => (c as f64).ln(),
        };
        let e = acc.entry(scheme.index_of(u64::from(t))).or_insert((0, 0.0));
        e.0 += 1;
        e.1 += log;
    }
    acc.into_iter()
        .map(|(i, (n, sum))| {
            let (lo, hi) = scheme.edges(i);
            let mean = (sum / n as f64).exp();
            GmBucket {
                team_lo: lo,
                team_hi: hi,
                n_papers: n,
                gm: match variant {
                    GeometricMean::Shifted => mean - 1.0,
                    GeometricMean::ExcludeZeros => mean,
                },
            }
        })
        .collect()
}

/// Ranks with ties averaged, 1-based.
fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation. `None` when fewer than two points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return None;
    }
    Some(cov / (vx * vy).sqrt())
}
