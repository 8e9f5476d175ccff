use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, DiscreteCDF, Poisson};

use super::Histogram;
use crate::error::{Error, Result};

/// Minimum expected count per pooled cell.
const MIN_EXPECTED: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson chi-square test of a count histogram against `Poisson(lambda)`.
///
/// Adjacent values are pooled left to right until each cell expects at least
/// five observations; the last cell is open-ended. `lambda` is treated as
/// known, so `dof = cells - 1`.
pub fn poisson_chi_square(h: &Histogram, lambda: f64) -> Result<ChiSquareResult> {
    let n: u64 = h.values().sum();
    if n == 0 {
        return Err(Error::EmptyCohort);
    }
    let pois = Poisson::new(lambda).map_err(|e| Error::param(e.to_string()))?;
    let nf = n as f64;

    // (observed, expected) per cell
    let mut cells: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    let mut k = 0u64;
    loop {
        obs += h.get(&k).copied().unwrap_or(0) as f64;
        exp += nf * pois.pmf(k);
        let rest = nf * pois.sf(k);
        if exp >= MIN_EXPECTED && rest >= MIN_EXPECTED {
            cells.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        } else if rest < MIN_EXPECTED {
            let beyond: u64 = h.range(k + 1..).map(|(_, c)| *c).sum();
            let tail = (obs + beyond as f64, exp + rest);
            match cells.last_mut() {
                Some(last) if tail.1 < MIN_EXPECTED => {
                    last.0 += tail.0;
                    last.1 += tail.1;
                }
                _ => cells.push(tail),
            }
            break;
        }
        k += 1;
    }

    if cells.len() < 2 {
        return Err(Error::param("too few cells for a chi-square test"));
    }
    let statistic: f64 = cells.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| Error::param(e.to_string()))?;
    Ok(ChiSquareResult {
        statistic,
        dof,
        p_value: chi.sf(statistic),
    })
}
