//! Grid-search calibration of kernel parameters against a binned target.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{run_ensemble, SimulationConfig};
use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::population::TeamSizeVector;
use crate::stats::{citation_histogram, distance, log_binned, pooled_histogram, BinnedDistribution, BinningScheme};

/// Default upper bound on the number of grid points.
pub const DEFAULT_MAX_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    Alpha,
    Beta,
    Gamma,
    C,
    Cap,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::Beta => "beta",
            Param::Gamma => "gamma",
            Param::C => "c",
            Param::Cap => "cap",
        }
    }

    /// Writes `value` into the matching field of `spec`.
    pub fn apply(self, spec: &mut KernelSpec, value: f64) -> Result<()> {
        match self {
            Param::Alpha => spec.alpha = value,
            Param::Beta => spec.beta = value,
            Param::Gamma => spec.transform.set_gamma(value),
            Param::C => spec.transform.set_c(value),
            Param::Cap => {
                if value < 1.0 || value.fract() != 0.0 || value > f64::from(u32::MAX) {
                    return Err(Error::param(format!("cap must be a positive integer, got {value}")));
                }
                spec.transform.cap = value as u32;
            }
        }
        Ok(())
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "alpha" => Ok(Param::Alpha),
            "beta" => Ok(Param::Beta),
            "gamma" => Ok(Param::Gamma),
            "c" => Ok(Param::C),
            "cap" => Ok(Param::Cap),
            other => Err(Error::param(format!(
                "unknown grid parameter {other:?}; expected alpha, beta, gamma, c or cap"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub param: Param,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(param: Param, lo: f64, hi: f64, step: f64) -> Result<Self> {
        let axis = Self { param, lo, hi, step };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::param(format!("grid axis {} must be finite", self.param)));
        }
        if self.lo > self.hi {
            return Err(Error::param(format!(
                "grid axis {}: lo {} > hi {}",
                self.param, self.lo, self.hi
            )));
        }
        if self.step <= 0.0 {
            return Err(Error::param(format!("grid axis {}: step must be > 0", self.param)));
        }
        Ok(())
    }

    /// `lo, lo + step, ...` up to `hi` inclusive (with a small tolerance so
    /// decimal steps reach the end point).
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

impl FromStr for GridAxis {
    type Err = Error;

    /// `name=lo:hi:step`, or `name=value` for a single point.
    fn from_str(s: &str) -> Result<Self> {
        let malformed = || Error::param(format!("malformed grid axis {s:?}; expected name=lo:hi:step"));
        let (name, range) = s.split_once('=').ok_or_else(malformed)?;
        let param: Param = name.parse()?;
        let nums: Vec<f64> = range
            .split(':')
            .map(|p| p.trim().parse::<f64>().map_err(|_| malformed()))
            .collect::<Result<_>>()?;
        match nums[..] {
            [v] => GridAxis::new(param, v, v, 1.0),
            [lo, hi, step] => GridAxis::new(param, lo, hi, step),
            _ => Err(malformed()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub axes: Vec<GridAxis>,
    pub max_points: usize,
}

impl ParamGrid {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        Self {
            axes,
            max_points: DEFAULT_MAX_POINTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::param("parameter grid is empty"));
        }
        for (i, a) in self.axes.iter().enumerate() {
            a.validate()?;
            if self.axes[..i].iter().any(|b| b.param == a.param) {
                return Err(Error::param(format!("grid axis {} given twice", a.param)));
            }
        }
        let size = self
            .axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.values().len()));
        match size {
            Some(n) if n <= self.max_points => Ok(()),
            _ => Err(Error::param(format!("grid exceeds {} points", self.max_points))),
        }
    }

    /// Cartesian product in lexicographic order of the axes as given.
    pub fn points(&self) -> Vec<Vec<f64>> {
        self.axes.iter().fold(vec![Vec::new()], |acc, axis| {
            let values = axis.values();
            acc.into_iter()
                .flat_map(|prefix| {
                    values.iter().map(move |&v| {
                        let mut p = prefix.clone();
                        p.push(v);
                        p
                    })
                })
                .collect()
        })
    }

    pub fn params(&self) -> Vec<Param> {
        self.axes.iter().map(|a| a.param).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub params: Vec<(Param, f64)>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub best_params: Vec<(Param, f64)>,
    pub best_objective: f64,
    pub best_kernel: KernelSpec,
    pub surface: Vec<SurfacePoint>,
}

/// Pools the final histograms of an ensemble run and bins them.
pub fn simulate_distribution(
    spec: &KernelSpec,
    cfg: &SimulationConfig,
    teams: &TeamSizeVector,
    scheme: &BinningScheme,
) -> Result<BinnedDistribution> {
    let runs = run_ensemble(cfg, teams, spec)?;
    let hists: Vec<_> = runs.iter().map(|r| citation_histogram(r.final_snapshot())).collect();
    Ok(log_binned(&pooled_histogram(&hists), scheme))
}

/// Distance in decades between the pooled ensemble distribution and `target`.
pub fn objective(
    spec: &KernelSpec,
    target: &BinnedDistribution,
    cfg: &SimulationConfig,
    teams: &TeamSizeVector,
) -> Result<f64> {
    let model = simulate_distribution(spec, cfg, teams, &target.scheme)?;
    Ok(distance(&model, target)?.decades)
}

/// Evaluates the objective at every grid point with the same seed (common
/// random numbers) and returns the minimiser. Ties go to the
/// lexicographically smallest parameter vector.
pub fn grid_fit(
    grid: &ParamGrid,
    base: &KernelSpec,
    target: &BinnedDistribution,
    cfg: &SimulationConfig,
    teams: &TeamSizeVector,
) -> Result<FitResult> {
    grid.validate()?;
    cfg.validate()?;
    let params = grid.params();
    let points = grid.points();

    let kernels: Vec<KernelSpec> = points
        .iter()
        .map(|pt| {
            let mut k = *base;
            for (p, &v) in params.iter().zip(pt) {
                p.apply(&mut k, v)?;
            }
            k.validate()?;
            Ok(k)
        })
        .collect::<Result<_>>()?;

    let objectives: Vec<f64> = kernels
        .par_iter()
        .map(|k| objective(k, target, cfg, teams))
        .collect::<Result<_>>()?;

    let surface: Vec<SurfacePoint> = points
        .iter()
        .zip(&objectives)
        .map(|(pt, &objective)| SurfacePoint {
            params: params.iter().copied().zip(pt.iter().copied()).collect(),
            objective,
        })
        .collect();

    // Points are generated in lexicographic order, so the first minimum wins ties.
    let best = objectives
        .iter()
        .enumerate()
        .fold(0, |b, (i, &o)| if o < objectives[b] { i } else { b });

    Ok(FitResult {
        best_params: surface[best].params.clone(),
        best_objective: objectives[best],
        best_kernel: kernels[best],
        surface,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::run;
    use crate::kernels::KernelMode;

    #[test]
    fn axis_parsing() {
        let a: GridAxis = "alpha=0.5:3.0:0.1".parse().unwrap();
        assert_eq!(a.param, Param::Alpha);
        assert_eq!(a.values().len(), 26);
        assert!((a.values()[25] - 3.0).abs() < 1e-9);

        let single: GridAxis = "gamma=0.3".parse().unwrap();
        assert_eq!(single.values(), vec![0.3]);

        for bad in [
            "alpha",
            "alpha=1:2",
            "delta=1:2:0.1",
            "alpha=2:1:0.1",
            "alpha=1:2:0",
            "alpha=a:b:c",
        ] {
            assert!(bad.parse::<GridAxis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn grid_points_lexicographic() {
        let g = ParamGrid::new(vec![
            GridAxis::new(Param::Gamma, 0.0, 1.0, 0.5).unwrap(),
            GridAxis::new(Param::C, 1.0, 2.0, 1.0).unwrap(),
        ]);
        assert_eq!(
            g.points(),
            vec![
                vec![0.0, 1.0],
                vec![0.0, 2.0],
                vec![0.5, 1.0],
                vec![0.5, 2.0],
                vec![1.0, 1.0],
                vec![1.0, 2.0]
            ]
        );
        assert!(ParamGrid::new(vec![]).validate().is_err());
        let mut big = g.clone();
        big.max_points = 5;
        assert!(big.validate().is_err());
        let dup = ParamGrid::new(vec![g.axes[0], g.axes[0]]);
        assert!(dup.validate().is_err());
    }

    #[test]
    fn gamma_takes_effect_on_identity_base() {
        let mut k = KernelSpec::new(KernelMode::TeamGeneral);
        Param::Gamma.apply(&mut k, 0.0).unwrap();
        assert_eq!(crate::population::intrinsic_weight(9, &k.transform), 1.0);
    }

    #[test]
    fn cap_must_be_integral() {
        let mut k = KernelSpec::team(30);
        assert!(Param::Cap.apply(&mut k, 12.5).is_err());
        Param::Cap.apply(&mut k, 12.0).unwrap();
        assert_eq!(k.transform.cap, 12);
    }

    fn small_setup() -> (SimulationConfig, TeamSizeVector) {
        (
            SimulationConfig::new(300, 6000, 11, 2),
            TeamSizeVector::uniform(300, 1).unwrap(),
        )
    }

    #[test]
    fn objective_is_deterministic_and_self_match_is_zero() {
        let (cfg, teams) = small_setup();
        let spec = KernelSpec::gen_price(1.5);
        let target = simulate_distribution(&spec, &cfg, &teams, &BinningScheme::default()).unwrap();
        assert_eq!(objective(&spec, &target, &cfg, &teams).unwrap(), 0.0);
        let other = KernelSpec::gen_price(3.0);
        let a = objective(&other, &target, &cfg, &teams).unwrap();
        assert_eq!(a, objective(&other, &target, &cfg, &teams).unwrap());
        assert!(a > 0.0);
    }

    #[test]
    fn single_point_grid_echoes_point() {
        let (cfg, teams) = small_setup();
        let target = simulate_distribution(&KernelSpec::price(), &cfg, &teams, &BinningScheme::default()).unwrap();
        let grid = ParamGrid::new(vec!["alpha=2.0".parse().unwrap()]);
        let fit = grid_fit(&grid, &KernelSpec::gen_price(1.0), &target, &cfg, &teams).unwrap();
        assert_eq!(fit.best_params, vec![(Param::Alpha, 2.0)]);
        assert_eq!(fit.surface.len(), 1);
        assert_eq!(fit.best_kernel.alpha, 2.0);
        assert_eq!(fit.best_kernel.mode, KernelMode::GenPrice);
    }

    #[test]
    fn best_is_surface_minimum_and_ties_go_low() {
        let (cfg, teams) = small_setup();
        // uniform ignores alpha, so every point ties
        let target = simulate_distribution(&KernelSpec::uniform(), &cfg, &teams, &BinningScheme::default()).unwrap();
        let grid = ParamGrid::new(vec!["alpha=1:3:1".parse().unwrap()]);
        let fit = grid_fit(&grid, &KernelSpec::uniform(), &target, &cfg, &teams).unwrap();
        assert_eq!(fit.best_params, vec![(Param::Alpha, 1.0)]);
        assert!(fit.surface.iter().all(|p| fit.best_objective <= p.objective));
    }

    #[test]
    fn undefined_distance_propagates() {
        let (cfg, teams) = small_setup();
        let single = run(&cfg, &teams, &KernelSpec::uniform(), 0).unwrap();
        // a target concentrated far from anything the model produces
        let far = crate::stats::Histogram::from([(1_000_000, single.metadata.n_papers as u64)]);
        let target = log_binned(&far, &BinningScheme::default());
        let err = objective(&KernelSpec::uniform(), &target, &cfg, &teams).unwrap_err();
        assert!(matches!(err, Error::UndefinedDistance));
    }
}
