//! The citation event loop.
//!
//! Each event draws `u ~ U[0,1)`, selects a paper through the weight index,
//! applies the kernel's citation update and writes the paper's new total
//! weight back into the index. Direct and indirect mechanisms compete from
//! the first event onward.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelSpec, PaperState};
use crate::population::TeamSizeVector;
use crate::rng::{replicate_rng, unit};
use crate::sampler::WeightIndex;

/// Papers in the reference cohort.
pub const DEFAULT_PAPERS: usize = 6430;
/// Citation events over the full observation window.
pub const DEFAULT_EVENTS: u64 = 263_371;
/// Events accumulated by the end of the first full year.
pub const INITIAL_EVENTS: u64 = 38_414;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub label: String,
    pub events: u64,
}

impl Checkpoint {
    pub fn new(label: impl Into<String>, events: u64) -> Self {
        Self {
            label: label.into(),
            events,
        }
    }

    /// `initial` at 38,414 and `final` at the end of the run, dropping
    /// whichever does not fit inside `total_events`.
    pub fn defaults(total_events: u64) -> Vec<Checkpoint> {
        let mut cps = Vec::new();
        if INITIAL_EVENTS < total_events {
            cps.push(Checkpoint::new("initial", INITIAL_EVENTS));
        }
        if total_events > 0 {
            cps.push(Checkpoint::new("final", total_events));
        }
        cps
    }

    /// Yearly checkpoints labelled `first_year..=last_year`, placed by linear
    /// interpolation between `first_events` and `last_events`.
    pub fn interpolated(
        first_year: i32,
        last_year: i32,
        first_events: u64,
        last_events: u64,
    ) -> Result<Vec<Checkpoint>> {
        if last_year <= first_year || last_events <= first_events {
            return Err(Error::param(
                "interpolated checkpoints need increasing years and event counts",
            ));
        }
        let span = f64::from(last_year - first_year);
        Ok((first_year..=last_year)
            .map(|y| {
                let t = f64::from(y - first_year) / span;
                let ev = first_events as f64 + t * (last_events - first_events) as f64;
                Checkpoint::new(y.to_string(), ev.round() as u64)
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub n_papers: usize,
    pub total_events: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub seed: u64,
    pub replicates: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n_papers: DEFAULT_PAPERS,
            total_events: DEFAULT_EVENTS,
            checkpoints: Checkpoint::defaults(DEFAULT_EVENTS),
            seed: 0,
            replicates: 1,
        }
    }
}

impl SimulationConfig {
    pub fn new(n_papers: usize, total_events: u64, seed: u64, replicates: u64) -> Self {
        Self {
            n_papers,
            total_events,
            checkpoints: Checkpoint::defaults(total_events),
            seed,
            replicates,
        }
    }

    pub fn with_checkpoints(mut self, checkpoints: Vec<Checkpoint>) -> Self {
        self.checkpoints = checkpoints;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_papers == 0 {
            return Err(Error::param("n_papers must be >= 1"));
        }
        if self.replicates == 0 {
            return Err(Error::param("replicates must be >= 1"));
        }
        let mut prev = 0;
        for cp in &self.checkpoints {
            if cp.events == 0 || cp.events <= prev {
                return Err(Error::param(format!(
                    "checkpoint {:?} at {} events: checkpoints must be positive and strictly increasing",
                    cp.label, cp.events
                )));
            }
            if cp.events > self.total_events {
                return Err(Error::param(format!(
                    "checkpoint {:?} at {} events exceeds total_events {}",
                    cp.label, cp.events, self.total_events
                )));
            }
            prev = cp.events;
        }
        let mut labels: Vec<&str> = self.checkpoints.iter().map(|c| c.label.as_str()).collect();
        labels.sort_unstable();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::param("checkpoint labels must be unique"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snapshot {
    pub label: String,
    pub events: u64,
    pub n_cit: Vec<u64>,
    pub n_direct: Vec<u64>,
}

/// Citation tallies between two consecutive snapshots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodTally {
    pub label: String,
    pub start: u64,
    pub end: u64,
    pub direct: u64,
    pub indirect: u64,
}

impl PeriodTally {
    pub fn events(&self) -> u64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub replicate: u64,
    pub seed: u64,
    pub n_papers: usize,
    pub total_events: u64,
    pub kernel: KernelSpec,
    pub team_sizes: TeamSizeVector,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub metadata: RunMetadata,
    pub snapshots: Vec<Snapshot>,
    pub periods: Vec<PeriodTally>,
}

impl RunResult {
    pub fn final_snapshot(&self) -> &Snapshot {
        self.snapshots.last().expect("a run always records its final state")
    }

    pub fn snapshot(&self, label: &str) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| s.label == label)
    }

    pub fn labels(&self) -> Vec<&str> {
        self.snapshots.iter().map(|s| s.label.as_str()).collect()
    }

    pub fn total_direct(&self) -> u64 {
        self.final_snapshot().n_direct.iter().sum()
    }
}

struct Recorder {
    snapshots: Vec<Snapshot>,
    periods: Vec<PeriodTally>,
    period_start: u64,
    period_direct: u64,
}

impl Recorder {
    fn record(&mut self, label: &str, events: u64, states: &[PaperState]) {
        self.snapshots.push(Snapshot {
            label: label.to_string(),
            events,
            n_cit: states.iter().map(|s| s.n_cit).collect(),
            n_direct: states.iter().map(|s| s.n_direct).collect(),
        });
        self.periods.push(PeriodTally {
            label: label.to_string(),
            start: self.period_start,
            end: events,
            direct: self.period_direct,
            indirect: events - self.period_start - self.period_direct,
        });
        self.period_start = events;
        self.period_direct = 0;
    }
}

/// Runs one replicate. Deterministic in `(cfg.seed, replicate, teams, kernel)`.
pub fn run(cfg: &SimulationConfig, teams: &TeamSizeVector, spec: &KernelSpec, replicate: u64) -> Result<RunResult> {
    cfg.validate()?;
    if teams.len() != cfg.n_papers {
        return Err(Error::param(format!(
            "cohort has {} team sizes but n_papers is {}",
            teams.len(),
            cfg.n_papers
        )));
    }
    let kernel = Kernel::new(*spec)?;
    let mut rng = replicate_rng(cfg.seed, replicate);

    let mut states: Vec<PaperState> = teams
        .as_slice()
        .iter()
        .map(|&t| kernel.initial_state(t, &mut rng))
        .collect();
    let weights: Vec<f64> = states.iter().map(|s| kernel.total_weight(s)).collect();

    let mut rec = Recorder {
        snapshots: Vec::with_capacity(cfg.checkpoints.len() + 1),
        periods: Vec::with_capacity(cfg.checkpoints.len() + 1),
        period_start: 0,
        period_direct: 0,
    };
    let mut checkpoints = cfg.checkpoints.iter().peekable();

    if cfg.total_events > 0 {
        let mut index = match WeightIndex::build(&weights) {
            Ok(ix) => ix,
            Err(Error::EmptySupport) => return Err(Error::DegenerateKernel { event: 0 }),
            Err(e) => return Err(e),
        };
        for event in 0..cfg.total_events {
            let u = unit(&mut rng);
            let i = index.sample(u).map_err(|e| match e {
                Error::EmptySupport => Error::DegenerateKernel { event },
                other => other,
            })?;
            let (next, _, was_direct) = kernel.on_cited(&states[i], &mut rng);
            states[i] = next;
            index.update(i, kernel.total_weight(&next))?;
            if was_direct {
                rec.period_direct += 1;
            }
            let done = event + 1;
            while let Some(cp) = checkpoints.next_if(|cp| cp.events == done) {
                rec.record(&cp.label, done, &states);
            }
        }
    }

    let end = cfg.total_events;
    if rec.snapshots.last().is_none_or(|s| s.events != end) {
        let label = if cfg.checkpoints.iter().any(|c| c.label == "final") {
            "end"
        } else {
            "final"
        };
        rec.record(label, end, &states);
    }

    Ok(RunResult {
        metadata: RunMetadata {
            replicate,
            seed: cfg.seed,
            n_papers: cfg.n_papers,
            total_events: cfg.total_events,
            kernel: *spec,
            team_sizes: teams.clone(),
        },
        snapshots: rec.snapshots,
        periods: rec.periods,
    })
}

/// Runs `cfg.replicates` independent replicates in parallel. Results are in
/// replicate order.
pub fn run_ensemble(cfg: &SimulationConfig, teams: &TeamSizeVector, spec: &KernelSpec) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            run(cfg, teams, spec, r).map_err(|e| Error::Replicate {
                replicate: r,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Expected number of direct events among the first `n` events when the
/// aggregate direct weight is a constant `a` and cumulative advantage is
/// linear: `Σ_{E=0}^{n-1} a / (a + E)`.
pub fn expected_direct_count(a: f64, n: u64) -> f64 {
    debug_assert!(a > 0.0);
    (0..n).map(|e| a / (a + e as f64)).sum()
}

/// Expected share of direct citations for a paper with static direct weight
/// `a` that ends with `c` citations: `(a/c) Σ_{k=0}^{c-1} 1/(a+k)`.
pub fn expected_direct_fraction(a: f64, c: u64) -> f64 {
    if c == 0 {
        return f64::NAN;
    }
    a / c as f64 * (0..c).map(|k| 1.0 / (a + k as f64)).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelMode;
    use crate::population::{gen_team_sizes, DirectTransform, TeamGenParams};

    fn cohort(n: usize, seed: u64) -> TeamSizeVector {
        gen_team_sizes(&TeamGenParams::default(), n, &mut replicate_rng(seed, 99)).unwrap()
    }

    #[test]
    fn zero_events_leaves_counts_at_zero() {
        let cfg = SimulationConfig::new(3, 0, 1, 1);
        let teams = TeamSizeVector::uniform(3, 2).unwrap();
        let rr = run(&cfg, &teams, &KernelSpec::team(30), 0).unwrap();
        assert_eq!(rr.snapshots.len(), 1);
        assert_eq!(rr.final_snapshot().n_cit, vec![0, 0, 0]);
        assert_eq!(rr.periods[0].events(), 0);
    }

    #[test]
    fn conservation_at_every_checkpoint() {
        let cfg = SimulationConfig::new(200, 5000, 3, 1).with_checkpoints(vec![
            Checkpoint::new("a", 1),
            Checkpoint::new("b", 1000),
            Checkpoint::new("c", 4999),
        ]);
        let teams = cohort(200, 3);
        for mode in KernelMode::ALL {
            let rr = run(&cfg, &teams, &KernelSpec::new(mode), 0).unwrap();
            let labels = rr.labels();
            assert_eq!(labels, vec!["a", "b", "c", "final"]);
            for s in &rr.snapshots {
                assert_eq!(s.n_cit.iter().sum::<u64>(), s.events, "{mode}");
                assert!(s.n_direct.iter().sum::<u64>() <= s.events);
            }
            for w in rr.snapshots.windows(2) {
                assert!(w[0].n_cit.iter().zip(&w[1].n_cit).all(|(a, b)| a <= b));
            }
            let period_direct: u64 = rr.periods.iter().map(|p| p.direct).sum();
            assert_eq!(period_direct, rr.total_direct());
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = SimulationConfig::new(300, 10_000, 42, 1);
        let teams = cohort(300, 1);
        let spec = KernelSpec::team(30);
        assert_eq!(
            run(&cfg, &teams, &spec, 5).unwrap(),
            run(&cfg, &teams, &spec, 5).unwrap()
        );
        assert_ne!(
            run(&cfg, &teams, &spec, 5).unwrap().snapshots,
            run(&cfg, &teams, &spec, 6).unwrap().snapshots
        );
    }

    #[test]
    fn ensemble_matches_single_runs() {
        let cfg = SimulationConfig::new(100, 2000, 9, 2);
        let teams = cohort(100, 2);
        let spec = KernelSpec::price();
        let ens = run_ensemble(&cfg, &teams, &spec).unwrap();
        assert_eq!(ens.len(), 2);
        assert_eq!(ens[0], run(&cfg, &teams, &spec, 0).unwrap());
        assert_eq!(ens[1], run(&cfg, &teams, &spec, 1).unwrap());
        assert_ne!(ens[0].snapshots, ens[1].snapshots);

        let one = SimulationConfig { replicates: 1, ..cfg };
        assert_eq!(run_ensemble(&one, &teams, &spec).unwrap()[0], ens[0]);
    }

    #[test]
    fn degenerate_kernel_is_reported() {
        let cfg = SimulationConfig::new(10, 5, 0, 1);
        let teams = TeamSizeVector::uniform(10, 1).unwrap();
        let err = run(&cfg, &teams, &KernelSpec::pure_ca(0.0), 0).unwrap_err();
        assert!(matches!(err, Error::DegenerateKernel { event: 0 }));

        let err = run_ensemble(&cfg, &teams, &KernelSpec::gen_price(0.0)).unwrap_err();
        assert!(matches!(err, Error::Replicate { replicate: 0, .. }));
        assert!(matches!(err.root(), Error::DegenerateKernel { .. }));
    }

    #[test]
    fn config_validation() {
        let teams = TeamSizeVector::uniform(5, 1).unwrap();
        let bad =
            SimulationConfig::new(5, 10, 0, 1).with_checkpoints(vec![Checkpoint::new("x", 5), Checkpoint::new("y", 5)]);
        assert!(run(&bad, &teams, &KernelSpec::price(), 0).is_err());
        let over = SimulationConfig::new(5, 10, 0, 1).with_checkpoints(vec![Checkpoint::new("x", 11)]);
        assert!(over.validate().is_err());
        let dup =
            SimulationConfig::new(5, 10, 0, 1).with_checkpoints(vec![Checkpoint::new("x", 2), Checkpoint::new("x", 3)]);
        assert!(dup.validate().is_err());
        assert!(run(&SimulationConfig::new(6, 10, 0, 1), &teams, &KernelSpec::price(), 0).is_err());
        assert!(SimulationConfig {
            replicates: 0,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn end_snapshot_label_does_not_collide() {
        let cfg = SimulationConfig::new(5, 10, 0, 1).with_checkpoints(vec![Checkpoint::new("final", 4)]);
        let teams = TeamSizeVector::uniform(5, 1).unwrap();
        let rr = run(&cfg, &teams, &KernelSpec::price(), 0).unwrap();
        assert_eq!(rr.labels(), vec!["final", "end"]);
    }

    #[test]
    fn default_checkpoints() {
        assert_eq!(
            Checkpoint::defaults(DEFAULT_EVENTS),
            vec![Checkpoint::new("initial", 38_414), Checkpoint::new("final", 263_371)]
        );
        assert_eq!(Checkpoint::defaults(1000), vec![Checkpoint::new("final", 1000)]);
        assert!(Checkpoint::defaults(0).is_empty());
    }

    #[test]
    fn yearly_interpolation_hits_pinned_points() {
        let cps = Checkpoint::interpolated(2008, 2017, INITIAL_EVENTS, DEFAULT_EVENTS).unwrap();
        assert_eq!(cps.len(), 10);
        assert_eq!(cps[0], Checkpoint::new("2008", 38_414));
        assert_eq!(cps[9], Checkpoint::new("2017", 263_371));
        assert!(cps.windows(2).all(|w| w[0].events < w[1].events));
    }

    #[test]
    fn expected_direct_count_examples() {
        assert_eq!(expected_direct_count(3.7, 1), 1.0);
        assert_eq!(expected_direct_count(1.0, 2), 1.5);
        assert_eq!(expected_direct_count(1.0, 0), 0.0);
    }

    #[test]
    fn break_even_between_six_and_nine_for_two_authors() {
        assert!(expected_direct_fraction(2.0, 6) > 0.5);
        assert!(expected_direct_fraction(2.0, 9) < 0.5);
        let crossing = (1..100).find(|&c| expected_direct_fraction(2.0, c) < 0.5).unwrap();
        assert_eq!(crossing, 7);
        assert_eq!(expected_direct_fraction(2.0, 1), 1.0);
    }

    #[test]
    fn huge_alpha_is_uniform_in_the_limit() {
        let alpha = 1e9;
        let cfg = SimulationConfig::default();
        let teams = TeamSizeVector::uniform(cfg.n_papers, 1).unwrap();
        let rr = run(&cfg, &teams, &KernelSpec::gen_price(alpha), 0).unwrap();
        let n = cfg.n_papers as f64;
        let total = n * alpha + cfg.total_events as f64;
        let worst = rr
            .final_snapshot()
            .n_cit
            .iter()
            .map(|&c| ((alpha + c as f64) / total * n - 1.0).abs())
            .fold(0.0, f64::max);
        assert!(worst < 3e-4, "{worst}");
    }

    #[test]
    fn team_general_identity_equals_team() {
        let cfg = SimulationConfig::new(150, 3000, 4, 1);
        let teams = cohort(150, 4);
        let a = run(&cfg, &teams, &KernelSpec::team(30), 0).unwrap();
        let b = run(
            &cfg,
            &teams,
            &KernelSpec::team_general(DirectTransform::identity(30)),
            0,
        )
        .unwrap();
        assert_eq!(a.snapshots, b.snapshots);
    }
}
