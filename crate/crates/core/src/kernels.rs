//! Citation kernels.
//!
//! Every kernel splits a paper's selection weight into a direct part, which
//! does not depend on citations received, and an indirect (cumulative
//! advantage) part that does. A paper is selected with probability
//! proportional to the sum; once selected, the citation is attributed to the
//! direct mechanism with probability `direct / (direct + indirect)` taken on
//! the state before the event.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Pareto};
use serde::{Deserialize, Serialize};

use crate::dist::DiscretePowerLaw;
use crate::error::{Error, Result};
use crate::population::{intrinsic_weight, DirectTransform};
use crate::rng::unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// `P ∝ 1`
    Uniform,
    /// `P ∝ ε + n^β`
    PureCa,
    /// `P ∝ 1 + n^β`
    Price,
    /// `P ∝ α + n^β`
    GenPrice,
    /// `P ∝ min(team, cap) + n^β`
    Team,
    /// `P ∝ f(team) + n^β` with the configured transform
    TeamGeneral,
    /// `P ∝ f(team)`, no cumulative advantage
    DirectOnlyTeam,
    /// `P ∝ A + n^β`, `A` drawn once per paper from a power law
    PowerlawAttract,
    /// `P ∝ f(team) + Σ g(I) / ⟨g⟩` over received citations
    Influence,
}

impl KernelMode {
    pub const ALL: [KernelMode; 9] = [
        KernelMode::Uniform,
        KernelMode::PureCa,
        KernelMode::Price,
        KernelMode::GenPrice,
        KernelMode::Team,
        KernelMode::TeamGeneral,
        KernelMode::DirectOnlyTeam,
        KernelMode::PowerlawAttract,
        KernelMode::Influence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelMode::Uniform => "uniform",
            KernelMode::PureCa => "pure_ca",
            KernelMode::Price => "price",
            KernelMode::GenPrice => "gen_price",
            KernelMode::Team => "team",
            KernelMode::TeamGeneral => "team_general",
            KernelMode::DirectOnlyTeam => "direct_only_team",
            KernelMode::PowerlawAttract => "powerlaw_attract",
            KernelMode::Influence => "influence",
        }
    }

    /// Modes whose direct weight comes from the team size.
    pub fn uses_team_sizes(self) -> bool {
        matches!(
            self,
            KernelMode::Team | KernelMode::TeamGeneral | KernelMode::DirectOnlyTeam | KernelMode::Influence
        )
    }

    pub fn has_indirect(self) -> bool {
        !matches!(self, KernelMode::Uniform | KernelMode::DirectOnlyTeam)
    }
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelMode {
    type Err = Error;

    /// Accepts both `gen_price` and `gen-price` spellings.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        KernelMode::ALL.into_iter().find(|m| m.name() == norm).ok_or_else(|| {
            let names: Vec<_> = KernelMode::ALL.iter().map(|m| m.name()).collect();
            Error::param(format!("unknown kernel {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfluenceWeight {
    Identity,
    Power { exponent: f64 },
}

impl InfluenceWeight {
    fn exponent(self) -> f64 {
        match self {
            InfluenceWeight::Identity => 1.0,
            InfluenceWeight::Power { exponent } => exponent,
        }
    }

    pub fn apply(self, influence: f64) -> f64 {
        match self {
            InfluenceWeight::Identity => influence,
            InfluenceWeight::Power { exponent } => influence.powf(exponent),
        }
    }
}

/// Distribution of the influence `I` of an (external) citing item.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InfluenceDistribution {
    DiscretePowerLaw { exponent: f64, max: u64 },
    LogNormal { mu: f64, sigma: f64 },
    Constant { value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InfluenceSpec {
    pub g: InfluenceWeight,
    pub distribution: InfluenceDistribution,
    /// Optional caller-supplied `⟨g(I)⟩`; checked against the analytic value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_g: Option<f64>,
}

impl Default for InfluenceSpec {
    fn default() -> Self {
        Self {
            g: InfluenceWeight::Identity,
            distribution: InfluenceDistribution::DiscretePowerLaw {
                exponent: 2.5,
                max: 10_000,
            },
            mean_g: None,
        }
    }
}

impl InfluenceSpec {
    /// Analytic `⟨g(I)⟩` under the configured distribution.
    pub fn analytic_mean_g(&self) -> Result<f64> {
        let p = self.g.exponent();
        let mean = match self.distribution {
            InfluenceDistribution::DiscretePowerLaw { exponent, max } => {
                DiscretePowerLaw::new(exponent, 1, max)?.moment(p)
            }
            InfluenceDistribution::LogNormal { mu, sigma } => (p * mu + 0.5 * p * p * sigma * sigma).exp(),
            InfluenceDistribution::Constant { value } => value.powf(p),
        };
        Ok(mean)
    }

    pub fn validate(&self) -> Result<()> {
        if let InfluenceWeight::Power { exponent } = self.g {
            if !(exponent.is_finite() && exponent >= 0.0) {
                return Err(Error::param(format!(
                    "influence g exponent must be >= 0, got {exponent}"
                )));
            }
        }
        match self.distribution {
            InfluenceDistribution::DiscretePowerLaw { exponent, max } => {
                if !(exponent.is_finite() && exponent > 1.0) || max == 0 {
                    return Err(Error::param("influence power law needs exponent > 1 and max >= 1"));
                }
            }
            InfluenceDistribution::LogNormal { mu, sigma } => {
                if !(mu.is_finite() && sigma.is_finite() && sigma >= 0.0) {
                    return Err(Error::param("influence log-normal needs finite mu and sigma >= 0"));
                }
            }
            InfluenceDistribution::Constant { value } => {
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::param("influence constant must be > 0"));
                }
            }
        }
        let mean = self.analytic_mean_g()?;
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::param(format!(
                "influence mean g must be finite and > 0, got {mean}"
            )));
        }
        if let Some(given) = self.mean_g {
            if (given - mean).abs() > 1e-6 * mean.max(1.0) || given.is_nan() {
                return Err(Error::param(format!(
                    "mean_g {given} disagrees with the analytic mean {mean} of the influence distribution"
                )));
            }
        }
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        let g = self.g.exponent();
        let ok = g.is_finite()
            && match self.distribution {
                InfluenceDistribution::DiscretePowerLaw { exponent, .. } => exponent.is_finite(),
                InfluenceDistribution::LogNormal { mu, sigma } => mu.is_finite() && sigma.is_finite(),
                InfluenceDistribution::Constant { value } => value.is_finite(),
            }
            && self.mean_g.is_none_or(f64::is_finite);
        if ok {
            Ok(())
        } else {
            Err(Error::param("influence parameters must be finite"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelSpec {
    pub mode: KernelMode,
    pub alpha: f64,
    pub epsilon: f64,
    pub beta: f64,
    pub transform: DirectTransform,
    pub attract_exponent: f64,
    pub influence: InfluenceSpec,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            mode: KernelMode::Team,
            alpha: 1.0,
            epsilon: 0.01,
            beta: 1.0,
            transform: DirectTransform::default(),
            attract_exponent: 2.5,
            influence: InfluenceSpec::default(),
        }
    }
}

impl KernelSpec {
    pub fn new(mode: KernelMode) -> Self {
        Self {
            mode,
            ..Default::default()
        }
    }

    pub fn uniform() -> Self {
        Self::new(KernelMode::Uniform)
    }

    pub fn pure_ca(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::new(KernelMode::PureCa)
        }
    }

    pub fn price() -> Self {
        Self::new(KernelMode::Price)
    }

    pub fn gen_price(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::new(KernelMode::GenPrice)
        }
    }

    pub fn team(cap: u32) -> Self {
        Self {
            transform: DirectTransform::identity(cap),
            ..Self::new(KernelMode::Team)
        }
    }

    pub fn team_general(transform: DirectTransform) -> Self {
        Self {
            transform,
            ..Self::new(KernelMode::TeamGeneral)
        }
    }

    pub fn direct_only_team(cap: u32) -> Self {
        Self {
            transform: DirectTransform::identity(cap),
            ..Self::new(KernelMode::DirectOnlyTeam)
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: KernelSpec = serde_json::from_str(text).map_err(|e| Error::param(format!("kernel config: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    /// The transform applied to team sizes. `team` always uses the identity
    /// with the configured cap.
    pub fn effective_transform(&self) -> DirectTransform {
        match self.mode {
            KernelMode::Team => DirectTransform::identity(self.transform.cap),
            _ => self.transform,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("epsilon", self.epsilon),
            ("beta", self.beta),
            ("attract_exponent", self.attract_exponent),
            ("transform.c", self.transform.c),
            ("transform.gamma", self.transform.gamma),
        ] {
            if !v.is_finite() {
                return Err(Error::param(format!("{name} must be finite, got {v}")));
            }
        }
        self.influence.check_finite()?;
        if self.alpha < 0.0 {
            return Err(Error::param(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.epsilon < 0.0 {
            return Err(Error::param(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.beta <= 0.0 {
            return Err(Error::param(format!("beta must be > 0, got {}", self.beta)));
        }
        if self.mode.uses_team_sizes() {
            self.transform.validate()?;
        }
        if self.mode == KernelMode::PowerlawAttract && self.attract_exponent <= 1.0 {
            return Err(Error::param(format!(
                "attract_exponent must be > 1, got {}",
                self.attract_exponent
            )));
        }
        if self.mode == KernelMode::Influence {
            self.influence.validate()?;
        }
        Ok(())
    }
}

/// Per-paper state carried through a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PaperState {
    pub n_cit: u64,
    pub n_direct: u64,
    /// `Σ g(I)/⟨g⟩` over received citations; equals `n_cit` outside influence mode.
    pub s_weighted: f64,
    /// Static intrinsic direct weight.
    pub d: f64,
}

impl PaperState {
    pub fn with_direct(d: f64) -> Self {
        Self {
            d,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum InfluenceSampler {
    PowerLaw,
    LogNormal(LogNormal<f64>),
    Constant(f64),
}

/// A validated kernel, ready to drive a simulation.
#[derive(Debug, Clone)]
pub struct Kernel {
    spec: KernelSpec,
    mean_g: f64,
    influence: Option<(InfluenceSampler, Option<DiscretePowerLaw>)>,
}

impl Kernel {
    pub fn new(spec: KernelSpec) -> Result<Self> {
        spec.validate()?;
        let (mean_g, influence) = if spec.mode == KernelMode::Influence {
            let mean_g = spec.influence.analytic_mean_g()?;
            let sampler = match spec.influence.distribution {
                InfluenceDistribution::DiscretePowerLaw { exponent, max } => (
                    InfluenceSampler::PowerLaw,
                    Some(DiscretePowerLaw::new(exponent, 1, max)?),
                ),
                InfluenceDistribution::LogNormal { mu, sigma } => (
                    InfluenceSampler::LogNormal(LogNormal::new(mu, sigma).map_err(|e| Error::param(e.to_string()))?),
                    None,
                ),
                InfluenceDistribution::Constant { value } => (InfluenceSampler::Constant(value), None),
            };
            (mean_g, Some(sampler))
        } else {
            (1.0, None)
        };
        Ok(Self {
            spec,
            mean_g,
            influence,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn mode(&self) -> KernelMode {
        self.spec.mode
    }

    /// `⟨g(I)⟩`; 1 outside influence mode.
    pub fn mean_g(&self) -> f64 {
        self.mean_g
    }

    /// Fresh state for a paper with the given team size. Only
    /// `powerlaw_attract` consumes randomness here.
    pub fn initial_state<R: Rng + ?Sized>(&self, team_size: u32, rng: &mut R) -> PaperState {
        let d = match self.spec.mode {
            m if m.uses_team_sizes() => intrinsic_weight(team_size, &self.spec.effective_transform()),
            KernelMode::PowerlawAttract => {
                // density ∝ A^-attract_exponent on A >= 1
                Pareto::new(1.0, self.spec.attract_exponent - 1.0)
                    .expect("validated exponent")
                    .sample(rng)
            }
            _ => 0.0,
        };
        PaperState::with_direct(d)
    }

    pub fn direct_weight(&self, p: &PaperState) -> f64 {
        match self.spec.mode {
            KernelMode::Uniform | KernelMode::Price => 1.0,
            KernelMode::PureCa => self.spec.epsilon,
            KernelMode::GenPrice => self.spec.alpha,
            KernelMode::Team
            | KernelMode::TeamGeneral
            | KernelMode::DirectOnlyTeam
            | KernelMode::PowerlawAttract
            | KernelMode::Influence => p.d,
        }
    }

    pub fn indirect_weight(&self, p: &PaperState) -> f64 {
        match self.spec.mode {
            KernelMode::Uniform | KernelMode::DirectOnlyTeam => 0.0,
            KernelMode::Influence => p.s_weighted,
            _ => self.ca_weight(p.n_cit),
        }
    }

    #[inline]
    fn ca_weight(&self, n_cit: u64) -> f64 {
        let n = n_cit as f64;
        if self.spec.beta == 1.0 {
            n
        } else {
            n.powf(self.spec.beta)
        }
    }

    pub fn total_weight(&self, p: &PaperState) -> f64 {
        self.direct_weight(p) + self.indirect_weight(p)
    }

    fn draw_influence<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.influence {
            Some((InfluenceSampler::PowerLaw, Some(pl))) => pl.sample(rng) as f64,
            Some((InfluenceSampler::LogNormal(ln), _)) => ln.sample(rng),
            Some((InfluenceSampler::Constant(v), _)) => *v,
            _ => 1.0,
        }
    }

    /// Applies one received citation. Returns the new state, the exact change
    /// in total weight and whether the citation was direct.
    pub fn on_cited<R: Rng + ?Sized>(&self, p: &PaperState, rng: &mut R) -> (PaperState, f64, bool) {
        let direct = self.direct_weight(p);
        let indirect = self.indirect_weight(p);
        let was_direct = if indirect <= 0.0 {
            true
        } else if direct <= 0.0 {
            false
        } else {
            unit(rng) * (direct + indirect) < direct
        };

        let mut next = *p;
        next.n_cit += 1;
        if was_direct {
            next.n_direct += 1;
        }
        if self.spec.mode == KernelMode::Influence {
            let g = self.spec.influence.g.apply(self.draw_influence(rng));
            next.s_weighted += g / self.mean_g;
        } else {
            next.s_weighted = next.n_cit as f64;
        }
        // The direct component is static, so the change is all indirect.
        let delta = self.indirect_weight(&next) - indirect;
        (next, delta, was_direct)
    }
}
