//! Experiment configuration read from JSON files or built-in presets.

use anyhow::{bail, Context, Result};
use hamdelay::geometry::PhaseSpace;
use hamdelay::hamiltonians::{lift_structured, Hamiltonian, LiftedHamiltonian, StructuredHamiltonian, TauVariant, Term};
use hamdelay::instances::labelled_factor;
use hamdelay::solvers::{GridSpec, IntegratorConfig, NewtonConfig, PeriodicConfig};
use hamdelay::transforms::TransformChain;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_space")]
    pub space: PhaseSpace,
    pub chain: ChainConfig,
    #[serde(default)]
    pub hamiltonian: HamiltonianConfig,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub grid: GridSpec,
    /// Lower bounds on the chord count to check against.
    #[serde(default)]
    pub bounds: Option<CountBounds>,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub action: ActionSettings,
    #[serde(default)]
    pub roundtrip: RoundTripSettings,
    #[serde(default)]
    pub seed: u64,
}

fn default_space() -> PhaseSpace {
    PhaseSpace::torus(1)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainConfig {
    Standard { standard: usize },
    Steps(TransformChain),
}

impl ChainConfig {
    pub fn build(&self) -> TransformChain {
        match self {
            ChainConfig::Standard { standard } => TransformChain::standard(*standard),
            ChainConfig::Steps(c) => c.clone(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianConfig {
    /// `K ≡ 0` at the chain level.
    #[default]
    Zero,
    /// A structured `K` on `M_n` given factor by factor.
    Structured(StructuredHamiltonian),
    /// Sums of products of generic labelled factors, one-based copies,
    /// e.g. `[[1, 4], [2, 3]]`.
    Products(Vec<Vec<usize>>),
    /// The lift `H^n` of a Hamiltonian on `M` along the chain.
    Lift(StructuredHamiltonian),
    /// A fresh random trig Hamiltonian on `M` per loop (action sweeps only).
    Random,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountBounds {
    pub cuplength_plus_one: usize,
    pub betti_sum: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSettings {
    /// Step `2^{−m}`.
    pub step_exponent: u32,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        IntegratorSettings { step_exponent: 10 }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    pub residual_tol: f64,
    pub sup_tol: f64,
    pub periodic: PeriodicConfig,
    /// Skip the collocation cross-check.
    pub residual_only: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings { residual_tol: 1e-4, sup_tol: 1e-4, periodic: PeriodicConfig::default(), residual_only: false }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ActionSettings {
    pub levels: Vec<usize>,
    pub exponents: Vec<u32>,
    /// Number of random loops, alternating between the torus and the plane.
    pub loops: usize,
    /// Also evaluate the printed τ recursion side by side.
    pub tau_compat: bool,
    pub min_order: f64,
}

impl Default for ActionSettings {
    fn default() -> Self {
        ActionSettings { levels: vec![1, 2, 3], exponents: vec![10, 11, 12, 13], loops: 20, tau_compat: false, min_order: 1.5 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoundTripSettings {
    pub levels: Vec<usize>,
    pub intervals: usize,
}

impl Default for RoundTripSettings {
    fn default() -> Self {
        RoundTripSettings { levels: vec![1, 2, 3], intervals: 1024 }
    }
}

/// The Hamiltonian on `M_n` a configuration resolves to.
pub enum ResolvedK {
    Structured(StructuredHamiltonian),
    Lifted(LiftedHamiltonian),
}

impl ResolvedK {
    pub fn as_dyn(&self) -> &dyn Hamiltonian {
        match self {
            ResolvedK::Structured(k) => k,
            ResolvedK::Lifted(k) => k,
        }
    }

    pub fn structured(&self) -> Option<&StructuredHamiltonian> {
        match self {
            ResolvedK::Structured(k) => Some(k),
            ResolvedK::Lifted(_) => None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).context("reading the experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let level = self.chain.build().level();
        match &self.hamiltonian {
            HamiltonianConfig::Zero | HamiltonianConfig::Random => {}
            HamiltonianConfig::Structured(k) => {
                if k.level != level {
                    bail!("hamiltonian level {} does not match chain level {level}", k.level);
                }
                k.validate(&self.space)?;
            }
            HamiltonianConfig::Products(ps) => {
                for p in ps {
                    if let Some(&c) = p.iter().find(|&&c| c == 0 || c > 1 << level) {
                        bail!("copy label {c} is outside 1..={}", 1 << level);
                    }
                }
            }
            HamiltonianConfig::Lift(h) => {
                if h.level != 0 {
                    bail!("a lifted hamiltonian must live on the base (level 0), found level {}", h.level);
                }
                h.validate(&self.space)?;
            }
        }
        if self.space.dim() != 2 && matches!(self.hamiltonian, HamiltonianConfig::Products(_)) {
            bail!("labelled product factors are defined on a 2-dimensional base");
        }
        Ok(())
    }

    pub fn chain(&self) -> TransformChain {
        self.chain.build()
    }

    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::with_exponent(self.integrator.step_exponent)
    }

    pub fn resolve(&self) -> Result<ResolvedK> {
        let chain = self.chain();
        let level = chain.level();
        Ok(match &self.hamiltonian {
            HamiltonianConfig::Zero => ResolvedK::Structured(StructuredHamiltonian::zero(level)),
            HamiltonianConfig::Structured(k) => ResolvedK::Structured(k.clone()),
            HamiltonianConfig::Products(ps) => {
                let terms = ps.iter().map(|p| Term::new(1.0, p.iter().map(|&c| labelled_factor(c - 1)).collect())).collect();
                ResolvedK::Structured(StructuredHamiltonian::new(level, terms)?)
            }
            HamiltonianConfig::Random => bail!("a random hamiltonian is only meaningful for the action sweep"),
            HamiltonianConfig::Lift(h) => match lift_structured(h, &chain) {
                Ok(k) => ResolvedK::Structured(k),
                Err(_) => ResolvedK::Lifted(LiftedHamiltonian::new(h.clone(), chain, TauVariant::Derived)?),
            },
        })
    }

    /// The base Hamiltonian when the configuration is a lift.
    pub fn base(&self) -> Option<&StructuredHamiltonian> {
        match &self.hamiltonian {
            HamiltonianConfig::Lift(h) => Some(h),
            _ => None,
        }
    }
}
