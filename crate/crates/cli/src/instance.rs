//! Versioned JSON instance files.
//!
//! ```json
//! {"schema": 1, "kind": "piecewise-constant", "eps": 0.1,
//!  "agents": [{"breakpoints": ["0", "1/3", "1"], "densities": ["3", "0"]}]}
//! {"schema": 1, "kind": "pipeline", "variant": "general", "eps": 0.2,
//!  "tucker": {"seed": 3, "n": 2, "N": 5}}
//! {"schema": 1, "kind": "family", "family": "two-agent", "seed": 0, "index": 4}
//! ```

use std::sync::Arc;

use anyhow::{bail, Context, Result};
use ch_core::borsuk_ulam::{from_tucker_general, from_tucker_monotone, GeneralBuConstruction, MonotoneBuConstruction};
use ch_core::harness::{grid_instance, single_instance, two_agent_instance};
use ch_core::reductions::bu_to_ch;
use ch_core::tucker::{random_instance, ExplicitLabels};
use ch_core::{BuFunction, PiecewiseConstantValuation, TuckerInstance, TuckerSolution, Valuation};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    General,
    Monotone,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum TuckerSpec {
    Explicit(ExplicitLabels),
    Seeded {
        seed: u64,
        n: usize,
        #[serde(rename = "N")]
        grid: usize,
    },
}

impl TuckerSpec {
    pub fn build(&self) -> Result<TuckerInstance> {
        Ok(match self {
            TuckerSpec::Explicit(t) => TuckerInstance::from_explicit(t.clone())?,
            TuckerSpec::Seeded { seed, n, grid } => random_instance(*n, *grid, *seed)?,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Single,
    TwoAgent,
    Grid,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    PiecewiseConstant {
        agents: Vec<PiecewiseConstantValuation>,
        eps: Option<f64>,
        lipschitz: Option<f64>,
    },
    Pipeline {
        variant: Variant,
        tucker: TuckerSpec,
        eps: f64,
    },
    Family {
        family: Family,
        seed: u64,
        index: usize,
        #[serde(default = "one")]
        n: usize,
        eps: Option<f64>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Deserialize)]
struct InstanceFile {
    schema: u32,
    #[serde(flatten)]
    spec: InstanceSpec,
}

pub fn parse_instance(text: &str) -> Result<InstanceSpec> {
    let file: InstanceFile = serde_json::from_str(text).context("malformed instance JSON")?;
    if file.schema != SCHEMA {
        bail!("unsupported instance schema {}; expected {SCHEMA}", file.schema);
    }
    Ok(file.spec)
}

pub fn read_instance(path: &std::path::Path) -> Result<InstanceSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_instance(&text)
}

/// Constructed Borsuk-Ulam function of a pipeline instance.
pub enum Construction {
    General(Arc<GeneralBuConstruction>),
    Monotone(Arc<MonotoneBuConstruction>),
}

impl Construction {
    pub fn decode(&self, y: &[f64]) -> Result<TuckerSolution> {
        Ok(match self {
            Construction::General(c) => c.decode(y)?,
            Construction::Monotone(c) => c.decode(y)?,
        })
    }
}

pub struct Pipeline {
    pub tucker: Arc<TuckerInstance>,
    pub bu: Arc<BuFunction>,
    pub construction: Construction,
}

pub fn build_pipeline(variant: Variant, tucker: TuckerInstance, eps: f64) -> Result<Pipeline> {
    let tucker = Arc::new(tucker);
    let (bu, construction) = match variant {
        Variant::General => {
            let (f, c) = from_tucker_general(Arc::clone(&tucker), eps)?;
            (f, Construction::General(c))
        }
        Variant::Monotone => {
            let (f, c) = from_tucker_monotone(Arc::clone(&tucker), eps)?;
            (f, Construction::Monotone(c))
        }
    };
    Ok(Pipeline { tucker, bu: Arc::new(bu), construction })
}

/// Agents of an instance with the resolved `ε` and shared `L`.
pub struct Loaded {
    pub valuations: Vec<Valuation>,
    pub exact: Option<Vec<PiecewiseConstantValuation>>,
    pub eps: Option<f64>,
    pub lipschitz: f64,
    pub pipeline: Option<Pipeline>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub eps: Option<f64>,
    pub lipschitz: Option<f64>,
    pub variant: Option<Variant>,
}

fn max_lipschitz(vs: &[Valuation]) -> f64 {
    vs.iter().map(Valuation::lipschitz).fold(0.0, f64::max)
}

pub fn load(spec: &InstanceSpec, o: Overrides) -> Result<Loaded> {
    let mut loaded = match spec {
        InstanceSpec::PiecewiseConstant { agents, eps, lipschitz } => {
            if agents.is_empty() {
                bail!("instance has no agents");
            }
            let valuations: Vec<Valuation> = agents.iter().map(PiecewiseConstantValuation::to_valuation).collect();
            let l = lipschitz.unwrap_or_else(|| max_lipschitz(&valuations));
            Loaded { valuations, exact: Some(agents.clone()), eps: *eps, lipschitz: l, pipeline: None }
        }
        InstanceSpec::Pipeline { variant, tucker, eps } => {
            let eps = o.eps.unwrap_or(*eps);
            let p = build_pipeline(o.variant.unwrap_or(*variant), tucker.build()?, eps)?;
            let ch = bu_to_ch(Arc::clone(&p.bu), eps)?;
            let l = ch.lipschitz();
            Loaded { valuations: ch.valuations().iter().map(Valuation::fork).collect(), exact: None, eps: Some(eps), lipschitz: l, pipeline: Some(p) }
        }
        InstanceSpec::Family { family, seed, index, n, eps } => {
            let valuations = match family {
                Family::Single => vec![single_instance(*seed, *index).1],
                Family::TwoAgent => {
                    let (_, a, b) = two_agent_instance(*seed, *index);
                    vec![a, b]
                }
                Family::Grid => grid_instance(*seed, *n, *index),
            };
            let l = max_lipschitz(&valuations);
            Loaded { valuations, exact: None, eps: *eps, lipschitz: l, pipeline: None }
        }
    };
    if let Some(e) = o.eps {
        loaded.eps = Some(e);
    }
    if let Some(l) = o.lipschitz {
        loaded.lipschitz = l;
    }
    Ok(loaded)
}
