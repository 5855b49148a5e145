use std::io::Write;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use ch_core::grw::{solve_two_monotone_grw, QueryModel};
use ch_core::harness::{linear_fit, mean_by_ratio, run_suite, BenchRow, Suite, SweepConfig};
use ch_core::intervals::{format_q, q_from_f64};
use ch_core::reductions::{bu_to_ch, ch_solution_to_bu, paint_resolution, RegionGrid};
use ch_core::solvers::{solve_grid, solve_piecewise_constant_lp, solve_single_agent, solve_two_monotone};
use ch_core::{partition_pieces, ChInstance, CutPartition, SolveReport, TuckerSolution, Valuation, Q};
use num_traits::Signed;
use serde::Serialize;
use serde_json::Value;

use crate::instance::{build_pipeline, load, InstanceSpec, Loaded, Overrides, TuckerSpec, Variant, SCHEMA};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Algo {
    Single,
    TwoMonotone,
    Grid,
    Lp,
    TwoMonotoneGrw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum QueryModelArg {
    EvalOnly,
    #[default]
    Grw,
}

impl From<QueryModelArg> for QueryModel {
    fn from(q: QueryModelArg) -> Self {
        match q {
            QueryModelArg::EvalOnly => QueryModel::EvalOnly,
            QueryModelArg::Grw => QueryModel::Grw,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TuckerOutcome {
    pub solution: Option<TuckerSolution>,
    pub verified: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct SolveOutput {
    pub schema: u32,
    pub satisfied: bool,
    pub report: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tucker: Option<TuckerOutcome>,
}

fn default_algo(l: &Loaded) -> Algo {
    match (l.exact.is_some(), l.pipeline.is_some(), l.valuations.len()) {
        (true, _, _) => Algo::Lp,
        (_, true, _) => Algo::Grid,
        (_, _, 1) => Algo::Single,
        (_, _, 2) => Algo::TwoMonotone,
        _ => Algo::Grid,
    }
}

fn need_eps(l: &Loaded) -> Result<f64> {
    l.eps.ok_or_else(|| anyhow!("no ε given; set \"eps\" in the instance or pass --eps"))
}

fn need_agents(l: &Loaded, n: usize, algo: &str) -> Result<()> {
    if l.valuations.len() != n {
        bail!("{algo} needs exactly {n} agent(s), instance has {}", l.valuations.len());
    }
    Ok(())
}

pub fn solve(
    spec: &InstanceSpec,
    algo: Option<Algo>,
    overrides: Overrides,
    query_model: QueryModelArg,
    timings: bool,
) -> Result<SolveOutput> {
    let l = load(spec, overrides)?;
    let algo = algo.unwrap_or_else(|| default_algo(&l));
    let report: SolveReport = match algo {
        Algo::Single => {
            need_agents(&l, 1, "single")?;
            solve_single_agent(&l.valuations[0], need_eps(&l)?, l.lipschitz)?
        }
        Algo::TwoMonotone => {
            need_agents(&l, 2, "two-monotone")?;
            solve_two_monotone(&l.valuations[0], &l.valuations[1], need_eps(&l)?, l.lipschitz)?
        }
        Algo::TwoMonotoneGrw => {
            need_agents(&l, 2, "two-monotone-grw")?;
            let (v1, v2) = (&l.valuations[0], &l.valuations[1]);
            solve_two_monotone_grw(v1, v2, need_eps(&l)?, l.lipschitz, query_model.into(), None)?
        }
        Algo::Grid => {
            let ch = ChInstance::new(l.valuations.iter().map(Valuation::fork).collect(), need_eps(&l)?, Some(l.lipschitz))?;
            solve_grid(Arc::new(ch))?
        }
        Algo::Lp => {
            let exact = l.exact.as_ref().ok_or_else(|| anyhow!("lp needs an explicit piecewise-constant instance"))?;
            solve_piecewise_constant_lp(exact)?
        }
    };
    let tucker = l.pipeline.as_ref().map(|p| {
        let decoded = ch_solution_to_bu(&report.partition, &RegionGrid::new(p.bu.n()))
            .map_err(anyhow::Error::from)
            .and_then(|y| p.construction.decode(&y));
        match decoded {
            Ok(sol) => TuckerOutcome { verified: p.tucker.verify(&sol), solution: Some(sol), error: None },
            Err(e) => TuckerOutcome { solution: None, verified: false, error: Some(e.to_string()) },
        }
    });
    let satisfied = report.satisfied();
    let mut value = serde_json::to_value(&report)?;
    if !timings {
        value.as_object_mut().expect("report is an object").remove("wall_time_secs");
    }
    Ok(SolveOutput { schema: SCHEMA, satisfied, report: value, tucker })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct ReduceOutput {
    pub schema: u32,
    pub variant: Variant,
    /// Agents, equal to the Borsuk-Ulam output dimension.
    pub n: usize,
    pub tucker_n: usize,
    #[serde(rename = "N")]
    pub tucker_grid: usize,
    pub eps: f64,
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_n: Option<f64>,
    pub bu_lipschitz: f64,
    pub ch_lipschitz: f64,
    pub m: usize,
    pub induced_n: usize,
    #[serde(rename = "induced_N")]
    pub induced_grid: usize,
}

/// Source of the Tucker instance for `reduce`: a file, or a seed together
/// with the number of agents `n`.
pub enum ReduceSource {
    Spec(TuckerSpec),
    Seed { seed: u64, n: usize, grid: usize },
}

pub fn reduce(source: ReduceSource, variant: Variant, eps: f64) -> Result<ReduceOutput> {
    let tucker = match source {
        ReduceSource::Spec(s) => s.build()?,
        ReduceSource::Seed { seed, n, grid } => {
            let dim = match variant {
                Variant::General => n,
                Variant::Monotone if n < 2 => bail!("the monotone construction needs n ≥ 2 agents, got {n}"),
                Variant::Monotone => n - 1,
            };
            TuckerSpec::Seeded { seed, n: dim, grid }.build()?
        }
    };
    let (tucker_n, tucker_grid) = (tucker.n(), tucker.grid());
    let p = build_pipeline(variant, tucker, eps)?;
    let (delta, c, c_n) = match &p.construction {
        crate::instance::Construction::General(g) => (g.delta(), None, None),
        crate::instance::Construction::Monotone(m) => (m.delta(), Some(m.c()), Some(m.c_n())),
    };
    let n = p.bu.n();
    let ch = bu_to_ch(Arc::clone(&p.bu), eps)?;
    let m = paint_resolution(n, ch.lipschitz(), eps)?;
    Ok(ReduceOutput {
        schema: SCHEMA,
        variant,
        n,
        tucker_n,
        tucker_grid,
        eps,
        delta,
        c,
        c_n,
        bu_lipschitz: p.bu.lipschitz(),
        ch_lipschitz: ch.lipschitz(),
        m,
        induced_n: n,
        induced_grid: 2 * m + 1,
    })
}

#[derive(Debug, Serialize)]
pub struct AgentCheck {
    pub agent: usize,
    pub plus: f64,
    pub minus: f64,
    pub discrepancy: f64,
    /// Exact `|v(I⁺) − v(I⁻)|` for piecewise-constant agents.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<String>,
    pub within: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyOutput {
    pub schema: u32,
    pub accepted: bool,
    pub eps: f64,
    pub cuts: usize,
    pub max_cuts: usize,
    pub max_discrepancy: f64,
    pub agents: Vec<AgentCheck>,
}

/// Reads a partition from either `{"cuts": …, "leading": …}` or the output
/// of `solve`.
pub fn parse_partition(text: &str) -> Result<CutPartition> {
    let mut v: Value = serde_json::from_str(text).context("malformed partition JSON")?;
    if let Some(p) = v.get_mut("report").and_then(|r| r.get_mut("partition")) {
        v = p.take();
    }
    serde_json::from_value(v).context("invalid partition")
}

pub fn verify(spec: &InstanceSpec, partition: &CutPartition, overrides: Overrides) -> Result<VerifyOutput> {
    let l = load(spec, overrides)?;
    let eps = need_eps(&l)?;
    let n = l.valuations.len();
    let (plus, minus) = partition_pieces(partition, n)?;
    let eps_q = q_from_f64(eps);
    let mut agents = Vec::with_capacity(n);
    for (i, v) in l.valuations.iter().enumerate() {
        let (a, b) = (v.eval_uncounted(&plus)?, v.eval_uncounted(&minus)?);
        let exact: Option<Q> = l.exact.as_ref().map(|e| (e[i].value_exact(&plus) - e[i].value_exact(&minus)).abs());
        let within = match &exact {
            Some(d) => *d <= eps_q,
            None => (a - b).abs() <= eps,
        };
        agents.push(AgentCheck { agent: i, plus: a, minus: b, discrepancy: (a - b).abs(), exact: exact.as_ref().map(format_q), within });
    }
    Ok(VerifyOutput {
        schema: SCHEMA,
        accepted: agents.iter().all(|a| a.within),
        eps,
        cuts: partition.num_cuts(),
        max_cuts: n,
        max_discrepancy: agents.iter().map(|a| a.discrepancy).fold(0.0, f64::max),
        agents,
    })
}

pub fn bench(suite: Suite, cfg: &SweepConfig) -> Result<Vec<BenchRow>> {
    Ok(run_suite(suite, cfg)?)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One line per solver: least-squares fit of mean EVAL count on `log₂(L/ε)`.
pub fn summary(rows: &[BenchRow]) -> Vec<String> {
    let mut algos: Vec<(&str, &str)> = rows.iter().map(|r| (r.suite.as_str(), r.algo.as_str())).collect();
    algos.dedup();
    algos.sort();
    algos.dedup();
    algos
        .into_iter()
        .filter_map(|(suite, algo)| {
            let sel: Vec<BenchRow> = rows.iter().filter(|r| r.suite == suite && r.algo == algo).cloned().collect();
            let fit = linear_fit(&mean_by_ratio(&sel, |r| r.total_queries as f64))?;
            Some(format!(
                "{suite}/{algo}: {} rows, queries ≈ {:.2} + {:.2}·log2(L/eps), R² = {:.4}",
                sel.len(),
                fit.intercept,
                fit.slope,
                fit.r_squared
            ))
        })
        .collect()
}
