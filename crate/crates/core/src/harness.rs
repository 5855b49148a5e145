//! Seeded benchmark suites producing one row per solve.

use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::grw::{solve_two_monotone_grw, QueryModel};
use crate::intervals::format_q;
use crate::reductions::ChInstance;
use crate::solvers::{
    solve_grid_with, solve_single_agent, solve_two_monotone, GridOptions, SolveReport, SolverError,
};
use crate::valuations::{concave_of_additive, oscillating, PiecewiseConstantValuation, Valuation};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Single,
    TwoMonotone,
    Grw,
    Grid,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(Suite::Single),
            "two-monotone" => Ok(Suite::TwoMonotone),
            "grw" => Ok(Suite::Grw),
            "grid" => Ok(Suite::Grid),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite {other:?}; expected single, two-monotone, grw, grid or all")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepConfig {
    /// Instances per family.
    pub instances: usize,
    pub seed: u64,
    /// `L/ε` runs over `2^k` for `k ∈ k_min..=k_max`.
    pub k_min: u32,
    pub k_max: u32,
    /// Agent counts of the grid suite.
    pub grid_agents: Vec<usize>,
    /// `L/ε` of the grid suite.
    pub grid_ratio: f64,
    pub timings: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { instances: 20, seed: 0, k_min: 4, k_max: 20, grid_agents: vec![1, 2, 3], grid_ratio: 4.0, timings: false }
    }
}

/// One solve. Column order is the CSV layout.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchRow {
    pub suite: String,
    pub algo: String,
    pub family: String,
    pub instance: usize,
    pub seed: u64,
    pub n: usize,
    pub lipschitz: f64,
    pub eps: f64,
    pub log2_ratio: f64,
    pub eval_queries: u64,
    /// Per-agent EVAL counts joined by `;`.
    pub eval_per_agent: String,
    pub cut_queries: u64,
    pub label_queries: u64,
    pub total_queries: u64,
    pub max_discrepancy: f64,
    pub satisfied: bool,
    pub flagged: bool,
    /// Exact cut positions joined by `;`.
    pub cuts: String,
    pub leading: String,
    /// Empty unless timings are requested.
    pub wall_time_secs: Option<f64>,
}

impl BenchRow {
    fn from_report(suite: &str, family: &str, instance: usize, seed: u64, n: usize, r: &SolveReport, timings: bool) -> Self {
        Self {
            suite: suite.to_string(),
            algo: r.algo.clone(),
            family: family.to_string(),
            instance,
            seed,
            n,
            lipschitz: r.lipschitz,
            eps: r.eps,
            log2_ratio: if r.eps > 0.0 { (r.lipschitz / r.eps).log2() } else { f64::INFINITY },
            eval_queries: r.total_eval_queries,
            eval_per_agent: r.eval_queries.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
            cut_queries: r.cut_queries,
            label_queries: r.label_queries,
            total_queries: r.total_queries(),
            max_discrepancy: r.max_discrepancy,
            satisfied: r.satisfied(),
            flagged: r.flagged,
            cuts: r.partition.cuts.iter().map(format_q).collect::<Vec<_>>().join(";"),
            leading: r.partition.leading.symbol().to_string(),
            wall_time_secs: timings.then_some(r.wall_time_secs),
        }
    }
}

fn instance_rng(seed: u64, family: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (family << 48) ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Monotone non-additive valuation `φ(μ(A))` over a random density.
pub fn random_monotone<R: Rng>(rng: &mut R) -> Valuation {
    let regions = rng.gen_range(2..=8);
    let a = rng.gen_range(0.0..0.9);
    concave_of_additive(PiecewiseConstantValuation::random(rng, regions), a)
}

/// Non-monotone valuation: a random density plus a small oscillation.
pub fn random_general<R: Rng>(rng: &mut R) -> Valuation {
    let r1 = rng.gen_range(2..=8);
    let r2 = rng.gen_range(1..=4);
    let a = rng.gen_range(0.01..0.08);
    let k = rng.gen_range(1.0..4.0);
    oscillating(PiecewiseConstantValuation::random(rng, r1), PiecewiseConstantValuation::random(rng, r2), a, k)
}

/// `(family, valuation)` for index `i` of the single-agent sweep; monotone
/// and general instances alternate.
pub fn single_instance(seed: u64, i: usize) -> (&'static str, Valuation) {
    let mut rng = instance_rng(seed, 1, i);
    if i % 2 == 0 {
        ("monotone", random_monotone(&mut rng))
    } else {
        ("general", random_general(&mut rng))
    }
}

/// Monotone agent 1 with a general or additive agent 2.
pub fn two_agent_instance(seed: u64, i: usize) -> (&'static str, Valuation, Valuation) {
    let mut rng = instance_rng(seed, 2, i);
    let v1 = random_monotone(&mut rng);
    if i % 2 == 0 {
        ("general", v1, random_general(&mut rng))
    } else {
        let regions = rng.gen_range(2..=8);
        ("additive", v1, PiecewiseConstantValuation::random(&mut rng, regions).to_valuation())
    }
}

/// `n` random piecewise-constant agents.
pub fn grid_instance(seed: u64, n: usize, i: usize) -> Vec<Valuation> {
    let mut rng = instance_rng(seed, 3 + n as u64, i);
    (0..n)
        .map(|_| {
            let regions = rng.gen_range(1..=4);
            PiecewiseConstantValuation::random(&mut rng, regions).to_valuation()
        })
        .collect()
}

fn sweep(cfg: &SweepConfig) -> Vec<(usize, u32)> {
    (0..cfg.instances).flat_map(|i| (cfg.k_min..=cfg.k_max).map(move |k| (i, k))).collect()
}

fn eps_for(l: f64, k: u32) -> f64 {
    l / 2f64.powi(k as i32)
}

fn run_single(cfg: &SweepConfig) -> Result<Vec<BenchRow>, SolverError> {
    // both families per index: 2·instances solves per k
    let jobs: Vec<(usize, u32)> =
        (0..2 * cfg.instances).flat_map(|i| (cfg.k_min..=cfg.k_max).map(move |k| (i, k))).collect();
    jobs.par_iter()
        .map(|&(i, k)| {
            let (family, v) = single_instance(cfg.seed, i);
            let l = v.lipschitz();
            let r = solve_single_agent(&v, eps_for(l, k), l)?;
            Ok(BenchRow::from_report("single", family, i, cfg.seed, 1, &r, cfg.timings))
        })
        .collect()
}

fn run_two(cfg: &SweepConfig, grw: bool) -> Result<Vec<BenchRow>, SolverError> {
    let suite = if grw { "grw" } else { "two-monotone" };
    let rows: Result<Vec<Vec<BenchRow>>, SolverError> = sweep(cfg)
        .par_iter()
        .map(|&(i, k)| {
            let (family, v1, v2) = two_agent_instance(cfg.seed, i);
            let l = v1.lipschitz().max(v2.lipschitz());
            let eps = eps_for(l, k);
            let reports = if grw {
                vec![
                    solve_two_monotone_grw(&v1, &v2, eps, l, QueryModel::Grw, None)?,
                    solve_two_monotone_grw(&v1.fork(), &v2.fork(), eps, l, QueryModel::EvalOnly, None)?,
                ]
            } else {
                vec![solve_two_monotone(&v1, &v2, eps, l)?]
            };
            Ok(reports.iter().map(|r| BenchRow::from_report(suite, family, i, cfg.seed, 2, r, cfg.timings)).collect())
        })
        .collect();
    Ok(rows?.into_iter().flatten().collect())
}

fn run_grid(cfg: &SweepConfig) -> Result<Vec<BenchRow>, SolverError> {
    let jobs: Vec<(usize, usize)> =
        cfg.grid_agents.iter().flat_map(|&n| (0..cfg.instances).map(move |i| (n, i))).collect();
    let opts = GridOptions { guided: false, ..GridOptions::default() };
    jobs.par_iter()
        .map(|&(n, i)| {
            let agents = grid_instance(cfg.seed, n, i);
            let l = agents.iter().map(Valuation::lipschitz).fold(0.0, f64::max);
            let ch = Arc::new(ChInstance::new(agents, l / cfg.grid_ratio, Some(l))?);
            let r = solve_grid_with(ch, &opts)?;
            Ok(BenchRow::from_report("grid", "additive", i, cfg.seed, n, &r, cfg.timings))
        })
        .collect()
}

/// Rows in a fixed order independent of scheduling.
pub fn run_suite(suite: Suite, cfg: &SweepConfig) -> Result<Vec<BenchRow>, SolverError> {
    match suite {
        Suite::Single => run_single(cfg),
        Suite::TwoMonotone => run_two(cfg, false),
        Suite::Grw => run_two(cfg, true),
        Suite::Grid => run_grid(cfg),
        Suite::All => {
            let mut rows = run_single(cfg)?;
            rows.extend(run_two(cfg, false)?);
            rows.extend(run_two(cfg, true)?);
            rows.extend(run_grid(cfg)?);
            Ok(rows)
        }
    }
}

/// Least-squares fit `y ≈ a + b·x` with its coefficient of determination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { intercept, slope, r_squared })
}

/// Mean of `value(row)` per `log2_ratio`, sorted by ratio.
pub fn mean_by_ratio(rows: &[BenchRow], value: impl Fn(&BenchRow) -> f64) -> Vec<(f64, f64)> {
    let mut groups: Vec<(f64, f64, usize)> = Vec::new();
    for r in rows {
        match groups.iter_mut().find(|g| g.0 == r.log2_ratio) {
            Some(g) => {
                g.1 += value(r);
                g.2 += 1;
            }
            None => groups.push((r.log2_ratio, value(r), 1)),
        }
    }
    groups.sort_by(|a, b| a.0.total_cmp(&b.0));
    groups.into_iter().map(|(x, s, c)| (x, s / c as f64)).collect()
}
