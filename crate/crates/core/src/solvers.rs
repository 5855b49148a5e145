//! Consensus-Halving solvers with exact query accounting.

use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::intervals::{q_from_f64, CutPartition, IntervalError, IntervalSet, Sign};
use crate::lp::solve_piecewise_constant;
use crate::reductions::{
    ch_to_tucker, paint_decode, paint_decode_f64, tucker_solution_to_ch, ChInstance, PaintCode, ReductionError,
};
use crate::tucker::TuckerError;
use crate::valuations::{PiecewiseConstantValuation, Valuation, ValuationError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("Lipschitz parameter must be positive, got {0}")]
    InvalidLipschitz(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("oracle inconsistent with its declared parameters: {0}")]
    OracleInconsistent(String),
    #[error("no exact solution found among the region assignments")]
    NoExactSolution,
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Tucker(#[from] TuckerError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
}

/// Solution and query accounting of one solve.
#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub algo: String,
    pub partition: CutPartition,
    pub eps: f64,
    pub lipschitz: f64,
    /// Per-agent EVAL queries issued by the solver.
    pub eval_queries: Vec<u64>,
    pub total_eval_queries: u64,
    pub cut_queries: u64,
    pub label_queries: u64,
    /// EVAL queries spent on seeding the grid search (included in the totals).
    pub seed_eval_queries: u64,
    /// Signed `v_i(I⁺) − v_i(I⁻)`, recomputed with uncounted queries.
    pub discrepancies: Vec<f64>,
    pub max_discrepancy: f64,
    pub wall_time_secs: f64,
    /// Set when a degenerate fallback path was taken.
    pub flagged: bool,
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn satisfied(&self) -> bool {
        self.max_discrepancy <= self.eps + crate::valuations::EXACT_TOL
    }

    pub fn total_queries(&self) -> u64 {
        self.total_eval_queries + self.cut_queries
    }
}

pub(crate) struct ReportBuilder<'a> {
    algo: &'static str,
    agents: Vec<&'a Valuation>,
    before: Vec<u64>,
    start: Instant,
    eps: f64,
    lipschitz: f64,
}

impl<'a> ReportBuilder<'a> {
    pub(crate) fn new(algo: &'static str, agents: Vec<&'a Valuation>, eps: f64, lipschitz: f64) -> Self {
        let before = agents.iter().map(|v| v.eval_count()).collect();
        Self { algo, agents, before, start: Instant::now(), eps, lipschitz }
    }

    pub(crate) fn finish(&self, partition: CutPartition) -> Result<SolveReport, SolverError> {
        let wall = self.start.elapsed().as_secs_f64();
        let eval_queries: Vec<u64> = self.agents.iter().zip(&self.before).map(|(v, b)| v.eval_count() - b).collect();
        let discrepancies =
            self.agents.iter().map(|v| v.discrepancy_uncounted(&partition)).collect::<Result<Vec<f64>, ValuationError>>()?;
        let max_discrepancy = discrepancies.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        Ok(SolveReport {
            algo: self.algo.to_string(),
            partition,
            eps: self.eps,
            lipschitz: self.lipschitz,
            total_eval_queries: eval_queries.iter().sum(),
            eval_queries,
            cut_queries: 0,
            label_queries: 0,
            seed_eval_queries: 0,
            discrepancies,
            max_discrepancy,
            wall_time_secs: wall,
            flagged: false,
            notes: Vec::new(),
        })
    }
}

pub(crate) fn check_params(eps: f64, lipschitz: f64) -> Result<(), SolverError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(SolverError::InvalidEpsilon(eps));
    }
    if !(lipschitz > 0.0) || !lipschitz.is_finite() {
        return Err(SolverError::InvalidLipschitz(lipschitz));
    }
    Ok(())
}

fn ceil_log2(x: f64) -> u32 {
    if x <= 1.0 {
        0
    } else {
        x.log2().ceil() as u32
    }
}

/// `2⌈log₂(L/ε)⌉ + 2`.
pub fn single_agent_budget(eps: f64, lipschitz: f64) -> u64 {
    2 * ceil_log2(lipschitz / eps) as u64 + 2
}

/// `4(⌈log₂(2L/ε)⌉ + 2)²`.
pub fn two_monotone_budget(eps: f64, lipschitz: f64) -> u64 {
    let k = ceil_log2(2.0 * lipschitz / eps) as u64;
    4 * (k + 2) * (k + 2)
}

fn interval(a: f64, b: f64) -> IntervalSet {
    IntervalSet::interval(q_from_f64(a), q_from_f64(b)).expect("ordered points in [0, 1]")
}

/// Cut `x ∈ [0,1]` with `|v([0,x]) − v([x,1])| ≤ ε` by bisection on the
/// label of the cut.
pub(crate) fn single_cut(v: &Valuation, eps: f64, lipschitz: f64) -> Result<f64, SolverError> {
    let label = |left: f64, right: f64| {
        if left > right + eps {
            1
        } else if right > left + eps {
            -1
        } else {
            0
        }
    };
    let empty = v.eval(&IntervalSet::empty())?;
    let full = v.eval(&IntervalSet::full())?;
    let at_zero = label(empty, full);
    if at_zero == 0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let cap = ceil_log2(lipschitz / eps) + 64;
    for _ in 0..cap {
        let mid = (lo + hi) / 2.0;
        let l = label(v.eval(&interval(0.0, mid))?, v.eval(&interval(mid, 1.0))?);
        if l == 0 {
            return Ok(mid);
        }
        if l == at_zero {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(SolverError::OracleInconsistent(format!("no label-0 cut after {cap} bisection steps")))
}

pub fn solve_single_agent(v: &Valuation, eps: f64, lipschitz: f64) -> Result<SolveReport, SolverError> {
    check_params(eps, lipschitz)?;
    let b = ReportBuilder::new("single", vec![v], eps, lipschitz);
    let x = single_cut(v, eps, lipschitz)?;
    b.finish(CutPartition::new(vec![q_from_f64(x)], Sign::Plus)?)
}

/// Two-cut partition with positive piece `[0,x] ∪ [y,1]`.
pub(crate) fn pair(x: f64, y: f64) -> CutPartition {
    CutPartition::new(vec![q_from_f64(x), q_from_f64(y)], Sign::Plus).expect("ordered cuts in [0, 1]")
}

pub(crate) struct Found {
    pub value: f64,
    pub bracketed: bool,
}

/// Indifference searches for the monotone agent in Algorithm 1.
pub(crate) trait AgentOneSearch {
    fn initial_cut(&mut self) -> Result<f64, SolverError>;
    /// `y ∈ [x,1]` with agent 1 indifferent under `(x, y)`.
    fn find_y(&mut self, x: f64) -> Result<Found, SolverError>;
    /// `x ∈ [lo,hi]` with agent 1 indifferent under `(x, y)`.
    fn find_x(&mut self, lo: f64, hi: f64, y: f64) -> Result<Found, SolverError>;
}

pub(crate) struct Alg1Outcome {
    pub cuts: (f64, f64),
    pub flagged: bool,
    pub iterations: (usize, usize),
}

/// Algorithm 1. Agent 2's discrepancies are sign-flipped so that it
/// prefers "+" at `(0, cut¹)`; both tracked pairs stay on agent 1's
/// indifference curve.
pub(crate) fn algorithm_one(v2: &Valuation, eps: f64, lipschitz: f64, search: &mut dyn AgentOneSearch) -> Result<Alg1Outcome, SolverError> {
    let c = search.initial_cut()?;
    let d0 = v2.discrepancy(&pair(c, 1.0))?;
    let mut out = Alg1Outcome { cuts: (c, 1.0), flagged: false, iterations: (0, 0) };
    if d0.abs() <= eps {
        return Ok(out);
    }
    let s = if d0 < 0.0 { 1.0 } else { -1.0 };
    let (mut l, mut yl, mut r, mut yr) = (0.0, c, c, 1.0);
    let thresh = eps / (2.0 * lipschitz);
    let cap = ceil_log2(2.0 * lipschitz / eps) as usize + 64;

    while r - l > thresh {
        out.iterations.0 += 1;
        if out.iterations.0 > cap {
            return Err(SolverError::OracleInconsistent("first phase did not shrink".into()));
        }
        let mid = (l + r) / 2.0;
        let y = search.find_y(mid)?;
        out.flagged |= !y.bracketed;
        let d = s * v2.discrepancy(&pair(mid, y.value))?;
        if d.abs() <= eps {
            out.cuts = (mid, y.value);
            return Ok(out);
        }
        if d > 0.0 {
            l = mid;
            yl = y.value;
        } else {
            r = mid;
            yr = y.value;
        }
    }

    loop {
        out.iterations.1 += 1;
        if out.iterations.1 > cap {
            return Err(SolverError::OracleInconsistent("second phase did not terminate".into()));
        }
        let ybar = (yl + yr) / 2.0;
        let hi = r.min(ybar);
        let lo = l.min(hi);
        let x = search.find_x(lo, hi, ybar)?;
        out.flagged |= !x.bracketed;
        let d = s * v2.discrepancy(&pair(x.value, ybar))?;
        if d.abs() <= eps {
            out.cuts = (x.value, ybar);
            return Ok(out);
        }
        if d > 0.0 {
            l = x.value;
            yl = ybar;
        } else {
            r = x.value;
            yr = ybar;
        }
    }
}

/// Bisection-based indifference searches with EVAL queries only.
struct EvalSearch<'a> {
    v1: &'a Valuation,
    eps: f64,
    lipschitz: f64,
    full_minus_empty: Option<f64>,
}

impl EvalSearch<'_> {
    fn disc(&self, x: f64, y: f64) -> Result<f64, SolverError> {
        Ok(self.v1.discrepancy(&pair(x, y))?)
    }

    fn cap(&self) -> u32 {
        ceil_log2(2.0 * self.lipschitz / self.eps) + 64
    }

    /// Root of a monotone `f` on `[lo,hi]` given endpoint values;
    /// `rising` when `f` is non-decreasing.
    fn bisect(&self, mut lo: f64, mut hi: f64, flo: f64, fhi: f64, rising: bool, f: impl Fn(f64) -> Result<f64, SolverError>) -> Result<Found, SolverError> {
        let eps = self.eps;
        if flo.abs() <= eps {
            return Ok(Found { value: lo, bracketed: true });
        }
        if fhi.abs() <= eps {
            return Ok(Found { value: hi, bracketed: true });
        }
        let brackets = if rising { flo < 0.0 && fhi > 0.0 } else { flo > 0.0 && fhi < 0.0 };
        if !brackets {
            let value = if flo.abs() <= fhi.abs() { lo } else { hi };
            return Ok(Found { value, bracketed: false });
        }
        let (mut best, mut best_abs) = if flo.abs() <= fhi.abs() { (lo, flo.abs()) } else { (hi, fhi.abs()) };
        for _ in 0..self.cap() {
            let mid = (lo + hi) / 2.0;
            let fm = f(mid)?;
            if fm.abs() <= eps {
                return Ok(Found { value: mid, bracketed: true });
            }
            if fm.abs() < best_abs {
                best = mid;
                best_abs = fm.abs();
            }
            if (fm < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Found { value: best, bracketed: false })
    }
}

impl AgentOneSearch for EvalSearch<'_> {
    fn initial_cut(&mut self) -> Result<f64, SolverError> {
        single_cut(self.v1, self.eps, self.lipschitz)
    }

    fn find_y(&mut self, x: f64) -> Result<Found, SolverError> {
        let at_x = match self.full_minus_empty {
            Some(d) => d,
            None => {
                let d = self.disc(x, x)?;
                self.full_minus_empty = Some(d);
                d
            }
        };
        if at_x.abs() <= self.eps {
            return Ok(Found { value: x, bracketed: true });
        }
        let at_one = self.disc(x, 1.0)?;
        self.bisect(x, 1.0, at_x, at_one, false, |y| self.disc(x, y))
    }

    fn find_x(&mut self, lo: f64, hi: f64, y: f64) -> Result<Found, SolverError> {
        let flo = self.disc(lo, y)?;
        if flo.abs() <= self.eps {
            return Ok(Found { value: lo, bracketed: true });
        }
        let fhi = self.disc(hi, y)?;
        self.bisect(lo, hi, flo, fhi, true, |x| self.disc(x, y))
    }
}

pub fn solve_two_monotone(v1: &Valuation, v2: &Valuation, eps: f64, lipschitz: f64) -> Result<SolveReport, SolverError> {
    check_params(eps, lipschitz)?;
    if !v1.is_monotone() {
        return Err(SolverError::Precondition("agent 1 must be monotone".into()));
    }
    let b = ReportBuilder::new("two-monotone", vec![v1, v2], eps, lipschitz);
    let mut search = EvalSearch { v1, eps, lipschitz, full_minus_empty: None };
    let out = algorithm_one(v2, eps, lipschitz, &mut search)?;
    let mut report = b.finish(pair(out.cuts.0, out.cuts.1))?;
    report.flagged = out.flagged;
    report.notes.push(format!("iterations: {} + {}", out.iterations.0, out.iterations.1));
    if out.flagged {
        report.notes.push("an inner search did not bracket; minimal-discrepancy endpoint used".into());
    }
    Ok(report)
}

/// Options for [`solve_grid_with`].
#[derive(Clone, Debug)]
pub struct GridOptions {
    /// Seed the Tucker search with approximate zeros of the discrepancy map.
    pub guided: bool,
    /// Box radii scanned around each seed before the exhaustive scan.
    pub radii: Vec<usize>,
    /// Grids with at most this many points are always scanned exhaustively.
    pub brute_limit: usize,
}

impl Default for GridOptions {
    fn default() -> Self {
        Self { guided: true, radii: vec![1, 2, 4, 8, 16, 32, 64], brute_limit: 1 << 16 }
    }
}

pub fn solve_grid(ch: Arc<ChInstance>) -> Result<SolveReport, SolverError> {
    solve_grid_with(ch, &GridOptions::default())
}

/// `ch_to_tucker`, a Tucker search, then `tucker_solution_to_ch`.
pub fn solve_grid_with(ch: Arc<ChInstance>, opts: &GridOptions) -> Result<SolveReport, SolverError> {
    let b = ReportBuilder::new("grid", ch.valuations().iter().collect(), ch.eps(), ch.lipschitz());
    let induced = ch_to_tucker(Arc::clone(&ch))?;
    let inst = induced.instance();
    let n = ch.n();
    let points = (induced.grid() as f64).powi(n as i32);
    let before_seed = ch.total_evals();
    let mut direct = None;
    let sol = if !opts.guided || points <= opts.brute_limit as f64 {
        Some(inst.solve_brute()?)
    } else {
        let min_half = 1.0 / induced.m() as f64;
        let seeds: Vec<Vec<usize>> =
            guided_seeds(&ch, min_half)?.iter().map(|x| induced.grid_point(x)).collect();
        for pt in seeds.iter().take(4) {
            let p = paint_decode(&PaintCode::from_grid_point(pt, induced.m())?);
            if sup(&ch.discrepancies(&p)?) <= ch.eps() {
                direct = Some(p);
                break;
            }
        }
        match direct {
            Some(_) => None,
            None => Some(inst.solve_brute_seeded(&seeds, &opts.radii)?),
        }
    };
    let seed_evals = ch.total_evals() - before_seed - 2 * n as u64 * inst.query_count();
    let accepted_seed = direct.is_some();
    let partition = match (sol, direct) {
        (Some(sol), _) => tucker_solution_to_ch(&induced, &sol)?,
        (None, Some(p)) => p,
        (None, None) => unreachable!("either a Tucker solution or a direct seed"),
    };
    let mut report = b.finish(partition)?;
    report.label_queries = inst.query_count();
    report.seed_eval_queries = seed_evals;
    report.notes.push(format!("m = {}, N = {}", induced.m(), induced.grid()));
    if accepted_seed {
        report.notes.push("seed grid point accepted directly".into());
    }
    Ok(report)
}

fn residual(ch: &ChInstance, x: &[f64]) -> Result<Vec<f64>, SolverError> {
    Ok(ch.discrepancies(&paint_decode_f64(x))?)
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Root of the last agent's discrepancy in the last paint coordinate.
fn last_root(ch: &ChInstance, xp: &[f64]) -> Result<f64, SolverError> {
    let agent = ch.agent(ch.n() - 1);
    let mut x: Vec<f64> = xp.to_vec();
    x.push(1.0);
    let top = agent.discrepancy(&paint_decode_f64(&x))?;
    if top == 0.0 {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    for _ in 0..48 {
        let mid = (lo + hi) / 2.0;
        *x.last_mut().expect("nonempty") = mid;
        let d = agent.discrepancy(&paint_decode_f64(&x))?;
        if (d > 0.0) == (top > 0.0) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo + hi) / 2.0)
}

/// Solves `A y = b` by Gaussian elimination with partial pivoting.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut y = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / a[i][i];
    }
    Some(y)
}

fn permutations(d: usize) -> Vec<Vec<usize>> {
    if d == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(d - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, d - 1);
            out.push(q);
        }
    }
    out
}

/// Levenberg-Marquardt on the discrepancy map with forward differences.
fn refine(ch: &ChInstance, x0: Vec<f64>, target: f64) -> Result<(Vec<f64>, f64), SolverError> {
    let n = x0.len();
    let mut x = x0;
    let mut r = residual(ch, &x)?;
    let mut lambda = 1e-3;
    let norm2 = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
    for _ in 0..40 {
        if sup(&r) <= target {
            break;
        }
        let h = 1e-7;
        let mut jac = vec![vec![0.0; n]; n];
        for j in 0..n {
            let mut xs = x.clone();
            let step = if xs[j] + h > 1.0 { -h } else { h };
            xs[j] += step;
            let rs = residual(ch, &xs)?;
            for i in 0..n {
                jac[i][j] = (rs[i] - r[i]) / step;
            }
        }
        let mut improved = false;
        for _ in 0..8 {
            let mut a = vec![vec![0.0; n]; n];
            let mut g = vec![0.0; n];
            for p in 0..n {
                for q in 0..n {
                    a[p][q] = (0..n).map(|i| jac[i][p] * jac[i][q]).sum();
                }
                g[p] = -(0..n).map(|i| jac[i][p] * r[i]).sum::<f64>();
            }
            for p in 0..n {
                a[p][p] += lambda * (a[p][p] + 1e-12);
            }
            let Some(delta) = solve_dense(a, g) else { break };
            let xn: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| (a + d).clamp(-1.0, 1.0)).collect();
            let rn = residual(ch, &xn)?;
            if norm2(&rn) < norm2(&r) {
                x = xn;
                r = rn;
                lambda = (lambda / 4.0).max(1e-12);
                improved = true;
                break;
            }
            lambda *= 8.0;
        }
        if !improved {
            break;
        }
    }
    let s = sup(&r);
    Ok((x, s))
}

/// Candidate zeros of the reduced map inside the box `center ± half`,
/// sampled on a Kuhn grid with `k` cells per side, sorted by spread.
fn box_candidates(
    ch: &ChInstance,
    center: &[f64],
    half: f64,
    k: usize,
) -> Result<Vec<(f64, Vec<f64>)>, SolverError> {
    let d = center.len();
    let n = d + 1;
    let side = k + 1;
    let total = side.pow(d as u32);
    let lo: Vec<f64> = center.iter().map(|c| (c - half).max(-1.0)).collect();
    let hi: Vec<f64> = center.iter().map(|c| (c + half).min(1.0)).collect();
    let mut full_points: Vec<Vec<f64>> = Vec::with_capacity(total);
    let mut reduced: Vec<Vec<f64>> = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut xp = vec![0.0; d];
        for c in (0..d).rev() {
            xp[c] = lo[c] + (hi[c] - lo[c]) * (rem % side) as f64 / k as f64;
            rem /= side;
        }
        let t = last_root(ch, &xp)?;
        let mut x = xp;
        x.push(t);
        let r = residual(ch, &x)?;
        reduced.push(r[..d].to_vec());
        full_points.push(x);
    }

    let flat_of = |v: &[usize]| v.iter().fold(0usize, |acc, &c| acc * side + c);
    let mut candidates: Vec<(f64, Vec<f64>)> = Vec::new();
    let perms = permutations(d);
    for cell in 0..k.pow(d as u32) {
        let mut rem = cell;
        let mut base = vec![0usize; d];
        for c in (0..d).rev() {
            base[c] = rem % k;
            rem /= k;
        }
        for perm in &perms {
            let mut verts = vec![flat_of(&base)];
            let mut v = base.clone();
            for &c in perm {
                v[c] += 1;
                verts.push(flat_of(&v));
            }
            // Σ α_i R(v_i) = 0, Σ α_i = 1
            let mut a = vec![vec![0.0; d + 1]; d + 1];
            let mut rhs = vec![0.0; d + 1];
            for (col, &vi) in verts.iter().enumerate() {
                for row in 0..d {
                    a[row][col] = reduced[vi][row];
                }
                a[d][col] = 1.0;
            }
            rhs[d] = 1.0;
            let Some(alpha) = solve_dense(a, rhs) else { continue };
            if alpha.iter().any(|&w| w < -1e-9) {
                continue;
            }
            let mut x = vec![0.0; n];
            for (w, &vi) in alpha.iter().zip(&verts) {
                for (xc, pc) in x.iter_mut().zip(&full_points[vi]) {
                    *xc += w * pc;
                }
            }
            let spread = verts.iter().map(|&vi| sup(&reduced[vi])).fold(0.0, f64::max);
            candidates.push((spread, x));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    if candidates.is_empty() {
        let best = (0..total)
            .min_by(|&a, &b| sup(&reduced[a]).total_cmp(&sup(&reduced[b])))
            .expect("nonempty grid");
        candidates.push((f64::INFINITY, full_points[best].clone()));
    }
    Ok(candidates)
}

/// Approximate zeros of the discrepancy map over paint codes, best first.
/// The last coordinate is eliminated by bisection on the last agent. The
/// remaining map is interpolated on a Kuhn grid over a box that shrinks
/// around the best simplex zero; every candidate is also polished by
/// Levenberg-Marquardt.
pub(crate) fn guided_seeds(ch: &ChInstance, min_half: f64) -> Result<Vec<Vec<f64>>, SolverError> {
    let n = ch.n();
    let target = ch.eps() * 1e-6;
    if n == 1 {
        return Ok(vec![vec![last_root(ch, &[])?]]);
    }
    let d = n - 1;
    let k: usize = match d {
        1 => 32,
        2 => 12,
        3 => 6,
        _ => 4,
    };
    let shrink = (3.0 / k as f64).min(0.5);
    let mut seeds: Vec<(f64, Vec<f64>)> = Vec::new();
    // depth-first over (center, half-width), best candidate explored first
    let mut stack: Vec<(Vec<f64>, f64)> = vec![(vec![0.0; d], 1.0)];
    let mut boxes = 0usize;
    while let Some((center, half)) = stack.pop() {
        boxes += 1;
        if boxes > 96 {
            break;
        }
        let candidates = box_candidates(ch, &center, half, k)?;
        let (x, res) = refine(ch, candidates[0].1.clone(), target)?;
        let done = res <= target;
        seeds.push((res, x));
        if done {
            break;
        }
        let next = half * shrink;
        if next < min_half {
            let mut close = false;
            for (_, x) in candidates.into_iter().take(2) {
                let r = sup(&residual(ch, &x)?);
                close |= r <= ch.eps() / 2.0;
                seeds.push((r, x));
            }
            if close {
                break;
            }
            continue;
        }
        for (_, x) in candidates.into_iter().take(2).rev() {
            stack.push((x[..d].to_vec(), next));
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(seeds.into_iter().map(|s| s.1).collect())
}

/// Exact solver for explicit piecewise-constant agents; `ε = 0`.
pub fn solve_piecewise_constant_lp(agents: &[PiecewiseConstantValuation]) -> Result<SolveReport, SolverError> {
    if agents.is_empty() {
        return Err(SolverError::Precondition("at least one agent".into()));
    }
    let start = Instant::now();
    let sol = solve_piecewise_constant(agents).ok_or(SolverError::NoExactSolution)?;
    let (plus, minus) = sol.partition.pieces();
    let exact: Vec<_> = agents.iter().map(|a| a.value_exact(&plus) - a.value_exact(&minus)).collect();
    if exact.iter().any(|d| *d != num_traits::Zero::zero()) {
        return Err(SolverError::NoExactSolution);
    }
    let lipschitz = agents.iter().map(|a| crate::intervals::q_to_f64(&a.max_density())).fold(0.0, f64::max);
    Ok(SolveReport {
        algo: "lp".into(),
        partition: sol.partition,
        eps: 0.0,
        lipschitz,
        eval_queries: vec![0; agents.len()],
        total_eval_queries: 0,
        cut_queries: 0,
        label_queries: 0,
        seed_eval_queries: 0,
        discrepancies: vec![0.0; agents.len()],
        max_discrepancy: 0.0,
        wall_time_secs: start.elapsed().as_secs_f64(),
        flagged: false,
        notes: vec![format!("assignments tried: {}", sol.assignments), "z = 0 certified in exact rationals".into()],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::q;
    use crate::valuations::uniform;

    fn spike() -> PiecewiseConstantValuation {
        PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 3), q(1, 1)], vec![q(3, 1), q(0, 1)]).unwrap()
    }

    fn half_dense() -> PiecewiseConstantValuation {
        PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(2, 1), q(0, 1)]).unwrap()
    }

    #[test]
    fn single_agent_examples() {
        let r = solve_single_agent(&uniform(), 0.01, 1.0).unwrap();
        assert_eq!(r.partition.cuts_f64(), vec![0.5]);
        assert_eq!(r.max_discrepancy, 0.0);
        let v = spike().to_valuation();
        let r = solve_single_agent(&v, 0.1, 3.0).unwrap();
        let x = r.partition.cuts_f64()[0];
        assert!((0.15..=0.1834).contains(&x), "{x}");
        assert!(r.total_eval_queries <= single_agent_budget(0.1, 3.0));
    }

    #[test]
    fn identical_agents_share_a_cut() {
        let v = spike().to_valuation();
        let copy = v.fork();
        let r = solve_single_agent(&v, 0.05, 3.0).unwrap();
        assert!(copy.discrepancy_uncounted(&r.partition).unwrap().abs() <= 0.05);
    }

    #[test]
    fn two_monotone_examples() {
        let v1 = uniform();
        let r = solve_two_monotone(&v1, &uniform(), 0.01, 1.0).unwrap();
        assert_eq!(r.partition.cuts_f64(), vec![0.5, 1.0]);

        let v2 = half_dense().to_valuation();
        let eps = 1e-4;
        let r = solve_two_monotone(&uniform(), &v2, eps, 2.0).unwrap();
        assert!(r.satisfied(), "{r:?}");
        let c = r.partition.cuts_f64();
        assert!((c[0] - 0.25).abs() <= eps && (c[1] - 0.75).abs() <= eps, "{c:?}");
        assert!(r.total_eval_queries <= two_monotone_budget(eps, 2.0));
    }

    #[test]
    fn two_monotone_requires_monotone_first_agent() {
        let general = uniform().with_flags(Default::default());
        assert!(matches!(solve_two_monotone(&general, &uniform(), 0.1, 1.0), Err(SolverError::Precondition(_))));
    }

    #[test]
    fn grid_examples() {
        let ch = Arc::new(ChInstance::new(vec![uniform()], 0.05, None).unwrap());
        let r = solve_grid(ch).unwrap();
        assert!(r.satisfied());
        assert_eq!(r.total_eval_queries, 2 * r.label_queries);

        let ch = Arc::new(ChInstance::new(vec![uniform(), half_dense().to_valuation()], 0.01, None).unwrap());
        let r = solve_grid(ch).unwrap();
        assert!(r.satisfied(), "{r:?}");
        assert_eq!(r.total_eval_queries, 4 * r.label_queries + r.seed_eval_queries);
    }

    #[test]
    fn lp_report() {
        let r = solve_piecewise_constant_lp(&[PiecewiseConstantValuation::uniform(), half_dense()]).unwrap();
        assert_eq!(r.partition.cuts, vec![q(1, 4), q(3, 4)]);
        assert_eq!(r.max_discrepancy, 0.0);
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(3).len(), 6);
    }
}
