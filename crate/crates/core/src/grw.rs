//! Generalised Robertson-Webb queries: EVAL/CUT accounting, CUT simulated
//! by EVAL queries, and the logarithmic two-agent solver.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::borsuk_ulam::{BuError, BuFunction};
use crate::intervals::{q_from_f64, IntervalSet, Q};
use crate::kuhn;
use crate::reductions::{region_embedding, RegionGrid};
use crate::solvers::{
    algorithm_one, check_params, pair, single_agent_budget, AgentOneSearch, Found, ReportBuilder, SolveReport,
    SolverError,
};
use crate::valuations::{Valuation, ValuationError};

/// Bisection steps used by the native CUT oracle.
const NATIVE_STEPS: u32 = 64;

/// `g(t) ≥ −CUT_TOL` counts as reaching the ratio.
pub const CUT_TOL: f64 = crate::valuations::EXACT_TOL;

/// Grid structure of a valuation `A ↦ (F̂_i(x(A)) + 1)/2` where `F̂` is a
/// Kuhn interpolation with `resolution` cells per unit of `u = (x+1)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlStructure {
    /// Number of agents `n`; the embedding uses `n + 1` regions.
    pub agents: usize,
    pub resolution: usize,
}

impl PlStructure {
    fn regions(&self) -> usize {
        self.agents + 1
    }

    /// `m` with `resolution = 2m`.
    pub fn m(&self) -> usize {
        self.resolution.div_ceil(2)
    }
}

/// `2(3⌈log₂(n+1)⌉ + 2 + ⌈log₂ m⌉ + 2)` EVAL queries per simulated CUT.
pub fn cut_budget(agents: usize, m: usize) -> u64 {
    let lg = |x: usize| if x <= 1 { 0 } else { (usize::BITS - (x - 1).leading_zeros()) as u64 };
    2 * (3 * lg(agents + 1) + 2 + lg(m) + 2)
}

/// `⌈2nL/ε⌉`.
pub fn pl_resolution(agents: usize, lipschitz: f64, eps: f64) -> usize {
    (2.0 * agents as f64 * lipschitz / eps).ceil() as usize
}

/// Kuhn interpolation of `f` on `K_m^{n+1}`; Lipschitz `(n+1)·L_F`.
pub fn pl_wrap(f: Arc<BuFunction>, m: usize) -> Result<(BuFunction, PlStructure), BuError> {
    if m == 0 {
        return Err(kuhn::KuhnError::ZeroResolution.into());
    }
    let n = f.n();
    let res = 2 * m;
    let lipschitz = (n + 1) as f64 * f.lipschitz();
    let flags = f.flags();
    let g = BuFunction::from_fn(
        n,
        move |x: &[f64]| {
            let u: Vec<f64> = x.iter().map(|&xi| ((xi + 1.0) / 2.0).clamp(0.0, 1.0)).collect();
            let vertex = |v: &[usize]| -> Result<Vec<f64>, BuError> {
                let y: Vec<f64> = v.iter().map(|&c| c as f64 / m as f64 - 1.0).collect();
                f.eval_uncounted(&y)
            };
            kuhn::interpolate(&u, res, vertex).expect("wrapped function is total on the cube")
        },
        lipschitz,
        flags,
    );
    Ok((g, PlStructure { agents: n, resolution: res }))
}

/// One agent's query session with separate EVAL and CUT counters.
pub struct GrwSession<'a> {
    valuation: &'a Valuation,
    pl: Option<PlStructure>,
    evals: AtomicU64,
    cuts: AtomicU64,
}

/// Result of a simulated CUT query.
#[derive(Clone, Debug, PartialEq)]
pub struct CutOutcome {
    pub x: Option<f64>,
    /// EVAL queries spent on this CUT.
    pub evals: u64,
    /// Whether the piecewise-linear exact path was taken.
    pub exact: bool,
    /// Bisection resolution of the approximate path; zero when exact.
    pub resolution: f64,
}

struct CutQuery<'q> {
    a1: &'q IntervalSet,
    a2: &'q IntervalSet,
    a: f64,
    b: f64,
}

impl CutQuery<'_> {
    fn numerator_set(&self, t: f64) -> IntervalSet {
        self.a1.union(&span(self.a, t))
    }

    fn denominator_set(&self, t: f64) -> IntervalSet {
        self.a2.union(&span(t, self.b))
    }
}

fn span(a: f64, b: f64) -> IntervalSet {
    if b <= a {
        return IntervalSet::empty();
    }
    IntervalSet::interval(q_from_f64(a), q_from_f64(b)).expect("ordered points in [0, 1]")
}

impl<'a> GrwSession<'a> {
    pub fn new(valuation: &'a Valuation) -> Self {
        Self { valuation, pl: None, evals: AtomicU64::new(0), cuts: AtomicU64::new(0) }
    }

    pub fn with_pl(mut self, pl: PlStructure) -> Self {
        self.pl = Some(pl);
        self
    }

    pub fn valuation(&self) -> &Valuation {
        self.valuation
    }

    pub fn pl(&self) -> Option<PlStructure> {
        self.pl
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn cut_count(&self) -> u64 {
        self.cuts.load(Ordering::Relaxed)
    }

    /// EVAL query.
    pub fn eval(&self, a: &IntervalSet) -> Result<f64, ValuationError> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.valuation.eval(a)
    }

    fn validate(&self, a1: &IntervalSet, a2: &IntervalSet, i: (f64, f64), gamma: f64) -> Result<(), SolverError> {
        let (a, b) = i;
        if !(0.0..=1.0).contains(&a) || !(a..=1.0).contains(&b) {
            return Err(SolverError::Precondition(format!("CUT interval [{a}, {b}] is not a subinterval of [0, 1]")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(SolverError::Precondition(format!("CUT ratio must be finite and non-negative, got {gamma}")));
        }
        let zero = Q::from_integer(0.into());
        let inside = span(a, b);
        if a1.intersection(a2).measure() != zero
            || a1.intersection(&inside).measure() != zero
            || a2.intersection(&inside).measure() != zero
        {
            return Err(SolverError::Precondition("CUT sets overlap".into()));
        }
        if !self.valuation.is_monotone() {
            return Err(SolverError::Precondition("CUT queries need a monotone valuation".into()));
        }
        Ok(())
    }

    /// Native CUT query: the smallest `x ∈ [a,b]` with
    /// `v(A1 ∪ [a,x]) = γ·v(A2 ∪ [x,b])` up to `CUT_TOL`, or `None`.
    pub fn grw_cut(&self, a1: &IntervalSet, a2: &IntervalSet, i: (f64, f64), gamma: f64) -> Result<Option<f64>, SolverError> {
        self.validate(a1, a2, i, gamma)?;
        self.cuts.fetch_add(1, Ordering::Relaxed);
        let q = CutQuery { a1, a2, a: i.0, b: i.1 };
        let v = self.valuation;
        let g = |t: f64| -> Result<f64, SolverError> {
            Ok(v.eval_uncounted(&q.numerator_set(t))? - gamma * v.eval_uncounted(&q.denominator_set(t))?)
        };
        let ga = g(q.a)?;
        if ga > CUT_TOL {
            return Ok(None);
        }
        if ga >= -CUT_TOL {
            return Ok(Some(q.a));
        }
        if g(q.b)? < -CUT_TOL {
            return Ok(None);
        }
        let (mut lo, mut hi) = (q.a, q.b);
        for _ in 0..NATIVE_STEPS {
            let mid = (lo + hi) / 2.0;
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid)? >= -CUT_TOL {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        Ok(Some(hi))
    }

    /// CUT simulated by EVAL queries; each `g(t) = v(A1∪[a,t]) − γ·v(A2∪[t,b])`
    /// costs two. Uses the grid structure when known, otherwise bisection to
    /// resolution `ε/(4L)`.
    pub fn cut_via_eval(
        &self,
        a1: &IntervalSet,
        a2: &IntervalSet,
        i: (f64, f64),
        gamma: f64,
        eps: f64,
    ) -> Result<CutOutcome, SolverError> {
        self.validate(a1, a2, i, gamma)?;
        let before = self.eval_count();
        let q = CutQuery { a1, a2, a: i.0, b: i.1 };
        let g = |t: f64| -> Result<f64, SolverError> {
            Ok(self.eval(&q.numerator_set(t))? - gamma * self.eval(&q.denominator_set(t))?)
        };
        let ga = g(q.a)?;
        let done = |x: Option<f64>, exact: bool, resolution: f64| CutOutcome {
            x,
            evals: self.eval_count() - before,
            exact,
            resolution,
        };
        if ga > CUT_TOL {
            return Ok(done(None, self.pl.is_some(), 0.0));
        }
        if ga >= -CUT_TOL {
            return Ok(done(Some(q.a), self.pl.is_some(), 0.0));
        }
        let gb = g(q.b)?;
        if gb < -CUT_TOL {
            return Ok(done(None, self.pl.is_some(), 0.0));
        }
        match self.pl {
            Some(pl) => {
                let x = exact_cut(&q, pl, (q.a, ga), (q.b, gb), &g)?;
                Ok(done(Some(x), true, 0.0))
            }
            None => {
                let resolution = eps / (4.0 * self.valuation.lipschitz());
                let (mut lo, mut hi) = (q.a, q.b);
                while hi - lo > resolution {
                    let mid = (lo + hi) / 2.0;
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid)? >= -CUT_TOL {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                Ok(done(Some(hi), false, resolution))
            }
        }
    }
}

/// Bracket `g(lo) < −CUT_TOL ≤ g(hi)` refined over a sorted list of
/// interior breakpoints given by `point(k)`, `k ∈ 0..count`.
fn bisect_points(
    mut lo: (f64, f64),
    mut hi: (f64, f64),
    count: usize,
    point: impl Fn(usize) -> f64,
    g: &dyn Fn(f64) -> Result<f64, SolverError>,
) -> Result<((f64, f64), (f64, f64)), SolverError> {
    // points indexed 0..=count+1 with 0 ↦ lo and count+1 ↦ hi
    let (mut i, mut j) = (0usize, count + 1);
    while j - i > 1 {
        let k = (i + j) / 2;
        let t = point(k - 1);
        if t <= lo.0 || t >= hi.0 {
            // breakpoints collapsed by rounding
            if t <= lo.0 {
                i = k;
            } else {
                j = k;
            }
            continue;
        }
        let gt = g(t)?;
        if gt >= -CUT_TOL {
            hi = (t, gt);
            j = k;
        } else {
            lo = (t, gt);
            i = k;
        }
    }
    Ok((lo, hi))
}

/// Grid coordinates `u_j = (n+1)·λ(A ∩ R_j)` of a set.
fn grid_coords(a: &IntervalSet, regions: usize) -> Vec<f64> {
    region_embedding(a, &RegionGrid::new(regions - 1)).iter().map(|x| (x + 1.0) / 2.0).collect()
}

fn exact_cut(
    q: &CutQuery<'_>,
    pl: PlStructure,
    ga: (f64, f64),
    gb: (f64, f64),
    g: &dyn Fn(f64) -> Result<f64, SolverError>,
) -> Result<f64, SolverError> {
    let k = pl.regions();
    let kf = k as f64;
    let res = pl.resolution as f64;

    // region boundaries j/(n+1) inside (a, b)
    let first = (q.a * kf).floor() as usize + 1;
    let last = ((q.b * kf).ceil() as usize).saturating_sub(1);
    let count = (last + 1).saturating_sub(first);
    let (lo, hi) = bisect_points(ga, gb, count, |i| (first + i) as f64 / kf, g)?;
    let j = ((lo.0 * kf).floor() as usize).min(k - 1);

    // grid crossings of the numerator coordinate, then of the denominator
    let un = grid_coords(&q.numerator_set(lo.0), k)[j];
    let un_hi = un + kf * (hi.0 - lo.0);
    let kmin = (un * res).floor() as i64 + 1;
    let kmax = (un_hi * res).ceil() as i64 - 1;
    let count = (kmax - kmin + 1).max(0) as usize;
    let (lo, hi) = bisect_points(lo, hi, count, |i| lo.0 + ((kmin + i as i64) as f64 / res - un) / kf, g)?;

    let ud = grid_coords(&q.denominator_set(lo.0), k)[j];
    let ud_hi = ud - kf * (hi.0 - lo.0);
    let kmin = (ud_hi * res).floor() as i64 + 1;
    let kmax = (ud * res).ceil() as i64 - 1;
    let count = (kmax - kmin + 1).max(0) as usize;
    // decreasing coordinate: crossings sorted by t run from high k to low k
    let (lo, hi) = bisect_points(lo, hi, count, |i| lo.0 + (ud - (kmax - i as i64) as f64 / res) / kf, g)?;

    // permutation breakpoints where the moving offset meets another one
    let mid = (lo.0 + hi.0) / 2.0;
    let mut breaks: Vec<f64> = Vec::with_capacity(2 * k);
    for (set, rate) in [(q.numerator_set(lo.0), kf), (q.denominator_set(lo.0), -kf)] {
        let u = grid_coords(&set, k);
        let uj_mid = u[j] + rate * (mid - lo.0);
        let base = (uj_mid * res).floor();
        for (c, &uc) in u.iter().enumerate() {
            if c == j {
                continue;
            }
            let zc = uc * res - (uc * res).floor().min(res - 1.0);
            let t = lo.0 + ((zc + base) / res - u[j]) / rate;
            if t > lo.0 && t < hi.0 {
                breaks.push(t);
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let (lo, hi) = bisect_points(lo, hi, breaks.len(), |i| breaks[i], g)?;

    // g is affine on the final bracket
    let x = lo.0 + (-CUT_TOL - lo.1) * (hi.0 - lo.0) / (hi.1 - lo.1);
    Ok(x.clamp(lo.0, hi.0))
}

/// Which CUT implementation backs agent 1's searches.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryModel {
    /// CUT queries simulated by EVAL queries.
    EvalOnly,
    /// Native CUT queries, one unit each.
    Grw,
}

struct CutSearch<'s, 'a> {
    session: &'s GrwSession<'a>,
    model: QueryModel,
    eps: f64,
    none_answers: usize,
}

impl CutSearch<'_, '_> {
    fn cut(&mut self, a1: &IntervalSet, a2: &IntervalSet, i: (f64, f64)) -> Result<Option<f64>, SolverError> {
        match self.model {
            QueryModel::Grw => self.session.grw_cut(a1, a2, i, 1.0),
            QueryModel::EvalOnly => Ok(self.session.cut_via_eval(a1, a2, i, 1.0, self.eps)?.x),
        }
    }

    /// Endpoint of minimal agent-1 discrepancy, paid with EVAL queries.
    fn fallback(&mut self, candidates: [(f64, f64); 2], pick: impl Fn((f64, f64)) -> f64) -> Result<Found, SolverError> {
        self.none_answers += 1;
        let mut best = (f64::INFINITY, candidates[0]);
        for c in candidates {
            let (plus, minus) = pair(c.0, c.1).pieces();
            let d = (self.session.eval(&plus)? - self.session.eval(&minus)?).abs();
            if d < best.0 {
                best = (d, c);
            }
        }
        Ok(Found { value: pick(best.1), bracketed: false })
    }
}

impl AgentOneSearch for CutSearch<'_, '_> {
    fn initial_cut(&mut self) -> Result<f64, SolverError> {
        let e = IntervalSet::empty();
        self.cut(&e, &e, (0.0, 1.0))?
            .ok_or_else(|| SolverError::OracleInconsistent("no halving cut for agent 1".into()))
    }

    fn find_y(&mut self, x: f64) -> Result<Found, SolverError> {
        match self.cut(&IntervalSet::empty(), &span(0.0, x), (x, 1.0))? {
            Some(y) => Ok(Found { value: y, bracketed: true }),
            None => self.fallback([(x, x), (x, 1.0)], |c| c.1),
        }
    }

    fn find_x(&mut self, lo: f64, hi: f64, y: f64) -> Result<Found, SolverError> {
        let a1 = span(0.0, lo).union(&span(y, 1.0));
        match self.cut(&a1, &span(hi, y), (lo, hi))? {
            Some(x) => Ok(Found { value: x, bracketed: true }),
            None => self.fallback([(lo, y), (hi, y)], |c| c.0),
        }
    }
}

/// Algorithm 1 with agent 1's indifference searches answered by single
/// CUT queries with `γ = 1`.
pub fn solve_two_monotone_grw(
    v1: &Valuation,
    v2: &Valuation,
    eps: f64,
    lipschitz: f64,
    model: QueryModel,
    pl: Option<PlStructure>,
) -> Result<SolveReport, SolverError> {
    check_params(eps, lipschitz)?;
    if !v1.is_monotone() {
        return Err(SolverError::Precondition("agent 1 must be monotone".into()));
    }
    let algo = match model {
        QueryModel::Grw => "two-monotone-grw",
        QueryModel::EvalOnly => "two-monotone-grw-eval",
    };
    let b = ReportBuilder::new(algo, vec![v1, v2], eps, lipschitz);
    let mut session = GrwSession::new(v1);
    if let Some(pl) = pl {
        session = session.with_pl(pl);
    }
    let mut search = CutSearch { session: &session, model, eps, none_answers: 0 };
    let out = algorithm_one(v2, eps, lipschitz, &mut search)?;
    let none_answers = search.none_answers;
    let mut report = b.finish(pair(out.cuts.0, out.cuts.1))?;
    report.cut_queries = session.cut_count();
    report.flagged = out.flagged;
    report.notes.push(format!("iterations: {} + {}", out.iterations.0, out.iterations.1));
    if none_answers > 0 {
        report.notes.push(format!("{none_answers} CUT queries had no answer; minimal-discrepancy endpoint used"));
    }
    Ok(report)
}

/// `8⌈log₂(L/ε)⌉ + 16`.
pub fn grw_budget(eps: f64, lipschitz: f64) -> u64 {
    let k = (single_agent_budget(eps, lipschitz) - 2) / 2;
    8 * k + 16
}

/// Samples `t ↦ g(t)` on a uniform grid and reports the first decrease.
pub fn check_ratio_monotone(
    v: &Valuation,
    a1: &IntervalSet,
    a2: &IntervalSet,
    i: (f64, f64),
    gamma: f64,
    samples: usize,
) -> Result<Option<(f64, f64)>, ValuationError> {
    let q = CutQuery { a1, a2, a: i.0, b: i.1 };
    let mut prev: Option<(f64, f64)> = None;
    for s in 0..=samples {
        let t = q.a + (q.b - q.a) * s as f64 / samples.max(1) as f64;
        let gt = v.eval_uncounted(&q.numerator_set(t))? - gamma * v.eval_uncounted(&q.denominator_set(t))?;
        if let Some((tp, gp)) = prev {
            if gt < gp - crate::valuations::EXACT_TOL {
                return Ok(Some((tp, t)));
            }
        }
        prev = Some((t, gt));
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::borsuk_ulam::{from_tucker_monotone, BuFlags};
    use crate::reductions::bu_to_ch;
    use crate::tucker::random_instance;
    use crate::valuations::{uniform, PiecewiseConstantValuation};

    fn set(raw: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::from_f64(raw).unwrap()
    }

    #[test]
    fn uniform_halving_cut() {
        let v = uniform();
        let s = GrwSession::new(&v);
        let e = IntervalSet::empty();
        let x = s.grw_cut(&e, &e, (0.0, 1.0), 1.0).unwrap().unwrap();
        assert!((x - 0.5).abs() < 1e-12);
        assert_eq!(s.cut_count(), 1);
        assert_eq!(s.eval_count(), 0);
    }

    #[test]
    fn uniform_offset_cut() {
        // (0.1 + x − 0.2)/(1 − x) = 1
        let v = uniform();
        let s = GrwSession::new(&v);
        let a1 = set(&[(0.0, 0.1)]);
        let x = s.grw_cut(&a1, &IntervalSet::empty(), (0.2, 1.0), 1.0).unwrap().unwrap();
        assert!((x - 0.55).abs() < 1e-12);
        let sim = s.cut_via_eval(&a1, &IntervalSet::empty(), (0.2, 1.0), 1.0, 1e-6).unwrap();
        assert!((sim.x.unwrap() - 0.55).abs() < 1e-6);
        assert!(!sim.exact);
    }

    #[test]
    fn infeasible_ratio_has_no_answer() {
        let v = uniform();
        let s = GrwSession::new(&v);
        let a1 = set(&[(0.0, 0.5)]);
        let a2 = set(&[(0.9, 1.0)]);
        // v(A1)/v(A2 ∪ I) = 0.5/0.4 > 1 already at the left end
        assert_eq!(s.grw_cut(&a1, &a2, (0.5, 0.8), 1.0).unwrap(), None);
        assert_eq!(s.cut_via_eval(&a1, &a2, (0.5, 0.8), 1.0, 1e-3).unwrap().x, None);
    }

    #[test]
    fn rejects_overlapping_sets() {
        let v = uniform();
        let s = GrwSession::new(&v);
        let a1 = set(&[(0.0, 0.5)]);
        assert!(s.grw_cut(&a1, &IntervalSet::empty(), (0.4, 1.0), 1.0).is_err());
    }

    #[test]
    fn budget_formula() {
        // n = 3, m = 2^12: 2(3·2 + 2 + 12 + 2)
        assert_eq!(cut_budget(3, 1 << 12), 44);
        assert_eq!(cut_budget(1, 1), 2 * (3 + 2 + 2));
        assert_eq!(grw_budget(1.0 / 1024.0, 1.0), 8 * 10 + 16);
    }

    #[test]
    fn pl_wrap_agrees_at_vertices() {
        let f = Arc::new(BuFunction::from_fn(
            1,
            |x: &[f64]| vec![(x[0] * x[0] * x[0] + x[1]) / 2.0],
            3.0,
            BuFlags { normalised: true, monotone: true },
        ));
        let (g, pl) = pl_wrap(Arc::clone(&f), 4).unwrap();
        assert_eq!(pl.resolution, 8);
        assert_eq!(g.lipschitz(), 6.0);
        for (a, b) in [(-1.0, 0.25), (0.5, -0.75), (1.0, 1.0)] {
            let x = [a, b];
            assert!((g.eval_uncounted(&x).unwrap()[0] - f.eval_uncounted(&x).unwrap()[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_path_matches_native_on_wrapped_instance() {
        let t = Arc::new(random_instance(2, 5, 3).unwrap());
        let (f, _) = from_tucker_monotone(t, 0.2).unwrap();
        let (g, pl) = pl_wrap(Arc::new(f), 64).unwrap();
        let ch = bu_to_ch(Arc::new(g), 0.2).unwrap();
        let v = ch.agent(1);
        let s = GrwSession::new(v).with_pl(pl);
        let a1 = set(&[(0.0, 0.1)]);
        let a2 = set(&[(0.85, 1.0)]);
        let native = s.grw_cut(&a1, &a2, (0.2, 0.8), 1.0).unwrap();
        let sim = s.cut_via_eval(&a1, &a2, (0.2, 0.8), 1.0, 0.2).unwrap();
        assert!(sim.exact);
        match (native, sim.x) {
            (Some(a), Some(b)) => assert!((a - b).abs() < 1e-9, "{a} vs {b}"),
            (a, b) => assert_eq!(a, b),
        }
        assert!(sim.evals <= cut_budget(pl.agents, pl.m()));
    }

    #[test]
    fn grw_solver_on_additive_pair() {
        let v1 = uniform();
        let v2 = PiecewiseConstantValuation::new(
            vec![q_from_f64(0.0), q_from_f64(0.5), q_from_f64(1.0)],
            vec![q_from_f64(2.0), q_from_f64(0.0)],
        )
        .unwrap()
        .to_valuation();
        let r = solve_two_monotone_grw(&v1, &v2, 1e-3, 2.0, QueryModel::Grw, None).unwrap();
        assert!(r.satisfied());
        let c = r.partition.cuts_f64();
        assert!((c[0] - 0.25).abs() < 1e-3 && (c[1] - 0.75).abs() < 1e-3, "{c:?}");
        assert!(r.total_queries() <= grw_budget(1e-3, 2.0));
        assert_eq!(r.eval_queries[0], 0);
    }
}
