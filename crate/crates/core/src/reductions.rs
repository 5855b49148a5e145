//! Reductions between Consensus-Halving, Borsuk-Ulam and Tucker, with the
//! maps that carry solutions back.

use std::sync::{Arc, Mutex};

use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::borsuk_ulam::BuFunction;
use crate::intervals::{q, q_from_f64, q_int, q_to_f64, CutPartition, IntervalError, IntervalSet, Sign, Q};
use crate::tucker::{TuckerError, TuckerInstance, TuckerSolution};
use crate::valuations::{Valuation, ValuationError, ValuationFlags, EXACT_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error("instance needs at least one agent")]
    NoAgents,
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("Lipschitz parameter must be positive, got {0}")]
    InvalidLipschitz(f64),
    #[error("embedded point {0:?} is not on the cube boundary")]
    NotOnBoundary(Vec<f64>),
    #[error("paint code coordinate {value} outside [-{m}, {m}]")]
    BadCode { value: i64, m: usize },
    #[error("grid point {0:?} does not match the induced instance")]
    BadPoint(Vec<usize>),
    #[error("agent {agent} has discrepancy {discrepancy} > ε = {eps}")]
    Contract { agent: usize, discrepancy: f64, eps: f64 },
    #[error("solution has no positively labelled point")]
    NoPositivePoint,
    #[error("grid size {0} overflows")]
    GridOverflow(f64),
    #[error(transparent)]
    Valuation(#[from] ValuationError),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error(transparent)]
    Tucker(#[from] TuckerError),
}

/// ε-Consensus-Halving instance.
#[derive(Debug)]
pub struct ChInstance {
    valuations: Vec<Valuation>,
    eps: f64,
    lipschitz: f64,
}

impl ChInstance {
    /// `L` defaults to the largest declared agent parameter.
    pub fn new(valuations: Vec<Valuation>, eps: f64, lipschitz: Option<f64>) -> Result<Self, ReductionError> {
        if valuations.is_empty() {
            return Err(ReductionError::NoAgents);
        }
        if !(eps > 0.0) {
            return Err(ReductionError::InvalidEpsilon(eps));
        }
        let l = lipschitz.unwrap_or_else(|| valuations.iter().map(Valuation::lipschitz).fold(0.0, f64::max));
        if !(l > 0.0) || !l.is_finite() {
            return Err(ReductionError::InvalidLipschitz(l));
        }
        Ok(Self { valuations, eps, lipschitz: l })
    }

    pub fn n(&self) -> usize {
        self.valuations.len()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn valuations(&self) -> &[Valuation] {
        &self.valuations
    }

    pub fn agent(&self, i: usize) -> &Valuation {
        &self.valuations[i]
    }

    pub fn eval_counts(&self) -> Vec<u64> {
        self.valuations.iter().map(Valuation::eval_count).collect()
    }

    pub fn total_evals(&self) -> u64 {
        self.valuations.iter().map(Valuation::eval_count).sum()
    }

    pub fn reset_counts(&self) {
        self.valuations.iter().for_each(Valuation::reset_count);
    }

    /// Copy with fresh counters over the same oracles.
    pub fn fork(&self) -> Self {
        Self { valuations: self.valuations.iter().map(Valuation::fork).collect(), eps: self.eps, lipschitz: self.lipschitz }
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self, ReductionError> {
        Self::new(self.valuations.iter().map(Valuation::fork).collect(), eps, Some(self.lipschitz))
    }

    /// Signed discrepancies `v_i(I⁺) − v_i(I⁻)`, counted.
    pub fn discrepancies(&self, p: &CutPartition) -> Result<Vec<f64>, ValuationError> {
        self.valuations.iter().map(|v| v.discrepancy(p)).collect()
    }

    pub fn discrepancies_uncounted(&self, p: &CutPartition) -> Result<Vec<f64>, ValuationError> {
        self.valuations.iter().map(|v| v.discrepancy_uncounted(p)).collect()
    }

    /// Fresh uncounted check of the `ε` contract (absolute slack `1e−12`);
    /// returns the worst agent.
    pub fn verify(&self, p: &CutPartition) -> Result<(usize, f64), ReductionError> {
        if p.num_cuts() > self.n() {
            return Err(IntervalError::TooManyCuts { got: p.num_cuts(), max: self.n() }.into());
        }
        let d = self.discrepancies_uncounted(p)?;
        let (agent, worst) = d.iter().enumerate().fold((0, 0.0f64), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
        if worst > self.eps + EXACT_TOL {
            return Err(ReductionError::Contract { agent, discrepancy: worst, eps: self.eps });
        }
        Ok((agent, worst))
    }
}

/// Regions `R_j = [(j−1)/(n+1), j/(n+1)]`, `j ∈ [n+1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegionGrid {
    pub n: usize,
}

impl RegionGrid {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    /// Zero-based region `R_{j+1}`.
    pub fn region(&self, j: usize) -> (Q, Q) {
        let k = (self.n + 1) as i64;
        (q(j as i64, k), q(j as i64 + 1, k))
    }
}

/// `[x(A)]_j = 2(n+1)·λ(A ∩ R_j) − 1`, exact.
pub fn region_embedding_exact(a: &IntervalSet, g: &RegionGrid) -> Vec<Q> {
    let scale = q_int(2 * (g.n as i64 + 1));
    (0..=g.n)
        .map(|j| {
            let (lo, hi) = g.region(j);
            &scale * a.measure_within(&lo, &hi) - Q::one()
        })
        .collect()
}

pub fn region_embedding(a: &IntervalSet, g: &RegionGrid) -> Vec<f64> {
    region_embedding_exact(a, g).iter().map(q_to_f64).collect()
}

/// Valuations `v_i(A) = (F_i(x(A)) + 1)/2` with Lipschitz parameter
/// `(n+1)·L_F`; each query is one query to `F`.
pub fn bu_to_ch(f: Arc<BuFunction>, eps: f64) -> Result<ChInstance, ReductionError> {
    let n = f.n();
    let g = RegionGrid::new(n);
    let flags = ValuationFlags { monotone: f.flags().monotone, normalised: f.flags().normalised };
    let l = (n + 1) as f64 * f.lipschitz();
    let valuations = (0..n)
        .map(|i| {
            let f = Arc::clone(&f);
            Valuation::from_fn(
                move |a: &IntervalSet| {
                    let x = region_embedding(a, &g);
                    let y = f.eval(&x).expect("region embedding lies in the cube");
                    ((y[i] + 1.0) / 2.0).max(0.0)
                },
                l,
                flags,
            )
        })
        .collect();
    ChInstance::new(valuations, eps, Some(l))
}

/// `y = x(I⁺)`; lands on the cube boundary for partitions with `≤ n` cuts.
pub fn ch_solution_to_bu(p: &CutPartition, g: &RegionGrid) -> Result<Vec<f64>, ReductionError> {
    let (plus, _) = p.pieces();
    let exact = region_embedding_exact(&plus, g);
    let y: Vec<f64> = exact.iter().map(q_to_f64).collect();
    if exact.iter().any(|c| c.abs().is_one()) {
        Ok(y)
    } else {
        Err(ReductionError::NotOnBoundary(y))
    }
}

/// Point of `K_m^n` stored as integer numerators over `m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PaintCode {
    pub m: usize,
    pub coords: Vec<i64>,
}

impl PaintCode {
    pub fn new(m: usize, coords: Vec<i64>) -> Result<Self, ReductionError> {
        if let Some(&value) = coords.iter().find(|c| c.unsigned_abs() as usize > m) {
            return Err(ReductionError::BadCode { value, m });
        }
        Ok(Self { m, coords })
    }

    /// Code of the 1-indexed Tucker grid point `p ∈ [2m+1]^n`.
    pub fn from_grid_point(p: &[usize], m: usize) -> Result<Self, ReductionError> {
        if p.iter().any(|&c| c == 0 || c > 2 * m + 1) {
            return Err(ReductionError::BadPoint(p.to_vec()));
        }
        Ok(Self { m, coords: p.iter().map(|&c| c as i64 - m as i64 - 1).collect() })
    }

    pub fn point(&self) -> Vec<Q> {
        self.coords.iter().map(|&c| q(c, self.m as i64)).collect()
    }
}

/// Pass `ℓ = 1..n` paints `[0, |x_ℓ|]` with `sign(x_ℓ)` over an all-"+"
/// start; computed back to front since later passes win.
fn paint(x: &[Q]) -> CutPartition {
    let mut segments: Vec<(Q, Sign)> = Vec::with_capacity(x.len() + 1);
    let mut cur = Q::zero();
    for c in x.iter().rev() {
        let r = c.abs();
        if r > cur {
            let s = if c.is_negative() { Sign::Minus } else { Sign::Plus };
            segments.push((r.clone(), s));
            cur = r;
        }
    }
    if cur < Q::one() {
        segments.push((Q::one(), Sign::Plus));
    }
    let leading = segments[0].1;
    let mut cuts = Vec::new();
    for w in segments.windows(2) {
        if w[0].1 != w[1].1 {
            cuts.push(w[0].0.clone());
        }
    }
    CutPartition { cuts, leading }
}

pub fn paint_decode(code: &PaintCode) -> CutPartition {
    paint(&code.point())
}

/// Painting procedure on a real point of `[−1,1]^n`.
pub fn paint_decode_f64(x: &[f64]) -> CutPartition {
    let pts: Vec<Q> = x.iter().map(|&c| q_from_f64(c.clamp(-1.0, 1.0))).collect();
    paint(&pts)
}

/// Induced Tucker instance over `K_m^n` with `N = 2m+1`.
pub struct InducedTucker {
    ch: Arc<ChInstance>,
    m: usize,
    instance: Arc<TuckerInstance>,
    error: Arc<Mutex<Option<ValuationError>>>,
}

/// Label of a partition: agent with the largest `|v_i(I⁺) − v_i(I⁻)|`
/// (smallest index on ties), signed toward the larger side, equality
/// toward the side containing the left end.
pub fn partition_label(ch: &ChInstance, p: &CutPartition) -> Result<i32, ValuationError> {
    label_from(ch, p, Valuation::discrepancy)
}

pub fn partition_label_uncounted(ch: &ChInstance, p: &CutPartition) -> Result<i32, ValuationError> {
    label_from(ch, p, Valuation::discrepancy_uncounted)
}

fn label_from(
    ch: &ChInstance,
    p: &CutPartition,
    disc: impl Fn(&Valuation, &CutPartition) -> Result<f64, ValuationError>,
) -> Result<i32, ValuationError> {
    let mut best = 0usize;
    let mut best_diff = 0.0f64;
    for (i, v) in ch.valuations().iter().enumerate() {
        let d = disc(v, p)?;
        if i == 0 || d.abs() > best_diff.abs() {
            best = i;
            best_diff = d;
        }
    }
    let sign = if best_diff > 0.0 {
        1
    } else if best_diff < 0.0 {
        -1
    } else {
        p.effective_leading().as_i32()
    };
    Ok(sign * (best as i32 + 1))
}

/// `m = ⌈2nL/ε⌉`.
pub fn paint_resolution(n: usize, lipschitz: f64, eps: f64) -> Result<usize, ReductionError> {
    let m = (2.0 * n as f64 * lipschitz / eps).ceil().max(1.0);
    if m > (u32::MAX / 4) as f64 {
        return Err(ReductionError::GridOverflow(m));
    }
    Ok(m as usize)
}

pub fn ch_to_tucker(ch: Arc<ChInstance>) -> Result<InducedTucker, ReductionError> {
    let n = ch.n();
    let m = paint_resolution(n, ch.lipschitz(), ch.eps())?;
    let error: Arc<Mutex<Option<ValuationError>>> = Arc::new(Mutex::new(None));
    let oracle = {
        let ch = Arc::clone(&ch);
        let error = Arc::clone(&error);
        move |p: &[usize]| -> i32 {
            let code = PaintCode::from_grid_point(p, m).expect("oracle queried inside the grid");
            match partition_label(&ch, &paint_decode(&code)) {
                Ok(l) => l,
                Err(e) => {
                    error.lock().expect("error slot").get_or_insert(e);
                    1
                }
            }
        }
    };
    let instance = Arc::new(TuckerInstance::new(n, 2 * m + 1, Arc::new(oracle))?);
    Ok(InducedTucker { ch, m, instance, error })
}

impl InducedTucker {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn grid(&self) -> usize {
        2 * self.m + 1
    }

    pub fn instance(&self) -> &Arc<TuckerInstance> {
        &self.instance
    }

    pub fn ch(&self) -> &Arc<ChInstance> {
        &self.ch
    }

    /// First valuation error raised inside the label oracle, if any.
    pub fn take_error(&self) -> Option<ValuationError> {
        self.error.lock().expect("error slot").take()
    }

    /// Nearest grid point to a real paint code.
    pub fn grid_point(&self, x: &[f64]) -> Vec<usize> {
        let m = self.m as f64;
        x.iter().map(|&c| ((c.clamp(-1.0, 1.0) * m).round() + m + 1.0) as usize).collect()
    }
}

/// Paint-decodes the positively labelled endpoint and checks the `ε`
/// contract with uncounted queries.
pub fn tucker_solution_to_ch(t: &InducedTucker, sol: &TuckerSolution) -> Result<CutPartition, ReductionError> {
    if let Some(e) = t.take_error() {
        return Err(e.into());
    }
    let label = |pt: &[usize]| -> Result<(i32, CutPartition), ReductionError> {
        let p = paint_decode(&PaintCode::from_grid_point(pt, t.m())?);
        Ok((partition_label_uncounted(t.ch(), &p)?, p))
    };
    let (lp, pp) = label(&sol.p)?;
    let p = if lp > 0 {
        pp
    } else {
        let (lq, pq) = label(&sol.q)?;
        if lq <= 0 {
            return Err(ReductionError::NoPositivePoint);
        }
        pq
    };
    t.ch().verify(&p)?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::valuations::{uniform, PiecewiseConstantValuation};

    fn set(pieces: &[(i64, i64, i64, i64)]) -> IntervalSet {
        IntervalSet::canonicalize(pieces.iter().map(|&(a, b, c, d)| (q(a, b), q(c, d))).collect()).unwrap()
    }

    #[test]
    fn embedding_examples() {
        let g = RegionGrid::new(3);
        assert_eq!(region_embedding(&IntervalSet::full(), &g), vec![1.0; 4]);
        assert_eq!(region_embedding(&IntervalSet::empty(), &g), vec![-1.0; 4]);
        assert_eq!(region_embedding(&set(&[(0, 1, 1, 4)]), &RegionGrid::new(1)), vec![0.0, -1.0]);
    }

    #[test]
    fn paint_examples() {
        assert_eq!(paint_decode(&PaintCode::new(4, vec![0, 0]).unwrap()), CutPartition::all_plus());
        let p = paint_decode(&PaintCode::new(4, vec![2, -1]).unwrap());
        let (plus, minus) = p.pieces();
        assert_eq!(minus, set(&[(0, 1, 1, 4)]));
        assert_eq!(plus, set(&[(1, 4, 1, 1)]));
        let a = paint_decode(&PaintCode::new(4, vec![4, -1]).unwrap());
        let b = paint_decode(&PaintCode::new(4, vec![-4, 1]).unwrap());
        assert_eq!(a.pieces(), (b.pieces().1, b.pieces().0));
    }

    #[test]
    fn paint_matches_forward_passes() {
        let codes: [Vec<i64>; 5] = [vec![3, -2, 1], vec![-1, 4, -4], vec![0, 2, -2], vec![2, 2, 2], vec![-3, 0, 1]];
        for c in codes {
            let m = 4;
            let mut label = vec![Sign::Plus; 8 * m];
            for &x in &c {
                let s = if x < 0 { Sign::Minus } else { Sign::Plus };
                for cell in label.iter_mut().take(8 * x.unsigned_abs() as usize) {
                    *cell = s;
                }
            }
            let p = paint_decode(&PaintCode::new(m, c.clone()).unwrap());
            let (plus, _) = p.pieces();
            for (k, s) in label.iter().enumerate() {
                let mid = q(2 * k as i64 + 1, 2 * 8 * m as i64);
                assert_eq!(plus.contains_point(&mid), *s == Sign::Plus, "code {c:?} cell {k}");
            }
            assert!(p.num_cuts() <= 3);
        }
    }

    #[test]
    fn labelling_examples() {
        let ch = Arc::new(ChInstance::new(vec![uniform()], 0.1, None).unwrap());
        let t = ch_to_tucker(Arc::clone(&ch)).unwrap();
        assert_eq!(t.m(), 20);
        // x = −1/2 and x = 1
        assert_eq!(t.instance().label(&[11]), -1);
        assert_eq!(t.instance().label(&[41]), 1);
        assert_eq!(ch.total_evals(), 4);
        t.instance().validate_boundary().unwrap();
    }

    #[test]
    fn uniform_pipeline() {
        let ch = Arc::new(ChInstance::new(vec![uniform()], 0.01, None).unwrap());
        let t = ch_to_tucker(Arc::clone(&ch)).unwrap();
        let sol = t.instance().solve_brute().unwrap();
        let p = tucker_solution_to_ch(&t, &sol).unwrap();
        assert_eq!(p.num_cuts(), 1);
        assert!((q_to_f64(&p.cuts[0]) - 0.5).abs() <= 0.01);
    }

    #[test]
    fn two_agent_pipeline() {
        let a2 = PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(2, 1), q(0, 1)]).unwrap();
        let ch = Arc::new(ChInstance::new(vec![uniform(), a2.to_valuation()], 0.05, None).unwrap());
        let t = ch_to_tucker(Arc::clone(&ch)).unwrap();
        t.instance().validate_boundary().unwrap();
        let sol = t.instance().solve_brute().unwrap();
        let p = tucker_solution_to_ch(&t, &sol).unwrap();
        let c = p.cuts_f64();
        assert_eq!(c.len(), 2);
        assert!((c[0] - 0.25).abs() < 0.05 && (c[1] - 0.75).abs() < 0.05, "{c:?}");
    }

    #[test]
    fn antipodal_embedding() {
        let g = RegionGrid::new(2);
        let p = CutPartition::new(vec![q(1, 5), q(2, 3)], Sign::Minus).unwrap();
        let (plus, minus) = p.pieces();
        let a = region_embedding_exact(&plus, &g);
        let b = region_embedding_exact(&minus, &g);
        assert!(a.iter().zip(&b).all(|(x, y)| *x == -y.clone()));
        let y = ch_solution_to_bu(&p, &g).unwrap();
        assert!(y.iter().any(|c| c.abs() == 1.0));
        assert_eq!(ch_solution_to_bu(&CutPartition::all_plus(), &g).unwrap(), vec![1.0; 3]);
    }
}
