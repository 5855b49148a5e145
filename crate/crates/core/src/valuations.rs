//! Query-counted valuation oracles, concrete families and sampled violation
//! checkers.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intervals::{format_q, parse_q, q_to_f64, IntervalSet, Q};
use crate::intervals::{CutPartition, IntervalError};

pub const LIPSCHITZ_TOL: f64 = 1e-9;
pub const EXACT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValuationError {
    #[error("oracle returned negative value {value} on {set}")]
    Negative { value: f64, set: String },
    #[error("oracle returned a non-finite value on {0}")]
    NonFinite(String),
    #[error(transparent)]
    Interval(#[from] IntervalError),
    #[error("invalid valuation: {0}")]
    Invalid(String),
}

/// Raw set function; implementors need not count queries.
pub trait SetFunction: Send + Sync {
    fn value(&self, a: &IntervalSet) -> f64;
}

impl<F: Fn(&IntervalSet) -> f64 + Send + Sync> SetFunction for F {
    fn value(&self, a: &IntervalSet) -> f64 {
        self(a)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationFlags {
    pub monotone: bool,
    pub normalised: bool,
}

/// Valuation oracle with declared Lipschitz parameter and a per-session
/// eval counter.
pub struct Valuation {
    oracle: Arc<dyn SetFunction>,
    lipschitz: f64,
    flags: ValuationFlags,
    evals: AtomicU64,
}

impl fmt::Debug for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Valuation")
            .field("lipschitz", &self.lipschitz)
            .field("flags", &self.flags)
            .field("evals", &self.eval_count())
            .finish()
    }
}

impl Valuation {
    pub fn new(oracle: Arc<dyn SetFunction>, lipschitz: f64, flags: ValuationFlags) -> Self {
        Self { oracle, lipschitz, flags, evals: AtomicU64::new(0) }
    }

    pub fn from_fn(f: impl Fn(&IntervalSet) -> f64 + Send + Sync + 'static, lipschitz: f64, flags: ValuationFlags) -> Self {
        Self::new(Arc::new(f), lipschitz, flags)
    }

    /// New session over the same oracle with a zeroed counter.
    pub fn fork(&self) -> Self {
        Self::new(Arc::clone(&self.oracle), self.lipschitz, self.flags)
    }

    pub fn with_lipschitz(&self, lipschitz: f64) -> Self {
        Self::new(Arc::clone(&self.oracle), lipschitz, self.flags)
    }

    pub fn with_flags(&self, flags: ValuationFlags) -> Self {
        Self::new(Arc::clone(&self.oracle), self.lipschitz, flags)
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn flags(&self) -> ValuationFlags {
        self.flags
    }

    pub fn is_monotone(&self) -> bool {
        self.flags.monotone
    }

    pub fn is_normalised(&self) -> bool {
        self.flags.normalised
    }

    pub fn eval_count(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.evals.store(0, Ordering::Relaxed);
    }

    pub fn oracle(&self) -> &Arc<dyn SetFunction> {
        &self.oracle
    }

    /// Counted query.
    pub fn eval(&self, a: &IntervalSet) -> Result<f64, ValuationError> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.eval_uncounted(a)
    }

    /// Query that bypasses the counter, for post-hoc verification.
    pub fn eval_uncounted(&self, a: &IntervalSet) -> Result<f64, ValuationError> {
        let v = self.oracle.value(a);
        if !v.is_finite() {
            return Err(ValuationError::NonFinite(a.to_string()));
        }
        if v < 0.0 {
            return Err(ValuationError::Negative { value: v, set: a.to_string() });
        }
        Ok(v)
    }

    /// `v(I⁺) − v(I⁻)`; two counted queries.
    pub fn discrepancy(&self, p: &CutPartition) -> Result<f64, ValuationError> {
        let (plus, minus) = p.pieces();
        Ok(self.eval(&plus)? - self.eval(&minus)?)
    }

    pub fn discrepancy_uncounted(&self, p: &CutPartition) -> Result<f64, ValuationError> {
        let (plus, minus) = p.pieces();
        Ok(self.eval_uncounted(&plus)? - self.eval_uncounted(&minus)?)
    }
}

/// Witness pair returned by the sampled checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct SetViolation {
    pub a: IntervalSet,
    pub b: IntervalSet,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckOutcome {
    Ok,
    Violation(SetViolation),
}

impl CheckOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self, CheckOutcome::Ok)
    }
}

/// Random union of up to `max_pieces` intervals with dyadic endpoints.
pub fn random_set<R: Rng>(rng: &mut R, max_pieces: usize) -> IntervalSet {
    let k = rng.gen_range(0..=max_pieces);
    let raw = (0..k)
        .map(|_| {
            let a: u32 = rng.gen_range(0..=1 << 20);
            let b: u32 = rng.gen_range(0..=1 << 20);
            let (a, b) = (a.min(b), a.max(b));
            (Q::new(a.into(), (1u32 << 20).into()), Q::new(b.into(), (1u32 << 20).into()))
        })
        .collect();
    IntervalSet::canonicalize(raw).expect("dyadic endpoints in [0, 1]")
}

/// Pair `(A, B)` that differ by a small perturbation, which is where
/// Lipschitz violations of steep valuations show up.
fn random_close_pair<R: Rng>(rng: &mut R) -> (IntervalSet, IntervalSet) {
    let a = random_set(rng, 3);
    let width = 2f64.powi(-rng.gen_range(1..16));
    let lo = rng.gen::<f64>() * (1.0 - width);
    let patch = IntervalSet::from_f64(&[(lo, lo + width)]).expect("patch inside [0, 1]");
    let b = if rng.gen_bool(0.5) { a.union(&patch) } else { a.difference(&patch) };
    (a, b)
}

/// Samples pairs and returns the first with `|v(A)−v(B)| > L·λ(A△B) + 1e−9`.
/// The pair `([0,1], ∅)` is always tried first.
pub fn check_lipschitz_sampled(v: &Valuation, samples: usize, seed: u64) -> Result<CheckOutcome, ValuationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = v.lipschitz();
    for k in 0..samples.max(1) {
        let (a, b) = match k {
            0 => (IntervalSet::full(), IntervalSet::empty()),
            _ if k % 2 == 1 => random_close_pair(&mut rng),
            _ => (random_set(&mut rng, 4), random_set(&mut rng, 4)),
        };
        let lhs = (v.eval(&a)? - v.eval(&b)?).abs();
        let rhs = l * q_to_f64(&a.symmetric_difference(&b).measure());
        if lhs > rhs + LIPSCHITZ_TOL {
            return Ok(CheckOutcome::Violation(SetViolation { a, b, lhs, rhs }));
        }
    }
    Ok(CheckOutcome::Ok)
}

/// Samples nested pairs `A ⊆ B` and returns the first with `v(A) > v(B) + 1e−12`.
pub fn check_monotone_sampled(v: &Valuation, samples: usize, seed: u64) -> Result<CheckOutcome, ValuationError> {
    check_monotone_sampled_tol(v, samples, seed, EXACT_TOL)
}

pub fn check_monotone_sampled_tol(v: &Valuation, samples: usize, seed: u64, tol: f64) -> Result<CheckOutcome, ValuationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples.max(1) {
        let (a, b) = if k == 0 {
            (IntervalSet::empty(), IntervalSet::full())
        } else {
            let a = random_set(&mut rng, 3);
            let extra = if k % 2 == 1 {
                let (_, patch) = random_close_pair(&mut rng);
                patch
            } else {
                random_set(&mut rng, 2)
            };
            let b = a.union(&extra);
            (a, b)
        };
        let va = v.eval(&a)?;
        let vb = v.eval(&b)?;
        if va > vb + tol {
            return Ok(CheckOutcome::Violation(SetViolation { a, b, lhs: va, rhs: vb }));
        }
    }
    Ok(CheckOutcome::Ok)
}

/// Checks `v(∅)=0`, `v([0,1])=1` and sampled values in `[0,1]`.
pub fn check_normalised(v: &Valuation, samples: usize, seed: u64) -> Result<CheckOutcome, ValuationError> {
    let empty = IntervalSet::empty();
    let full = IntervalSet::full();
    let v0 = v.eval(&empty)?;
    if v0.abs() > EXACT_TOL {
        return Ok(CheckOutcome::Violation(SetViolation { a: empty.clone(), b: empty, lhs: v0, rhs: 0.0 }));
    }
    let v1 = v.eval(&full)?;
    if (v1 - 1.0).abs() > EXACT_TOL {
        return Ok(CheckOutcome::Violation(SetViolation { a: full.clone(), b: full, lhs: v1, rhs: 1.0 }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let a = random_set(&mut rng, 4);
        let va = v.eval(&a)?;
        if !(-EXACT_TOL..=1.0 + EXACT_TOL).contains(&va) {
            return Ok(CheckOutcome::Violation(SetViolation { a: a.clone(), b: a, lhs: va, rhs: 1.0 }));
        }
    }
    Ok(CheckOutcome::Ok)
}

/// Additive valuation with constant density on each region.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiecewiseConstantValuation {
    breakpoints: Vec<Q>,
    densities: Vec<Q>,
}

impl PiecewiseConstantValuation {
    /// `breakpoints` must start at 0, end at 1 and be strictly increasing;
    /// one density per region.
    pub fn new(breakpoints: Vec<Q>, densities: Vec<Q>) -> Result<Self, ValuationError> {
        if breakpoints.len() < 2 || densities.len() + 1 != breakpoints.len() {
            return Err(ValuationError::Invalid(format!(
                "{} breakpoints need {} densities, got {}",
                breakpoints.len(),
                breakpoints.len().saturating_sub(1),
                densities.len()
            )));
        }
        if !breakpoints[0].is_zero() || breakpoints[breakpoints.len() - 1] != Q::from_integer(1.into()) {
            return Err(ValuationError::Invalid("breakpoints must start at 0 and end at 1".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ValuationError::Invalid("breakpoints must be strictly increasing".into()));
        }
        if densities.iter().any(|d| d.is_negative()) {
            return Err(ValuationError::Invalid("densities must be non-negative".into()));
        }
        Ok(Self { breakpoints, densities })
    }

    pub fn uniform() -> Self {
        Self::new(vec![Q::zero(), Q::from_integer(1.into())], vec![Q::from_integer(1.into())]).expect("valid")
    }

    /// Random normalised instance with `regions` pieces and small integer
    /// density weights.
    pub fn random<R: Rng>(rng: &mut R, regions: usize) -> Self {
        let regions = regions.max(1);
        let den = 61i64;
        let mut cuts: Vec<i64> = Vec::new();
        while cuts.len() + 1 < regions {
            let c = rng.gen_range(1..den);
            if !cuts.contains(&c) {
                cuts.push(c);
            }
        }
        cuts.sort_unstable();
        let mut breakpoints = vec![Q::zero()];
        breakpoints.extend(cuts.iter().map(|&c| Q::new(c.into(), den.into())));
        breakpoints.push(Q::from_integer(1.into()));
        let weights: Vec<i64> = (0..regions).map(|_| rng.gen_range(0..=4)).collect();
        let weights = if weights.iter().all(|&w| w == 0) { vec![1; regions] } else { weights };
        let raw: Vec<Q> = weights.iter().map(|&w| Q::from_integer(w.into())).collect();
        let mass = breakpoints.windows(2).zip(&raw).fold(Q::zero(), |acc, (w, d)| acc + (&w[1] - &w[0]) * d);
        let densities = raw.into_iter().map(|d| d / &mass).collect();
        Self::new(breakpoints, densities).expect("valid by construction")
    }

    pub fn breakpoints(&self) -> &[Q] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Q] {
        &self.densities
    }

    /// Exact value `Σ density·λ(A ∩ region)`.
    pub fn value_exact(&self, a: &IntervalSet) -> Q {
        self.breakpoints
            .windows(2)
            .zip(&self.densities)
            .filter(|(_, d)| !d.is_zero())
            .fold(Q::zero(), |acc, (w, d)| acc + d * a.measure_within(&w[0], &w[1]))
    }

    pub fn total(&self) -> Q {
        self.value_exact(&IntervalSet::full())
    }

    pub fn max_density(&self) -> Q {
        self.densities.iter().max().cloned().unwrap_or_else(Q::zero)
    }

    /// Counted valuation with `L` equal to the largest density.
    pub fn to_valuation(&self) -> Valuation {
        let total = self.total();
        let flags = ValuationFlags { monotone: true, normalised: total == Q::from_integer(1.into()) };
        let l = q_to_f64(&self.max_density()).max(f64::MIN_POSITIVE);
        let me = self.clone();
        Valuation::from_fn(move |a| q_to_f64(&me.value_exact(a)), l, flags)
    }
}

impl SetFunction for PiecewiseConstantValuation {
    fn value(&self, a: &IntervalSet) -> f64 {
        q_to_f64(&self.value_exact(a))
    }
}

#[derive(Serialize, Deserialize)]
struct PcRepr {
    breakpoints: Vec<String>,
    densities: Vec<String>,
}

impl Serialize for PiecewiseConstantValuation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PcRepr {
            breakpoints: self.breakpoints.iter().map(format_q).collect(),
            densities: self.densities.iter().map(format_q).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseConstantValuation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let r = PcRepr::deserialize(d)?;
        let parse = |v: &[String]| v.iter().map(|s| parse_q(s)).collect::<Result<Vec<BigRational>, _>>();
        let bp = parse(&r.breakpoints).map_err(D::Error::custom)?;
        let de = parse(&r.densities).map_err(D::Error::custom)?;
        PiecewiseConstantValuation::new(bp, de).map_err(D::Error::custom)
    }
}

/// Monotone non-additive valuation `φ(μ(A))` with `φ(t) = t + a·t(1−t)`.
pub fn concave_of_additive(mu: PiecewiseConstantValuation, a: f64) -> Valuation {
    assert!((0.0..1.0).contains(&a), "curvature must lie in [0, 1)");
    let l = (1.0 + a) * q_to_f64(&mu.max_density());
    let normalised = mu.total() == Q::from_integer(1.into());
    Valuation::from_fn(
        move |s| {
            let t = mu.value(s);
            t + a * t * (1.0 - t)
        },
        l,
        ValuationFlags { monotone: true, normalised },
    )
}

/// General valuation `μ(A) + a·sin(2πk·μ₂(A)) + a`; not monotone for
/// large enough `a·k`.
pub fn oscillating(mu: PiecewiseConstantValuation, mu2: PiecewiseConstantValuation, a: f64, k: f64) -> Valuation {
    let l = q_to_f64(&mu.max_density()) + a * 2.0 * std::f64::consts::PI * k * q_to_f64(&mu2.max_density());
    Valuation::from_fn(
        move |s| {
            let v = mu.value(s) + a * (2.0 * std::f64::consts::PI * k * mu2.value(s)).sin() + a;
            v.max(0.0)
        },
        l,
        ValuationFlags::default(),
    )
}

/// The uniform (Lebesgue) valuation.
pub fn uniform() -> Valuation {
    PiecewiseConstantValuation::uniform().to_valuation()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::{q, Sign};

    fn third_density() -> PiecewiseConstantValuation {
        PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 3), q(1, 1)], vec![q(3, 1), q(0, 1)]).unwrap()
    }

    #[test]
    fn eval_counts_every_query() {
        let v = uniform();
        let a = IntervalSet::interval(q(0, 1), q(1, 2)).unwrap();
        assert_eq!(v.eval(&a).unwrap(), 0.5);
        assert_eq!(v.eval(&IntervalSet::empty()).unwrap(), 0.0);
        assert_eq!(v.eval(&IntervalSet::full()).unwrap(), 1.0);
        assert_eq!(v.eval_count(), 3);
        v.eval_uncounted(&a).unwrap();
        assert_eq!(v.eval_count(), 3);
        assert_eq!(v.fork().eval_count(), 0);
    }

    #[test]
    fn negative_oracle_is_an_error() {
        let v = Valuation::from_fn(|_| -0.5, 1.0, ValuationFlags::default());
        assert!(matches!(v.eval(&IntervalSet::full()), Err(ValuationError::Negative { .. })));
    }

    #[test]
    fn discrepancy_examples() {
        let v = uniform();
        let half = CutPartition::new(vec![q(1, 2)], Sign::Plus).unwrap();
        assert_eq!(v.discrepancy(&half).unwrap(), 0.0);
        assert_eq!(v.eval_count(), 2);
        assert_eq!(v.discrepancy(&CutPartition::all_plus()).unwrap(), 1.0);

        let w = third_density();
        let p = CutPartition::new(vec![q(1, 6)], Sign::Plus).unwrap();
        let (plus, minus) = p.pieces();
        assert_eq!(w.value_exact(&plus), q(1, 2));
        assert_eq!(w.value_exact(&minus), q(1, 2));
        assert_eq!(w.to_valuation().discrepancy(&p).unwrap(), 0.0);
    }

    #[test]
    fn lipschitz_checker() {
        assert!(check_lipschitz_sampled(&uniform(), 200, 1).unwrap().is_ok());
        let under = uniform().with_lipschitz(0.5);
        match check_lipschitz_sampled(&under, 200, 1).unwrap() {
            CheckOutcome::Violation(w) => {
                assert_eq!(w.a, IntervalSet::full());
                assert!(w.b.is_empty());
            }
            CheckOutcome::Ok => panic!("expected a violation"),
        }
    }

    #[test]
    fn monotone_checker() {
        assert!(check_monotone_sampled(&third_density().to_valuation(), 300, 2).unwrap().is_ok());
        let decreasing = Valuation::from_fn(
            |a| 1.0 - q_to_f64(&a.measure()),
            1.0,
            ValuationFlags { monotone: true, normalised: false },
        );
        assert!(!check_monotone_sampled(&decreasing, 300, 2).unwrap().is_ok());
    }

    #[test]
    fn normalised_checker() {
        assert!(check_normalised(&uniform(), 100, 3).unwrap().is_ok());
        let doubled = Valuation::from_fn(|a| 2.0 * q_to_f64(&a.measure()), 2.0, ValuationFlags::default());
        assert!(!check_normalised(&doubled, 100, 3).unwrap().is_ok());
    }

    #[test]
    fn piecewise_constant_validation() {
        assert!(PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 1)], vec![q(-1, 1)]).is_err());
        assert!(PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 2)], vec![q(1, 1)]).is_err());
        assert!(PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 1)], vec![]).is_err());
    }

    #[test]
    fn random_piecewise_constant_is_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let k = rng.gen_range(1..8);
            let v = PiecewiseConstantValuation::random(&mut rng, k);
            assert_eq!(v.total(), q(1, 1));
        }
    }

    #[test]
    fn families_respect_declared_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mu = PiecewiseConstantValuation::random(&mut rng, 5);
        let mu2 = PiecewiseConstantValuation::random(&mut rng, 3);
        let c = concave_of_additive(mu.clone(), 0.6);
        assert!(check_monotone_sampled(&c, 300, 5).unwrap().is_ok());
        assert!(check_lipschitz_sampled(&c, 300, 5).unwrap().is_ok());
        assert!(check_normalised(&c, 100, 5).unwrap().is_ok());
        let o = oscillating(mu, mu2, 0.05, 3.0);
        assert!(check_lipschitz_sampled(&o, 300, 6).unwrap().is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let v = third_density();
        let s = serde_json_string(&v);
        assert_eq!(s, r#"{"breakpoints":["0","1/3","1"],"densities":["3","0"]}"#);
    }

    fn serde_json_string(v: &PiecewiseConstantValuation) -> String {
        serde_json::to_string(v).unwrap()
    }
}
