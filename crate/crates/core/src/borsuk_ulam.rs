//! Borsuk-Ulam function oracles, sampled property checkers and the two
//! constructions from Tucker labellings, with solution decoding.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kuhn::{self, KuhnError};
use crate::tucker::{TuckerInstance, TuckerSolution};

pub const BU_TOL: f64 = 1e-9;
const DOMAIN_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuError {
    #[error("point has {got} coordinates, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {index} = {value} lies outside [-1, 1]")]
    OutOfCube { index: usize, value: f64 },
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("the monotone construction needs n >= 2 (source dimension >= 1)")]
    DimensionTooSmall,
    #[error("no opposite-label pair in the Kuhn simplex at {0:?}")]
    NoOppositePair(Vec<usize>),
    #[error("|S(x)| = {s} exceeds (n+1)ε/C_n = {bound}")]
    SumTooLarge { s: f64, bound: f64 },
    #[error("no boundary point satisfies the bound; declared Lipschitz parameter {0} is inconsistent")]
    NotFound(f64),
    #[error(transparent)]
    Kuhn(#[from] KuhnError),
}

/// Raw function `[-1,1]^{n+1} → [-1,1]^n`.
pub trait BuOracle: Send + Sync {
    fn output_dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Vec<f64>;
}

struct FnOracle<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> Vec<f64> + Send + Sync> BuOracle for FnOracle<F> {
    fn output_dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BuFlags {
    pub normalised: bool,
    pub monotone: bool,
}

/// Query-counted Borsuk-Ulam function with declared Lipschitz parameter.
pub struct BuFunction {
    n: usize,
    oracle: Arc<dyn BuOracle>,
    lipschitz: f64,
    flags: BuFlags,
    queries: AtomicU64,
}

impl fmt::Debug for BuFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuFunction")
            .field("n", &self.n)
            .field("lipschitz", &self.lipschitz)
            .field("flags", &self.flags)
            .field("queries", &self.query_count())
            .finish()
    }
}

impl BuFunction {
    pub fn new(oracle: Arc<dyn BuOracle>, lipschitz: f64, flags: BuFlags) -> Self {
        Self { n: oracle.output_dim(), oracle, lipschitz, flags, queries: AtomicU64::new(0) }
    }

    pub fn from_fn(n: usize, f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static, lipschitz: f64, flags: BuFlags) -> Self {
        Self::new(Arc::new(FnOracle { n, f }), lipschitz, flags)
    }

    pub fn fork(&self) -> Self {
        Self::new(Arc::clone(&self.oracle), self.lipschitz, self.flags)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn flags(&self) -> BuFlags {
        self.flags
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn oracle(&self) -> &Arc<dyn BuOracle> {
        &self.oracle
    }

    /// Counted query.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>, BuError> {
        self.check_domain(x)?;
        self.queries.fetch_add(1, Ordering::Relaxed);
        Ok(self.oracle.value(x))
    }

    pub fn eval_uncounted(&self, x: &[f64]) -> Result<Vec<f64>, BuError> {
        self.check_domain(x)?;
        Ok(self.oracle.value(x))
    }

    fn check_domain(&self, x: &[f64]) -> Result<(), BuError> {
        if x.len() != self.n + 1 {
            return Err(BuError::Dimension { expected: self.n + 1, got: x.len() });
        }
        for (index, &value) in x.iter().enumerate() {
            if !(value.abs() <= 1.0 + DOMAIN_TOL) {
                return Err(BuError::OutOfCube { index, value });
            }
        }
        Ok(())
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn neg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

/// Witness pair returned by the sampled checkers.
#[derive(Clone, Debug, PartialEq)]
pub struct BuViolation {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn random_boundary_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut x = random_point(rng, d);
    let k = rng.gen_range(0..d);
    x[k] = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    x
}

fn perturb<R: Rng>(rng: &mut R, x: &[f64]) -> Vec<f64> {
    let scale = 2f64.powi(-rng.gen_range(2..24));
    x.iter().map(|&v| (v + rng.gen_range(-scale..=scale)).clamp(-1.0, 1.0)).collect()
}

/// Checks `F(−x) = −F(x)` on sampled points (including boundary points)
/// and `F(1,…,1) = (1,…,1)`.
pub fn check_odd_sampled(f: &BuFunction, samples: usize, seed: u64) -> Result<Option<BuViolation>, BuError> {
    let d = f.n() + 1;
    let ones = vec![1.0; d];
    let top = f.eval(&ones)?;
    let dev = sup_dist(&top, &vec![1.0; f.n()]);
    if dev > BU_TOL {
        return Ok(Some(BuViolation { x: ones.clone(), y: ones, lhs: dev, rhs: 0.0 }));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let x = if k % 2 == 0 { random_point(&mut rng, d) } else { random_boundary_point(&mut rng, d) };
        let nx = neg(&x);
        let a = f.eval(&x)?;
        let b = f.eval(&nx)?;
        let dev = a.iter().zip(&b).fold(0.0f64, |m, (p, q)| m.max((p + q).abs()));
        if dev > BU_TOL {
            return Ok(Some(BuViolation { x, y: nx, lhs: dev, rhs: 0.0 }));
        }
    }
    Ok(None)
}

/// Checks `F(x) ≤ F(y) + 1e−9` coordinatewise on sampled `x ≤ y`.
pub fn check_monotone_sampled(f: &BuFunction, samples: usize, seed: u64) -> Result<Option<BuViolation>, BuError> {
    let d = f.n() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let x = random_point(&mut rng, d);
        let scale = if k % 2 == 0 { 1.0 } else { 2f64.powi(-rng.gen_range(2..24)) };
        let y: Vec<f64> = x.iter().map(|&v| (v + scale * rng.gen::<f64>()).min(1.0)).collect();
        let fx = f.eval(&x)?;
        let fy = f.eval(&y)?;
        if let Some((a, b)) = fx.iter().zip(&fy).find(|(a, b)| **a > **b + BU_TOL) {
            return Ok(Some(BuViolation { x, y, lhs: *a, rhs: *b }));
        }
    }
    Ok(None)
}

/// Searches for `‖F(x)−F(y)‖∞ > L·‖x−y‖∞ + 1e−9` over far and near pairs.
pub fn lipschitz_witness_sampled(f: &BuFunction, samples: usize, seed: u64) -> Result<Option<BuViolation>, BuError> {
    lipschitz_witness_with(f, f.lipschitz(), samples, seed)
}

pub fn lipschitz_witness_with(f: &BuFunction, l: f64, samples: usize, seed: u64) -> Result<Option<BuViolation>, BuError> {
    let d = f.n() + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..samples {
        let x = random_point(&mut rng, d);
        let y = if k % 2 == 0 { random_point(&mut rng, d) } else { perturb(&mut rng, &x) };
        let lhs = sup_dist(&f.eval(&x)?, &f.eval(&y)?);
        let rhs = l * sup_dist(&x, &y);
        if lhs > rhs + BU_TOL {
            return Ok(Some(BuViolation { x, y, lhs, rhs }));
        }
    }
    Ok(None)
}

/// Scans `∂([−1,1]^{n+1})` at spacing `ε/(2L)`, faces in coordinate order
/// (−1 side first), lexicographic within a face.
pub fn solve_boundary_grid(f: &BuFunction, eps: f64) -> Result<Vec<f64>, BuError> {
    let d = f.n() + 1;
    let spacing = eps / (2.0 * f.lipschitz());
    let steps = (2.0 / spacing).ceil().max(1.0) as usize;
    let coord = |i: usize| if i == steps { 1.0 } else { -1.0 + 2.0 * i as f64 / steps as f64 };
    let accept = |x: &[f64]| -> Result<bool, BuError> {
        if f.flags().normalised {
            Ok(sup_norm(&f.eval(x)?) <= eps / 2.0)
        } else {
            Ok(sup_dist(&f.eval(x)?, &f.eval(&neg(x))?) <= eps)
        }
    };
    for face in 0..d {
        for side in [-1.0, 1.0] {
            let mut idx = vec![0usize; d - 1];
            'face: loop {
                let mut x = Vec::with_capacity(d);
                let mut it = idx.iter();
                for c in 0..d {
                    x.push(if c == face { side } else { coord(*it.next().expect("index per free coordinate")) });
                }
                if accept(&x)? {
                    return Ok(x);
                }
                for k in (0..idx.len()).rev() {
                    if idx[k] < steps {
                        idx[k] += 1;
                        continue 'face;
                    }
                    idx[k] = 0;
                }
                break;
            }
        }
    }
    Err(BuError::NotFound(f.lipschitz()))
}

/// Label renaming that forces `ℓ(N,…,N) = +1`. Odd by construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relabel {
    top: i32,
}

impl Relabel {
    pub fn new(top: i32) -> Self {
        Self { top }
    }

    pub fn apply(&self, label: i32) -> i32 {
        let k = self.top.abs();
        let mag = label.abs();
        let mut out = if mag == k {
            1
        } else if mag == 1 {
            k
        } else {
            mag
        };
        if self.top < 0 && mag == k {
            out = -out;
        }
        label.signum() * out
    }
}

/// Tucker labelling interpolated on `[−1/2,1/2]^d` and truncated to `[−δ,δ]^d`.
struct InterpolatedLabels {
    source: Arc<TuckerInstance>,
    relabel: Relabel,
    delta: f64,
}

impl InterpolatedLabels {
    fn new(source: Arc<TuckerInstance>, eps: f64) -> Self {
        let top = vec![source.grid(); source.n()];
        let relabel = Relabel::new(source.label(&top));
        Self { source, relabel, delta: (2.0 * eps).min(1.0) }
    }

    fn dim(&self) -> usize {
        self.source.n()
    }

    /// `g(u)` for `u ∈ [−1/2,1/2]^d`.
    fn g(&self, u: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let m = self.source.grid() - 1;
        let w: Vec<f64> = u.iter().map(|&c| (c + 0.5).clamp(0.0, 1.0)).collect();
        let (simplex, bary) = kuhn::locate(&w, m).expect("point inside the unit cube");
        let scale = self.delta * d as f64;
        let mut out = vec![0.0; d];
        let mut v: Vec<usize> = simplex.base.iter().map(|&b| b + 1).collect();
        for (i, &a) in bary.alpha.iter().enumerate() {
            if i > 0 {
                v[simplex.perm[i - 1]] += 1;
            }
            if a == 0.0 {
                continue;
            }
            let l = self.relabel.apply(self.source.label(&v));
            out[(l.unsigned_abs() - 1) as usize] += a * scale * l.signum() as f64;
        }
        out.iter().map(|&c| c.clamp(-self.delta, self.delta)).collect()
    }

    /// Opposite-label pair among the Kuhn vertices around `u`, under the
    /// original labelling.
    fn decode(&self, u: &[f64]) -> Result<TuckerSolution, BuError> {
        let m = self.source.grid() - 1;
        let w: Vec<f64> = u.iter().map(|&c| (c + 0.5).clamp(0.0, 1.0)).collect();
        let (simplex, _) = kuhn::locate(&w, m)?;
        let verts: Vec<Vec<usize>> = simplex.vertices().into_iter().map(|v| v.into_iter().map(|c| c + 1).collect()).collect();
        let labels: Vec<i32> = verts.iter().map(|v| self.source.label(v)).collect();
        for i in 0..verts.len() {
            for j in i + 1..verts.len() {
                if labels[i] == -labels[j] {
                    return Ok(TuckerSolution { p: verts[i].clone(), q: verts[j].clone() });
                }
            }
        }
        Err(BuError::NoOppositePair(verts[0].clone()))
    }
}

fn check_eps(eps: f64) -> Result<(), BuError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(BuError::InvalidEpsilon(eps))
    }
}

fn truncate(x: &[f64], r: f64) -> Vec<f64> {
    x.iter().map(|&c| c.clamp(-r, r)).collect()
}

/// Normalised `n`D Borsuk-Ulam function built from an `n`D Tucker instance.
pub struct GeneralBuConstruction {
    inner: InterpolatedLabels,
    eps: f64,
}

impl GeneralBuConstruction {
    pub fn new(source: Arc<TuckerInstance>, eps: f64) -> Result<Arc<Self>, BuError> {
        check_eps(eps)?;
        Ok(Arc::new(Self { inner: InterpolatedLabels::new(source, eps), eps }))
    }

    pub fn n(&self) -> usize {
        self.inner.dim()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.inner.delta
    }

    pub fn relabel(&self) -> &Relabel {
        &self.inner.relabel
    }

    pub fn source(&self) -> &Arc<TuckerInstance> {
        &self.inner.source
    }

    /// `max{3, 4n²(N−1)ε + 1}`.
    pub fn lipschitz(&self) -> f64 {
        let n = self.n() as f64;
        let big_n = self.inner.source.grid() as f64;
        (4.0 * n * n * (big_n - 1.0) * self.eps + 1.0).max(3.0)
    }

    fn h(&self, y: &[f64]) -> Vec<f64> {
        let n = y.len();
        let delta = self.inner.delta;
        let ramp = |mn: f64| {
            let mut out = vec![2.0 * mn - 1.0; n];
            out[0] += (2.0 - 2.0 * mn) * delta;
            out
        };
        if y.iter().all(|&c| c >= 0.5) {
            ramp(y.iter().cloned().fold(f64::INFINITY, f64::min))
        } else if y.iter().all(|&c| c <= -0.5) {
            neg(&ramp(y.iter().map(|c| -c).fold(f64::INFINITY, f64::min)))
        } else {
            self.inner.g(&truncate(y, 0.5))
        }
    }

    pub fn function(self: &Arc<Self>) -> BuFunction {
        BuFunction::new(Arc::clone(self) as Arc<dyn BuOracle>, self.lipschitz(), BuFlags { normalised: true, monotone: false })
    }

    /// Maps a boundary point with `‖F(x)‖∞ ≤ ε` to a Tucker solution.
    pub fn decode(&self, x: &[f64]) -> Result<TuckerSolution, BuError> {
        let n = self.n();
        if x.len() != n + 1 {
            return Err(BuError::Dimension { expected: n + 1, got: x.len() });
        }
        let x = if x[n] < 0.0 { neg(x) } else { x.to_vec() };
        self.inner.decode(&truncate(&x[..n], 0.5))
    }
}

impl BuOracle for GeneralBuConstruction {
    fn output_dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let (xp, t) = (&x[..n], x[n]);
        let a = (1.0 + t) / 2.0;
        let b = (1.0 - t) / 2.0;
        let mut out = vec![0.0; n];
        if a != 0.0 {
            for (o, v) in out.iter_mut().zip(self.h(xp)) {
                *o += a * v;
            }
        }
        if b != 0.0 {
            for (o, v) in out.iter_mut().zip(self.h(&neg(xp))) {
                *o -= b * v;
            }
        }
        out
    }
}

pub fn from_tucker_general(t: Arc<TuckerInstance>, eps: f64) -> Result<(BuFunction, Arc<GeneralBuConstruction>), BuError> {
    let c = GeneralBuConstruction::new(t, eps)?;
    Ok((c.function(), c))
}

/// Monotone normalised `n`D Borsuk-Ulam function built from an
/// `(n−1)`D Tucker instance.
pub struct MonotoneBuConstruction {
    inner: InterpolatedLabels,
    eps: f64,
    c: f64,
    c_n: f64,
}

impl MonotoneBuConstruction {
    pub fn new(source: Arc<TuckerInstance>, eps: f64) -> Result<Arc<Self>, BuError> {
        check_eps(eps)?;
        let n = (source.n() + 1) as f64;
        let big_n = source.grid() as f64;
        let c = 1.0 + 2.0 * (n + 1.0).powi(4) * big_n * eps;
        let c_n = (4.0 * (n + 1.0).powi(4) * big_n * eps + 2.0) / ((1.0 / eps).min(2.0) - 1.0);
        Ok(Arc::new(Self { inner: InterpolatedLabels::new(source, eps), eps, c, c_n }))
    }

    /// Output dimension `n` (one more than the Tucker dimension).
    pub fn n(&self) -> usize {
        self.inner.dim() + 1
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.inner.delta
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    pub fn source(&self) -> &Arc<TuckerInstance> {
        &self.inner.source
    }

    pub fn lipschitz(&self) -> f64 {
        self.c_n
    }

    fn h(&self, v: &[f64]) -> Vec<f64> {
        let half: Vec<f64> = v.iter().map(|c| c / 2.0).collect();
        self.inner.g(&half)
    }

    /// `G(w) = ((1+w_n)/2)·h(w′) + ((1−w_n)/2)·(−h(−w′))`.
    fn big_g(&self, w: &[f64]) -> Vec<f64> {
        let d = w.len() - 1;
        let (wp, t) = (&w[..d], w[d]);
        let a = (1.0 + t) / 2.0;
        let b = (1.0 - t) / 2.0;
        let mut out = vec![0.0; d];
        if a != 0.0 {
            for (o, v) in out.iter_mut().zip(self.h(wp)) {
                *o += a * v;
            }
        }
        if b != 0.0 {
            for (o, v) in out.iter_mut().zip(self.h(&neg(wp))) {
                *o -= b * v;
            }
        }
        out
    }

    fn rescale(&self, z: &[f64]) -> Vec<f64> {
        let r = 1.0 / (self.n() + 1) as f64;
        z.iter().map(|&c| c.clamp(-r, r) / r).collect()
    }

    /// `Π(x)` restricted to its first `n` coordinates.
    fn projected(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n();
        let s: f64 = x.iter().sum();
        let shift = s / (n + 1) as f64;
        (s, x[..n].iter().map(|&c| c - shift).collect())
    }

    pub fn function(self: &Arc<Self>) -> BuFunction {
        BuFunction::new(Arc::clone(self) as Arc<dyn BuOracle>, self.lipschitz(), BuFlags { normalised: true, monotone: true })
    }

    /// Maps a boundary point with `‖F(x)‖∞ ≤ ε` to a Tucker solution via
    /// `Π`, coordinate drop, rescaling and the `G`/`h` inversion.
    pub fn decode(&self, x: &[f64]) -> Result<TuckerSolution, BuError> {
        let n = self.n();
        if x.len() != n + 1 {
            return Err(BuError::Dimension { expected: n + 1, got: x.len() });
        }
        let (s, z) = self.projected(x);
        let bound = (n + 1) as f64 * self.eps / self.c_n;
        if s.abs() > bound + BU_TOL {
            return Err(BuError::SumTooLarge { s, bound });
        }
        let mut w = self.rescale(&z);
        if w[n - 1] < 0.0 {
            w = neg(&w);
        }
        let u: Vec<f64> = w[..n - 1].iter().map(|c| c / 2.0).collect();
        self.inner.decode(&u)
    }
}

impl BuOracle for MonotoneBuConstruction {
    fn output_dim(&self) -> usize {
        self.n()
    }

    fn value(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        let np1 = (n + 1) as f64;
        let (s, z) = self.projected(x);
        let hv = self.big_g(&self.rescale(&z));
        let weight = 1.0 - s.abs() / np1;
        let mut out: Vec<f64> = hv.iter().map(|&v| (weight * v + self.c * s / np1).clamp(-1.0, 1.0)).collect();
        out.push((self.c_n * s / np1).clamp(-1.0, 1.0));
        out
    }
}

pub fn from_tucker_monotone(t: Arc<TuckerInstance>, eps: f64) -> Result<(BuFunction, Arc<MonotoneBuConstruction>), BuError> {
    let c = MonotoneBuConstruction::new(t, eps)?;
    Ok((c.function(), c))
}
