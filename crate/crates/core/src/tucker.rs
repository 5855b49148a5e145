//! nD-Tucker instances over the 1-indexed grid `[N]^n`.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TuckerError {
    #[error("grid size must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },
    #[error("label {label} at {point:?} is outside ±1..=±{n}")]
    BadLabel { point: Vec<usize>, label: i32, n: usize },
    #[error("boundary anti-symmetry fails at {0:?}")]
    Boundary(Vec<usize>),
    #[error("no complementary edge exists; the labelling is not a valid instance")]
    NoSolution,
    #[error("grid too large to enumerate: {0}")]
    TooLarge(String),
}

/// Labelling `[N]^n → {±1, …, ±n}` on 1-indexed points.
pub trait LabelOracle: Send + Sync {
    fn label(&self, p: &[usize]) -> i32;
}

impl<F: Fn(&[usize]) -> i32 + Send + Sync> LabelOracle for F {
    fn label(&self, p: &[usize]) -> i32 {
        self(p)
    }
}

/// Explicit row-major table with `p₁` varying slowest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplicitLabels {
    pub n: usize,
    #[serde(rename = "N")]
    pub grid: usize,
    pub labels: Vec<i32>,
}

impl ExplicitLabels {
    pub fn new(n: usize, grid: usize, labels: Vec<i32>) -> Result<Self, TuckerError> {
        check_shape(n, grid)?;
        let expected = grid_points(n, grid).ok_or_else(|| TuckerError::TooLarge(format!("{grid}^{n}")))?;
        if labels.len() != expected {
            return Err(TuckerError::LabelCount { expected, got: labels.len() });
        }
        for (k, &l) in labels.iter().enumerate() {
            if l == 0 || l.unsigned_abs() as usize > n {
                return Err(TuckerError::BadLabel { point: unflatten(k, n, grid), label: l, n });
            }
        }
        Ok(Self { n, grid, labels })
    }
}

impl LabelOracle for ExplicitLabels {
    fn label(&self, p: &[usize]) -> i32 {
        self.labels[flatten(p, self.grid)]
    }
}

fn check_shape(n: usize, grid: usize) -> Result<(), TuckerError> {
    if n == 0 {
        return Err(TuckerError::ZeroDimension);
    }
    if grid < 2 {
        return Err(TuckerError::GridTooSmall(grid));
    }
    Ok(())
}

/// `N^n`, or `None` on overflow.
pub fn grid_points(n: usize, grid: usize) -> Option<usize> {
    (0..n).try_fold(1usize, |acc, _| acc.checked_mul(grid))
}

/// Row-major index of a 1-indexed point.
pub fn flatten(p: &[usize], grid: usize) -> usize {
    p.iter().fold(0, |acc, &c| acc * grid + (c - 1))
}

pub fn unflatten(mut k: usize, n: usize, grid: usize) -> Vec<usize> {
    let mut p = vec![0; n];
    for c in p.iter_mut().rev() {
        *c = k % grid + 1;
        k /= grid;
    }
    p
}

pub fn antipode(p: &[usize], grid: usize) -> Vec<usize> {
    p.iter().map(|&c| grid + 1 - c).collect()
}

pub fn on_boundary(p: &[usize], grid: usize) -> bool {
    p.iter().any(|&c| c == 1 || c == grid)
}

/// Tucker instance with a per-session label-query counter.
pub struct TuckerInstance {
    n: usize,
    grid: usize,
    oracle: Arc<dyn LabelOracle>,
    queries: AtomicU64,
}

impl fmt::Debug for TuckerInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TuckerInstance")
            .field("n", &self.n)
            .field("N", &self.grid)
            .field("queries", &self.query_count())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TuckerSolution {
    pub p: Vec<usize>,
    pub q: Vec<usize>,
}

impl TuckerInstance {
    pub fn new(n: usize, grid: usize, oracle: Arc<dyn LabelOracle>) -> Result<Self, TuckerError> {
        check_shape(n, grid)?;
        Ok(Self { n, grid, oracle, queries: AtomicU64::new(0) })
    }

    pub fn from_explicit(t: ExplicitLabels) -> Result<Self, TuckerError> {
        let (n, grid) = (t.n, t.grid);
        Self::new(n, grid, Arc::new(t))
    }

    pub fn fork(&self) -> Self {
        Self { n: self.n, grid: self.grid, oracle: Arc::clone(&self.oracle), queries: AtomicU64::new(0) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn query_count(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }

    pub fn reset_count(&self) {
        self.queries.store(0, Ordering::Relaxed);
    }

    /// Counted label query on a 1-indexed point.
    pub fn label(&self, p: &[usize]) -> i32 {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.oracle.label(p)
    }

    pub fn label_uncounted(&self, p: &[usize]) -> i32 {
        self.oracle.label(p)
    }

    /// Exhaustive check of `ℓ(p̄) = −ℓ(p)` on the boundary; returns the
    /// first offending point in row-major order.
    pub fn validate_boundary(&self) -> Result<(), TuckerError> {
        let total = grid_points(self.n, self.grid).ok_or_else(|| TuckerError::TooLarge(format!("{}^{}", self.grid, self.n)))?;
        let mut p = vec![1usize; self.n];
        for _ in 0..total {
            if on_boundary(&p, self.grid) {
                let q = antipode(&p, self.grid);
                if self.label_uncounted(&q) != -self.label_uncounted(&p) {
                    return Err(TuckerError::Boundary(p));
                }
            }
            increment(&mut p, self.grid);
        }
        Ok(())
    }

    /// The two conditions of a Tucker solution.
    pub fn verify(&self, sol: &TuckerSolution) -> bool {
        let in_grid = |p: &[usize]| p.len() == self.n && p.iter().all(|&c| (1..=self.grid).contains(&c));
        if !in_grid(&sol.p) || !in_grid(&sol.q) {
            return false;
        }
        let adjacent = sol.p.iter().zip(&sol.q).all(|(&a, &b)| a.abs_diff(b) <= 1);
        adjacent && self.label_uncounted(&sol.p) == -self.label_uncounted(&sol.q)
    }

    /// Scans unit cells in row-major order of their lower corners and
    /// returns the first complementary pair.
    pub fn solve_brute(&self) -> Result<TuckerSolution, TuckerError> {
        let mut cache = LabelCache::new(self.n, self.grid);
        let mut corner = vec![1usize; self.n];
        let cells = grid_points(self.n, self.grid - 1).ok_or_else(|| TuckerError::TooLarge("cell count".into()))?;
        for _ in 0..cells {
            if let Some(sol) = self.check_cell(&corner, &mut cache) {
                return Ok(sol);
            }
            increment(&mut corner, self.grid - 1);
        }
        Err(TuckerError::NoSolution)
    }

    /// Scans boxes of growing radius around the seeds before falling back
    /// to [`Self::solve_brute`]. Labels are cached across all phases.
    pub fn solve_brute_seeded(&self, seeds: &[Vec<usize>], radii: &[usize]) -> Result<TuckerSolution, TuckerError> {
        let mut cache = LabelCache::new(self.n, self.grid);
        for &r in radii {
            for seed in seeds {
                let lo: Vec<usize> = seed.iter().map(|&c| c.saturating_sub(r).max(1)).collect();
                let hi: Vec<usize> = seed.iter().map(|&c| (c + r).min(self.grid - 1)).collect();
                if lo.iter().zip(&hi).any(|(a, b)| a > b) {
                    continue;
                }
                let mut corner = lo.clone();
                loop {
                    if let Some(sol) = self.check_cell(&corner, &mut cache) {
                        return Ok(sol);
                    }
                    if !increment_box(&mut corner, &lo, &hi) {
                        break;
                    }
                }
            }
        }
        let mut corner = vec![1usize; self.n];
        let cells = grid_points(self.n, self.grid - 1).ok_or_else(|| TuckerError::TooLarge("cell count".into()))?;
        for _ in 0..cells {
            if let Some(sol) = self.check_cell(&corner, &mut cache) {
                return Ok(sol);
            }
            increment(&mut corner, self.grid - 1);
        }
        Err(TuckerError::NoSolution)
    }

    fn check_cell(&self, corner: &[usize], cache: &mut LabelCache) -> Option<TuckerSolution> {
        let n = self.n;
        let count = 1usize << n;
        let mut verts: Vec<Vec<usize>> = Vec::with_capacity(count);
        let mut labels: Vec<i32> = Vec::with_capacity(count);
        for mask in 0..count {
            // first coordinate varies slowest
            let v: Vec<usize> = (0..n).map(|i| corner[i] + ((mask >> (n - 1 - i)) & 1)).collect();
            let l = cache.get_or_query(&v, || self.label(&v));
            verts.push(v);
            labels.push(l);
        }
        for u in 0..count {
            for w in u + 1..count {
                if labels[u] == -labels[w] {
                    return Some(TuckerSolution { p: verts[u].clone(), q: verts[w].clone() });
                }
            }
        }
        None
    }
}

enum LabelCache {
    Dense { grid: usize, labels: Vec<i8> },
    Sparse { grid: usize, labels: HashMap<u128, i32> },
}

impl LabelCache {
    fn new(n: usize, grid: usize) -> Self {
        match grid_points(n, grid) {
            Some(total) if total <= 1 << 27 && n <= 127 => LabelCache::Dense { grid, labels: vec![0; total] },
            _ => LabelCache::Sparse { grid, labels: HashMap::new() },
        }
    }

    fn get_or_query(&mut self, p: &[usize], query: impl FnOnce() -> i32) -> i32 {
        match self {
            LabelCache::Dense { grid, labels } => {
                let k = flatten(p, *grid);
                if labels[k] == 0 {
                    labels[k] = query() as i8;
                }
                labels[k] as i32
            }
            LabelCache::Sparse { grid, labels } => {
                let k = p.iter().fold(0u128, |acc, &c| acc * *grid as u128 + (c - 1) as u128);
                *labels.entry(k).or_insert_with(query)
            }
        }
    }
}

fn increment(p: &mut [usize], max: usize) {
    for c in p.iter_mut().rev() {
        if *c < max {
            *c += 1;
            return;
        }
        *c = 1;
    }
}

fn increment_box(p: &mut [usize], lo: &[usize], hi: &[usize]) -> bool {
    for i in (0..p.len()).rev() {
        if p[i] < hi[i] {
            p[i] += 1;
            return true;
        }
        p[i] = lo[i];
    }
    false
}

/// Random valid instance: uniform labels on the interior and on the
/// lexicographically smaller half of each antipodal boundary pair, mirrored
/// with negation onto the other half.
pub fn random_instance(n: usize, grid: usize, seed: u64) -> Result<TuckerInstance, TuckerError> {
    Ok(TuckerInstance::from_explicit(random_labels(n, grid, seed)?)?)
}

pub fn random_labels(n: usize, grid: usize, seed: u64) -> Result<ExplicitLabels, TuckerError> {
    check_shape(n, grid)?;
    let total = grid_points(n, grid).filter(|&t| t <= 1 << 26).ok_or_else(|| TuckerError::TooLarge(format!("{grid}^{n}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = vec![0i32; total];
    let draw = |rng: &mut ChaCha8Rng| {
        let mag = rng.gen_range(1..=n as i32);
        if rng.gen_bool(0.5) {
            mag
        } else {
            -mag
        }
    };
    for k in 0..total {
        if labels[k] != 0 {
            continue;
        }
        let p = unflatten(k, n, grid);
        let l = draw(&mut rng);
        labels[k] = l;
        if on_boundary(&p, grid) {
            let q = antipode(&p, grid);
            let kq = flatten(&q, grid);
            // the antipode of a boundary point is never itself
            labels[kq] = -l;
        }
    }
    let t = ExplicitLabels::new(n, grid, labels)?;
    let inst = TuckerInstance::new(n, grid, Arc::new(t.clone()))?;
    inst.validate_boundary()?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn explicit(n: usize, grid: usize, labels: Vec<i32>) -> TuckerInstance {
        TuckerInstance::from_explicit(ExplicitLabels::new(n, grid, labels).unwrap()).unwrap()
    }

    fn two_by_two() -> TuckerInstance {
        // row-major: (1,1), (1,2), (2,1), (2,2)
        explicit(2, 2, vec![1, 2, -2, -1])
    }

    #[test]
    fn validate_examples() {
        assert!(explicit(1, 3, vec![1, 1, -1]).validate_boundary().is_ok());
        assert_eq!(explicit(1, 3, vec![1, 1, 1]).validate_boundary().unwrap_err(), TuckerError::Boundary(vec![1]));
        assert!(two_by_two().validate_boundary().is_ok());
    }

    #[test]
    fn brute_examples() {
        let t = explicit(1, 3, vec![1, 1, -1]);
        assert_eq!(t.solve_brute().unwrap(), TuckerSolution { p: vec![2], q: vec![3] });
        let t = two_by_two();
        let sol = t.solve_brute().unwrap();
        assert_eq!(sol, TuckerSolution { p: vec![1, 1], q: vec![2, 2] });
        assert!(t.verify(&sol));
    }

    #[test]
    fn brute_respects_query_bound() {
        for seed in 0..20 {
            let t = random_instance(2, 9, seed).unwrap();
            let sol = t.solve_brute().unwrap();
            assert!(t.verify(&sol));
            assert!(t.query_count() <= 81);
        }
    }

    #[test]
    fn random_instance_is_deterministic() {
        let a = random_labels(2, 7, 42).unwrap();
        let b = random_labels(2, 7, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, random_labels(2, 7, 43).unwrap());
    }

    #[test]
    fn invalid_instance_reports_no_solution() {
        let t = explicit(1, 2, vec![1, 1]);
        assert_eq!(t.solve_brute().unwrap_err(), TuckerError::NoSolution);
    }

    #[test]
    fn seeded_scan_agrees_with_verify() {
        let t = random_instance(3, 6, 7).unwrap();
        let sol = t.solve_brute_seeded(&[vec![3, 3, 3]], &[1, 2]).unwrap();
        assert!(t.verify(&sol));
    }

    #[test]
    fn flatten_roundtrip() {
        for k in 0..125 {
            assert_eq!(flatten(&unflatten(k, 3, 5), 5), k);
        }
        assert_eq!(unflatten(1, 2, 2), vec![1, 2]);
    }

    #[test]
    fn explicit_rejects_bad_labels() {
        assert!(matches!(ExplicitLabels::new(1, 3, vec![1, 0, -1]), Err(TuckerError::BadLabel { .. })));
        assert!(matches!(ExplicitLabels::new(1, 3, vec![1, 2, -1]), Err(TuckerError::BadLabel { .. })));
        assert!(matches!(ExplicitLabels::new(1, 3, vec![1]), Err(TuckerError::LabelCount { .. })));
    }
}
