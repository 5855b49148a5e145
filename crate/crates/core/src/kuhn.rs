//! Kuhn triangulation of the grid `D_m^n = {0, 1/m, …, 1}^n` and
//! piecewise-linear interpolation of grid functions.

use thiserror::Error;

pub const BARY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KuhnError {
    #[error("coordinate {index} = {value} lies outside [0, 1]")]
    OutOfDomain { index: usize, value: f64 },
    #[error("grid resolution must be at least 1")]
    ZeroResolution,
}

/// Simplex `{y⁰, …, yⁿ}` with `y⁰ = base/m` and `yⁱ = yⁱ⁻¹ + e_{π(i)}/m`.
/// Grid vertices are integer index vectors in `{0, …, m}ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct KuhnSimplex {
    pub base: Vec<usize>,
    /// Zero-based coordinate indices.
    pub perm: Vec<usize>,
}

impl KuhnSimplex {
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    /// Vertex `yⁱ` as a grid index vector.
    pub fn vertex(&self, i: usize) -> Vec<usize> {
        let mut v = self.base.clone();
        for &c in &self.perm[..i] {
            v[c] += 1;
        }
        v
    }

    pub fn vertices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::with_capacity(self.dim() + 1);
        let mut v = self.base.clone();
        out.push(v.clone());
        for &c in &self.perm {
            v[c] += 1;
            out.push(v.clone());
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Barycentric {
    pub alpha: Vec<f64>,
    /// Local offset `z = m·(x − y⁰)`.
    pub z: Vec<f64>,
}

/// Finds the Kuhn simplex containing `x` and its barycentric coordinates.
pub fn locate(x: &[f64], m: usize) -> Result<(KuhnSimplex, Barycentric), KuhnError> {
    if m == 0 {
        return Err(KuhnError::ZeroResolution);
    }
    let mf = m as f64;
    let mut base = Vec::with_capacity(x.len());
    let mut z = Vec::with_capacity(x.len());
    for (index, &value) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) {
            return Err(KuhnError::OutOfDomain { index, value });
        }
        let b = ((value * mf).floor() as usize).min(m - 1);
        base.push(b);
        z.push((value * mf - b as f64).clamp(0.0, 1.0));
    }
    let mut perm: Vec<usize> = (0..x.len()).collect();
    perm.sort_by(|&a, &b| z[b].partial_cmp(&z[a]).expect("finite offsets"));
    let alpha = alpha_from_offsets(&z, &perm);
    Ok((KuhnSimplex { base, perm }, Barycentric { alpha, z }))
}

fn alpha_from_offsets(z: &[f64], perm: &[usize]) -> Vec<f64> {
    let n = z.len();
    let mut alpha = Vec::with_capacity(n + 1);
    if n == 0 {
        alpha.push(1.0);
        return alpha;
    }
    alpha.push(1.0 - z[perm[0]]);
    for i in 1..n {
        alpha.push(z[perm[i - 1]] - z[perm[i]]);
    }
    alpha.push(z[perm[n - 1]]);
    alpha
}

/// Barycentric coordinates of `x` relative to an arbitrary Kuhn simplex.
/// All entries are `≥ −BARY_TOL` exactly when `x` lies in the simplex.
pub fn barycentric_in(simplex: &KuhnSimplex, x: &[f64], m: usize) -> Vec<f64> {
    let z: Vec<f64> = x.iter().zip(&simplex.base).map(|(&xi, &b)| xi * m as f64 - b as f64).collect();
    alpha_from_offsets(&z, &simplex.perm)
}

/// Interpolates a grid function given as a callback on index vectors.
/// Vertices with zero weight are skipped, so exactly one call is made at
/// grid vertices.
pub fn interpolate<E>(
    x: &[f64],
    m: usize,
    mut f: impl FnMut(&[usize]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E>
where
    E: From<KuhnError>,
{
    let (simplex, bary) = locate(x, m)?;
    interpolate_in(&simplex, &bary.alpha, &mut f)
}

/// `Σ αᵢ f(yⁱ)` over a known simplex.
pub fn interpolate_in<E>(
    simplex: &KuhnSimplex,
    alpha: &[f64],
    mut f: impl FnMut(&[usize]) -> Result<Vec<f64>, E>,
) -> Result<Vec<f64>, E> {
    let mut acc: Option<Vec<f64>> = None;
    let mut v = simplex.base.clone();
    for (i, &a) in alpha.iter().enumerate() {
        if i > 0 {
            v[simplex.perm[i - 1]] += 1;
        }
        if a == 0.0 && !(acc.is_none() && i == alpha.len() - 1) {
            continue;
        }
        let val = f(&v)?;
        match acc.as_mut() {
            None => acc = Some(val.iter().map(|y| a * y).collect()),
            Some(s) => s.iter_mut().zip(&val).for_each(|(s, y)| *s += a * y),
        }
    }
    Ok(acc.expect("at least one vertex has positive weight"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn locate_one_dimensional() {
        let (s, b) = locate(&[0.3], 1).unwrap();
        assert_eq!(s.base, vec![0]);
        assert!(close(&b.alpha, &[0.7, 0.3]));
    }

    #[test]
    fn locate_two_dimensional() {
        let (s, b) = locate(&[0.6, 0.2], 1).unwrap();
        assert_eq!(s.base, vec![0, 0]);
        assert_eq!(s.perm, vec![0, 1]);
        assert!(close(&b.alpha, &[0.4, 0.4, 0.2]));
        assert_eq!(s.vertices(), vec![vec![0, 0], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn upper_boundary_goes_to_last_cube() {
        let (s, b) = locate(&[1.0, 0.5], 4).unwrap();
        assert_eq!(s.base, vec![3, 2]);
        assert_eq!(b.z, vec![1.0, 0.0]);
    }

    #[test]
    fn locate_rejects_outside() {
        assert_eq!(locate(&[1.5], 2).unwrap_err(), KuhnError::OutOfDomain { index: 0, value: 1.5 });
        assert_eq!(locate(&[0.5], 0).unwrap_err(), KuhnError::ZeroResolution);
    }

    #[test]
    fn interpolation_examples() {
        let f = |v: &[usize]| -> Result<Vec<f64>, KuhnError> {
            Ok(vec![match v {
                [0, 0] => 0.0,
                [1, 0] => 1.0,
                [1, 1] => 3.0,
                _ => 100.0,
            }])
        };
        let y = interpolate(&[0.6, 0.2], 1, f).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-12);

        let g = |v: &[usize]| -> Result<Vec<f64>, KuhnError> { Ok(vec![if v[0] == 0 { 2.0 } else { 5.0 }]) };
        assert!((interpolate(&[0.5], 1, g).unwrap()[0] - 3.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_makes_single_call() {
        let mut calls = 0;
        let y = interpolate(&[0.25, 0.5], 4, |v: &[usize]| -> Result<Vec<f64>, KuhnError> {
            calls += 1;
            Ok(vec![(v[0] * 10 + v[1]) as f64])
        })
        .unwrap();
        assert_eq!(y, vec![12.0]);
        assert_eq!(calls, 1);
    }
}
