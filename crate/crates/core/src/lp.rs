//! Exact two-phase simplex over rationals (Bland's rule) and the
//! piecewise-constant region-assignment LPs.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::intervals::{CutPartition, IntervalSet, Sign, Q};
use crate::valuations::PiecewiseConstantValuation;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `minimize cᵀx` subject to the constraints and `x ≥ 0`.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Q>,
    pub constraints: Vec<(Vec<Q>, Relation, Q)>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Q {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            *v = &*v / &p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v = &*v - &f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_cost(&self, cost: &[Q], j: usize) -> Q {
        let mut r = cost[j].clone();
        for (i, row) in self.rows.iter().enumerate() {
            let cb = &cost[self.basis[i]];
            if !cb.is_zero() && !row[j].is_zero() {
                r -= cb * &row[j];
            }
        }
        r
    }

    /// Bland's rule; `false` on unboundedness.
    fn optimize(&mut self, cost: &[Q], allowed: usize) -> bool {
        loop {
            let entering = (0..allowed).find(|&j| !self.basis.contains(&j) && self.reduced_cost(cost, j).is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][c];
                if a.is_positive() {
                    let ratio = self.rhs(i) / a;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }

    fn objective(&self, cost: &[Q]) -> Q {
        self.basis.iter().enumerate().fold(Q::zero(), |acc, (i, &b)| acc + &cost[b] * self.rhs(i))
    }
}

pub fn minimize(lp: &LinearProgram) -> LpOutcome {
    let n = lp.num_vars;
    let mut rows: Vec<(Vec<Q>, Relation, Q)> = lp.constraints.clone();
    for (a, rel, b) in rows.iter_mut() {
        if b.is_negative() {
            a.iter_mut().for_each(|v| *v = -v.clone());
            *b = -b.clone();
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let slacks = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificials = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = n + slacks;
    let cols = art_start + artificials;
    let mut t = Tableau { rows: Vec::with_capacity(rows.len()), basis: Vec::with_capacity(rows.len()), cols };
    let (mut s, mut a) = (n, art_start);
    for (coef, rel, b) in &rows {
        let mut row = vec![Q::zero(); cols + 1];
        row[..n].clone_from_slice(coef);
        row[cols] = b.clone();
        match rel {
            Relation::Le => {
                row[s] = Q::one();
                t.basis.push(s);
                s += 1;
            }
            Relation::Ge => {
                row[s] = -Q::one();
                s += 1;
                row[a] = Q::one();
                t.basis.push(a);
                a += 1;
            }
            Relation::Eq => {
                row[a] = Q::one();
                t.basis.push(a);
                a += 1;
            }
        }
        t.rows.push(row);
    }

    if artificials > 0 {
        let mut phase1 = vec![Q::zero(); cols];
        phase1[art_start..].iter_mut().for_each(|c| *c = Q::one());
        t.optimize(&phase1, cols);
        if t.objective(&phase1).is_positive() {
            return LpOutcome::Infeasible;
        }
        // drive zero-level artificials out of the basis
        let mut i = 0;
        while i < t.rows.len() {
            if t.basis[i] >= art_start {
                match (0..art_start).find(|&j| !t.rows[i][j].is_zero()) {
                    Some(j) => t.pivot(i, j),
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }

    let mut cost = vec![Q::zero(); cols];
    cost[..n].clone_from_slice(&lp.objective);
    if !t.optimize(&cost, art_start) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs(i).clone();
        }
    }
    let value = t.objective(&cost);
    LpOutcome::Optimal { x, value }
}

/// Exact solution of the region-assignment LPs.
#[derive(Clone, Debug, PartialEq)]
pub struct PcSolution {
    pub partition: CutPartition,
    pub z: Q,
    /// Number of assignments tried before (and including) the winning one.
    pub assignments: usize,
}

/// Merged breakpoints of all agents.
pub fn merged_breakpoints(agents: &[PiecewiseConstantValuation]) -> Vec<Q> {
    let mut bp: Vec<Q> = agents.iter().flat_map(|a| a.breakpoints().iter().cloned()).collect();
    bp.sort();
    bp.dedup();
    bp
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(cur.clone());
        let Some(i) = (0..k).rev().find(|&i| cur[i] < n - k + i) else { return out };
        cur[i] += 1;
        for j in i + 1..k {
            cur[j] = cur[j - 1] + 1;
        }
    }
}

struct Regions {
    bounds: Vec<Q>,
    widths: Vec<Q>,
    /// `density[i][r]`
    density: Vec<Vec<Q>>,
}

impl Regions {
    fn new(agents: &[PiecewiseConstantValuation]) -> Self {
        let bounds = merged_breakpoints(agents);
        let widths: Vec<Q> = bounds.windows(2).map(|w| &w[1] - &w[0]).collect();
        let density = agents
            .iter()
            .map(|a| {
                bounds
                    .windows(2)
                    .zip(&widths)
                    .map(|(w, width)| {
                        let set = IntervalSet::interval(w[0].clone(), w[1].clone()).expect("ordered breakpoints");
                        a.value_exact(&set) / width
                    })
                    .collect()
            })
            .collect();
        Self { bounds, widths, density }
    }

    fn count(&self) -> usize {
        self.widths.len()
    }

    /// LP over offsets `t_j` of cut `j` inside region `chosen[j]`, plus `z`.
    fn build(&self, chosen: &[usize], leading: Sign) -> LinearProgram {
        let k = chosen.len();
        let nv = k + 1;
        let mut constraints = Vec::new();
        for (j, &r) in chosen.iter().enumerate() {
            let mut a = vec![Q::zero(); nv];
            a[j] = Q::one();
            constraints.push((a, Relation::Le, self.widths[r].clone()));
        }
        for dens in &self.density {
            // D_i(t) = konst + Σ coef_j t_j
            let mut coef = vec![Q::zero(); k];
            let mut konst = Q::zero();
            let mut label = leading;
            let mut next = 0;
            for r in 0..self.count() {
                let d = &dens[r];
                let s = Q::from_integer(label.as_i32().into());
                if next < k && chosen[next] == r {
                    // before the cut: label, after: flipped
                    coef[next] = Q::from_integer(2.into()) * d * &s;
                    konst -= d * &s * &self.widths[r];
                    label = label.flip();
                    next += 1;
                } else {
                    konst += d * &s * &self.widths[r];
                }
            }
            let mut upper = vec![Q::zero(); nv];
            let mut lower = vec![Q::zero(); nv];
            for j in 0..k {
                upper[j] = coef[j].clone();
                lower[j] = -coef[j].clone();
            }
            upper[k] = -Q::one();
            lower[k] = -Q::one();
            constraints.push((upper, Relation::Le, -konst.clone()));
            constraints.push((lower, Relation::Le, konst));
        }
        let mut objective = vec![Q::zero(); nv];
        objective[k] = Q::one();
        LinearProgram { num_vars: nv, objective, constraints }
    }
}

/// Enumerates `k = 0..=n` cuts in distinct regions (lexicographically, "+"
/// leading before "−") and returns the first assignment whose LP reaches
/// `z = 0`.
pub fn solve_piecewise_constant(agents: &[PiecewiseConstantValuation]) -> Option<PcSolution> {
    let regions = Regions::new(agents);
    let n = agents.len();
    let mut tried = 0;
    for k in 0..=n.min(regions.count()) {
        let jobs: Vec<(Vec<usize>, Sign)> =
            combinations(regions.count(), k).into_iter().flat_map(|c| [(c.clone(), Sign::Plus), (c, Sign::Minus)]).collect();
        let found = jobs.par_iter().enumerate().find_map_first(|(idx, (chosen, leading))| match minimize(&regions.build(chosen, *leading)) {
            LpOutcome::Optimal { x, value } if value.is_zero() => Some((idx, chosen.clone(), *leading, x)),
            _ => None,
        });
        match found {
            Some((idx, chosen, leading, x)) => {
                let cuts = chosen.iter().enumerate().map(|(j, &r)| &regions.bounds[r] + &x[j]).collect();
                let partition = CutPartition::new(cuts, leading).expect("cuts inside distinct ordered regions");
                return Some(PcSolution { partition, z: Q::zero(), assignments: tried + idx + 1 });
            }
            None => tried += jobs.len(),
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::intervals::q;

    #[test]
    fn small_lp() {
        // min −x − y, x + 2y ≤ 4, 3x + y ≤ 6
        let lp = LinearProgram {
            num_vars: 2,
            objective: vec![q(-1, 1), q(-1, 1)],
            constraints: vec![(vec![q(1, 1), q(2, 1)], Relation::Le, q(4, 1)), (vec![q(3, 1), q(1, 1)], Relation::Le, q(6, 1))],
        };
        assert_eq!(minimize(&lp), LpOutcome::Optimal { x: vec![q(8, 5), q(6, 5)], value: q(-14, 5) });
    }

    #[test]
    fn phase_one_cases() {
        let infeasible = LinearProgram {
            num_vars: 1,
            objective: vec![q(1, 1)],
            constraints: vec![(vec![q(1, 1)], Relation::Ge, q(2, 1)), (vec![q(1, 1)], Relation::Le, q(1, 1))],
        };
        assert_eq!(minimize(&infeasible), LpOutcome::Infeasible);
        let unbounded = LinearProgram { num_vars: 1, objective: vec![q(-1, 1)], constraints: vec![(vec![q(1, 1)], Relation::Ge, q(1, 1))] };
        assert_eq!(minimize(&unbounded), LpOutcome::Unbounded);
        let eq = LinearProgram {
            num_vars: 2,
            objective: vec![q(1, 1), q(1, 1)],
            constraints: vec![(vec![q(1, 1), q(-1, 1)], Relation::Eq, q(-1, 3)), (vec![q(1, 1), q(1, 1)], Relation::Eq, q(1, 1))],
        };
        assert_eq!(minimize(&eq), LpOutcome::Optimal { x: vec![q(1, 3), q(2, 3)], value: q(1, 1) });
    }

    #[test]
    fn uniform_agent_cut_at_half() {
        let s = solve_piecewise_constant(&[PiecewiseConstantValuation::uniform()]).unwrap();
        assert_eq!(s.partition.cuts, vec![q(1, 2)]);
    }

    #[test]
    fn two_agent_exact() {
        let a2 = PiecewiseConstantValuation::new(vec![q(0, 1), q(1, 2), q(1, 1)], vec![q(2, 1), q(0, 1)]).unwrap();
        let agents = [PiecewiseConstantValuation::uniform(), a2];
        let s = solve_piecewise_constant(&agents).unwrap();
        assert_eq!(s.partition.cuts, vec![q(1, 4), q(3, 4)]);
        let (plus, minus) = s.partition.pieces();
        for a in &agents {
            assert_eq!(a.value_exact(&plus), a.value_exact(&minus));
        }
    }

    #[test]
    fn combinations_lexicographic() {
        assert_eq!(combinations(4, 2), vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
        assert_eq!(combinations(3, 0), vec![Vec::<usize>::new()]);
    }
}
