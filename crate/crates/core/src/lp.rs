//! Exact two-phase simplex over arbitrary-precision rationals.
//!
//! Dense tableau, Bland's rule for both the entering and the leaving
//! variable. The feasible region can be prepared once (phase one) and then
//! optimized for many objectives, which is how the per-(action, signal)
//! explorability programs share work.

use num_traits::{Signed, Zero};

use crate::rational::Q;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub relation: Relation,
    pub rhs: Q,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, relation: Relation, rhs: Q) -> Self {
        Constraint { coeffs, relation, rhs }
    }

    pub fn lhs(&self, x: &[Q]) -> Q {
        self.coeffs
            .iter()
            .zip(x)
            .filter(|(c, _)| !c.is_zero())
            .fold(Q::zero(), |acc, (c, v)| acc + c * v)
    }

    pub fn is_satisfied(&self, x: &[Q]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// `max c·x` subject to the constraints, `x >= 0` and optional upper bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<Q>,
    pub constraints: Vec<Constraint>,
    pub upper_bounds: Vec<Option<Q>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<Q>,
    pub objective_value: Q,
}

impl LpSolution {
    fn without_point(status: LpStatus, n: usize) -> Self {
        LpSolution { status, x: vec![Q::zero(); n], objective_value: Q::zero() }
    }
}

impl LinearProgram {
    pub fn new(objective: Vec<Q>) -> Self {
        let n = objective.len();
        LinearProgram { objective, constraints: Vec::new(), upper_bounds: vec![None; n] }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<Q>, relation: Relation, rhs: Q) -> &mut Self {
        assert_eq!(coeffs.len(), self.num_vars(), "constraint row length must match objective");
        self.constraints.push(Constraint::new(coeffs, relation, rhs));
        self
    }

    pub fn set_upper_bound(&mut self, var: usize, bound: Q) -> &mut Self {
        self.upper_bounds[var] = Some(bound);
        self
    }

    pub fn is_feasible_point(&self, x: &[Q]) -> bool {
        x.len() == self.num_vars()
            && x.iter().all(|v| !v.is_negative())
            && self.upper_bounds.iter().zip(x).all(|(ub, v)| ub.as_ref().is_none_or(|ub| v <= ub))
            && self.constraints.iter().all(|c| c.is_satisfied(x))
    }

    pub fn solve(&self) -> LpSolution {
        match FeasibleRegion::new(self.num_vars(), &self.constraints, &self.upper_bounds) {
            Some(region) => region.maximize(&self.objective),
            None => LpSolution::without_point(LpStatus::Infeasible, self.num_vars()),
        }
    }
}

/// A feasible basis for a fixed constraint system, ready for phase two.
#[derive(Clone, Debug)]
pub struct FeasibleRegion {
    num_vars: usize,
    /// Columns: original variables, then slack/surplus. Last entry of each row is the rhs.
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
}

impl FeasibleRegion {
    /// Runs phase one; `None` when the system is infeasible.
    pub fn new(num_vars: usize, constraints: &[Constraint], upper_bounds: &[Option<Q>]) -> Option<Self> {
        let mut normalized: Vec<(Vec<Q>, Relation, Q)> = Vec::new();
        for c in constraints {
            assert_eq!(c.coeffs.len(), num_vars);
            normalized.push((c.coeffs.clone(), c.relation, c.rhs.clone()));
        }
        for (j, ub) in upper_bounds.iter().enumerate() {
            if let Some(ub) = ub {
                let mut row = vec![Q::zero(); num_vars];
                row[j] = Q::from_integer(1.into());
                normalized.push((row, Relation::Le, ub.clone()));
            }
        }
        for (row, rel, rhs) in normalized.iter_mut() {
            if rhs.is_negative() {
                for v in row.iter_mut() {
                    *v = -v.clone();
                }
                *rhs = -rhs.clone();
                *rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
        }

        let m = normalized.len();
        let num_slack = normalized.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
        let num_art = normalized.iter().filter(|(_, r, _)| *r != Relation::Le).count();
        let first_art = num_vars + num_slack;
        let width = first_art + num_art;
        let one = Q::from_integer(1.into());

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (num_vars, first_art);
        for (coeffs, rel, rhs) in normalized {
            let mut row = coeffs;
            row.resize(width + 1, Q::zero());
            match rel {
                Relation::Le => {
                    row[next_slack] = one.clone();
                    basis.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -one.clone();
                    next_slack += 1;
                    row[next_art] = one.clone();
                    basis.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = one.clone();
                    basis.push(next_art);
                    next_art += 1;
                }
            }
            row[width] = rhs;
            rows.push(row);
        }

        let mut tab = Tableau { rows, basis, z: vec![Q::zero(); width + 1], width };
        if num_art > 0 {
            // maximize -sum(artificials)
            for (i, &b) in tab.basis.iter().enumerate() {
                if b >= first_art {
                    for j in 0..=width {
                        tab.z[j] -= &tab.rows[i][j];
                    }
                }
            }
            for j in first_art..width {
                tab.z[j] += &one;
            }
            let bounded = tab.run(width);
            debug_assert!(bounded, "phase one is always bounded");
            if tab.z[width].is_negative() {
                return None;
            }
            // Drive zero-level artificials out of the basis; drop redundant rows.
            let mut i = 0;
            while i < tab.rows.len() {
                if tab.basis[i] >= first_art {
                    match (0..first_art).find(|&j| !tab.rows[i][j].is_zero()) {
                        Some(j) => {
                            tab.pivot(i, j);
                            i += 1;
                        }
                        None => {
                            tab.rows.remove(i);
                            tab.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
            for row in tab.rows.iter_mut() {
                let rhs = row[width].clone();
                row.truncate(first_art);
                row.push(rhs);
            }
        }
        Some(FeasibleRegion { num_vars, rows: tab.rows, basis: tab.basis })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    /// Phase two from the prepared basis.
    pub fn maximize(&self, objective: &[Q]) -> LpSolution {
        assert_eq!(objective.len(), self.num_vars);
        let width = self.rows.first().map_or(self.num_vars, |r| r.len() - 1);
        let cost = |j: usize| -> Q {
            if j < self.num_vars {
                objective[j].clone()
            } else {
                Q::zero()
            }
        };
        let mut z = vec![Q::zero(); width + 1];
        for j in 0..width {
            z[j] = -cost(j);
        }
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost(b);
            if cb.is_zero() {
                continue;
            }
            for j in 0..=width {
                if !self.rows[i][j].is_zero() {
                    z[j] += &cb * &self.rows[i][j];
                }
            }
        }
        let mut tab = Tableau { rows: self.rows.clone(), basis: self.basis.clone(), z, width };
        if !tab.run(width) {
            return LpSolution::without_point(LpStatus::Unbounded, self.num_vars);
        }
        let mut x = vec![Q::zero(); self.num_vars];
        for (i, &b) in tab.basis.iter().enumerate() {
            if b < self.num_vars {
                x[b] = tab.rows[i][width].clone();
            }
        }
        LpSolution { status: LpStatus::Optimal, x, objective_value: tab.z[width].clone() }
    }
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// Reduced-cost row `c_B B^-1 A - c`; last entry is the objective value.
    z: Vec<Q>,
    width: usize,
}

impl Tableau {
    /// Pivots until optimal (true) or unbounded (false). Columns `>= limit` never enter.
    fn run(&mut self, limit: usize) -> bool {
        loop {
            let Some(enter) = (0..limit).find(|&j| self.z[j].is_negative()) else {
                return true;
            };
            let mut leave: Option<(usize, Q)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][enter];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rows[i][self.width] / a;
                let better = match &leave {
                    None => true,
                    Some((k, best)) => ratio < *best || (ratio == *best && self.basis[i] < self.basis[*k]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
            match leave {
                Some((i, _)) => self.pivot(i, enter),
                None => return false,
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v /= &p;
            }
        }
        let nonzero: Vec<usize> = (0..=self.width).filter(|&j| !self.rows[r][j].is_zero()).collect();
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let eliminate = |row: &mut Vec<Q>| {
            let factor = row[c].clone();
            if factor.is_zero() {
                return;
            }
            for &j in &nonzero {
                row[j] -= &factor * &pivot_row[j];
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.z);
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }
}
