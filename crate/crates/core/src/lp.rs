//! Dense two-phase simplex for the small linear programs over TIN regions.
//!
//! Problems have the form `maximize c.x` subject to rows `a.x (<=|>=|=) b`
//! and `x >= 0`. Bland's rule is used for both entering and leaving
//! variables, so degenerate vertices (common for cycle bounds sharing a
//! vertex) cannot make the method cycle.

use crate::error::{Result, TinError};

const PIVOT_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const RATIO_TIE: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn le(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Le,
            rhs,
        }
    }

    pub fn ge(coeffs: Vec<f64>, rhs: f64) -> Self {
        Self {
            coeffs,
            relation: Relation::Ge,
            rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    /// Dual multipliers, one per constraint in input order.
    pub dual: Vec<f64>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn push(&mut self, constraint: Constraint) {
        debug_assert_eq!(constraint.coeffs.len(), self.objective.len());
        self.constraints.push(constraint);
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        Tableau::build(self).solve(self)
    }

    /// Checks primal feasibility of `x`, dual feasibility of `y` and equality
    /// of both objective values, all within `tol`.
    pub fn certify(&self, sol: &LpSolution, tol: f64) -> bool {
        let primal_ok = sol.x.iter().all(|&v| v >= -tol)
            && self.constraints.iter().all(|c| {
                let lhs: f64 = c.coeffs.iter().zip(&sol.x).map(|(a, x)| a * x).sum();
                match c.relation {
                    Relation::Le => lhs <= c.rhs + tol,
                    Relation::Ge => lhs >= c.rhs - tol,
                    Relation::Eq => (lhs - c.rhs).abs() <= tol,
                }
            });
        let sign_ok = self
            .constraints
            .iter()
            .zip(&sol.dual)
            .all(|(c, &y)| match c.relation {
                Relation::Le => y >= -tol,
                Relation::Ge => y <= tol,
                Relation::Eq => true,
            });
        let reduced_ok = (0..self.objective.len()).all(|j| {
            let aty: f64 = self
                .constraints
                .iter()
                .zip(&sol.dual)
                .map(|(c, y)| c.coeffs[j] * y)
                .sum();
            aty >= self.objective[j] - tol
        });
        let primal_value: f64 = self.objective.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
        let dual_value: f64 = self
            .constraints
            .iter()
            .zip(&sol.dual)
            .map(|(c, y)| c.rhs * y)
            .sum();
        primal_ok
            && sign_ok
            && reduced_ok
            && (primal_value - sol.value).abs() <= tol
            && (dual_value - sol.value).abs() <= tol
    }
}

struct Tableau {
    /// `rows x (cols + 1)`, last column is the right-hand side.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_vars: usize,
    n_cols: usize,
    /// Column holding the identity entry of each row in the starting basis.
    identity: Vec<usize>,
    /// Whether the row was multiplied by -1 to make its rhs nonnegative.
    flipped: Vec<bool>,
    artificial_from: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n_vars = lp.objective.len();
        let m = lp.constraints.len();
        let mut rows: Vec<(Vec<f64>, Relation, f64, bool)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coeffs.iter().map(|v| -v).collect(), rel, -c.rhs, true)
                } else {
                    (c.coeffs.clone(), c.relation, c.rhs, false)
                }
            })
            .collect();

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let artificial_from = n_vars + n_slack;
        let n_cols = artificial_from + n_art;

        let mut a = vec![vec![0.0; n_cols + 1]; m];
        let mut basis = vec![0; m];
        let mut identity = vec![0; m];
        let mut flipped = vec![false; m];
        let (mut slack, mut art) = (n_vars, artificial_from);
        for (i, (coeffs, rel, rhs, flip)) in rows.drain(..).enumerate() {
            a[i][..n_vars].copy_from_slice(&coeffs);
            a[i][n_cols] = rhs;
            flipped[i] = flip;
            match rel {
                Relation::Le => {
                    a[i][slack] = 1.0;
                    basis[i] = slack;
                    identity[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    a[i][slack] = -1.0;
                    slack += 1;
                    a[i][art] = 1.0;
                    basis[i] = art;
                    identity[i] = art;
                    art += 1;
                }
                Relation::Eq => {
                    a[i][art] = 1.0;
                    basis[i] = art;
                    identity[i] = art;
                    art += 1;
                }
            }
        }
        Self {
            a,
            basis,
            n_vars,
            n_cols,
            identity,
            flipped,
            artificial_from,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut rc = cost.to_vec();
        for (row, &b) in self.a.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (r, v) in rc.iter_mut().zip(row) {
                    *r -= cb * v;
                }
            }
        }
        rc
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.a[row][col];
        for v in self.a[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.a[row].clone();
        for (i, r) in self.a.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let f = r[col];
            if f != 0.0 {
                for (v, pv) in r.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                r[col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    /// Runs simplex iterations for `cost` over columns `< allowed`.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> Result<()> {
        let rhs = self.n_cols;
        loop {
            let rc = self.reduced_costs(cost);
            let Some(enter) = (0..allowed).find(|&j| rc[j] > PIVOT_TOL) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.a.iter().enumerate() {
                if row[enter] > PIVOT_TOL {
                    let ratio = row[rhs] / row[enter];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((l, best)) => {
                            let tie = RATIO_TIE * best.abs().max(1.0);
                            if ratio < best - tie
                                || (ratio <= best + tie && self.basis[i] < self.basis[l])
                            {
                                Some((i, ratio))
                            } else {
                                Some((l, best))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Err(TinError::Unbounded);
            };
            self.pivot(row, enter);
        }
    }

    fn solve(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let rhs = self.n_cols;
        if self.artificial_from < self.n_cols {
            let mut phase1 = vec![0.0; self.n_cols];
            for c in phase1.iter_mut().skip(self.artificial_from) {
                *c = -1.0;
            }
            self.optimize(&phase1, self.n_cols)?;
            let infeasibility: f64 = self
                .a
                .iter()
                .zip(&self.basis)
                .filter(|(_, &b)| b >= self.artificial_from)
                .map(|(row, _)| row[rhs])
                .sum();
            if infeasibility > FEAS_TOL {
                return Err(TinError::EmptyRegion);
            }
            // drive zero-valued artificials out of the basis where possible
            for i in 0..self.a.len() {
                if self.basis[i] >= self.artificial_from {
                    if let Some(col) =
                        (0..self.artificial_from).find(|&j| self.a[i][j].abs() > PIVOT_TOL)
                    {
                        self.pivot(i, col);
                    }
                }
            }
        }

        let mut cost = vec![0.0; self.n_cols];
        cost[..self.n_vars].copy_from_slice(&lp.objective);
        self.optimize(&cost, self.artificial_from)?;

        let mut x = vec![0.0; self.n_vars];
        for (row, &b) in self.a.iter().zip(&self.basis) {
            if b < self.n_vars {
                x[b] = row[rhs];
            }
        }
        let rc = self.reduced_costs(&cost);
        let dual = self
            .identity
            .iter()
            .zip(&self.flipped)
            .map(|(&col, &flip)| {
                let y = -rc[col];
                if flip {
                    -y
                } else {
                    y
                }
            })
            .collect();
        let value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { value, x, dual })
    }
}
