//! Exact two-phase primal simplex over rationals.
//!
//! The LPs in this crate are all of the covering form `min c·x` subject to
//! `A·x ≥ b`, `x ≥ 0`. Pivoting follows Bland's rule (lowest eligible
//! index for both entering and leaving variables), which guarantees
//! termination without any perturbation and makes every solve
//! deterministic for a fixed input ordering.

use num::{Signed, Zero};
use thiserror::Error;

use crate::model::Rat;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimplexError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
}

/// `coeffs · x ≥ rhs`, with sparse coefficients.
#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<(usize, Rat)>,
    pub rhs: Rat,
}

/// Minimization LP with implicit bounds `x ≥ 0` and `≥` constraints only.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<Rat>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexSolution {
    pub values: Vec<Rat>,
    pub objective: Rat,
}

struct Tableau {
    // rows[i] has ncols coefficient entries followed by the rhs
    rows: Vec<Vec<Rat>>,
    cost: Vec<Rat>, // reduced costs, ncols entries
    basis: Vec<usize>,
    eligible: Vec<bool>,
    ncols: usize,
}

impl Tableau {
    fn rhs(&self, i: usize) -> &Rat {
        &self.rows[i][self.ncols]
    }

    fn pivot(&mut self, prow: usize, pcol: usize) {
        let piv = self.rows[prow][pcol].clone();
        debug_assert!(!piv.is_zero());
        for x in self.rows[prow].iter_mut() {
            if !x.is_zero() {
                *x /= &piv;
            }
        }
        let pivot_row = self.rows[prow].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == prow || row[pcol].is_zero() {
                continue;
            }
            let factor = row[pcol].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        if !self.cost[pcol].is_zero() {
            let factor = self.cost[pcol].clone();
            for (x, p) in self.cost.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        self.basis[prow] = pcol;
    }

    /// Bland: entering = lowest eligible column with negative reduced cost;
    /// leaving = lowest basic variable among the minimum-ratio rows.
    fn optimize(&mut self) -> Result<(), SimplexError> {
        loop {
            let entering = (0..self.ncols)
                .find(|&j| self.eligible[j] && self.cost[j].is_negative());
            let Some(jcol) = entering else {
                return Ok(());
            };

            let mut leaving: Option<(usize, Rat)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][jcol];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                leaving = match leaving {
                    None => Some((i, ratio)),
                    Some((best_i, best)) => {
                        if ratio < best
                            || (ratio == best && self.basis[i] < self.basis[best_i])
                        {
                            Some((i, ratio))
                        } else {
                            Some((best_i, best))
                        }
                    }
                };
            }
            match leaving {
                Some((irow, _)) => self.pivot(irow, jcol),
                None => return Err(SimplexError::Unbounded),
            }
        }
    }

    /// Rebuilds the reduced-cost row for a cost vector over all columns.
    fn load_costs(&mut self, full_costs: &[Rat]) {
        self.cost = full_costs.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if full_costs[b].is_zero() {
                continue;
            }
            let cb = full_costs[b].clone();
            let row = self.rows[i].clone();
            for (x, p) in self.cost.iter_mut().zip(&row) {
                if !p.is_zero() {
                    *x -= &cb * p;
                }
            }
        }
    }
}

/// Solves the LP exactly, returning an optimal basic solution.
pub fn simplex_solve(lp: &LinearProgram) -> Result<SimplexSolution, SimplexError> {
    let n = lp.num_vars;
    assert_eq!(lp.objective.len(), n);

    // Rows in standard form a·x ∓ s = b with b ≥ 0; whether the row needs
    // an artificial variable is tracked alongside.
    let mut dense_rows: Vec<(Vec<Rat>, Rat, bool)> = Vec::new();
    for c in &lp.constraints {
        let mut coeffs = vec![Rat::zero(); n];
        for (j, v) in &c.coeffs {
            assert!(*j < n, "constraint references unknown variable");
            coeffs[*j] += v;
        }
        if coeffs.iter().all(|v| v.is_zero()) {
            if c.rhs.is_positive() {
                return Err(SimplexError::Infeasible);
            }
            continue;
        }
        // a·x ≥ b ⇒ a·x − s = b. If b < 0, negate to −a·x + s = −b so the
        // surplus column can start basic.
        if c.rhs.is_negative() {
            let coeffs: Vec<Rat> = coeffs.into_iter().map(|v| -v).collect();
            dense_rows.push((coeffs, -c.rhs.clone(), false));
        } else {
            dense_rows.push((coeffs, c.rhs.clone(), true));
        }
    }

    let m = dense_rows.len();
    let art_count = dense_rows.iter().filter(|(_, _, a)| *a).count();
    let ncols = n + m + art_count;

    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    let mut next_art = n + m;
    for (i, (coeffs, rhs, needs_art)) in dense_rows.into_iter().enumerate() {
        let mut row = vec![Rat::zero(); ncols + 1];
        row[..n].clone_from_slice(&coeffs);
        let surplus_sign = if needs_art { -1 } else { 1 };
        row[n + i] = crate::model::rat_int(surplus_sign);
        if needs_art {
            row[next_art] = crate::model::rat_int(1);
            basis.push(next_art);
            next_art += 1;
        } else {
            basis.push(n + i);
        }
        row[ncols] = rhs;
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        cost: vec![Rat::zero(); ncols],
        basis,
        eligible: vec![true; ncols],
        ncols,
    };

    // Phase 1: minimize the artificial total.
    if art_count > 0 {
        let mut phase1: Vec<Rat> = vec![Rat::zero(); ncols];
        for c in phase1.iter_mut().take(ncols).skip(n + m) {
            *c = crate::model::rat_int(1);
        }
        tab.load_costs(&phase1);
        tab.optimize().expect("phase 1 is bounded below by zero");

        let mut infeasibility = Rat::zero();
        for (i, &b) in tab.basis.iter().enumerate() {
            if b >= n + m {
                infeasibility += tab.rhs(i);
            }
        }
        if !infeasibility.is_zero() {
            return Err(SimplexError::Infeasible);
        }

        // Drive remaining (degenerate) artificials out of the basis.
        let mut redundant = Vec::new();
        for i in 0..tab.rows.len() {
            if tab.basis[i] < n + m {
                continue;
            }
            match (0..n + m).find(|&j| !tab.rows[i][j].is_zero()) {
                Some(j) => tab.pivot(i, j),
                None => redundant.push(i),
            }
        }
        for &i in redundant.iter().rev() {
            tab.rows.remove(i);
            tab.basis.remove(i);
        }
        for j in n + m..ncols {
            tab.eligible[j] = false;
        }
    }

    // Phase 2: the real objective.
    let mut full = vec![Rat::zero(); ncols];
    full[..n].clone_from_slice(&lp.objective);
    tab.load_costs(&full);
    tab.optimize()?;

    let mut values = vec![Rat::zero(); n];
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            values[b] = tab.rhs(i).clone();
        }
    }
    let mut objective = Rat::zero();
    for (v, c) in values.iter().zip(&lp.objective) {
        objective += v * c;
    }
    Ok(SimplexSolution { values, objective })
}
