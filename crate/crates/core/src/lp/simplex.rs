//! Dense two-phase tableau simplex.
//!
//! Entering columns are priced by Dantzig's rule. After a run of degenerate
//! pivots the solver switches to Bland's rule for the rest of the phase, which
//! rules out cycling.

use std::fmt;

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `maximize c·x` subject to the rows and `x ≥ 0`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn add_var(&mut self, name: String, cost: f64) -> usize {
        self.var_names.push(name);
        self.objective.push(cost);
        self.var_names.len() - 1
    }

    pub fn add_row(&mut self, name: String, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row {
            name,
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Largest violation of any row or sign constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0f64, |w, &v| w.max(-v));
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let gap = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(gap);
        }
        worst
    }

    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimplexError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// `∂ objective / ∂ rhs` for every row.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

struct Tableau {
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    a: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
    iterations: usize,
    limit: usize,
}

impl Tableau {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let rhs_col = self.cols;
        let p = self.a[r][c];
        for v in self.a[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = std::mem::take(&mut self.a[r]);
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, &pv) in row.iter_mut().zip(&pivot_row).take(rhs_col + 1) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        self.a[r] = pivot_row;
        self.basis[r] = c;
        self.iterations += 1;
    }

    /// Runs simplex on the objective row over columns allowed by `allowed`.
    fn optimize(&mut self, allowed: &dyn Fn(usize) -> bool) -> Result<(), SimplexError> {
        let m = self.m();
        let rhs = self.cols;
        let mut degenerate = 0usize;
        let mut bland = false;
        loop {
            if self.iterations >= self.limit {
                return Err(SimplexError::IterationLimit(self.limit));
            }
            let obj = &self.a[m];
            let entering = if bland {
                (0..self.cols).find(|&j| allowed(j) && obj[j] < -COST_TOL)
            } else {
                (0..self.cols)
                    .filter(|&j| allowed(j) && obj[j] < -COST_TOL)
                    .min_by(|&i, &j| obj[i].total_cmp(&obj[j]).then(i.cmp(&j)))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let aic = self.a[i][c];
                if aic > PIVOT_TOL {
                    let ratio = self.a[i][rhs] / aic;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-12 || (ratio <= best + 1e-12 && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(SimplexError::Unbounded);
            };
            if ratio.abs() <= 1e-12 {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c);
        }
    }
}

/// Solves the program, returning primal values and row duals.
pub fn solve(lp: &LinearProgram) -> Result<SimplexSolution, SimplexError> {
    let n = lp.num_vars();
    let m = lp.rows.len();

    // Column layout: structural, then one slack/surplus per inequality, then artificials.
    let mut flipped = vec![false; m];
    let mut senses = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let mut sense = row.sense;
        if row.rhs < 0.0 {
            flipped[i] = true;
            sense = match sense {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
        senses.push(sense);
    }
    let mut slack_col = vec![None; m];
    let mut next = n;
    for i in 0..m {
        if senses[i] != Sense::Eq {
            slack_col[i] = Some(next);
            next += 1;
        }
    }
    let first_artificial = next;
    let mut art_col = vec![None; m];
    for i in 0..m {
        if senses[i] != Sense::Le {
            art_col[i] = Some(next);
            next += 1;
        }
    }
    let cols = next;

    let mut a = vec![vec![0.0; cols + 1]; m + 1];
    let mut basis = vec![0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let sign = if flipped[i] { -1.0 } else { 1.0 };
        for &(j, v) in &row.coeffs {
            a[i][j] += sign * v;
        }
        a[i][cols] = sign * row.rhs;
        match senses[i] {
            Sense::Le => {
                let s = slack_col[i].unwrap();
                a[i][s] = 1.0;
                basis[i] = s;
            }
            Sense::Ge => {
                a[i][slack_col[i].unwrap()] = -1.0;
                let r = art_col[i].unwrap();
                a[i][r] = 1.0;
                basis[i] = r;
            }
            Sense::Eq => {
                let r = art_col[i].unwrap();
                a[i][r] = 1.0;
                basis[i] = r;
            }
        }
    }
    let mut t = Tableau {
        a,
        basis,
        cols,
        iterations: 0,
        limit: 50 * (m + cols).max(100),
    };

    // Phase 1: maximise −Σ artificials. Objective row holds reduced costs.
    if first_artificial < cols {
        for i in 0..m {
            if t.basis[i] >= first_artificial {
                for j in 0..=cols {
                    let v = t.a[i][j];
                    t.a[m][j] -= v;
                }
            }
        }
        for j in first_artificial..cols {
            t.a[m][j] = 0.0;
        }
        t.optimize(&|_| true)?;
        let scale = 1.0 + lp.rows.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max);
        if t.a[m][cols] < -1e-9 * scale {
            return Err(SimplexError::Infeasible);
        }
        // Drive zero-level artificials out of the basis where possible.
        for i in 0..m {
            if t.basis[i] >= first_artificial {
                if let Some(c) = (0..first_artificial).find(|&j| t.a[i][j].abs() > PIVOT_TOL) {
                    t.pivot(i, c);
                }
            }
        }
    }

    // Phase 2 objective row: d_j = c_B B⁻¹ A_j − c_j.
    let cost = |j: usize| if j < n { lp.objective[j] } else { 0.0 };
    for j in 0..=cols {
        t.a[m][j] = if j < cols { -cost(j) } else { 0.0 };
    }
    for i in 0..m {
        let cb = cost(t.basis[i]);
        if cb != 0.0 {
            for j in 0..=cols {
                let v = t.a[i][j];
                t.a[m][j] += cb * v;
            }
        }
    }
    t.optimize(&|j| j < first_artificial)?;

    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.basis[i] < n {
            x[t.basis[i]] = t.a[i][cols].max(0.0);
        }
    }
    let duals = (0..m)
        .map(|i| {
            let y = match senses[i] {
                Sense::Le => t.a[m][slack_col[i].unwrap()],
                Sense::Ge => -t.a[m][slack_col[i].unwrap()],
                Sense::Eq => t.a[m][art_col[i].unwrap()],
            };
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    Ok(SimplexSolution {
        objective: lp.objective_at(&x),
        x,
        duals,
        iterations: t.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn textbook_maximisation() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 3.0);
        let y = lp.add_var("y".into(), 5.0);
        lp.add_row("a".into(), vec![(x, 1.0)], Sense::Le, 4.0);
        lp.add_row("b".into(), vec![(y, 2.0)], Sense::Le, 12.0);
        lp.add_row("c".into(), vec![(x, 3.0), (y, 2.0)], Sense::Le, 18.0);
        let sol = solve(&lp).unwrap();
        assert!(close(sol.objective, 36.0));
        assert!(close(sol.x[0], 2.0) && close(sol.x[1], 6.0));
        // Duals of the textbook problem: (0, 3/2, 1).
        assert!(close(sol.duals[0], 0.0));
        assert!(close(sol.duals[1], 1.5));
        assert!(close(sol.duals[2], 1.0));
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x + y s.t. x + y = 1, x ≥ 0.25, y − x ≥ −1.
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 1.0);
        let y = lp.add_var("y".into(), 2.0);
        lp.add_row("sum".into(), vec![(x, 1.0), (y, 1.0)], Sense::Eq, 1.0);
        lp.add_row("lo".into(), vec![(x, 1.0)], Sense::Ge, 0.25);
        lp.add_row("neg".into(), vec![(y, 1.0), (x, -1.0)], Sense::Ge, -1.0);
        let sol = solve(&lp).unwrap();
        assert!(close(sol.objective, 1.75));
        assert!(lp.max_violation(&sol.x) < 1e-9);
        assert!(close(sol.duals[0], 2.0));
        assert!(close(sol.duals[1], -1.0));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 1.0);
        lp.add_row("a".into(), vec![(x, 1.0)], Sense::Le, 1.0);
        lp.add_row("b".into(), vec![(x, 1.0)], Sense::Ge, 2.0);
        assert_eq!(solve(&lp), Err(SimplexError::Infeasible));

        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 1.0);
        lp.add_row("a".into(), vec![(x, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve(&lp), Err(SimplexError::Unbounded));
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::default();
        let x = lp.add_var("x".into(), 1.0);
        let y = lp.add_var("y".into(), 1.0);
        lp.add_row("a".into(), vec![(x, 1.0), (y, 1.0)], Sense::Eq, 1.0);
        lp.add_row("b".into(), vec![(x, 2.0), (y, 2.0)], Sense::Eq, 2.0);
        let sol = solve(&lp).unwrap();
        assert!(close(sol.objective, 1.0));
    }
}
