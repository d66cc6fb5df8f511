//! Self-contained dense linear programming.
//!
//! Two-phase primal simplex on a dense tableau. Entering variables follow
//! Dantzig's rule with deterministic tie-breaking and fall back to Bland's
//! rule after a fixed iteration budget, which rules out cycling; pivots are
//! fully deterministic, so solves are bit-reproducible.

use serde::{Deserialize, Serialize};

/// Optimality/feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;
/// Smallest pivot magnitude accepted in the ratio test.
const PIVOT_TOL: f64 = 1e-11;
/// Iterations of Dantzig pivoting before switching to Bland's rule.
const BLAND_SWITCH: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    SolverFailure(String),
}

/// A linear program over nonnegative (or declared-free) variables.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub sense: Sense,
    objective: Vec<f64>,
    rows: Vec<(Vec<(usize, f64)>, Cmp, f64)>,
    free: Vec<bool>,
}

/// Solve outcome: the optimum when `status` is `Optimal`, with residuals of
/// the original constraints evaluated at the returned point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
    pub max_residual: f64,
}

impl LpProblem {
    pub fn new(sense: Sense) -> LpProblem {
        LpProblem {
            sense,
            objective: Vec::new(),
            rows: Vec::new(),
            free: Vec::new(),
        }
    }

    /// Adds a nonnegative variable with the given objective coefficient.
    pub fn add_var(&mut self, objective: f64) -> usize {
        self.objective.push(objective);
        self.free.push(false);
        self.objective.len() - 1
    }

    /// Adds a sign-unrestricted variable (split internally).
    pub fn add_free_var(&mut self, objective: f64) -> usize {
        let v = self.add_var(objective);
        self.free[v] = true;
        v
    }

    pub fn add_constraint(&mut self, terms: Vec<(usize, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push((terms, cmp, rhs));
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.len()
    }

    /// Residual of the worst original constraint (and sign bound) at `x`.
    pub fn residual_at(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for (terms, cmp, rhs) in &self.rows {
            let lhs: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
            let r = match cmp {
                Cmp::Le => (lhs - rhs).max(0.0),
                Cmp::Ge => (rhs - lhs).max(0.0),
                Cmp::Eq => (lhs - rhs).abs(),
            };
            worst = worst.max(r);
        }
        for (j, &xi) in x.iter().enumerate() {
            if !self.free[j] {
                worst = worst.max(-xi);
            }
        }
        worst
    }

    pub fn solve(&self) -> LpSolution {
        let split: Vec<Option<usize>> = {
            let mut extra = self.objective.len();
            self.free
                .iter()
                .map(|&f| {
                    if f {
                        extra += 1;
                        Some(extra - 1)
                    } else {
                        None
                    }
                })
                .collect()
        };
        let n_struct = self.objective.len() + self.free.iter().filter(|&&f| f).count();

        // canonical objective: minimize c·x
        let mut c = vec![0.0; n_struct];
        for (j, &obj) in self.objective.iter().enumerate() {
            let v = if self.sense == Sense::Maximize { -obj } else { obj };
            c[j] = v;
            if let Some(neg) = split[j] {
                c[neg] = -v;
            }
        }

        // rows as equalities with slack/surplus columns, rhs ≥ 0
        let m = self.rows.len();
        let n_slack = self
            .rows
            .iter()
            .filter(|(_, cmp, _)| *cmp != Cmp::Eq)
            .count();
        let n = n_struct + n_slack;
        let mut a = vec![vec![0.0; n]; m];
        let mut b = vec![0.0; m];
        let mut slack_col = n_struct;
        for (i, (terms, cmp, rhs)) in self.rows.iter().enumerate() {
            for &(j, coef) in terms {
                a[i][j] += coef;
                if let Some(neg) = split[j] {
                    a[i][neg] -= coef;
                }
            }
            b[i] = *rhs;
            match cmp {
                Cmp::Le => {
                    a[i][slack_col] = 1.0;
                    slack_col += 1;
                }
                Cmp::Ge => {
                    a[i][slack_col] = -1.0;
                    slack_col += 1;
                }
                Cmp::Eq => {}
            }
            if b[i] < 0.0 {
                b[i] = -b[i];
                for v in a[i].iter_mut() {
                    *v = -*v;
                }
            }
        }

        let mut tab = Tableau::new(a, b, n);
        let mut iterations = 0;
        if let Err(status) = tab.phase_one(&mut iterations) {
            return self.failed(status, iterations);
        }
        if tab.objective_value() > 1e-7 {
            return self.failed(LpStatus::Infeasible, iterations);
        }
        if let Err(status) = tab.phase_two(&c, &mut iterations) {
            return self.failed(status, iterations);
        }

        let xs = tab.solution(n);
        let mut x = vec![0.0; self.objective.len()];
        for (j, item) in x.iter_mut().enumerate() {
            *item = xs[j] - split[j].map(|neg| xs[neg]).unwrap_or(0.0);
        }
        let value: f64 = self
            .objective
            .iter()
            .zip(&x)
            .map(|(cj, xj)| cj * xj)
            .sum();
        LpSolution {
            status: LpStatus::Optimal,
            value,
            x: x.clone(),
            iterations,
            max_residual: self.residual_at(&x),
        }
    }

    fn failed(&self, status: LpStatus, iterations: usize) -> LpSolution {
        LpSolution {
            status,
            value: f64::NAN,
            x: Vec::new(),
            iterations,
            max_residual: f64::NAN,
        }
    }
}

/// Dense simplex tableau with artificial columns appended after the real ones.
struct Tableau {
    /// `rows[i]` = coefficients then rhs; last row = reduced costs then −obj.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_real: usize,
}

impl Tableau {
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>, n_real: usize) -> Tableau {
        let m = a.len();
        let width = n_real + m + 1;
        let mut rows = Vec::with_capacity(m + 1);
        let mut basis = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = vec![0.0; width];
            row[..n_real].copy_from_slice(&a[i]);
            row[n_real + i] = 1.0; // artificial
            row[width - 1] = b[i];
            rows.push(row);
            basis.push(n_real + i);
        }
        rows.push(vec![0.0; width]);
        Tableau { rows, basis, n_real }
    }

    fn m(&self) -> usize {
        self.basis.len()
    }

    fn width(&self) -> usize {
        self.rows[0].len()
    }

    fn objective_value(&self) -> f64 {
        let w = self.width();
        -self.rows[self.m()][w - 1]
    }

    /// Rebuilds the cost row for costs `c` over eligible columns (reduced by
    /// the current basis).
    fn set_costs(&mut self, c: &[f64]) {
        let m = self.m();
        let w = self.width();
        let mut cost = vec![0.0; w];
        cost[..c.len()].copy_from_slice(c);
        for i in 0..m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                // the rhs slot accumulates −(c_B · x_B), i.e. minus the objective
                let row = self.rows[i].clone();
                for (j, item) in cost.iter_mut().enumerate() {
                    *item -= cb * row[j];
                }
            }
        }
        self.rows[m] = cost;
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width();
        let piv = self.rows[r][col];
        for v in self.rows[r].iter_mut() {
            *v /= piv;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[col];
            if factor != 0.0 {
                for j in 0..w {
                    row[j] -= factor * pivot_row[j];
                }
            }
        }
        self.basis[r] = col;
    }

    /// Runs simplex on the current cost row over columns `< limit`.
    fn run(&mut self, limit: usize, iterations: &mut usize) -> Result<(), LpStatus> {
        let m = self.m();
        let w = self.width();
        let max_iter = 200 * (m + limit) + BLAND_SWITCH;
        loop {
            // entering column
            let cost = &self.rows[m];
            let bland = *iterations >= BLAND_SWITCH;
            let mut col = None;
            if bland {
                for (j, &cj) in cost.iter().enumerate().take(limit) {
                    if cj < -LP_TOL {
                        col = Some(j);
                        break;
                    }
                }
            } else {
                let mut best = -LP_TOL;
                for (j, &cj) in cost.iter().enumerate().take(limit) {
                    if cj < best {
                        best = cj;
                        col = Some(j);
                    }
                }
            }
            let col = match col {
                Some(c) => c,
                None => return Ok(()),
            };
            // ratio test; ties to the smallest basis index (Bland-compatible)
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let aij = self.rows[i][col];
                if aij > PIVOT_TOL {
                    let ratio = self.rows[i][w - 1] / aij;
                    match leave {
                        None => leave = Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - PIVOT_TOL
                                || (ratio < lr + PIVOT_TOL && self.basis[i] < self.basis[li])
                            {
                                leave = Some((i, ratio));
                            }
                        }
                    }
                }
            }
            let (r, _) = match leave {
                Some(l) => l,
                None => return Err(LpStatus::Unbounded),
            };
            self.pivot(r, col);
            *iterations += 1;
            if *iterations > max_iter {
                return Err(LpStatus::SolverFailure(format!(
                    "simplex exceeded {max_iter} iterations"
                )));
            }
        }
    }

    fn phase_one(&mut self, iterations: &mut usize) -> Result<(), LpStatus> {
        let n_real = self.n_real;
        let m = self.m();
        let mut c = vec![0.0; n_real + m];
        for v in c.iter_mut().skip(n_real) {
            *v = 1.0;
        }
        self.set_costs(&c);
        self.run(n_real + m, iterations)
    }

    fn phase_two(&mut self, c: &[f64], iterations: &mut usize) -> Result<(), LpStatus> {
        let m = self.m();
        let n_real = self.n_real;
        // drive lingering artificials out of the basis where possible
        for i in 0..m {
            if self.basis[i] >= n_real {
                if let Some(col) = (0..n_real).find(|&j| self.rows[i][j].abs() > PIVOT_TOL) {
                    self.pivot(i, col);
                    *iterations += 1;
                }
            }
        }
        self.set_costs(c);
        self.run(n_real, iterations)
    }

    fn solution(&self, n: usize) -> Vec<f64> {
        let w = self.width();
        let mut x = vec![0.0; n];
        for (i, &bi) in self.basis.iter().enumerate() {
            if bi < n {
                x[bi] = self.rows[i][w - 1];
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn trivial_bound() {
        let mut lp = LpProblem::new(Sense::Maximize);
        let x = lp.add_var(1.0);
        lp.add_constraint(vec![(x, 1.0)], Cmp::Le, 1.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.value, 1.0, epsilon = 1e-9);
        assert!(sol.max_residual <= 1e-9);
    }

    #[test]
    fn equality_and_free_vars() {
        // min y s.t. y free, y ≥ x − 2, y ≥ 2 − x, x = 1.5 → y = 0.5
        let mut lp = LpProblem::new(Sense::Minimize);
        let x = lp.add_var(0.0);
        let y = lp.add_free_var(1.0);
        lp.add_constraint(vec![(y, 1.0), (x, -1.0)], Cmp::Ge, -2.0);
        lp.add_constraint(vec![(y, 1.0), (x, 1.0)], Cmp::Ge, 2.0);
        lp.add_constraint(vec![(x, 1.0)], Cmp::Eq, 1.5);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.value, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn infeasible_detected() {
        let mut lp = LpProblem::new(Sense::Maximize);
        let x = lp.add_var(1.0);
        lp.add_constraint(vec![(x, 1.0)], Cmp::Le, 1.0);
        lp.add_constraint(vec![(x, 1.0)], Cmp::Ge, 2.0);
        assert_eq!(lp.solve().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_detected() {
        let mut lp = LpProblem::new(Sense::Maximize);
        let x = lp.add_var(1.0);
        lp.add_constraint(vec![(x, -1.0)], Cmp::Le, 1.0);
        assert_eq!(lp.solve().status, LpStatus::Unbounded);
    }

    #[test]
    fn degenerate_redundant_equalities() {
        // x + y = 1 stated three times plus x ≤ 1, maximize 2x + y:
        // optimum x = 1, y = 0, value 2 (hand-eliminated reduced form)
        let mut lp = LpProblem::new(Sense::Maximize);
        let x = lp.add_var(2.0);
        let y = lp.add_var(1.0);
        for _ in 0..3 {
            lp.add_constraint(vec![(x, 1.0), (y, 1.0)], Cmp::Eq, 1.0);
        }
        lp.add_constraint(vec![(x, 1.0)], Cmp::Le, 1.0);
        let sol = lp.solve();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_abs_diff_eq!(sol.value, 2.0, epsilon = 1e-9);
    }

    /// Brute-force oracle: enumerate all basic points from n-subsets of the
    /// active constraint set (rows plus coordinate bounds), keep feasible
    /// ones, take the best objective.
    pub fn vertex_enumerate(
        n: usize,
        rows: &[(Vec<f64>, f64)], // a·x ≤ b
        obj: &[f64],
    ) -> Option<f64> {
        let mut all: Vec<(Vec<f64>, f64)> = rows.to_vec();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            all.push((e, 0.0)); // −x_j ≤ 0
        }
        let m = all.len();
        let mut best: Option<f64> = None;
        let mut idx = vec![0usize; n];
        fn combos(m: usize, k: usize, start: usize, idx: &mut Vec<usize>, pos: usize, f: &mut impl FnMut(&[usize])) {
            if pos == k {
                f(idx);
                return;
            }
            for i in start..m {
                idx[pos] = i;
                combos(m, k, i + 1, idx, pos + 1, f);
            }
        }
        let check = |chosen: &[usize]| {
            // solve the n×n system of active constraints
            let mut a = vec![vec![0.0; n + 1]; n];
            for (r, &ci) in chosen.iter().enumerate() {
                a[r][..n].copy_from_slice(&all[ci].0);
                a[r][n] = all[ci].1;
            }
            // gaussian elimination with partial pivoting
            for col in 0..n {
                let piv = (col..n).max_by(|&p, &q| {
                    a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap()
                })?;
                if a[piv][col].abs() < 1e-10 {
                    return None;
                }
                a.swap(col, piv);
                for r in 0..n {
                    if r != col {
                        let f = a[r][col] / a[col][col];
                        for c in col..=n {
                            a[r][c] -= f * a[col][c];
                        }
                    }
                }
            }
            let x: Vec<f64> = (0..n).map(|r| a[r][n] / a[r][r]).collect();
            for (coef, b) in &all {
                let lhs: f64 = coef.iter().zip(&x).map(|(c, xi)| c * xi).sum();
                if lhs > b + 1e-7 {
                    return None;
                }
            }
            Some(obj.iter().zip(&x).map(|(c, xi)| c * xi).sum::<f64>())
        };
        combos(m, n, 0, &mut idx, 0, &mut |chosen| {
            if let Some(v) = check(chosen) {
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        });
        best
    }

    #[test]
    fn random_lps_match_vertex_enumeration() {
        let mut rng = crate::rng::stream(90210, 0);
        for trial in 0..50 {
            let n = rng.random_range(2..=8);
            let m = rng.random_range(1..=6);
            let mut rows: Vec<(Vec<f64>, f64)> = (0..m)
                .map(|_| {
                    let coef: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
                    (coef, rng.random_range(0.5..2.0)) // feasible at origin
                })
                .collect();
            // bounding box keeps the polytope compact
            rows.push((vec![1.0; n], rng.random_range(2.0..5.0)));
            let obj: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();

            let oracle = vertex_enumerate(n, &rows, &obj).expect("feasible by construction");

            let mut lp = LpProblem::new(Sense::Maximize);
            let vars: Vec<usize> = obj.iter().map(|&c| lp.add_var(c)).collect();
            for (coef, b) in &rows {
                let terms: Vec<(usize, f64)> =
                    vars.iter().zip(coef).map(|(&v, &c)| (v, c)).collect();
                lp.add_constraint(terms, Cmp::Le, *b);
            }
            let sol = lp.solve();
            assert_eq!(sol.status, LpStatus::Optimal, "trial {trial}");
            assert_abs_diff_eq!(sol.value, oracle, epsilon = 1e-9);
            assert!(sol.max_residual <= 1e-9);
        }
    }
}
