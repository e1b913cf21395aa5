//! Two-phase revised simplex on a dense, explicitly inverted basis.
//!
//! Pricing starts with Dantzig's largest-reduced-cost rule and falls back to
//! Bland's smallest-index rule once a run of degenerate pivots suggests
//! stalling. Every tie, entering or leaving, goes to the lowest column index.

#![allow(clippy::needless_range_loop)]

use super::{LowerBound, LpError, LpProblem, LpSolution, LpStatus, Relation, DEFAULT_TOLERANCE};

/// Refactorize the basis inverse after this many product-form updates.
const REFACTOR_INTERVAL: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Feasibility and optimality tolerance on normalized data.
    pub tol: f64,
    /// Consecutive degenerate Dantzig pivots tolerated before switching to
    /// Bland's rule for the remainder of the phase. `usize::MAX` disables
    /// the fallback.
    pub degenerate_limit: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            degenerate_limit: 16,
            max_iterations: 20_000,
        }
    }
}

impl SolverOptions {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}

/// Solves `problem` with default pivoting options and tolerance `tol`.
pub fn solve(problem: &LpProblem, tol: f64) -> Result<LpSolution, LpError> {
    solve_with(problem, &SolverOptions::with_tolerance(tol))
}

pub fn solve_with(problem: &LpProblem, options: &SolverOptions) -> Result<LpSolution, LpError> {
    problem.check_dimensions()?;
    if !(options.tol > 0.0 && options.tol.is_finite()) {
        return Err(LpError::Tolerance(options.tol));
    }
    let form = StandardForm::build(problem);
    let mut tableau = Basis::new(&form);
    let mut iterations = 0;

    if form.artificial_count() > 0 {
        let phase_one: Vec<f64> = form
            .kinds
            .iter()
            .map(|k| if matches!(k, Column::Artificial(_)) { -1.0 } else { 0.0 })
            .collect();
        let outcome = tableau.run(&form, &phase_one, |_| true, options, &mut iterations)?;
        debug_assert_eq!(outcome, Outcome::Optimal, "phase one is bounded above by zero");
        let infeasibility: f64 = tableau
            .basis
            .iter()
            .zip(&tableau.xb)
            .filter(|(&c, _)| matches!(form.kinds[c], Column::Artificial(_)))
            .map(|(_, &x)| x.max(0.0))
            .sum();
        let rhs_scale = form.b.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
        if infeasibility > options.tol * rhs_scale * 10.0 {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                y: Vec::new(),
                objective: 0.0,
                iterations,
            });
        }
        tableau.evict_artificials(&form)?;
    }

    let phase_two: Vec<f64> = form
        .kinds
        .iter()
        .map(|k| match *k {
            Column::Structural { var, negated } => {
                let c = problem.objective[var] / form.objective_scale;
                if negated {
                    -c
                } else {
                    c
                }
            }
            _ => 0.0,
        })
        .collect();
    let outcome = tableau.run(
        &form,
        &phase_two,
        |c| !matches!(form.kinds[c], Column::Artificial(_)),
        options,
        &mut iterations,
    )?;
    if outcome == Outcome::Unbounded {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            y: Vec::new(),
            objective: f64::INFINITY,
            iterations,
        });
    }

    let mut x = vec![0.0; problem.num_vars()];
    for (r, &c) in tableau.basis.iter().enumerate() {
        if let Column::Structural { var, negated } = form.kinds[c] {
            let value = tableau.xb[r];
            x[var] += if negated { -value } else { value };
        }
    }
    // Values within tolerance of a bound are snapped onto it.
    for (j, xj) in x.iter_mut().enumerate() {
        if problem.lower[j] == LowerBound::Zero && *xj < 0.0 && *xj > -options.tol {
            *xj = 0.0;
        }
        if *xj != 0.0 && xj.abs() < options.tol * 1e-3 {
            *xj = 0.0;
        }
    }

    let duals = tableau.duals(&form, &phase_two);
    let y = (0..problem.num_rows())
        .map(|i| duals[i] * form.row_sign[i] * form.objective_scale / form.row_scale[i])
        .map(|v| if v == 0.0 { 0.0 } else { v })
        .collect();
    let objective = problem.objective.iter().zip(&x).map(|(c, v)| c * v).sum();

    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        y,
        objective,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Column {
    Structural { var: usize, negated: bool },
    Slack(usize),
    Artificial(usize),
}

/// `max cᵀz, A z = b, z ≥ 0` with `b ≥ 0`, row- and objective-scaled.
struct StandardForm {
    m: usize,
    /// Column-major `m x kinds.len()`.
    columns: Vec<Vec<f64>>,
    b: Vec<f64>,
    kinds: Vec<Column>,
    initial_basis: Vec<usize>,
    row_scale: Vec<f64>,
    row_sign: Vec<f64>,
    objective_scale: f64,
}

impl StandardForm {
    fn build(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        let original_rows = problem.num_rows();

        // Upper bounds become explicit rows after the problem's own rows.
        let bounded: Vec<(usize, f64)> = problem
            .upper
            .iter()
            .enumerate()
            .filter_map(|(j, u)| u.map(|u| (j, u)))
            .collect();
        let m = original_rows + bounded.len();

        let mut rows: Vec<(Vec<f64>, Relation, f64)> = (0..original_rows)
            .map(|i| (problem.row(i).to_vec(), problem.relations[i], problem.rhs[i]))
            .collect();
        for &(j, u) in &bounded {
            let mut row = vec![0.0; n];
            row[j] = 1.0;
            rows.push((row, Relation::Le, u));
        }

        let mut row_scale = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for (coeffs, relation, rhs) in &mut rows {
            let scale = coeffs.iter().fold(0.0_f64, |s, a| s.max(a.abs()));
            let scale = if scale > 0.0 { scale } else { 1.0 };
            coeffs.iter_mut().for_each(|a| *a /= scale);
            *rhs /= scale;
            let sign = if *rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                *rhs = -*rhs;
                *relation = match *relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                -1.0
            } else {
                1.0
            };
            row_scale.push(scale);
            row_sign.push(sign);
        }
        let objective_scale = problem.objective.iter().fold(0.0_f64, |s, c| s.max(c.abs()));
        let objective_scale = if objective_scale > 0.0 { objective_scale } else { 1.0 };

        let mut columns = Vec::new();
        let mut kinds = Vec::new();
        for var in 0..n {
            columns.push(rows.iter().map(|(r, _, _)| r[var]).collect());
            kinds.push(Column::Structural { var, negated: false });
        }
        for var in 0..n {
            if problem.lower[var] == LowerBound::Free {
                columns.push(rows.iter().map(|(r, _, _)| -r[var]).collect());
                kinds.push(Column::Structural { var, negated: true });
            }
        }

        let unit = |r: usize, value: f64| {
            let mut col = vec![0.0; m];
            col[r] = value;
            col
        };
        let mut initial_basis = vec![usize::MAX; m];
        for (r, (_, relation, _)) in rows.iter().enumerate() {
            match relation {
                Relation::Le => {
                    initial_basis[r] = columns.len();
                    columns.push(unit(r, 1.0));
                    kinds.push(Column::Slack(r));
                }
                Relation::Ge => {
                    columns.push(unit(r, -1.0));
                    kinds.push(Column::Slack(r));
                }
                Relation::Eq => {}
            }
        }
        for r in 0..m {
            if initial_basis[r] == usize::MAX {
                initial_basis[r] = columns.len();
                columns.push(unit(r, 1.0));
                kinds.push(Column::Artificial(r));
            }
        }

        Self {
            m,
            columns,
            b: rows.into_iter().map(|(_, _, b)| b).collect(),
            kinds,
            initial_basis,
            row_scale,
            row_sign,
            objective_scale,
        }
    }

    fn artificial_count(&self) -> usize {
        self.kinds.iter().filter(|k| matches!(k, Column::Artificial(_))).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

struct Basis {
    m: usize,
    basis: Vec<usize>,
    /// Row position of each column in the basis, if basic.
    position: Vec<Option<usize>>,
    /// Row-major `m x m` inverse of the basis matrix.
    inverse: Vec<f64>,
    xb: Vec<f64>,
    updates: usize,
}

impl Basis {
    fn new(form: &StandardForm) -> Self {
        let m = form.m;
        let mut position = vec![None; form.kinds.len()];
        for (r, &c) in form.initial_basis.iter().enumerate() {
            position[c] = Some(r);
        }
        let mut inverse = vec![0.0; m * m];
        for r in 0..m {
            inverse[r * m + r] = 1.0;
        }
        Self {
            m,
            basis: form.initial_basis.clone(),
            position,
            inverse,
            xb: form.b.clone(),
            updates: 0,
        }
    }

    fn duals(&self, form: &StandardForm, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let _ = form;
        let mut y = vec![0.0; m];
        for (r, &c) in self.basis.iter().enumerate() {
            let cb = cost[c];
            if cb != 0.0 {
                for (k, yk) in y.iter_mut().enumerate() {
                    *yk += cb * self.inverse[r * m + k];
                }
            }
        }
        y
    }

    fn column(&self, form: &StandardForm, q: usize) -> Vec<f64> {
        let m = self.m;
        let col = &form.columns[q];
        (0..m)
            .map(|r| {
                self.inverse[r * m..(r + 1) * m]
                    .iter()
                    .zip(col)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    fn run(
        &mut self,
        form: &StandardForm,
        cost: &[f64],
        allowed: impl Fn(usize) -> bool,
        options: &SolverOptions,
        iterations: &mut usize,
    ) -> Result<Outcome, LpError> {
        let tol = options.tol;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            if *iterations >= options.max_iterations {
                return Err(LpError::IterationLimit(options.max_iterations));
            }
            let y = self.duals(form, cost);

            let mut entering = None;
            let mut best = tol;
            for q in 0..form.kinds.len() {
                if self.position[q].is_some() || !allowed(q) {
                    continue;
                }
                let d = cost[q] - form.columns[q].iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
                if d > best {
                    entering = Some(q);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };

            let alpha = self.column(form, q);
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.m {
                if alpha[r] <= tol {
                    continue;
                }
                let ratio = self.xb[r].max(0.0) / alpha[r];
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((lr, lratio)) => {
                        let slack = 1e-12 * (1.0 + lratio.abs());
                        if ratio < lratio - slack || ((ratio - lratio).abs() <= slack && self.basis[r] < self.basis[lr])
                        {
                            Some((r, ratio))
                        } else {
                            Some((lr, lratio))
                        }
                    }
                };
            }
            let Some((r, step)) = leaving else {
                return Ok(Outcome::Unbounded);
            };

            self.pivot(form, q, r, &alpha)?;
            *iterations += 1;

            if step <= tol {
                degenerate_run += 1;
                if degenerate_run >= options.degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
        }
    }

    fn pivot(&mut self, form: &StandardForm, q: usize, r: usize, alpha: &[f64]) -> Result<(), LpError> {
        let m = self.m;
        let pivot = alpha[r];
        let leaving = self.basis[r];
        self.position[leaving] = None;
        self.position[q] = Some(r);
        self.basis[r] = q;

        for k in 0..m {
            self.inverse[r * m + k] /= pivot;
        }
        self.xb[r] /= pivot;
        for i in 0..m {
            if i == r || alpha[i] == 0.0 {
                continue;
            }
            let factor = alpha[i];
            for k in 0..m {
                self.inverse[i * m + k] -= factor * self.inverse[r * m + k];
            }
            self.xb[i] -= factor * self.xb[r];
        }

        self.updates += 1;
        if self.updates >= REFACTOR_INTERVAL {
            self.refactor(form)?;
        }
        Ok(())
    }

    /// Recomputes the inverse from scratch by Gauss-Jordan elimination.
    fn refactor(&mut self, form: &StandardForm) -> Result<(), LpError> {
        let m = self.m;
        let mut work = vec![0.0; m * m];
        for (c, &col) in self.basis.iter().enumerate() {
            for r in 0..m {
                work[r * m + c] = form.columns[col][r];
            }
        }
        let mut inverse = vec![0.0; m * m];
        for r in 0..m {
            inverse[r * m + r] = 1.0;
        }
        for c in 0..m {
            let pivot_row = (c..m)
                .max_by(|&a, &b| work[a * m + c].abs().total_cmp(&work[b * m + c].abs()))
                .expect("non-empty range");
            if work[pivot_row * m + c].abs() < 1e-13 {
                return Err(LpError::Singular);
            }
            if pivot_row != c {
                for k in 0..m {
                    work.swap(pivot_row * m + k, c * m + k);
                    inverse.swap(pivot_row * m + k, c * m + k);
                }
            }
            let p = work[c * m + c];
            for k in 0..m {
                work[c * m + k] /= p;
                inverse[c * m + k] /= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = work[r * m + c];
                if f != 0.0 {
                    for k in 0..m {
                        work[r * m + k] -= f * work[c * m + k];
                        inverse[r * m + k] -= f * inverse[c * m + k];
                    }
                }
            }
        }
        self.inverse = inverse;
        self.xb = (0..m)
            .map(|r| {
                self.inverse[r * m..(r + 1) * m]
                    .iter()
                    .zip(&form.b)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        self.updates = 0;
        Ok(())
    }

    /// Pivots zero-valued artificials out of the basis where some real column
    /// can replace them. Artificials that remain sit on redundant rows.
    fn evict_artificials(&mut self, form: &StandardForm) -> Result<(), LpError> {
        for r in 0..self.m {
            if !matches!(form.kinds[self.basis[r]], Column::Artificial(_)) {
                continue;
            }
            let m = self.m;
            let candidate = (0..form.kinds.len()).find(|&q| {
                self.position[q].is_none()
                    && !matches!(form.kinds[q], Column::Artificial(_))
                    && self.inverse[r * m..(r + 1) * m]
                        .iter()
                        .zip(&form.columns[q])
                        .map(|(a, b)| a * b)
                        .sum::<f64>()
                        .abs()
                        > 1e-7
            });
            if let Some(q) = candidate {
                let alpha = self.column(form, q);
                self.pivot(form, q, r, &alpha)?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(c: &[f64], rows: &[(&[f64], Relation, f64)]) -> LpProblem {
        let mut p = LpProblem::with_objective(c.to_vec());
        for (row, rel, rhs) in rows {
            p.add_row(row, *rel, *rhs);
        }
        p
    }

    #[test]
    fn one_variable_bound_row() {
        let p = single(&[1.0], &[(&[1.0], Relation::Le, 5.0)]);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.x, vec![5.0]);
        assert_eq!(s.objective, 5.0);
        assert_eq!(s.y, vec![1.0]);
    }

    #[test]
    fn degenerate_optimum_prefers_lowest_index() {
        let p = single(&[1.0, 1.0], &[(&[1.0, 1.0], Relation::Le, 1.0)]);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.x, vec![1.0, 0.0]);
        assert_eq!(s.objective, 1.0);
        assert_eq!(s.y, vec![1.0]);
    }

    #[test]
    fn detects_infeasible() {
        let p = single(&[1.0], &[(&[1.0], Relation::Le, 1.0), (&[1.0], Relation::Ge, 2.0)]);
        assert_eq!(solve(&p, 1e-9).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let p = single(&[1.0, 0.0], &[(&[-1.0, 1.0], Relation::Le, 1.0)]);
        assert_eq!(solve(&p, 1e-9).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_ge_rows_use_phase_one() {
        // max 2x + 3y, x + y = 4, x >= 1, y <= 2
        let p = single(
            &[2.0, 3.0],
            &[
                (&[1.0, 1.0], Relation::Eq, 4.0),
                (&[1.0, 0.0], Relation::Ge, 1.0),
                (&[0.0, 1.0], Relation::Le, 2.0),
            ],
        );
        let s = solve(&p, 1e-9).unwrap();
        assert!((s.objective - 10.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 2.0).abs() < 1e-12);
        // y_eq = 2, y_ge = 0, y_le = 1
        assert!((s.y[0] - 2.0).abs() < 1e-12);
        assert!(s.y[1].abs() < 1e-12);
        assert!((s.y[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ge_row_dual_is_nonpositive() {
        // max -x, x >= 3  → x = 3, dual -1
        let p = single(&[-1.0], &[(&[1.0], Relation::Ge, 3.0)]);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.x, vec![3.0]);
        assert!((s.y[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_variable_and_upper_bound() {
        // max t, t <= x, t <= 2 - x, 0 <= x <= 10, t free
        let mut p = LpProblem::with_objective(vec![1.0, 0.0]);
        p.set_free(0);
        p.set_upper(1, 10.0);
        p.add_row(&[1.0, -1.0], Relation::Le, 0.0);
        p.add_row(&[1.0, 1.0], Relation::Le, 2.0);
        let s = solve(&p, 1e-9).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.y[0] - 0.5).abs() < 1e-12 && (s.y[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn free_variable_goes_negative() {
        // max -t, t >= -3 (t free) → t = -3
        let mut p = LpProblem::with_objective(vec![-1.0]);
        p.set_free(0);
        p.add_row(&[1.0], Relation::Ge, -3.0);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.x, vec![-3.0]);
        assert_eq!(s.objective, 3.0);
        assert!((s.y[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equality_rows() {
        let p = single(
            &[1.0, 1.0],
            &[
                (&[1.0, 1.0], Relation::Eq, 2.0),
                (&[2.0, 2.0], Relation::Eq, 4.0),
                (&[1.0, 0.0], Relation::Le, 1.5),
            ],
        );
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_problem_is_optimal_at_zero() {
        let p = LpProblem::new(3);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert_eq!(s.objective, 0.0);
        assert_eq!(s.x, vec![0.0; 3]);
    }

    #[test]
    fn rejects_bad_dimensions_and_tolerance() {
        let mut p = LpProblem::new(2);
        p.matrix.push(1.0);
        p.rhs.push(1.0);
        p.relations.push(Relation::Le);
        assert!(matches!(solve(&p, 1e-9), Err(LpError::Dimension(_))));
        assert!(matches!(solve(&LpProblem::new(1), 0.0), Err(LpError::Tolerance(_))));
    }

    #[test]
    fn solves_are_deterministic() {
        let p = single(
            &[3.0, 2.0, 4.0],
            &[
                (&[1.0, 1.0, 2.0], Relation::Le, 4.0),
                (&[2.0, 0.0, 3.0], Relation::Le, 5.0),
                (&[2.0, 1.0, 3.0], Relation::Le, 7.0),
            ],
        );
        let a = solve(&p, 1e-9).unwrap();
        let b = solve(&p, 1e-9).unwrap();
        assert_eq!(a, b);
    }
}
