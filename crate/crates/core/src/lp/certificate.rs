//! Optimality certificates: primal feasibility, dual feasibility,
//! complementary slackness and the duality gap, each measured on rows scaled
//! to unit largest coefficient and an objective scaled the same way.
//!
//! The dual of `max cᵀx, A x (rel) b, 0 ≤ x ≤ u` used here is
//! `min bᵀy + Σ u_j w_j` with `w_j = max(d_j, 0)` and `d = c − Aᵀy`.

#![allow(clippy::needless_range_loop)]

use serde::{Deserialize, Serialize};

use super::{LowerBound, LpProblem, LpSolution, Relation};

/// Largest normalized violation of each optimality condition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CertificateResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
    /// `|cᵀx − dual objective| / (1 + |cᵀx|)`.
    pub gap: f64,
}

impl CertificateResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity).max(self.gap)
    }
}

/// True iff every residual of an optimal `solution` is within `tol`.
/// Non-optimal or mis-shaped solutions never certify.
pub fn check_certificate(problem: &LpProblem, solution: &LpSolution, tol: f64) -> bool {
    certificate_residuals(problem, solution).is_some_and(|r| r.max() <= tol)
}

/// `None` when the solution is not optimal or its vectors have the wrong length.
pub fn certificate_residuals(problem: &LpProblem, solution: &LpSolution) -> Option<CertificateResiduals> {
    if !solution.is_optimal()
        || problem.check_dimensions().is_err()
        || solution.x.len() != problem.num_vars()
        || solution.y.len() != problem.num_rows()
    {
        return None;
    }
    let x = &solution.x;
    let y = &solution.y;
    let n = problem.num_vars();
    let c_scale = scale_of(&problem.objective);
    let mut res = CertificateResiduals::default();

    // Rows.
    let mut reduced = problem.objective.clone();
    for i in 0..problem.num_rows() {
        let row = problem.row(i);
        let s = scale_of(row);
        let activity: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() / s;
        let rhs = problem.rhs[i] / s;
        let denom = 1.0 + rhs.abs();
        let slack = rhs - activity;
        let breach = match problem.relations[i] {
            Relation::Le => (-slack).max(0.0),
            Relation::Ge => slack.max(0.0),
            Relation::Eq => slack.abs(),
        };
        res.primal = res.primal.max(breach / denom);

        let yi = y[i] * s / c_scale;
        let sign_breach = match problem.relations[i] {
            Relation::Le => (-yi).max(0.0),
            Relation::Ge => yi.max(0.0),
            Relation::Eq => 0.0,
        };
        res.dual = res.dual.max(sign_breach);
        if problem.relations[i] != Relation::Eq {
            res.complementarity = res.complementarity.max((yi * slack).abs() / denom);
        }
        for (d, a) in reduced.iter_mut().zip(row) {
            *d -= a * y[i];
        }
    }

    // Columns.
    let mut dual_objective: f64 = problem.rhs.iter().zip(y).map(|(b, v)| b * v).sum();
    for j in 0..n {
        let d = reduced[j] / c_scale;
        let xj = x[j];
        let free = problem.lower[j] == LowerBound::Free;
        if !free {
            res.primal = res.primal.max((-xj).max(0.0));
        }
        match problem.upper[j] {
            Some(u) => {
                res.primal = res.primal.max((xj - u).max(0.0) / (1.0 + u.abs()));
                // Positive reduced cost is priced by the bound's multiplier.
                dual_objective += u * reduced[j].max(0.0);
                if d > 0.0 {
                    res.complementarity = res.complementarity.max(d * (u - xj).abs() / (1.0 + u.abs()));
                }
            }
            None => res.dual = res.dual.max(d.max(0.0)),
        }
        if free {
            res.dual = res.dual.max((-d).max(0.0));
        } else if d < 0.0 {
            res.complementarity = res.complementarity.max(-d * xj.abs());
        }
    }

    let primal_objective: f64 = problem.objective.iter().zip(x).map(|(c, v)| c * v).sum();
    res.gap = (primal_objective - dual_objective).abs() / (1.0 + primal_objective.abs());
    Some(res)
}

fn scale_of(values: &[f64]) -> f64 {
    let s = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::super::{solve, LpProblem, LpStatus, Relation};
    use super::*;

    fn small() -> LpProblem {
        let mut p = LpProblem::with_objective(vec![3.0, 2.0]);
        p.add_row(&[1.0, 1.0], Relation::Le, 4.0);
        p.add_row(&[1.0, 3.0], Relation::Le, 6.0);
        p.add_row(&[1.0, 0.0], Relation::Le, 10.0);
        p
    }

    #[test]
    fn solver_output_certifies() {
        let p = small();
        let s = solve(&p, 1e-9).unwrap();
        assert!(check_certificate(&p, &s, 1e-9));
    }

    #[test]
    fn corrupted_slack_row_dual_fails() {
        let p = small();
        let mut s = solve(&p, 1e-9).unwrap();
        // Row 2 (x1 <= 10) is slack at the optimum x = (4, 0).
        assert_eq!(s.y[2], 0.0);
        s.y[2] += 1.0;
        assert!(!check_certificate(&p, &s, 1e-9));
        assert!(certificate_residuals(&p, &s).unwrap().complementarity > 0.5);
    }

    #[test]
    fn zero_problem_certifies() {
        let p = LpProblem::new(0);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.objective, 0.0);
        assert!(check_certificate(&p, &s, 1e-9));
    }

    #[test]
    fn upper_bounds_enter_dual_objective() {
        let mut p = LpProblem::with_objective(vec![1.0, 1.0]);
        p.set_upper(0, 2.0);
        p.add_row(&[0.0, 1.0], Relation::Le, 1.0);
        let s = solve(&p, 1e-9).unwrap();
        assert!((s.objective - 3.0).abs() < 1e-12);
        assert!(check_certificate(&p, &s, 1e-9));
    }

    #[test]
    fn non_optimal_never_certifies() {
        let mut p = LpProblem::with_objective(vec![1.0]);
        p.add_row(&[-1.0], Relation::Le, 0.0);
        let s = solve(&p, 1e-9).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
        assert!(!check_certificate(&p, &s, 1e-9));
    }
}
