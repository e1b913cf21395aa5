//! Exact linear-programming oracle by vertex enumeration in rational
//! arithmetic. Exponential in the problem size; meant for problems with a
//! handful of variables and rows.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::lp::{LowerBound, LpProblem, Relation};

#[derive(Debug, Clone, PartialEq)]
pub enum OracleOutcome {
    Optimal(BigRational),
    Infeasible,
    Unbounded,
}

impl OracleOutcome {
    pub fn objective(&self) -> Option<f64> {
        match self {
            OracleOutcome::Optimal(z) => z.to_f64(),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("problem has {0} candidate vertex bases, above the enumeration limit")]
pub struct OracleTooLarge(pub u128);

const MAX_BASES: u128 = 5_000_000;

/// Solves `problem` exactly. Coefficients are converted from `f64` without
/// rounding, so integer and dyadic data are represented exactly.
pub fn vertex_optimum(problem: &LpProblem) -> Result<OracleOutcome, OracleTooLarge> {
    let system = System::from_problem(problem);

    let Some(best) = system.best_vertex(&system.objective)? else {
        return Ok(OracleOutcome::Infeasible);
    };

    // Unbounded iff the recession cone holds a direction d with cᵀd = 1.
    let mut rays = System {
        rows: system
            .rows
            .iter()
            .map(|(a, rel, _)| (a.clone(), *rel, BigRational::zero()))
            .collect(),
        objective: system.objective.clone(),
        vars: system.vars,
    };
    rays.rows
        .push((system.objective.clone(), Relation::Eq, BigRational::one()));
    if rays.best_vertex(&vec![BigRational::zero(); system.vars])?.is_some() {
        return Ok(OracleOutcome::Unbounded);
    }
    Ok(OracleOutcome::Optimal(best))
}

/// `A x (rel) b, x ≥ 0` over the expanded, nonnegative variables.
struct System {
    rows: Vec<(Vec<BigRational>, Relation, BigRational)>,
    objective: Vec<BigRational>,
    vars: usize,
}

fn exact(value: f64) -> BigRational {
    BigRational::from_float(value).expect("finite coefficient")
}

impl System {
    fn from_problem(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        // Column map: original variable j, then a negated copy for free ones.
        let mut columns: Vec<(usize, bool)> = (0..n).map(|j| (j, false)).collect();
        columns.extend(
            (0..n)
                .filter(|&j| problem.lower[j] == LowerBound::Free)
                .map(|j| (j, true)),
        );
        let expand = |coeffs: &[f64]| -> Vec<BigRational> {
            columns
                .iter()
                .map(|&(j, neg)| {
                    let v = exact(coeffs[j]);
                    if neg {
                        -v
                    } else {
                        v
                    }
                })
                .collect()
        };
        let mut rows: Vec<_> = (0..problem.num_rows())
            .map(|i| (expand(problem.row(i)), problem.relations[i], exact(problem.rhs[i])))
            .collect();
        for (j, u) in problem.upper.iter().enumerate() {
            if let Some(u) = u {
                let mut unit = vec![0.0; n];
                unit[j] = 1.0;
                rows.push((expand(&unit), Relation::Le, exact(*u)));
            }
        }
        Self {
            rows,
            objective: expand(&problem.objective),
            vars: columns.len(),
        }
    }

    fn satisfies(&self, x: &[BigRational]) -> bool {
        x.iter().all(|v| !v.is_negative())
            && self.rows.iter().all(|(a, rel, b)| {
                let lhs: BigRational = a.iter().zip(x).map(|(p, q)| p * q).sum();
                match rel {
                    Relation::Le => lhs <= *b,
                    Relation::Ge => lhs >= *b,
                    Relation::Eq => lhs == *b,
                }
            })
    }

    /// Maximum of `cost` over the vertices of the system, `None` if it has none.
    fn best_vertex(&self, cost: &[BigRational]) -> Result<Option<BigRational>, OracleTooLarge> {
        let n = self.vars;
        let total = self.rows.len() + n;
        let bases = binomial(total as u128, n as u128);
        if bases > MAX_BASES {
            return Err(OracleTooLarge(bases));
        }
        if n == 0 {
            return Ok(self.satisfies(&[]).then(BigRational::zero));
        }
        // Constraint k < rows is a row held at equality; k ≥ rows fixes x_{k-rows} = 0.
        let mut best: Option<BigRational> = None;
        let mut pick: Vec<usize> = (0..n).collect();
        loop {
            let eqs: Vec<(Vec<BigRational>, BigRational)> = pick
                .iter()
                .map(|&k| {
                    if k < self.rows.len() {
                        (self.rows[k].0.clone(), self.rows[k].2.clone())
                    } else {
                        let mut e = vec![BigRational::zero(); n];
                        e[k - self.rows.len()] = BigRational::one();
                        (e, BigRational::zero())
                    }
                })
                .collect();
            // Equality rows must be among the active set at any vertex, but
            // checking feasibility afterwards covers that.
            if let Some(x) = solve_square(eqs) {
                if self.satisfies(&x) {
                    let z: BigRational = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                    if best.as_ref().is_none_or(|b| z > *b) {
                        best = Some(z);
                    }
                }
            }
            if !next_combination(&mut pick, total) {
                break;
            }
        }
        Ok(best)
    }
}

/// Unique solution of a square system, `None` if singular.
fn solve_square(mut eqs: Vec<(Vec<BigRational>, BigRational)>) -> Option<Vec<BigRational>> {
    let n = eqs.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !eqs[r].0[col].is_zero())?;
        eqs.swap(col, pivot);
        let (head, tail) = eqs.split_at_mut(col + 1);
        let (prow, prhs) = &head[col];
        for (row, rhs) in tail.iter_mut() {
            if row[col].is_zero() {
                continue;
            }
            let f = &row[col] / &prow[col];
            for k in col..n {
                row[k] -= &f * &prow[k];
            }
            *rhs -= &f * prhs;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for col in (0..n).rev() {
        let (row, rhs) = &eqs[col];
        let mut acc = rhs.clone();
        for k in col + 1..n {
            acc -= &row[k] * &x[k];
        }
        x[col] = acc / &row[col];
    }
    Some(x)
}

fn next_combination(pick: &mut [usize], total: usize) -> bool {
    let k = pick.len();
    for pos in (0..k).rev() {
        if pick[pos] < total - k + pos {
            pick[pos] += 1;
            for later in pos + 1..k {
                pick[later] = pick[later - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// `p/q` as an exact rational, for building expected values in tests.
pub fn ratio(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounded_problem() {
        let mut p = LpProblem::with_objective(vec![3.0, 2.0]);
        p.add_row(&[1.0, 1.0], Relation::Le, 4.0);
        p.add_row(&[1.0, 3.0], Relation::Le, 6.0);
        assert_eq!(vertex_optimum(&p).unwrap(), OracleOutcome::Optimal(ratio(12, 1)));
    }

    #[test]
    fn fractional_optimum_is_exact() {
        // max x + y, 3x + y <= 2, x + 3y <= 2 → x = y = 1/2
        let mut p = LpProblem::with_objective(vec![1.0, 1.0]);
        p.add_row(&[3.0, 1.0], Relation::Le, 2.0);
        p.add_row(&[1.0, 3.0], Relation::Le, 2.0);
        assert_eq!(vertex_optimum(&p).unwrap(), OracleOutcome::Optimal(ratio(1, 1)));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut p = LpProblem::with_objective(vec![1.0]);
        p.add_row(&[1.0], Relation::Ge, 2.0);
        assert_eq!(vertex_optimum(&p).unwrap(), OracleOutcome::Unbounded);
        p.add_row(&[1.0], Relation::Le, 1.0);
        assert_eq!(vertex_optimum(&p).unwrap(), OracleOutcome::Infeasible);
    }

    #[test]
    fn free_variables_and_bounds() {
        // max -t, t >= -3 with t free → 3
        let mut p = LpProblem::with_objective(vec![-1.0]);
        p.set_free(0);
        p.add_row(&[1.0], Relation::Ge, -3.0);
        assert_eq!(vertex_optimum(&p).unwrap(), OracleOutcome::Optimal(ratio(3, 1)));

        let mut q = LpProblem::with_objective(vec![1.0]);
        q.set_upper(0, 2.5);
        assert_eq!(vertex_optimum(&q).unwrap(), OracleOutcome::Optimal(ratio(5, 2)));
    }

    #[test]
    fn empty_problem() {
        assert_eq!(
            vertex_optimum(&LpProblem::new(0)).unwrap(),
            OracleOutcome::Optimal(ratio(0, 1))
        );
    }
}
