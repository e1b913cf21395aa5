//! Dense linear programming with dual recovery.
//!
//! Problems are stated as maximizations over variables with a lower bound of
//! zero (or no lower bound) and an optional finite upper bound. [`solve`]
//! returns the primal point together with one dual value per constraint row,
//! which downstream code reads as shadow prices.

mod certificate;
mod simplex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use certificate::{certificate_residuals, check_certificate, CertificateResiduals};
pub use simplex::{solve, solve_with, SolverOptions};

/// Default feasibility/optimality tolerance on normalized data.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("basis matrix became singular")]
    Singular,
    #[error("tolerance must be positive and finite, got {0}")]
    Tolerance(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowerBound {
    Zero,
    Free,
}

/// `max cᵀx` subject to `A x (≤|=|≥) rhs` and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    /// Row-major, `rows x objective.len()`.
    pub matrix: Vec<f64>,
    pub rhs: Vec<f64>,
    pub relations: Vec<Relation>,
    pub lower: Vec<LowerBound>,
    pub upper: Vec<Option<f64>>,
}

impl LpProblem {
    /// An unconstrained problem over `n` nonnegative variables with zero objective.
    pub fn new(n: usize) -> Self {
        Self {
            objective: vec![0.0; n],
            matrix: Vec::new(),
            rhs: Vec::new(),
            relations: Vec::new(),
            lower: vec![LowerBound::Zero; n],
            upper: vec![None; n],
        }
    }

    pub fn with_objective(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            ..Self::new(n)
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rhs.len()
    }

    /// Appends a dense row and returns its index.
    pub fn add_row(&mut self, coefficients: &[f64], relation: Relation, rhs: f64) -> usize {
        assert_eq!(
            coefficients.len(),
            self.num_vars(),
            "row length must equal the number of variables"
        );
        self.matrix.extend_from_slice(coefficients);
        self.rhs.push(rhs);
        self.relations.push(relation);
        self.rhs.len() - 1
    }

    /// Appends a row given as `(variable, coefficient)` pairs.
    pub fn add_sparse_row(
        &mut self,
        terms: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut row = vec![0.0; self.num_vars()];
        for (j, a) in terms {
            row[j] += a;
        }
        self.add_row(&row, relation, rhs)
    }

    pub fn set_free(&mut self, var: usize) {
        self.lower[var] = LowerBound::Free;
    }

    pub fn set_upper(&mut self, var: usize, bound: f64) {
        self.upper[var] = Some(bound);
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.num_vars();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn check_dimensions(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.rhs.len();
        if self.matrix.len() != m * n {
            return Err(LpError::Dimension(format!(
                "matrix has {} entries, expected {m}x{n}",
                self.matrix.len()
            )));
        }
        if self.relations.len() != m {
            return Err(LpError::Dimension(format!(
                "{} relations for {m} rows",
                self.relations.len()
            )));
        }
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!(
                "bounds given for {}/{} variables, expected {n}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Result of [`solve`]. `x` and `y` are empty unless the status is optimal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One dual per row: `≥ 0` for `≤` rows, `≤ 0` for `≥` rows, free for `=` rows.
    pub y: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
