//! Domain types for the traveler/service market and the primitive checks
//! every other module builds on.

use std::fmt;
use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    Dimension {
        what: &'static str,
        expected: String,
        found: String,
    },
    #[error("invalid market instance: {}", format_issues(.0))]
    Invalid(Vec<Issue>),
}

fn format_issues(issues: &[Issue]) -> String {
    issues.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Dense row-major matrix of reals.
///
/// Serializes as a list of rows so scenario files and reports stay readable.
#[derive(Clone, PartialEq, Default)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// Builds a matrix from nested rows. All rows must share one length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, ModelError> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(ModelError::Dimension {
                    what: "matrix row",
                    expected: cols.to_string(),
                    found: row.len().to_string(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter_rows().map(<[f64]>::to_vec).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Entrywise sum; `None` when shapes differ.
    pub fn checked_add(&self, other: &Matrix) -> Option<Matrix> {
        if self.shape() != other.shape() {
            return None;
        }
        Some(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> f64 {
        (0..self.rows).map(|i| self[(i, j)]).sum()
    }

    /// Sum of the entrywise product with another matrix of the same shape.
    pub fn frobenius_dot(&self, other: &Matrix) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.iter_rows()).finish()
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeSeq;
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for row in self.iter_rows() {
            seq.serialize_element(row)?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// One finding from [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    /// Location of the offending field, e.g. `travelers[1].budget`.
    pub field: String,
    pub message: String,
}

impl Issue {
    pub fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag} at {}: {}", self.field, self.message)
    }
}

/// A market of `I` travelers and `J` services together with the finite set of
/// valuation scenarios the planner considers possible.
///
/// Fields are public so that callers (and [`validate`]) can inspect instances
/// that break invariants; use [`MarketInstance::new`] to get a checked one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketInstance {
    pub budgets: Vec<f64>,
    /// Maximum number of services per traveler.
    pub service_limits: Vec<u32>,
    /// Maximum number of travelers per service.
    pub capacities: Vec<u32>,
    /// Each scenario is an `I x J` valuation matrix.
    pub scenarios: Vec<Matrix>,
}

impl MarketInstance {
    /// Checked constructor: fails with every error-severity issue, ignores warnings.
    pub fn new(
        budgets: Vec<f64>,
        service_limits: Vec<u32>,
        capacities: Vec<u32>,
        scenarios: Vec<Matrix>,
    ) -> Result<Self, ModelError> {
        let instance = Self {
            budgets,
            service_limits,
            capacities,
            scenarios,
        };
        let errors: Vec<Issue> = validate(&instance).into_iter().filter(Issue::is_error).collect();
        if errors.is_empty() {
            Ok(instance)
        } else {
            Err(ModelError::Invalid(errors))
        }
    }

    pub fn traveler_count(&self) -> usize {
        self.budgets.len()
    }

    pub fn service_count(&self) -> usize {
        self.capacities.len()
    }

    pub fn scenario_count(&self) -> usize {
        self.scenarios.len()
    }

    pub fn scenario(&self, index: usize) -> ValuationProfile {
        ValuationProfile::from_scenario(self.scenarios[index].clone(), index)
    }

    /// Largest absolute datum (valuation or budget), floored at 1. Tolerances
    /// are relative to this.
    pub fn magnitude(&self) -> f64 {
        let v = self.scenarios.iter().fold(0.0_f64, |m, s| m.max(s.max_abs()));
        let b = self.budgets.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        v.max(b).max(1.0)
    }

    /// For each traveler, every distinct report it could make: the traveler's
    /// row in each scenario, tagged with the scenario index.
    pub fn misreport_rows(&self, traveler: usize) -> impl Iterator<Item = (usize, &[f64])> {
        self.scenarios
            .iter()
            .enumerate()
            .map(move |(s, m)| (s, m.row(traveler)))
    }
}

/// Lists every invariant breach (errors) and expectation miss (warnings).
pub fn validate(instance: &MarketInstance) -> Vec<Issue> {
    let mut issues = Vec::new();
    let travelers = instance.traveler_count();
    let services = instance.service_count();

    if travelers < 2 {
        issues.push(Issue::error(
            "travelers",
            format!("traveler_count below 2 (found {travelers})"),
        ));
    }
    if services < 1 {
        issues.push(Issue::error("services", "service_count below 1"));
    }
    if instance.service_limits.len() != travelers {
        issues.push(Issue::error(
            "travelers",
            format!(
                "{} service limits for {travelers} travelers",
                instance.service_limits.len()
            ),
        ));
    }
    for (i, b) in instance.budgets.iter().enumerate() {
        if !b.is_finite() {
            issues.push(Issue::error(format!("travelers[{i}].budget"), "budget not finite"));
        } else if *b < 0.0 {
            issues.push(Issue::error(format!("travelers[{i}].budget"), "budget negative"));
        }
    }
    for (i, d) in instance.service_limits.iter().enumerate() {
        if *d < 1 {
            issues.push(Issue::error(
                format!("travelers[{i}].service_limit"),
                "service_limit below 1",
            ));
        }
    }
    for (j, c) in instance.capacities.iter().enumerate() {
        if *c < 1 {
            issues.push(Issue::error(format!("services[{j}].capacity"), "capacity below 1"));
        }
    }
    if instance.scenarios.is_empty() {
        issues.push(Issue::error("valuation_scenarios", "scenario set is empty"));
    }
    for (s, m) in instance.scenarios.iter().enumerate() {
        if m.shape() != (travelers, services) {
            issues.push(Issue::error(
                format!("valuation_scenarios[{s}]"),
                format!("shape {}x{} does not match {travelers}x{services}", m.rows(), m.cols()),
            ));
        } else if m.as_slice().iter().any(|x| !x.is_finite()) {
            issues.push(Issue::error(
                format!("valuation_scenarios[{s}]"),
                "valuation not finite",
            ));
        }
    }
    if travelers >= services && services >= 1 {
        issues.push(Issue::warning(
            "travelers",
            format!("I >= J ({travelers} travelers, {services} services); fewer travelers than services is expected"),
        ));
    }
    issues
}

/// A full valuation profile `v`, row `i` being traveler `i`'s valuations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValuationProfile {
    pub values: Matrix,
    /// Position in the scenario set when the profile was drawn from it.
    pub scenario_index: Option<usize>,
}

impl ValuationProfile {
    pub fn new(values: Matrix) -> Self {
        Self {
            values,
            scenario_index: None,
        }
    }

    pub fn from_scenario(values: Matrix, index: usize) -> Self {
        Self {
            values,
            scenario_index: Some(index),
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }

    /// Profile with traveler `traveler`'s row replaced by `report`.
    pub fn with_report(&self, traveler: usize, report: &[f64]) -> Self {
        let mut values = self.values.clone();
        values.row_mut(traveler).copy_from_slice(report);
        Self::new(values)
    }
}

/// Fractional traveler-by-service assignment; `a[i][j] > 0` means traveler `i`
/// holds (a share of) service `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Matrix);

impl Assignment {
    pub fn zeros(travelers: usize, services: usize) -> Self {
        Self(Matrix::zeros(travelers, services))
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    /// `Σ_ij v_ij a_ij`.
    pub fn welfare(&self, valuations: &Matrix) -> f64 {
        self.0.frobenius_dot(valuations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PaymentVector(pub Vec<f64>);

impl PaymentVector {
    pub fn zeros(travelers: usize) -> Self {
        Self(vec![0.0; travelers])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Checks nonnegativity, the per-traveler service limits and the service
/// capacities, each within additive tolerance `tol`.
pub fn is_feasible(a: &Assignment, instance: &MarketInstance, tol: f64) -> Result<bool, ModelError> {
    let expected = (instance.traveler_count(), instance.service_count());
    if a.0.shape() != expected {
        return Err(ModelError::Dimension {
            what: "assignment",
            expected: format!("{}x{}", expected.0, expected.1),
            found: format!("{}x{}", a.0.rows(), a.0.cols()),
        });
    }
    if a.0.as_slice().iter().any(|&x| x.is_nan() || x < -tol) {
        return Ok(false);
    }
    let rows_ok = instance
        .service_limits
        .iter()
        .enumerate()
        .all(|(i, &d)| a.0.row_sum(i) <= f64::from(d) + tol);
    let cols_ok = instance
        .capacities
        .iter()
        .enumerate()
        .all(|(j, &c)| a.0.col_sum(j) <= f64::from(c) + tol);
    Ok(rows_ok && cols_ok)
}

/// Quasi-linear utility `Σ_j v_ij a_ij − p_i`.
pub fn utility(valuations: &[f64], assignment: &[f64], payment: f64) -> Result<f64, ModelError> {
    if valuations.len() != assignment.len() {
        return Err(ModelError::Dimension {
            what: "utility rows",
            expected: valuations.len().to_string(),
            found: assignment.len().to_string(),
        });
    }
    let value: f64 = valuations.iter().zip(assignment).map(|(v, a)| v * a).sum();
    Ok(value - payment)
}

/// Total collected payment.
pub fn revenue(payments: &PaymentVector) -> f64 {
    payments.0.iter().sum()
}
