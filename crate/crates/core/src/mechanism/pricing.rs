//! Reservation payments, `γ`, the adapted and exclusion assignments, the
//! payment rule and the final assignment.

use super::{MechanismError, MechanismOptions, MechanismTables, ScenarioDuals};
use crate::lp::{solve, LpProblem, LpStatus, Relation};
use crate::model::{is_feasible, Assignment, MarketInstance, Matrix, PaymentVector, ValuationProfile};

/// `r_ij = ξ1_i + ξ2_j + (ξ5_i + ξ6_i) w_ij`. Values in `[-tol, 0)` are
/// clamped to zero; anything lower is an error.
pub fn reservation_payments(
    duals: &ScenarioDuals,
    v_worst: &ValuationProfile,
    tol: f64,
) -> Result<Matrix, MechanismError> {
    let w = &v_worst.values;
    if duals.xi1.len() != w.rows() || duals.xi2.len() != w.cols() {
        return Err(MechanismError::Precondition(format!(
            "duals sized {}x{} for a {}x{} profile",
            duals.xi1.len(),
            duals.xi2.len(),
            w.rows(),
            w.cols()
        )));
    }
    let mut r = Matrix::zeros(w.rows(), w.cols());
    for i in 0..w.rows() {
        for j in 0..w.cols() {
            let value = duals.xi1[i] + duals.xi2[j] + (duals.xi5[i] + duals.xi6[i]) * w[(i, j)];
            r[(i, j)] = if value >= 0.0 {
                value
            } else if value >= -tol {
                0.0
            } else {
                return Err(MechanismError::NegativeReservation {
                    traveler: i,
                    service: j,
                    value,
                });
            };
        }
    }
    Ok(r)
}

/// Row `i` of the result is row `i` of the scenario minimizing
/// `Σ_j ā_ij ṽ_ij`, lowest scenario index on ties.
pub fn compute_gamma(nominal: &Assignment, scenarios: &[Matrix]) -> Matrix {
    let (ni, nj) = nominal.0.shape();
    let mut gamma = Matrix::zeros(ni, nj);
    for i in 0..ni {
        let weight = |m: &Matrix| -> f64 { nominal.row(i).iter().zip(m.row(i)).map(|(a, v)| a * v).sum() };
        let mut best = 0;
        let mut best_value = f64::INFINITY;
        for (s, m) in scenarios.iter().enumerate() {
            let value = weight(m);
            if value < best_value {
                best = s;
                best_value = value;
            }
        }
        if let Some(m) = scenarios.get(best) {
            gamma.row_mut(i).copy_from_slice(m.row(i));
        }
    }
    gamma
}

/// The report-independent set an adapted assignment is chosen from: residual
/// capacity, residual service limits, and for every scenario a budget row per
/// traveler. Travelers marked excluded have no variables.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSet {
    pub capacity: Vec<f64>,
    pub service_limit: Vec<f64>,
    pub budget: Vec<f64>,
    pub excluded: Option<usize>,
}

impl ResidualSet {
    /// The set for the adapted assignment, with budget headroom
    /// `b_i − Σ_j ā_ij r_ij + ξ5_i Σ_j ā_ij γ_ij`.
    pub fn adapted(instance: &MarketInstance, tables: &MechanismTables, tol: f64) -> Result<Self, MechanismError> {
        Self::build(instance, tables, None, tol)
    }

    /// The set with traveler `k` removed and budget headroom
    /// `b_i − Σ_j ā_ij r_ij`.
    pub fn excluding(
        instance: &MarketInstance,
        tables: &MechanismTables,
        k: usize,
        tol: f64,
    ) -> Result<Self, MechanismError> {
        if k >= instance.traveler_count() {
            return Err(MechanismError::Precondition(format!(
                "traveler {k} out of range (have {})",
                instance.traveler_count()
            )));
        }
        Self::build(instance, tables, Some(k), tol)
    }

    fn build(
        instance: &MarketInstance,
        tables: &MechanismTables,
        excluded: Option<usize>,
        tol: f64,
    ) -> Result<Self, MechanismError> {
        let a = &tables.nominal.0;
        let (ni, nj) = (instance.traveler_count(), instance.service_count());
        if a.shape() != (ni, nj) || tables.reservations.shape() != (ni, nj) {
            return Err(MechanismError::Precondition("tables do not match instance".into()));
        }
        let headroom = |value: f64| -> Result<f64, MechanismError> {
            if value >= 0.0 {
                Ok(value)
            } else if value >= -tol {
                Ok(0.0)
            } else {
                Err(MechanismError::Infeasible("residual assignment"))
            }
        };
        let capacity = (0..nj)
            .map(|j| headroom(f64::from(instance.capacities[j]) - a.col_sum(j)))
            .collect::<Result<_, _>>()?;
        let service_limit = (0..ni)
            .map(|i| headroom(f64::from(instance.service_limits[i]) - a.row_sum(i)))
            .collect::<Result<_, _>>()?;
        let budget = (0..ni)
            .map(|i| {
                let held: f64 = a
                    .row(i)
                    .iter()
                    .zip(tables.reservations.row(i))
                    .map(|(x, r)| x * r)
                    .sum();
                let correction = if excluded.is_none() {
                    let weighted: f64 = a.row(i).iter().zip(tables.gamma.row(i)).map(|(x, g)| x * g).sum();
                    tables.duals.xi5[i] * weighted
                } else {
                    0.0
                };
                headroom(instance.budgets[i] - held + correction)
            })
            .collect::<Result<_, _>>()?;
        Ok(Self {
            capacity,
            service_limit,
            budget,
            excluded,
        })
    }

    /// Maximizes `Σ ã_ij c_ij` over the set.
    pub fn maximize(
        &self,
        instance: &MarketInstance,
        coefficients: &Matrix,
        lp_tolerance: f64,
    ) -> Result<Assignment, MechanismError> {
        let (ni, nj) = (instance.traveler_count(), instance.service_count());
        let travelers: Vec<usize> = (0..ni).filter(|&i| Some(i) != self.excluded).collect();
        let var = |pos: usize, j: usize| pos * nj + j;
        let mut problem = LpProblem::with_objective(
            travelers
                .iter()
                .flat_map(|&i| (0..nj).map(move |j| coefficients[(i, j)]))
                .collect(),
        );
        for j in 0..nj {
            problem.add_sparse_row(
                (0..travelers.len()).map(|pos| (var(pos, j), 1.0)),
                Relation::Le,
                self.capacity[j],
            );
        }
        for (pos, &i) in travelers.iter().enumerate() {
            problem.add_sparse_row((0..nj).map(|j| (var(pos, j), 1.0)), Relation::Le, self.service_limit[i]);
            let mut seen: Vec<&[f64]> = Vec::new();
            for scenario in &instance.scenarios {
                let row = scenario.row(i);
                if seen.contains(&row) {
                    continue;
                }
                seen.push(row);
                problem.add_sparse_row(
                    row.iter().enumerate().map(|(j, &u)| (var(pos, j), u)),
                    Relation::Le,
                    self.budget[i],
                );
            }
        }
        let solution = solve(&problem, lp_tolerance)?;
        match solution.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(MechanismError::Infeasible("residual assignment")),
            LpStatus::Unbounded => return Err(MechanismError::Unbounded("residual assignment")),
        }
        let mut a = Matrix::zeros(ni, nj);
        for (pos, &i) in travelers.iter().enumerate() {
            for j in 0..nj {
                a[(i, j)] = solution.x[var(pos, j)];
            }
        }
        Ok(Assignment(a))
    }
}

fn surplus(realized: &ValuationProfile, reservations: &Matrix) -> Result<Matrix, MechanismError> {
    if realized.values.shape() != reservations.shape() {
        return Err(MechanismError::Precondition(format!(
            "realized profile is {}x{}, expected {}x{}",
            realized.values.rows(),
            realized.values.cols(),
            reservations.rows(),
            reservations.cols()
        )));
    }
    Ok(Matrix::from_fn(reservations.rows(), reservations.cols(), |i, j| {
        realized.values[(i, j)] - reservations[(i, j)]
    }))
}

/// `ã(v)`: maximizes `Σ ã_ij (v_ij − r_ij)` over the adapted residual set.
pub fn adapted_assignment(
    instance: &MarketInstance,
    tables: &MechanismTables,
    realized: &ValuationProfile,
    options: &MechanismOptions,
) -> Result<Assignment, MechanismError> {
    let coefficients = surplus(realized, &tables.reservations)?;
    ResidualSet::adapted(instance, tables, options.absolute(instance))?.maximize(
        instance,
        &coefficients,
        options.lp_tolerance,
    )
}

/// `ã_{·;k}(v_{−k})`: the same maximization with traveler `k` absent.
pub fn exclusion_assignment(
    instance: &MarketInstance,
    tables: &MechanismTables,
    realized: &ValuationProfile,
    k: usize,
    options: &MechanismOptions,
) -> Result<Assignment, MechanismError> {
    let coefficients = surplus(realized, &tables.reservations)?;
    ResidualSet::excluding(instance, tables, k, options.absolute(instance))?.maximize(
        instance,
        &coefficients,
        options.lp_tolerance,
    )
}

/// Payment of each traveler `k`:
/// `Σ_j ã_kj r_kj + Σ_j ā_kj r_kj − ξ5_k Σ_j ā_kj γ_kj`
/// `+ Σ_{i≠k} Σ_j ã_ij;k (v_ij − r_ij) − Σ_{i≠k} Σ_j ã_ij (v_ij − r_ij)`.
pub fn price(
    instance: &MarketInstance,
    tables: &MechanismTables,
    realized: &ValuationProfile,
    adapted: &Assignment,
    exclusions: &[Assignment],
) -> Result<PaymentVector, MechanismError> {
    let ni = instance.traveler_count();
    if exclusions.len() != ni {
        return Err(MechanismError::Precondition(format!(
            "{} exclusion assignments for {ni} travelers",
            exclusions.len()
        )));
    }
    let s = surplus(realized, &tables.reservations)?;
    let r = &tables.reservations;
    let a_bar = &tables.nominal.0;
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    let others = |a: &Matrix, k: usize| -> f64 { (0..ni).filter(|&i| i != k).map(|i| dot(a.row(i), s.row(i))).sum() };

    let payments = (0..ni)
        .map(|k| {
            dot(adapted.row(k), r.row(k)) + dot(a_bar.row(k), r.row(k))
                - tables.duals.xi5[k] * dot(a_bar.row(k), tables.gamma.row(k))
                + others(&exclusions[k].0, k)
                - others(&adapted.0, k)
        })
        .collect();
    Ok(PaymentVector(payments))
}

/// `ā + ã`, which must satisfy the service-limit and capacity rows.
pub fn final_assignment(
    instance: &MarketInstance,
    tables: &MechanismTables,
    adapted: &Assignment,
    tol: f64,
) -> Result<Assignment, MechanismError> {
    let sum = tables
        .nominal
        .0
        .checked_add(&adapted.0)
        .ok_or_else(|| MechanismError::Precondition("adapted assignment has the wrong shape".into()))?;
    let sum = Assignment(sum);
    if is_feasible(&sum, instance, tol)? {
        Ok(sum)
    } else {
        Err(MechanismError::InfeasibleFinal)
    }
}
