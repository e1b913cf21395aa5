//! Property checks on pricing outcomes, evaluated by direct arithmetic on the
//! outcome fields, plus brute-force oracles that share no code with the
//! solver.

mod grid;
pub mod oracle;

use serde::{Deserialize, Serialize};

use crate::mechanism::PricingOutcome;
use crate::model::{Assignment, MarketInstance, Matrix};

pub use grid::{brute_force_assignment, grid_levels, grid_maximize, GridError, MAX_GRID_POINTS};
pub use oracle::{vertex_optimum, OracleOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Feasibility,
    Truthfulness,
    VoluntaryParticipation,
    BudgetFairness,
    Sustainability,
    ReservationIdentity,
}

impl Property {
    pub fn name(self) -> &'static str {
        match self {
            Property::Feasibility => "feasibility",
            Property::Truthfulness => "truthfulness",
            Property::VoluntaryParticipation => "voluntary_participation",
            Property::BudgetFairness => "budget_fairness",
            Property::Sustainability => "sustainability",
            Property::ReservationIdentity => "reservation_identity",
        }
    }
}

/// Where the worst violation was found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Witness {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub traveler: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub misreport: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub service: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: Property,
    pub passed: bool,
    /// Largest left-hand side of the property's `≤ 0` form; negative values
    /// are margins.
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
}

/// Tracks the maximum of a family of violations and where it occurred.
struct Worst {
    value: f64,
    witness: Option<Witness>,
}

impl Worst {
    fn new() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            witness: None,
        }
    }

    fn offer(&mut self, value: f64, witness: Witness) {
        // NaN counts as the worst possible violation.
        if value > self.value || (value.is_nan() && !self.value.is_nan()) {
            self.value = value;
            self.witness = Some(witness);
        }
    }

    fn merge(&mut self, other: Worst) {
        if let Some(w) = other.witness {
            self.offer(other.value, w);
        }
    }

    fn report(self, property: Property, tol: f64) -> PropertyReport {
        let value = if self.witness.is_none() { 0.0 } else { self.value };
        PropertyReport {
            property,
            passed: value <= tol,
            worst_violation: value,
            tolerance: tol,
            witness: self.witness,
        }
    }
}

/// Folds per-outcome reports of one property into a single report holding
/// the worst violation.
pub fn combine(property: Property, reports: impl IntoIterator<Item = PropertyReport>, tol: f64) -> PropertyReport {
    let mut worst = Worst::new();
    for r in reports {
        worst.offer(r.worst_violation, r.witness.unwrap_or_default());
    }
    worst.report(property, tol)
}

fn row_value(values: &[f64], assignment: &[f64]) -> f64 {
    values.iter().zip(assignment).map(|(v, a)| v * a).sum()
}

/// Nonnegativity, service-limit and capacity rows of every final assignment.
/// Outcome `s` is tagged as scenario `s` in the witness.
pub fn check_feasibility(instance: &MarketInstance, outcomes: &[PricingOutcome], tol: f64) -> PropertyReport {
    let mut worst = Worst::new();
    for (s, out) in outcomes.iter().enumerate() {
        worst.merge(assignment_breach(instance, &out.final_assignment, Some(s)));
    }
    worst.report(Property::Feasibility, tol)
}

fn assignment_breach(instance: &MarketInstance, a: &Assignment, scenario: Option<usize>) -> Worst {
    let mut worst = Worst::new();
    let m = &a.0;
    if m.shape() != (instance.traveler_count(), instance.service_count()) {
        worst.offer(
            f64::INFINITY,
            Witness {
                scenario,
                ..Witness::default()
            },
        );
        return worst;
    }
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            worst.offer(
                -m[(i, j)],
                Witness {
                    traveler: Some(i),
                    service: Some(j),
                    scenario,
                    misreport: None,
                },
            );
        }
        worst.offer(
            m.row(i).iter().sum::<f64>() - f64::from(instance.service_limits[i]),
            Witness {
                traveler: Some(i),
                scenario,
                ..Witness::default()
            },
        );
    }
    for j in 0..m.cols() {
        let load: f64 = (0..m.rows()).map(|i| m[(i, j)]).sum();
        worst.offer(
            load - f64::from(instance.capacities[j]),
            Witness {
                service: Some(j),
                scenario,
                ..Witness::default()
            },
        );
    }
    worst
}

/// Largest gain any traveler gets from reporting another scenario's row in
/// place of its own, with the others reporting truthfully:
/// `Σ_j v_ij a_ij(ṽ_i, v_−i) − p_i(ṽ_i, v_−i) − Σ_j v_ij a_ij(v) + p_i(v)`.
///
/// `outcome_fn` prices a reported profile; its errors abort the check.
pub fn check_truthfulness<E>(
    instance: &MarketInstance,
    mut outcome_fn: impl FnMut(&crate::model::ValuationProfile) -> Result<PricingOutcome, E>,
    tol: f64,
) -> Result<PropertyReport, E> {
    let mut worst = Worst::new();
    for s in 0..instance.scenario_count() {
        let truth = instance.scenario(s);
        let honest = outcome_fn(&truth)?;
        for i in 0..instance.traveler_count() {
            let values = truth.row(i);
            let honest_utility = row_value(values, honest.final_assignment.row(i)) - honest.payments.0[i];
            for (m, report) in instance.misreport_rows(i) {
                let gain = if report == values {
                    0.0
                } else {
                    let lie = outcome_fn(&truth.with_report(i, report))?;
                    row_value(values, lie.final_assignment.row(i)) - lie.payments.0[i] - honest_utility
                };
                worst.offer(
                    gain,
                    Witness {
                        traveler: Some(i),
                        scenario: Some(s),
                        misreport: Some(m),
                        service: None,
                    },
                );
            }
        }
    }
    Ok(worst.report(Property::Truthfulness, tol))
}

/// `p_i − Σ_j v_ij a_ij ≤ tol` for every traveler.
pub fn check_voluntary_participation(outcome: &PricingOutcome, tol: f64) -> PropertyReport {
    let mut worst = Worst::new();
    for (i, p) in outcome.payments.0.iter().enumerate() {
        let value = row_value(outcome.realized.row(i), outcome.final_assignment.row(i));
        worst.offer(
            p - value,
            Witness {
                traveler: Some(i),
                scenario: outcome.realized.scenario_index,
                ..Witness::default()
            },
        );
    }
    worst.report(Property::VoluntaryParticipation, tol)
}

/// `p_i − b_i ≤ tol` for every traveler.
pub fn check_budget_fairness(outcome: &PricingOutcome, budgets: &[f64], tol: f64) -> PropertyReport {
    let mut worst = Worst::new();
    if budgets.len() != outcome.payments.len() {
        worst.offer(f64::INFINITY, Witness::default());
    }
    for (i, (p, b)) in outcome.payments.0.iter().zip(budgets).enumerate() {
        worst.offer(
            p - b,
            Witness {
                traveler: Some(i),
                scenario: outcome.realized.scenario_index,
                ..Witness::default()
            },
        );
    }
    worst.report(Property::BudgetFairness, tol)
}

/// `objective − min_v Σ_i p_i(v) ≤ tol`.
pub fn check_sustainability(outcomes: &[PricingOutcome], objective: f64, tol: f64) -> PropertyReport {
    let mut worst = Worst::new();
    for (s, out) in outcomes.iter().enumerate() {
        let revenue: f64 = out.payments.0.iter().sum();
        worst.offer(
            objective - revenue,
            Witness {
                scenario: Some(out.realized.scenario_index.unwrap_or(s)),
                ..Witness::default()
            },
        );
    }
    worst.report(Property::Sustainability, tol)
}

/// `|ā_ij r_ij − ā_ij w_ij| ≤ tol` for every cell.
pub fn check_reservation_identity(
    nominal: &Assignment,
    reservations: &Matrix,
    v_worst: &Matrix,
    tol: f64,
) -> PropertyReport {
    let mut worst = Worst::new();
    let a = &nominal.0;
    if a.shape() != reservations.shape() || a.shape() != v_worst.shape() {
        worst.offer(f64::INFINITY, Witness::default());
    } else {
        for i in 0..a.rows() {
            for j in 0..a.cols() {
                worst.offer(
                    (a[(i, j)] * reservations[(i, j)] - a[(i, j)] * v_worst[(i, j)]).abs(),
                    Witness {
                        traveler: Some(i),
                        service: Some(j),
                        ..Witness::default()
                    },
                );
            }
        }
    }
    worst.report(Property::ReservationIdentity, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PaymentVector, ValuationProfile};

    fn outcome(values: &[&[f64]], assignment: &[&[f64]], payments: &[f64]) -> PricingOutcome {
        let v = Matrix::from_rows(values).unwrap();
        let a = Assignment(Matrix::from_rows(assignment).unwrap());
        let (ni, nj) = v.shape();
        let mut out = PricingOutcome {
            realized: ValuationProfile::from_scenario(v, 0),
            adapted: Assignment::zeros(ni, nj),
            exclusion: vec![Assignment::zeros(ni, nj); ni],
            final_assignment: a,
            payments: PaymentVector(payments.to_vec()),
            utilities: Vec::new(),
        };
        out.refresh_utilities();
        out
    }

    #[test]
    fn participation_examples() {
        let zero = outcome(&[&[3.0], &[2.0]], &[&[0.0], &[0.0]], &[0.0, 0.0]);
        let r = check_voluntary_participation(&zero, 0.0);
        assert!(r.passed);
        assert_eq!(r.worst_violation, 0.0);

        let boundary = outcome(&[&[3.0], &[2.0]], &[&[1.0], &[0.0]], &[3.0, 0.0]);
        assert!(check_voluntary_participation(&boundary, 0.0).passed);

        let over = outcome(&[&[3.0], &[2.0]], &[&[1.0], &[0.0]], &[4.0, 0.0]);
        let r = check_voluntary_participation(&over, 1e-9);
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap().traveler, Some(0));
    }

    #[test]
    fn budget_examples() {
        let o = outcome(&[&[3.0], &[2.0]], &[&[0.0], &[0.0]], &[0.0, 0.0]);
        assert!(check_budget_fairness(&o, &[0.0, 1.0], 0.0).passed);
        let o = outcome(&[&[3.0], &[2.0]], &[&[0.0], &[0.0]], &[2.0, 5.0]);
        assert!(check_budget_fairness(&o, &[2.0, 5.0], 0.0).passed);
        let o = outcome(&[&[3.0], &[2.0]], &[&[0.0], &[0.0]], &[3.0, 5.0]);
        let r = check_budget_fairness(&o, &[2.0, 5.0], 1e-9);
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap().traveler, Some(0));
    }

    #[test]
    fn sustainability_examples() {
        let o = outcome(&[&[3.0], &[2.0]], &[&[0.0], &[0.0]], &[0.0, 0.0]);
        assert!(check_sustainability(std::slice::from_ref(&o), 0.0, 0.0).passed);
        assert!(!check_sustainability(&[o], 1.0, 1e-9).passed);
    }

    #[test]
    fn feasibility_flags_each_breach() {
        let inst = MarketInstance::new(
            vec![1.0, 1.0],
            vec![1, 1],
            vec![1],
            vec![Matrix::from_rows(&[[1.0], [1.0]]).unwrap()],
        )
        .unwrap();
        let ok = outcome(&[&[1.0], &[1.0]], &[&[0.5], &[0.5]], &[0.0, 0.0]);
        assert!(check_feasibility(&inst, &[ok], 1e-9).passed);
        let crowded = outcome(&[&[1.0], &[1.0]], &[&[1.0], &[1.0]], &[0.0, 0.0]);
        let r = check_feasibility(&inst, &[crowded], 1e-9);
        assert!(!r.passed);
        assert_eq!(r.witness.unwrap().service, Some(0));
    }

    #[test]
    fn failing_at_a_tolerance_fails_at_every_smaller_one() {
        let over = outcome(&[&[3.0], &[2.0]], &[&[1.0], &[0.0]], &[3.5, 0.0]);
        for tol in [0.4, 0.1, 0.0] {
            assert!(!check_voluntary_participation(&over, tol).passed);
        }
        assert!(check_voluntary_participation(&over, 0.5).passed);
    }

    #[test]
    fn identical_reports_contribute_nothing() {
        let inst = MarketInstance::new(
            vec![1.0, 1.0],
            vec![1, 1],
            vec![1],
            vec![Matrix::from_rows(&[[1.0], [2.0]]).unwrap()],
        )
        .unwrap();
        let fixed = outcome(&[&[1.0], &[2.0]], &[&[1.0], &[0.0]], &[0.5, 0.0]);
        let report = check_truthfulness(&inst, |_| Ok::<_, ()>(fixed.clone()), 0.0).unwrap();
        assert!(report.passed);
        assert_eq!(report.worst_violation, 0.0);
    }
}
