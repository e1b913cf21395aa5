mod common;

use common::{matrix, reference_instance};
use mobility_equity::cli::{parse_scenario, property_suite};
use mobility_equity::mechanism::{Mechanism, MechanismOptions, PricingOutcome};
use mobility_equity::model::{Assignment, MarketInstance, PaymentVector, ValuationProfile};
use mobility_equity::verify::{
    check_budget_fairness, check_feasibility, check_reservation_identity, check_sustainability, check_truthfulness,
    check_voluntary_participation, Property, Witness,
};
use proptest::prelude::*;
use std::convert::Infallible;
use std::path::Path;

fn outcome(values: &[&[f64]], assignment: &[&[f64]], payments: Vec<f64>) -> PricingOutcome {
    let a = Assignment(matrix(assignment));
    let mut o = PricingOutcome {
        realized: ValuationProfile::new(matrix(values)),
        adapted: Assignment::zeros(a.0.rows(), a.0.cols()),
        exclusion: Vec::new(),
        final_assignment: a,
        payments: PaymentVector(payments),
        utilities: Vec::new(),
    };
    o.refresh_utilities();
    o
}

#[test]
fn budget_breach_is_reported_with_its_traveler() {
    let o = outcome(
        &[&[3.0, 1.0], &[1.0, 3.0]],
        &[&[1.0, 0.0], &[0.0, 1.0]],
        vec![12.0, 3.0],
    );
    let r = check_budget_fairness(&o, &[10.0, 10.0], 1e-6);
    assert!(!r.passed);
    assert!((r.worst_violation - 2.0).abs() < 1e-12);
    assert_eq!(r.witness.unwrap().traveler, Some(0));
}

#[test]
fn negative_utility_breaks_participation() {
    let o = outcome(&[&[3.0, 1.0], &[1.0, 3.0]], &[&[1.0, 0.0], &[0.0, 1.0]], vec![3.0, 4.5]);
    let r = check_voluntary_participation(&o, 1e-6);
    assert!(!r.passed);
    assert!((r.worst_violation - 1.5).abs() < 1e-12);
    assert_eq!(r.witness.unwrap().traveler, Some(1));
}

#[test]
fn over_capacity_assignment_is_infeasible() {
    let inst = reference_instance();
    let o = outcome(&[&[3.0, 1.0], &[1.0, 3.0]], &[&[1.0, 0.0], &[0.5, 0.0]], vec![0.0, 0.0]);
    let r = check_feasibility(&inst, &[o], 1e-6);
    assert!(!r.passed);
    assert!((r.worst_violation - 0.5).abs() < 1e-12);
    assert_eq!(r.witness.unwrap().service, Some(0));
}

#[test]
fn revenue_shortfall_names_the_scenario() {
    let a = outcome(&[&[3.0, 1.0], &[1.0, 3.0]], &[&[1.0, 0.0], &[0.0, 1.0]], vec![3.0, 3.0]);
    let b = outcome(&[&[3.0, 1.0], &[1.0, 3.0]], &[&[1.0, 0.0], &[0.0, 1.0]], vec![1.0, 3.0]);
    let r = check_sustainability(&[a, b], 6.0, 1e-6);
    assert!(!r.passed);
    assert!((r.worst_violation - 2.0).abs() < 1e-12);
    assert_eq!(r.witness.unwrap().scenario, Some(1));
}

#[test]
fn identity_breach_names_the_cell() {
    let a = Assignment(matrix(&[&[1.0, 0.0], &[0.0, 1.0]]));
    let w = matrix(&[&[3.0, 1.0], &[1.0, 3.0]]);
    let r = matrix(&[&[3.0, 9.0], &[1.0, 2.0]]);
    let rep = check_reservation_identity(&a, &r, &w, 1e-6);
    assert!(!rep.passed);
    assert!((rep.worst_violation - 1.0).abs() < 1e-12);
    assert_eq!(rep.witness.unwrap().traveler, Some(1));
    assert_eq!(rep.witness.unwrap().service, Some(1));
}

/// First-price rule: the highest reported value wins the single service and
/// pays its report. Understating pays off.
fn first_price(profile: &ValuationProfile) -> Result<PricingOutcome, Infallible> {
    let v = &profile.values;
    let winner = if v[(0, 0)] >= v[(1, 0)] { 0 } else { 1 };
    let mut a = [[0.0], [0.0]];
    a[winner][0] = 1.0;
    let mut p = vec![0.0, 0.0];
    p[winner] = v[(winner, 0)];
    let rows: Vec<&[f64]> = a.iter().map(|r| r.as_slice()).collect();
    let vals: Vec<&[f64]> = (0..2).map(|i| v.row(i)).collect();
    Ok(outcome(&vals, &rows, p))
}

#[test]
fn first_price_rule_is_not_truthful() {
    let inst = MarketInstance::new(
        vec![10.0, 10.0],
        vec![1, 1],
        vec![1],
        vec![matrix(&[&[5.0], &[1.0]]), matrix(&[&[2.0], &[1.0]])],
    )
    .unwrap();
    let r = check_truthfulness(&inst, first_price, 1e-6).unwrap();
    assert!(!r.passed);
    // Traveler 0 with value 5 reports 2, still wins, and pays 3 less.
    assert!((r.worst_violation - 3.0).abs() < 1e-12);
    assert_eq!(
        r.witness,
        Some(Witness {
            traveler: Some(0),
            scenario: Some(0),
            misreport: Some(1),
            service: None
        })
    );
}

#[test]
fn halved_payments_fail_truthfulness() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/halved_payments.json");
    let loaded = parse_scenario(&path).unwrap();
    let mech = Mechanism::new(loaded.instance, MechanismOptions::default()).unwrap();
    assert!(property_suite(&mech, 1.0).unwrap().passed());
    let suite = property_suite(&mech, 0.5).unwrap();
    let t = suite.property(Property::Truthfulness).unwrap();
    assert!(!t.passed);
    assert!(t.worst_violation > 0.1);
    let w = t.witness.unwrap();
    assert!(w.traveler.is_some() && w.scenario.is_some() && w.misreport.is_some());
}

proptest! {
    #[test]
    fn failures_persist_at_smaller_tolerances(
        payments in prop::collection::vec(-5.0f64..20.0, 2),
        t in 1e-9f64..5.0,
        shrink in 0.0f64..1.0,
    ) {
        let o = outcome(&[&[3.0, 1.0], &[1.0, 3.0]], &[&[1.0, 0.0], &[0.0, 1.0]], payments);
        let smaller = t * shrink;
        let pairs = [
            (check_budget_fairness(&o, &[4.0, 4.0], t), check_budget_fairness(&o, &[4.0, 4.0], smaller)),
            (check_voluntary_participation(&o, t), check_voluntary_participation(&o, smaller)),
            (check_sustainability(std::slice::from_ref(&o), 6.0, t), check_sustainability(std::slice::from_ref(&o), 6.0, smaller)),
        ];
        for (at_t, at_smaller) in pairs {
            if !at_t.passed {
                prop_assert!(!at_smaller.passed);
                prop_assert_eq!(at_t.witness, at_smaller.witness);
            }
        }
    }
}
