//! Offline worst-case stage and online pricing.
//!
//! The offline stage runs once per instance and produces [`MechanismTables`]:
//! the worst-case profile, the nominal assignment held at it, per-cell
//! reservation payments read off the nominal program's duals, and `γ`.
//! Pricing a reported profile then solves one adapted-assignment LP plus one
//! exclusion LP per traveler and applies the closed-form payment rule.

mod pricing;
mod worst_case;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LpError, DEFAULT_TOLERANCE};
use crate::model::{Assignment, MarketInstance, Matrix, ModelError, PaymentVector, ValuationProfile};

pub use pricing::{
    adapted_assignment, compute_gamma, exclusion_assignment, final_assignment, price, reservation_payments, ResidualSet,
};
pub use worst_case::{
    block_optimum, compute_nominal, extract_duals, solve_worst_case, EpigraphProgram, Nominal, RowFamily, WorstCase,
};

/// Mechanism-level comparisons use this tolerance relative to the instance
/// magnitude.
pub const DEFAULT_MECHANISM_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum MechanismError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no feasible nominal assignment")]
    NoFeasibleNominal,
    #[error("{0} program is unbounded")]
    Unbounded(&'static str),
    #[error("{0} program is infeasible")]
    Infeasible(&'static str),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("reservation payment for traveler {traveler}, service {service} is {value}, below zero")]
    NegativeReservation {
        traveler: usize,
        service: usize,
        value: f64,
    },
    #[error("{0} program failed its optimality certificate")]
    CertificateRejected(&'static str),
    #[error("final assignment breaks a capacity or service limit")]
    InfeasibleFinal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismOptions {
    pub lp_tolerance: f64,
    /// Relative to [`MarketInstance::magnitude`].
    pub tolerance: f64,
}

impl Default for MechanismOptions {
    fn default() -> Self {
        Self {
            lp_tolerance: DEFAULT_TOLERANCE,
            tolerance: DEFAULT_MECHANISM_TOLERANCE,
        }
    }
}

impl MechanismOptions {
    /// Absolute tolerance for `instance`.
    pub fn absolute(&self, instance: &MarketInstance) -> f64 {
        self.tolerance * instance.magnitude()
    }
}

/// Dual values of the worst-case program, one table entry per scenario block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualCertificate {
    /// `[scenario][traveler]`, service-limit rows.
    pub xi1: Vec<Vec<f64>>,
    /// `[scenario][service]`, capacity rows.
    pub xi2: Vec<Vec<f64>>,
    /// `[scenario]`, epigraph rows; sums to one.
    pub xi3: Vec<f64>,
    /// Truthfulness rows, one entry per row present in the program.
    pub xi4: Vec<MisreportDual>,
    /// `[scenario][traveler]`, participation rows.
    pub xi5: Vec<Vec<f64>>,
    /// `[scenario][traveler]`, budget rows.
    pub xi6: Vec<Vec<f64>>,
}

impl DualCertificate {
    pub fn at(&self, scenario: usize) -> ScenarioDuals {
        ScenarioDuals {
            xi1: self.xi1[scenario].clone(),
            xi2: self.xi2[scenario].clone(),
            xi3: self.xi3[scenario],
            xi5: self.xi5[scenario].clone(),
            xi6: self.xi6[scenario].clone(),
        }
    }
}

/// Dual of the row `v_ij a_ij(misreport) − v_ij a_ij(truth) ≤ 0`, where the
/// misreport block differs from the truth block only in `traveler`'s row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MisreportDual {
    pub traveler: usize,
    pub scenario: usize,
    pub misreport: usize,
    pub service: usize,
    pub value: f64,
}

/// Duals of a single scenario block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioDuals {
    pub xi1: Vec<f64>,
    pub xi2: Vec<f64>,
    pub xi3: f64,
    pub xi5: Vec<f64>,
    pub xi6: Vec<f64>,
}

impl ScenarioDuals {
    pub fn zeros(travelers: usize, services: usize) -> Self {
        Self {
            xi1: vec![0.0; travelers],
            xi2: vec![0.0; services],
            xi3: 0.0,
            xi5: vec![0.0; travelers],
            xi6: vec![0.0; travelers],
        }
    }
}

/// Everything computed before any report arrives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismTables {
    pub v_worst: ValuationProfile,
    /// Optimal value of the worst-case (epigraph) program.
    pub worst_case_objective: f64,
    /// Standalone optimal welfare of each scenario block.
    pub block_optima: Vec<f64>,
    pub certificate: DualCertificate,
    pub nominal: Assignment,
    /// Welfare of the nominal assignment at `v_worst`.
    pub nominal_objective: f64,
    /// Nominal program duals, read at `v_worst`.
    pub duals: ScenarioDuals,
    pub reservations: Matrix,
    pub gamma: Matrix,
}

/// Result of pricing one reported profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingOutcome {
    pub realized: ValuationProfile,
    pub adapted: Assignment,
    /// Entry `k` is the exclusion assignment with traveler `k` removed.
    pub exclusion: Vec<Assignment>,
    pub final_assignment: Assignment,
    pub payments: PaymentVector,
    pub utilities: Vec<f64>,
}

impl PricingOutcome {
    /// Recomputes utilities from the final assignment and current payments.
    pub fn refresh_utilities(&mut self) {
        self.utilities = (0..self.payments.len())
            .map(|i| {
                self.realized
                    .row(i)
                    .iter()
                    .zip(self.final_assignment.row(i))
                    .map(|(v, a)| v * a)
                    .sum::<f64>()
                    - self.payments.0[i]
            })
            .collect();
    }
}

/// An instance together with its offline tables, ready to price profiles.
#[derive(Debug, Clone)]
pub struct Mechanism {
    instance: MarketInstance,
    tables: MechanismTables,
    options: MechanismOptions,
}

impl Mechanism {
    pub fn new(instance: MarketInstance, options: MechanismOptions) -> Result<Self, MechanismError> {
        let tables = compute_tables(&instance, &options)?;
        Ok(Self {
            instance,
            tables,
            options,
        })
    }

    pub fn instance(&self) -> &MarketInstance {
        &self.instance
    }

    pub fn tables(&self) -> &MechanismTables {
        &self.tables
    }

    pub fn options(&self) -> &MechanismOptions {
        &self.options
    }

    /// Prices a reported profile against the cached tables.
    pub fn price_profile(&self, realized: &ValuationProfile) -> Result<PricingOutcome, MechanismError> {
        let instance = &self.instance;
        let tables = &self.tables;
        let opts = &self.options;
        let adapted = adapted_assignment(instance, tables, realized, opts)?;
        let exclusion = (0..instance.traveler_count())
            .map(|k| exclusion_assignment(instance, tables, realized, k, opts))
            .collect::<Result<Vec<_>, _>>()?;
        let payments = price(instance, tables, realized, &adapted, &exclusion)?;
        let final_assignment = final_assignment(instance, tables, &adapted, opts.absolute(instance))?;
        let mut outcome = PricingOutcome {
            realized: realized.clone(),
            adapted,
            exclusion,
            final_assignment,
            payments,
            utilities: Vec::new(),
        };
        outcome.refresh_utilities();
        Ok(outcome)
    }

    pub fn price_scenario(&self, index: usize) -> Result<PricingOutcome, MechanismError> {
        if index >= self.instance.scenario_count() {
            return Err(MechanismError::Precondition(format!(
                "scenario index {index} out of range (have {})",
                self.instance.scenario_count()
            )));
        }
        self.price_profile(&self.instance.scenario(index))
    }
}

/// Runs the offline stage.
pub fn compute_tables(
    instance: &MarketInstance,
    options: &MechanismOptions,
) -> Result<MechanismTables, MechanismError> {
    let worst = solve_worst_case(instance, options)?;
    let nominal = compute_nominal(instance, &worst.v_worst, options)?;
    let reservations = reservation_payments(&nominal.duals, &worst.v_worst, options.absolute(instance))?;
    let gamma = compute_gamma(&nominal.assignment, &instance.scenarios);
    Ok(MechanismTables {
        v_worst: worst.v_worst,
        worst_case_objective: worst.objective,
        block_optima: worst.block_optima,
        certificate: worst.certificate,
        nominal: nominal.assignment,
        nominal_objective: nominal.objective,
        duals: nominal.duals,
        reservations,
        gamma,
    })
}

/// Offline stage followed by pricing of `realized`.
pub fn run_pipeline(
    instance: &MarketInstance,
    realized: &ValuationProfile,
    options: &MechanismOptions,
) -> Result<PricingOutcome, MechanismError> {
    Mechanism::new(instance.clone(), *options)?.price_profile(realized)
}
