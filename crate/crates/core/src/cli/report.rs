//! Run reports and their JSON and table renderings.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::mechanism::{MechanismTables, PricingOutcome, ScenarioDuals};
use crate::model::{Issue, Matrix};
use crate::verify::PropertyReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub sha256: String,
    pub travelers: usize,
    pub services: usize,
    pub scenarios: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SettingsSummary {
    pub lp_tolerance: f64,
    pub mechanism_tolerance: f64,
    /// Absolute tolerance used by the property checks.
    pub check_tolerance: f64,
    pub payment_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablesSummary {
    pub v_worst_index: Option<usize>,
    pub worst_case_objective: f64,
    pub nominal_objective: f64,
    pub block_optima: Vec<f64>,
    pub nominal: Matrix,
    pub reservations: Matrix,
    pub gamma: Matrix,
    pub duals: ScenarioDuals,
}

impl From<&MechanismTables> for TablesSummary {
    fn from(t: &MechanismTables) -> Self {
        Self {
            v_worst_index: t.v_worst.scenario_index,
            worst_case_objective: t.worst_case_objective,
            nominal_objective: t.nominal_objective,
            block_optima: t.block_optima.clone(),
            nominal: t.nominal.0.clone(),
            reservations: t.reservations.clone(),
            gamma: t.gamma.clone(),
            duals: t.duals.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDigest {
    pub scenario: Option<usize>,
    pub adapted: Matrix,
    pub final_assignment: Matrix,
    pub payments: Vec<f64>,
    pub utilities: Vec<f64>,
    pub revenue: f64,
}

impl From<&PricingOutcome> for OutcomeDigest {
    fn from(o: &PricingOutcome) -> Self {
        Self {
            scenario: o.realized.scenario_index,
            adapted: o.adapted.0.clone(),
            final_assignment: o.final_assignment.0.clone(),
            payments: o.payments.0.clone(),
            utilities: o.utilities.clone(),
            revenue: o.payments.0.iter().sum(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub offline_ms: f64,
    pub pricing_ms: f64,
    pub checks_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub input: InputSummary,
    pub settings: SettingsSummary,
    pub warnings: Vec<Issue>,
    pub tables: TablesSummary,
    pub outcomes: Vec<OutcomeDigest>,
    pub properties: Vec<PropertyReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<Timing>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let name = self.input.name.as_deref().unwrap_or("-");
        let _ = writeln!(
            out,
            "{} {}  {}  {}  {}x{} with {} scenario(s)  sha256 {}",
            env!("CARGO_PKG_NAME"),
            self.version,
            self.command,
            name,
            self.input.travelers,
            self.input.services,
            self.input.scenarios,
            &self.input.sha256[..16.min(self.input.sha256.len())]
        );
        for w in &self.warnings {
            let _ = writeln!(out, "{w}");
        }
        let t = &self.tables;
        let worst = t.v_worst_index.map_or("-".to_string(), |i| i.to_string());
        let _ = writeln!(
            out,
            "worst-case scenario {worst}  worst-case objective {}  nominal objective {}",
            num(t.worst_case_objective),
            num(t.nominal_objective)
        );
        matrix_block(&mut out, "nominal assignment", &t.nominal);
        matrix_block(&mut out, "reservation payments", &t.reservations);
        matrix_block(&mut out, "gamma", &t.gamma);

        for o in &self.outcomes {
            let label = o
                .scenario
                .map_or("reported profile".to_string(), |s| format!("scenario {s}"));
            let _ = writeln!(out, "\n{label}  revenue {}", num(o.revenue));
            matrix_block(&mut out, "final assignment", &o.final_assignment);
            let _ = writeln!(out, "  {:<10}{:>12}{:>12}", "traveler", "payment", "utility");
            for (i, (p, u)) in o.payments.iter().zip(&o.utilities).enumerate() {
                let _ = writeln!(out, "  {:<10}{:>12}{:>12}", i, num(*p), num(*u));
            }
        }

        if !self.properties.is_empty() {
            let _ = writeln!(
                out,
                "\n{:<26}{:<8}{:>14}{:>12}  witness",
                "property", "status", "worst", "tolerance"
            );
            for p in &self.properties {
                let witness = p
                    .witness
                    .map(|w| {
                        [
                            ("traveler", w.traveler),
                            ("scenario", w.scenario),
                            ("misreport", w.misreport),
                            ("service", w.service),
                        ]
                        .iter()
                        .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
                        .collect::<Vec<_>>()
                        .join(" ")
                    })
                    .unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{:<26}{:<8}{:>14}{:>12}  {}",
                    p.property.name(),
                    if p.passed { "pass" } else { "FAIL" },
                    format!("{:.3e}", p.worst_violation + 0.0),
                    format!("{:.1e}", p.tolerance),
                    witness
                );
            }
        }
        if let Some(passed) = self.passed {
            let _ = writeln!(out, "\nresult: {}", if passed { "pass" } else { "FAIL" });
        }
        if let Some(t) = &self.timing {
            let _ = writeln!(
                out,
                "timing: offline {:.1} ms, pricing {:.1} ms, checks {:.1} ms",
                t.offline_ms, t.pricing_ms, t.checks_ms
            );
        }
        out
    }
}

fn num(x: f64) -> String {
    let r = (x * 1e6).round() / 1e6;
    let r = if r == 0.0 { 0.0 } else { r };
    format!("{r}")
}

fn matrix_block(out: &mut String, title: &str, m: &Matrix) {
    let _ = writeln!(out, "{title}");
    let _ = write!(out, "  {:<10}", "");
    for j in 0..m.cols() {
        let _ = write!(out, "{:>10}", format!("s{j}"));
    }
    let _ = writeln!(out);
    for i in 0..m.rows() {
        let _ = write!(out, "  {:<10}", format!("t{i}"));
        for j in 0..m.cols() {
            let _ = write!(out, "{:>10}", num(m[(i, j)]));
        }
        let _ = writeln!(out);
    }
}
