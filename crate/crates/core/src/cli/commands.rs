use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::generate::{generate_instance, GeneratorConfig};
use super::report::{InputSummary, OutcomeDigest, RunReport, SettingsSummary, TablesSummary, Timing};
use super::scenario::{emit_scenario, parse_scenario, LoadedScenario};
use super::{Cli, CliError, Command, Format, EXIT_FAILURE, EXIT_PASS};
use crate::mechanism::{Mechanism, MechanismError, MechanismOptions, PricingOutcome};
use crate::verify::{
    check_budget_fairness, check_feasibility, check_reservation_identity, check_sustainability, check_truthfulness,
    check_voluntary_participation, combine, Property, PropertyReport,
};

/// Options shared by the pipeline commands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    /// Overrides the scenario file's tolerance and both defaults.
    pub tolerance: Option<f64>,
    pub payment_scale: f64,
    pub timing: bool,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            tolerance: None,
            payment_scale: 1.0,
            timing: false,
        }
    }
}

impl RunSettings {
    fn options(&self, loaded: &LoadedScenario) -> MechanismOptions {
        match self.tolerance.or(loaded.tolerance) {
            Some(t) => MechanismOptions {
                lp_tolerance: t,
                tolerance: t,
            },
            None => MechanismOptions::default(),
        }
    }
}

/// Outcomes of every scenario and the report of every property.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub outcomes: Vec<PricingOutcome>,
    pub properties: Vec<PropertyReport>,
    pub pricing_ms: f64,
    pub checks_ms: f64,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.properties.iter().all(|p| p.passed)
    }

    pub fn property(&self, property: Property) -> Option<&PropertyReport> {
        self.properties.iter().find(|p| p.property == property)
    }
}

fn scaled(mut outcome: PricingOutcome, scale: f64) -> PricingOutcome {
    if scale != 1.0 {
        outcome.payments.0.iter_mut().for_each(|p| *p *= scale);
        outcome.refresh_utilities();
    }
    outcome
}

/// Prices every scenario and runs every property check at the mechanism's
/// absolute tolerance. Payments are multiplied by `payment_scale` first.
pub fn property_suite(mechanism: &Mechanism, payment_scale: f64) -> Result<SuiteResult, MechanismError> {
    let instance = mechanism.instance();
    let tables = mechanism.tables();
    let tol = mechanism.options().absolute(instance);

    let started = Instant::now();
    let outcomes = (0..instance.scenario_count())
        .map(|s| mechanism.price_scenario(s).map(|o| scaled(o, payment_scale)))
        .collect::<Result<Vec<_>, _>>()?;
    let pricing_ms = started.elapsed().as_secs_f64() * 1e3;

    let started = Instant::now();
    let truthfulness = check_truthfulness(
        instance,
        |profile| mechanism.price_profile(profile).map(|o| scaled(o, payment_scale)),
        tol,
    )?;
    let properties = vec![
        check_feasibility(instance, &outcomes, tol),
        truthfulness,
        combine(
            Property::VoluntaryParticipation,
            outcomes.iter().map(|o| check_voluntary_participation(o, tol)),
            tol,
        ),
        combine(
            Property::BudgetFairness,
            outcomes
                .iter()
                .map(|o| check_budget_fairness(o, &instance.budgets, tol)),
            tol,
        ),
        check_sustainability(&outcomes, tables.nominal_objective, tol),
        check_reservation_identity(&tables.nominal, &tables.reservations, &tables.v_worst.values, tol),
    ];
    let checks_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(SuiteResult {
        outcomes,
        properties,
        pricing_ms,
        checks_ms,
    })
}

fn base_report(command: &str, loaded: &LoadedScenario, mechanism: &Mechanism, settings: &RunSettings) -> RunReport {
    let instance = &loaded.instance;
    let options = mechanism.options();
    RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        input: InputSummary {
            name: loaded.name.clone(),
            sha256: hex::encode(Sha256::digest(&loaded.bytes)),
            travelers: instance.traveler_count(),
            services: instance.service_count(),
            scenarios: instance.scenario_count(),
        },
        settings: SettingsSummary {
            lp_tolerance: options.lp_tolerance,
            mechanism_tolerance: options.tolerance,
            check_tolerance: options.absolute(instance),
            payment_scale: settings.payment_scale,
        },
        warnings: loaded.warnings.clone(),
        tables: TablesSummary::from(mechanism.tables()),
        outcomes: Vec::new(),
        properties: Vec::new(),
        passed: None,
        timing: None,
    }
}

fn offline(loaded: &LoadedScenario, settings: &RunSettings) -> Result<(Mechanism, f64), CliError> {
    let started = Instant::now();
    let mechanism = Mechanism::new(loaded.instance.clone(), settings.options(loaded))?;
    Ok((mechanism, started.elapsed().as_secs_f64() * 1e3))
}

/// Offline stage only.
pub fn cmd_solve(loaded: &LoadedScenario, settings: &RunSettings) -> Result<RunReport, CliError> {
    let (mechanism, offline_ms) = offline(loaded, settings)?;
    let mut report = base_report("solve", loaded, &mechanism, settings);
    if settings.timing {
        report.timing = Some(Timing {
            offline_ms,
            pricing_ms: 0.0,
            checks_ms: 0.0,
        });
    }
    Ok(report)
}

/// Prices scenario `realized` and checks feasibility, participation and
/// budgets for it.
pub fn cmd_price(loaded: &LoadedScenario, realized: usize, settings: &RunSettings) -> Result<RunReport, CliError> {
    let count = loaded.instance.scenario_count();
    if realized >= count {
        return Err(CliError::Usage(format!(
            "--realized {realized} is out of range; the file has {count} scenario(s)"
        )));
    }
    let (mechanism, offline_ms) = offline(loaded, settings)?;
    let started = Instant::now();
    let outcome = scaled(mechanism.price_scenario(realized)?, settings.payment_scale);
    let pricing_ms = started.elapsed().as_secs_f64() * 1e3;
    let tol = mechanism.options().absolute(&loaded.instance);
    let mut report = base_report("price", loaded, &mechanism, settings);
    report.properties = vec![
        check_feasibility(&loaded.instance, std::slice::from_ref(&outcome), tol),
        check_voluntary_participation(&outcome, tol),
        check_budget_fairness(&outcome, &loaded.instance.budgets, tol),
    ];
    report.passed = Some(report.properties.iter().all(|p| p.passed));
    report.outcomes = vec![OutcomeDigest::from(&outcome)];
    if settings.timing {
        report.timing = Some(Timing {
            offline_ms,
            pricing_ms,
            checks_ms: 0.0,
        });
    }
    Ok(report)
}

/// Full property suite.
pub fn cmd_verify(loaded: &LoadedScenario, settings: &RunSettings) -> Result<RunReport, CliError> {
    let (mechanism, offline_ms) = offline(loaded, settings)?;
    let suite = property_suite(&mechanism, settings.payment_scale)?;
    let mut report = base_report("verify", loaded, &mechanism, settings);
    report.outcomes = suite.outcomes.iter().map(OutcomeDigest::from).collect();
    report.passed = Some(suite.passed());
    report.properties = suite.properties;
    if settings.timing {
        report.timing = Some(Timing {
            offline_ms,
            pricing_ms: suite.pricing_ms,
            checks_ms: suite.checks_ms,
        });
    }
    Ok(report)
}

fn report_code(report: &RunReport) -> i32 {
    if report.passed == Some(false) {
        EXIT_FAILURE
    } else {
        EXIT_PASS
    }
}

fn load(path: &Path, stderr: &mut dyn Write) -> Result<LoadedScenario, CliError> {
    let loaded = parse_scenario(path)?;
    for w in &loaded.warnings {
        let _ = writeln!(stderr, "{}: {w}", path.display());
    }
    Ok(loaded)
}

fn render(reports: &[RunReport], format: Format) -> String {
    match (format, reports) {
        (Format::Json, [single]) => single.to_json(),
        (Format::Json, many) => {
            let mut s = serde_json::to_string_pretty(many).expect("reports always serialize");
            s.push('\n');
            s
        }
        (Format::Table, many) => many.iter().map(RunReport::to_table).collect::<Vec<_>>().join("\n"),
    }
}

/// Runs the parsed command, returning the text to emit and the exit status.
pub(super) fn dispatch(cli: &Cli, stderr: &mut dyn Write) -> Result<(String, i32), CliError> {
    if let Some(t) = cli.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Usage(format!("--tolerance must be positive, got {t}")));
        }
    }
    let mut settings = RunSettings {
        tolerance: cli.tolerance,
        payment_scale: 1.0,
        timing: cli.timing,
    };
    match &cli.command {
        Command::Solve { scenario } => {
            let report = cmd_solve(&load(scenario, stderr)?, &settings)?;
            Ok((render(std::slice::from_ref(&report), cli.format), EXIT_PASS))
        }
        Command::Price { scenario, realized } => {
            let report = cmd_price(&load(scenario, stderr)?, *realized, &settings)?;
            let code = report_code(&report);
            Ok((render(std::slice::from_ref(&report), cli.format), code))
        }
        Command::Verify {
            scenarios,
            jobs,
            payment_scale,
        } => {
            if !payment_scale.is_finite() {
                return Err(CliError::Usage("--payment-scale must be finite".into()));
            }
            settings.payment_scale = *payment_scale;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads((*jobs).max(1))
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {jobs} jobs: {e}")))?;
            let results: Vec<Result<RunReport, CliError>> = pool.install(|| {
                scenarios
                    .par_iter()
                    .map(|path| parse_scenario(path).and_then(|loaded| cmd_verify(&loaded, &settings)))
                    .collect()
            });
            let mut code = EXIT_PASS;
            let mut reports = Vec::new();
            for (path, result) in scenarios.iter().zip(results) {
                match result {
                    Ok(report) => {
                        for w in &report.warnings {
                            let _ = writeln!(stderr, "{}: {w}", path.display());
                        }
                        code = code.max(report_code(&report));
                        for p in report.properties.iter().filter(|p| !p.passed) {
                            let _ = writeln!(
                                stderr,
                                "{}: {} failed, worst violation {:e}, witness {}",
                                path.display(),
                                p.property.name(),
                                p.worst_violation,
                                serde_json::to_string(&p.witness).unwrap_or_default()
                            );
                        }
                        reports.push(report);
                    }
                    Err(e) => {
                        let _ = writeln!(stderr, "error: {e}");
                        code = code.max(e.exit_code());
                    }
                }
            }
            Ok((render(&reports, cli.format), code))
        }
        Command::Gen {
            travelers,
            services,
            scenarios,
            seed,
            config,
            name,
        } => {
            if *travelers == 0 || *services == 0 || *scenarios == 0 {
                return Err(CliError::Usage(
                    "--travelers, --services and --scenarios must be positive".into(),
                ));
            }
            let config = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    serde_json::from_str::<GeneratorConfig>(&text).map_err(|e| CliError::Parse {
                        path: path.clone(),
                        location: format!("line {}, column {}", e.line(), e.column()),
                        message: e.to_string(),
                    })?
                }
                None => GeneratorConfig::default(),
            };
            if config.valuation_min > config.valuation_max {
                return Err(CliError::Usage("valuation_min exceeds valuation_max".into()));
            }
            let instance = generate_instance(*travelers, *services, *scenarios, *seed, &config);
            Ok((emit_scenario(&instance, name.clone()), EXIT_PASS))
        }
    }
}
