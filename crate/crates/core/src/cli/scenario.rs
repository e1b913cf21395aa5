//! Scenario files: JSON documents with numbers written as decimal strings.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::CliError;
use crate::model::{validate, Issue, MarketInstance, Matrix};

/// A real number stored as a decimal string; plain JSON numbers are also
/// accepted on input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decimal(pub f64);

impl Serialize for Decimal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        // `Display` for f64 is the shortest string that parses back exactly.
        serializer.collect_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Decimal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DecimalVisitor;

        impl Visitor<'_> for DecimalVisitor {
            type Value = Decimal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a decimal string or number")
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Decimal, E> {
                let x: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| E::custom(format!("invalid decimal {v:?}")))?;
                if x.is_finite() {
                    Ok(Decimal(x))
                } else {
                    Err(E::custom(format!("decimal {v:?} is not finite")))
                }
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Decimal, E> {
                Ok(Decimal(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Decimal, E> {
                Ok(Decimal(v as f64))
            }
        }

        deserializer.deserialize_any(DecimalVisitor)
    }
}

fn default_limit() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TravelerEntry {
    pub budget: Decimal,
    #[serde(default = "default_limit")]
    pub service_limit: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceEntry {
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<Decimal>,
    pub travelers: Vec<TravelerEntry>,
    pub services: Vec<ServiceEntry>,
    #[serde(default)]
    pub valuation_scenarios: Vec<Vec<Vec<Decimal>>>,
}

impl ScenarioFile {
    pub fn from_instance(instance: &MarketInstance, name: Option<String>) -> Self {
        Self {
            name,
            tolerance: None,
            travelers: instance
                .budgets
                .iter()
                .zip(&instance.service_limits)
                .map(|(&b, &d)| TravelerEntry {
                    budget: Decimal(b),
                    service_limit: d,
                })
                .collect(),
            services: instance
                .capacities
                .iter()
                .map(|&c| ServiceEntry { capacity: c })
                .collect(),
            valuation_scenarios: instance
                .scenarios
                .iter()
                .map(|m| m.iter_rows().map(|r| r.iter().map(|&v| Decimal(v)).collect()).collect())
                .collect(),
        }
    }

    /// The instance with every error-severity issue reported at once, and the
    /// warnings that remain.
    pub fn into_instance(self) -> Result<(MarketInstance, Vec<Issue>), Vec<Issue>> {
        let travelers = self.travelers.len();
        let services = self.services.len();
        let mut issues = Vec::new();
        let mut scenarios = Vec::new();
        for (s, rows) in self.valuation_scenarios.iter().enumerate() {
            let ragged = rows.len() != travelers || rows.iter().any(|r| r.len() != services);
            if ragged {
                issues.push(Issue::error(
                    format!("valuation_scenarios[{s}]"),
                    format!("expected {travelers} rows of {services} valuations"),
                ));
                continue;
            }
            let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|d| d.0).collect()).collect();
            scenarios.push(Matrix::from_rows(&rows).expect("rectangular rows"));
        }
        let instance = MarketInstance {
            budgets: self.travelers.iter().map(|t| t.budget.0).collect(),
            service_limits: self.travelers.iter().map(|t| t.service_limit).collect(),
            capacities: self.services.iter().map(|s| s.capacity).collect(),
            scenarios,
        };
        let ragged = !issues.is_empty();
        issues.extend(validate(&instance));
        if ragged || issues.iter().any(Issue::is_error) {
            issues.retain(Issue::is_error);
            Err(issues)
        } else {
            Ok((instance, issues))
        }
    }
}

/// A parsed and validated scenario file.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedScenario {
    pub instance: MarketInstance,
    pub name: Option<String>,
    pub tolerance: Option<f64>,
    pub warnings: Vec<Issue>,
    /// Raw file bytes, for the input digest.
    pub bytes: Vec<u8>,
}

pub fn parse_scenario_str(text: &str, origin: &Path) -> Result<LoadedScenario, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let file: ScenarioFile = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let inner = e.inner();
        CliError::Parse {
            path: origin.to_path_buf(),
            location: format!("line {}, column {}, at {}", inner.line(), inner.column(), e.path()),
            message: strip_position(&inner.to_string()),
        }
    })?;
    de.end().map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        location: format!("line {}, column {}", e.line(), e.column()),
        message: strip_position(&e.to_string()),
    })?;
    let name = file.name.clone();
    let tolerance = file.tolerance.map(|d| d.0);
    let (instance, warnings) = file.into_instance().map_err(|issues| CliError::Invalid {
        path: origin.to_path_buf(),
        issues,
    })?;
    if let Some(t) = tolerance {
        if t.is_nan() || t <= 0.0 {
            return Err(CliError::Invalid {
                path: origin.to_path_buf(),
                issues: vec![Issue::error("tolerance", "tolerance must be positive")],
            });
        }
    }
    Ok(LoadedScenario {
        instance,
        name,
        tolerance,
        warnings,
        bytes: text.as_bytes().to_vec(),
    })
}

pub fn parse_scenario(path: &Path) -> Result<LoadedScenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: PathBuf::from(path),
        source,
    })?;
    parse_scenario_str(&text, path)
}

/// Pretty-printed JSON followed by a newline.
pub fn emit_scenario(instance: &MarketInstance, name: Option<String>) -> String {
    let file = ScenarioFile::from_instance(instance, name);
    let mut text = serde_json::to_string_pretty(&file).expect("scenario files always serialize");
    text.push('\n');
    text
}

/// serde_json appends " at line X column Y"; the location is reported separately.
fn strip_position(message: &str) -> String {
    match message.rfind(" at line ") {
        Some(idx) => message[..idx].to_string(),
        None => message.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<LoadedScenario, CliError> {
        parse_scenario_str(text, Path::new("test.json"))
    }

    const MINIMAL: &str = r#"{
        "travelers": [{"budget": "5"}, {"budget": "5"}],
        "services": [{"capacity": 1}, {"capacity": 1}, {"capacity": 1}],
        "valuation_scenarios": [[["1", "2", "3"], ["3", "2", "1"]]]
    }"#;

    #[test]
    fn minimal_document_defaults_service_limits() {
        let loaded = parse(MINIMAL).unwrap();
        assert_eq!(loaded.instance.service_limits, vec![1, 1]);
        assert!(loaded.warnings.is_empty());
    }

    #[test]
    fn missing_scenarios_is_a_validation_error() {
        let err =
            parse(r#"{"travelers": [{"budget": "5"}, {"budget": "5"}], "services": [{"capacity": 1}]}"#).unwrap_err();
        match err {
            CliError::Invalid { issues, .. } => {
                assert!(issues.iter().any(|i| i.field == "valuation_scenarios"))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn negative_budget_is_reported() {
        let err = parse(&MINIMAL.replacen("\"5\"", "\"-1\"", 1)).unwrap_err();
        match err {
            CliError::Invalid { issues, .. } => {
                assert_eq!(issues.len(), 1);
                assert_eq!(issues[0].message, "budget negative");
                assert_eq!(issues[0].field, "travelers[0].budget");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_documents_carry_a_location() {
        let err = parse(&MINIMAL.replace("\"capacity\": 1}, {", "\"capacity\": \"x\"}, {")).unwrap_err();
        match err {
            CliError::Parse { location, .. } => assert!(location.contains("services[0].capacity"), "{location}"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("{"), Err(CliError::Parse { .. })));
        assert!(matches!(
            parse(&MINIMAL.replace("\"3\"]", "\"abc\"]")),
            Err(CliError::Parse { .. })
        ));
    }

    #[test]
    fn ragged_matrices_are_rejected() {
        let err = parse(&MINIMAL.replace("[\"3\", \"2\", \"1\"]", "[\"3\", \"2\"]")).unwrap_err();
        assert!(matches!(err, CliError::Invalid { .. }));
    }

    #[test]
    fn plain_numbers_are_accepted() {
        let loaded = parse(&MINIMAL.replace("\"5\"", "5.5")).unwrap();
        assert_eq!(loaded.instance.budgets, vec![5.5, 5.5]);
    }

    #[test]
    fn round_trip_is_exact() {
        let instance = MarketInstance::new(
            vec![0.1, 1e-300, 12345.678901234567],
            vec![1, 2, 1],
            vec![1, 3, 2, 1],
            vec![Matrix::from_rows(&[
                [0.1 + 0.2, -3.0, 1.0 / 3.0, 7.0],
                [f64::MIN_POSITIVE, 2.5, 9.0, 0.0],
                [1e21, -0.0, 4.0, 5.0],
            ])
            .unwrap()],
        )
        .unwrap();
        let text = emit_scenario(&instance, Some("round".into()));
        let back = parse(&text).unwrap();
        assert_eq!(back.instance, instance);
        assert_eq!(back.name.as_deref(), Some("round"));
        assert_eq!(emit_scenario(&back.instance, back.name), text);
    }
}
