//! Seeded random instances and corpora.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{MarketInstance, Matrix};

/// Value ranges for generated instances. All bounds are inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub valuation_min: u32,
    pub valuation_max: u32,
    /// Budgets are drawn from `[0, budget_per_service · J]`.
    pub budget_per_service: u32,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            valuation_min: 0,
            valuation_max: 9,
            budget_per_service: 9,
        }
    }
}

/// Shape ranges and seed for a corpus of generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub seed: u64,
    pub instances: usize,
    pub min_travelers: usize,
    pub max_travelers: usize,
    pub min_services: usize,
    pub max_services: usize,
    pub min_scenarios: usize,
    pub max_scenarios: usize,
    pub values: GeneratorConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            instances: 50,
            min_travelers: 2,
            max_travelers: 4,
            min_services: 1,
            max_services: 3,
            min_scenarios: 1,
            max_scenarios: 4,
            values: GeneratorConfig::default(),
        }
    }
}

/// Integer valuations in `[valuation_min, valuation_max]`, budgets in
/// `[0, J · budget_per_service]`, service limits in `[1, J]` and capacities in
/// `[1, I]`. Identical arguments give identical instances.
pub fn generate_instance(
    travelers: usize,
    services: usize,
    scenarios: usize,
    seed: u64,
    config: &GeneratorConfig,
) -> MarketInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_instance(&mut rng, travelers, services, scenarios, config)
}

fn draw_instance(
    rng: &mut ChaCha8Rng,
    travelers: usize,
    services: usize,
    scenarios: usize,
    config: &GeneratorConfig,
) -> MarketInstance {
    let budget_max = config.budget_per_service as usize * services;
    let budgets = (0..travelers).map(|_| rng.gen_range(0..=budget_max) as f64).collect();
    let service_limits = (0..travelers)
        .map(|_| rng.gen_range(1..=services.max(1)) as u32)
        .collect();
    let capacities = (0..services)
        .map(|_| rng.gen_range(1..=travelers.max(1)) as u32)
        .collect();
    let scenarios = (0..scenarios)
        .map(|_| {
            Matrix::from_fn(travelers, services, |_, _| {
                f64::from(rng.gen_range(config.valuation_min..=config.valuation_max))
            })
        })
        .collect();
    MarketInstance {
        budgets,
        service_limits,
        capacities,
        scenarios,
    }
}

/// `config.instances` instances with shapes drawn uniformly from the ranges.
pub fn generate_corpus(config: &CorpusConfig) -> Vec<MarketInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    (0..config.instances)
        .map(|_| {
            let i = rng.gen_range(config.min_travelers..=config.max_travelers);
            let j = rng.gen_range(config.min_services..=config.max_services);
            let s = rng.gen_range(config.min_scenarios..=config.max_scenarios);
            draw_instance(&mut rng, i, j, s, &config.values)
        })
        .collect()
}
