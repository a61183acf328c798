//! Named experiment presets: one per reported table row and figure, so a
//! single command reproduces each published setting.

use crate::sim::{RuleSpec, ScenarioConfig, SweepAxis};
use crate::types::PriorModel;

/// Default Monte Carlo trial count for presets and the CLI.
pub const DEFAULT_TRIALS: u64 = 100_000;

/// Default master seed for presets and the CLI.
pub const DEFAULT_SEED: u64 = 42;

/// The P_mal grid used by all table experiments.
pub const PMAL_GRID: [f64; 6] = [0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

/// The alpha grid of the large-network figure.
pub const FIG2_ALPHA_GRID: [f64; 6] = [0.40, 0.42, 0.44, 0.46, 0.48, 0.49];

/// A named, fully resolved sweep configuration.
#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub scenario: ScenarioConfig,
    pub axis: SweepAxis,
    pub grid: Vec<f64>,
}

/// All preset names, in registry order.
pub const PRESET_NAMES: [&str; 11] = [
    "table1-row1",
    "table1-row2",
    "table1-row3",
    "table1-row4",
    "table2-row1",
    "table2-row2",
    "table2-row3",
    "table2-row4",
    "fig2",
    "fig3",
    "fig4",
];

fn independent_scenario(n: usize, alpha: f64, t: usize) -> ScenarioConfig {
    ScenarioConfig {
        n,
        t,
        epsilon: 0.1,
        p_mal: 1.0,
        node_prior: PriorModel::Independent { alpha },
        rules: vec![RuleSpec::Independent { alpha }],
        trials: DEFAULT_TRIALS,
        master_seed: DEFAULT_SEED,
    }
}

fn fixed_scenario(n: usize, k: usize, t: usize) -> ScenarioConfig {
    ScenarioConfig {
        n,
        t,
        epsilon: 0.1,
        p_mal: 1.0,
        node_prior: PriorModel::FixedCount { k },
        rules: vec![RuleSpec::FixedK { k }],
        trials: DEFAULT_TRIALS,
        master_seed: DEFAULT_SEED,
    }
}

/// Look up a preset by name.
pub fn preset(name: &str) -> Option<Preset> {
    let p = match name {
        "table1-row1" => Preset {
            name: "table1-row1",
            description: "independent states: n=16, alpha=0.4375, T=4, eps=0.1, P_mal sweep",
            scenario: independent_scenario(16, 0.4375, 4),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table1-row2" => Preset {
            name: "table1-row2",
            description: "independent states: n=11, alpha=0.4545, T=9, eps=0.1, P_mal sweep",
            scenario: independent_scenario(11, 0.4545, 9),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table1-row3" => Preset {
            name: "table1-row3",
            description: "independent states: n=10, alpha=0.4, T=10, eps=0.1, P_mal sweep",
            scenario: independent_scenario(10, 0.4, 10),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table1-row4" => Preset {
            name: "table1-row4",
            description: "independent states: n=5, alpha=0.4, T=15, eps=0.1, P_mal sweep",
            scenario: independent_scenario(5, 0.4, 15),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table2-row1" => Preset {
            name: "table2-row1",
            description: "fixed Byzantines: n=16, k=7, T=4, eps=0.1, P_mal sweep",
            scenario: fixed_scenario(16, 7, 4),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table2-row2" => Preset {
            name: "table2-row2",
            description: "fixed Byzantines: n=11, k=5, T=9, eps=0.1, P_mal sweep",
            scenario: fixed_scenario(11, 5, 9),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table2-row3" => Preset {
            name: "table2-row3",
            description: "fixed Byzantines: n=10, k=4, T=10, eps=0.1, P_mal sweep",
            scenario: fixed_scenario(10, 4, 10),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "table2-row4" => Preset {
            name: "table2-row4",
            description: "fixed Byzantines: n=5, k=2, T=15, eps=0.1, P_mal sweep",
            scenario: fixed_scenario(5, 2, 15),
            axis: SweepAxis::PMal,
            grid: PMAL_GRID.to_vec(),
        },
        "fig2" => {
            let mut scenario = independent_scenario(100, 0.40, 4);
            scenario.rules.push(RuleSpec::Majority);
            Preset {
                name: "fig2",
                description: "optimum vs majority: n=100, T=4, eps=0.1, P_mal=1, alpha sweep",
                scenario,
                axis: SweepAxis::Alpha,
                grid: FIG2_ALPHA_GRID.to_vec(),
            }
        }
        "fig3" => {
            let mut scenario = independent_scenario(10, 0.4, 4);
            scenario.rules.push(RuleSpec::Majority);
            Preset {
                name: "fig3",
                description: "optimum vs majority: n=10, T=4, alpha=0.4, eps=0.1, P_mal sweep",
                scenario,
                axis: SweepAxis::PMal,
                grid: PMAL_GRID.to_vec(),
            }
        }
        "fig4" => {
            let mut scenario = fixed_scenario(10, 4, 4);
            scenario.rules.push(RuleSpec::Majority);
            Preset {
                name: "fig4",
                description: "fixed-k optimum vs majority: n=10, T=4, k=4, eps=0.1, P_mal sweep",
                scenario,
                axis: SweepAxis::PMal,
                grid: PMAL_GRID.to_vec(),
            }
        }
        _ => return None,
    };
    Some(p)
}
