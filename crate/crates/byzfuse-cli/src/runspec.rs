//! Run-specification resolution: defaults, then the optional preset, then
//! the optional JSON config file, then command-line flags (flag wins).

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use byzfuse_core::presets::{self, DEFAULT_SEED, DEFAULT_TRIALS};
use byzfuse_core::sim::{RuleSpec, ScenarioConfig, SweepAxis};
use byzfuse_core::types::PriorModel;

/// A config-validation failure naming the offending field (exit 2).
#[derive(Debug)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl ConfigError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        ConfigError {
            field,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid config field `{}`: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn label(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    Simulate,
    Sweep,
    Exact,
    Table,
}

impl CommandKind {
    pub fn label(self) -> &'static str {
        match self {
            CommandKind::Simulate => "simulate",
            CommandKind::Sweep => "sweep",
            CommandKind::Exact => "exact",
            CommandKind::Table => "table",
        }
    }
}

/// The JSON config file mirrors the resolved run specification; every field
/// is optional and any flag overrides it.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<String>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub pmal: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub rules: Option<Vec<String>>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub axis: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub format: Option<String>,
    pub out: Option<String>,
}

/// Flag-level overrides shared by all subcommands.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub preset: Option<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<OutputFormat>,
    pub rules: Option<String>,
    pub n: Option<usize>,
    pub t: Option<usize>,
    pub epsilon: Option<f64>,
    pub pmal: Option<f64>,
    pub alpha: Option<f64>,
    pub k: Option<usize>,
    pub axis: Option<String>,
    pub grid: Option<String>,
}

/// Fully resolved run specification; serialized verbatim into JSON output.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedSpec {
    pub command: String,
    pub preset: Option<String>,
    pub n: usize,
    pub t: usize,
    pub epsilon: f64,
    pub p_mal: f64,
    pub prior: PriorEcho,
    pub rules: Vec<String>,
    pub trials: u64,
    pub seed: u64,
    pub axis: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub format: String,
    pub out: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum PriorEcho {
    Independent { alpha: f64 },
    FixedCount { k: usize },
}

/// Everything `run` needs: the core scenario plus output disposition.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    pub command: CommandKind,
    pub scenario: ScenarioConfig,
    pub axis: Option<SweepAxis>,
    pub grid: Option<Vec<f64>>,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub spec: ResolvedSpec,
}

fn parse_rule_names(
    names: &[String],
    alpha: Option<f64>,
    k: Option<usize>,
) -> Result<Vec<RuleSpec>, ConfigError> {
    let mut rules = Vec::with_capacity(names.len());
    for name in names {
        let rule = match name.as_str() {
            "independent" => {
                let alpha = alpha.ok_or_else(|| {
                    ConfigError::new("alpha", "the independent rule requires --alpha")
                })?;
                RuleSpec::Independent { alpha }
            }
            "fixed-k" => {
                let k = k.ok_or_else(|| ConfigError::new("k", "the fixed-k rule requires --k"))?;
                RuleSpec::FixedK { k }
            }
            "majority" => RuleSpec::Majority,
            other => {
                return Err(ConfigError::new(
                    "rules",
                    format!("unknown rule `{other}` (expected independent, fixed-k or majority)"),
                ));
            }
        };
        rules.push(rule);
    }
    if rules.is_empty() {
        return Err(ConfigError::new("rules", "rule list must be nonempty"));
    }
    Ok(rules)
}

fn parse_axis(s: &str) -> Result<SweepAxis, ConfigError> {
    match s {
        "p_mal" | "pmal" => Ok(SweepAxis::PMal),
        "alpha" => Ok(SweepAxis::Alpha),
        other => Err(ConfigError::new(
            "axis",
            format!("unknown sweep axis `{other}` (expected p_mal or alpha)"),
        )),
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| ConfigError::new("grid", format!("bad grid value `{tok}`: {e}")))
        })
        .collect()
}

fn rule_labels(rules: &[RuleSpec]) -> Vec<String> {
    rules.iter().map(|r| r.label().to_string()).collect()
}

/// Merge defaults, preset, config file and flags into a runnable spec.
pub fn resolve(command: CommandKind, flags: &Overrides) -> Result<ResolvedRun, ConfigError> {
    let file: ConfigFile = match &flags.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let preset_name = flags.preset.clone().or_else(|| file.preset.clone());
    let preset = match (&preset_name, command) {
        (Some(name), CommandKind::Table) => Some(presets::preset(name).ok_or_else(|| {
            ConfigError::new(
                "preset",
                format!(
                    "unknown preset `{name}` (available: {})",
                    presets::PRESET_NAMES.join(", ")
                ),
            )
        })?),
        (Some(_), _) => {
            return Err(ConfigError::new(
                "preset",
                "presets apply to the `table` command only",
            ));
        }
        (None, CommandKind::Table) => {
            return Err(ConfigError::new(
                "preset",
                format!(
                    "the `table` command requires --preset (available: {})",
                    presets::PRESET_NAMES.join(", ")
                ),
            ));
        }
        (None, _) => None,
    };

    // Scenario fields: preset base, then config file, then flags.
    let base = preset.as_ref().map(|p| p.scenario.clone());
    let n = flags
        .n
        .or(file.n)
        .or(base.as_ref().map(|s| s.n))
        .ok_or_else(|| ConfigError::new("n", "node count is required"))?;
    let t = flags
        .t
        .or(file.t)
        .or(base.as_ref().map(|s| s.t))
        .ok_or_else(|| ConfigError::new("t", "window length is required"))?;
    let epsilon = flags
        .epsilon
        .or(file.epsilon)
        .or(base.as_ref().map(|s| s.epsilon))
        .ok_or_else(|| ConfigError::new("epsilon", "local error probability is required"))?;
    let p_mal = flags
        .pmal
        .or(file.pmal)
        .or(base.as_ref().map(|s| s.p_mal))
        .ok_or_else(|| ConfigError::new("pmal", "flipping probability is required"))?;
    let trials = flags
        .trials
        .or(file.trials)
        .or(base.as_ref().map(|s| s.trials))
        .unwrap_or(DEFAULT_TRIALS);
    let seed = flags
        .seed
        .or(file.seed)
        .or(base.as_ref().map(|s| s.master_seed))
        .unwrap_or(DEFAULT_SEED);

    // Prior: explicit alpha/k override the preset's prior entirely.
    let base_prior = base.as_ref().map(|s| s.node_prior.clone());
    let alpha_opt = flags.alpha.or(file.alpha).or(match &base_prior {
        Some(PriorModel::Independent { alpha }) => Some(*alpha),
        _ => None,
    });
    let k_opt = flags.k.or(file.k).or(match &base_prior {
        Some(PriorModel::FixedCount { k }) => Some(*k),
        _ => None,
    });
    let flag_alpha = flags.alpha.or(file.alpha).is_some();
    let flag_k = flags.k.or(file.k).is_some();
    let node_prior = match (&base_prior, flag_alpha, flag_k) {
        (_, true, true) => {
            return Err(ConfigError::new(
                "alpha",
                "give either alpha (independent prior) or k (fixed-count prior), not both",
            ));
        }
        (Some(p), false, false) => p.clone(),
        (_, true, false) => PriorModel::Independent {
            alpha: alpha_opt.expect("alpha set"),
        },
        (_, false, true) => PriorModel::FixedCount {
            k: k_opt.expect("k set"),
        },
        (None, false, false) => {
            return Err(ConfigError::new(
                "alpha",
                "a node prior is required: set alpha (independent) or k (fixed-count)",
            ));
        }
    };

    // Rules: flags > config > preset > matched-optimum default.
    let rule_names: Option<Vec<String>> = flags
        .rules
        .as_ref()
        .map(|s| s.split(',').map(|r| r.trim().to_string()).collect())
        .or_else(|| file.rules.clone());
    let rules = match rule_names {
        Some(names) => parse_rule_names(&names, alpha_opt, k_opt)?,
        None => match &base {
            Some(s) => s.rules.clone(),
            None => vec![match &node_prior {
                PriorModel::Independent { alpha } => RuleSpec::Independent { alpha: *alpha },
                PriorModel::FixedCount { k } => RuleSpec::FixedK { k: *k },
                PriorModel::Explicit(_) => unreachable!(),
            }],
        },
    };

    // Sweep axis and grid.
    let axis = match flags.axis.as_deref().or(file.axis.as_deref()) {
        Some(s) => Some(parse_axis(s)?),
        None => preset.as_ref().map(|p| p.axis),
    };
    let grid = match &flags.grid {
        Some(s) => Some(parse_grid(s)?),
        None => file
            .grid
            .clone()
            .or_else(|| preset.as_ref().map(|p| p.grid.clone())),
    };
    if command == CommandKind::Sweep {
        if axis.is_none() {
            return Err(ConfigError::new(
                "axis",
                "the sweep command requires --axis",
            ));
        }
        match &grid {
            None => {
                return Err(ConfigError::new(
                    "grid",
                    "the sweep command requires --grid",
                ))
            }
            Some(g) if g.is_empty() => {
                return Err(ConfigError::new("grid", "sweep grid must be nonempty"));
            }
            Some(_) => {}
        }
    }

    let format = flags
        .format
        .or(match file.format.as_deref() {
            Some("csv") => Some(OutputFormat::Csv),
            Some("json") => Some(OutputFormat::Json),
            Some(other) => {
                return Err(ConfigError::new(
                    "format",
                    format!("unknown format `{other}` (expected csv or json)"),
                ));
            }
            None => None,
        })
        .unwrap_or(OutputFormat::Csv);
    let out = flags
        .out
        .clone()
        .or_else(|| file.out.as_ref().map(PathBuf::from));

    let scenario = ScenarioConfig {
        n,
        t,
        epsilon,
        p_mal,
        node_prior: node_prior.clone(),
        rules,
        trials,
        master_seed: seed,
    };
    // Surface core validation now so bad fields exit 2 with a field name.
    scenario.validate().map_err(|e| match e {
        byzfuse_core::Error::InvalidConfig { field, reason } => ConfigError::new(field, reason),
        byzfuse_core::Error::Domain { name, value, range } => {
            ConfigError::new(name, format!("{value} outside valid range {range}"))
        }
        byzfuse_core::Error::KOutOfRange { k, n } => {
            ConfigError::new("k", format!("k = {k} exceeds n = {n}"))
        }
        other => ConfigError::new("scenario", other.to_string()),
    })?;

    let spec = ResolvedSpec {
        command: command.label().to_string(),
        preset: preset_name,
        n,
        t,
        epsilon,
        p_mal,
        prior: match &node_prior {
            PriorModel::Independent { alpha } => PriorEcho::Independent { alpha: *alpha },
            PriorModel::FixedCount { k } => PriorEcho::FixedCount { k: *k },
            PriorModel::Explicit(_) => unreachable!(),
        },
        rules: rule_labels(&scenario.rules),
        trials,
        seed,
        axis: axis.map(|a| a.label().to_string()),
        grid: grid.clone(),
        format: format.label().to_string(),
        out: out.as_ref().map(|p| p.display().to_string()),
    };

    Ok(ResolvedRun {
        command,
        scenario,
        axis,
        grid,
        format,
        out,
        spec,
    })
}
