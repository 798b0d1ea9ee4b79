//! Layered run configuration: defaults, then a preset, then a TOML file, then
//! command-line flags. Later layers win key by key; a table whose `kind`
//! changes is replaced wholesale so keys of the old kind do not leak through.

use feddw_core::fl::RunConfig;
use toml::{Table, Value};

use crate::error::{HarnessError, Result};
use crate::preset::Preset;

/// Command-line overrides, applied last.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub strategy: Option<String>,
    /// FedDW `mu`, or `prox_mu` when the strategy is FedProx.
    pub mu: Option<f64>,
    pub beta: Option<f64>,
    pub clients: Option<usize>,
    pub rounds: Option<usize>,
    pub seed: Option<u64>,
}

fn defaults() -> Table {
    let mut table = Table::try_from(RunConfig::default()).expect("default config encodes");
    // The classifier bias default depends on the strategy; filled in after merging.
    if let Some(Value::Table(model)) = table.get_mut("model") {
        model.remove("classifier_bias");
    }
    table
}

fn merge(base: &mut Table, overlay: Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(Value::Table(old)), Value::Table(new)) => {
                let kind_changed = matches!(
                    (old.get("kind"), new.get("kind")),
                    (Some(a), Some(b)) if a != b
                );
                if kind_changed {
                    *old = new;
                } else {
                    merge(old, new);
                }
            }
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

fn parse_table(text: &str, origin: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| {
        HarnessError::config(origin, e.to_string().trim_end().to_string())
    })
}

fn flag_table(flags: &Overrides, merged: &Table) -> Result<Table> {
    let mut t = Table::new();
    let mut strategy = Table::new();
    if let Some(kind) = &flags.strategy {
        strategy.insert("kind".into(), Value::String(kind.clone()));
    }
    if let Some(mu) = flags.mu {
        let kind = flags.strategy.clone().or_else(|| {
            merged
                .get("strategy")
                .and_then(|s| s.get("kind"))
                .and_then(Value::as_str)
                .map(str::to_owned)
        });
        let key = match kind.as_deref() {
            Some("feddw") => "mu",
            Some("fedprox") => "prox_mu",
            other => {
                return Err(HarnessError::config(
                    "strategy.mu",
                    format!("--mu needs strategy feddw or fedprox, got {}", other.unwrap_or("none")),
                ))
            }
        };
        strategy.insert(key.into(), Value::Float(mu));
    }
    if !strategy.is_empty() {
        t.insert("strategy".into(), Value::Table(strategy));
    }
    if let Some(beta) = flags.beta {
        t.insert("beta".into(), Value::Float(beta));
    }
    let int = |v: u64, key: &str| {
        i64::try_from(v)
            .map(Value::Integer)
            .map_err(|_| HarnessError::config(key, format!("{v} does not fit a TOML integer")))
    };
    if let Some(n) = flags.clients {
        t.insert("clients".into(), int(n as u64, "clients")?);
    }
    if let Some(n) = flags.rounds {
        t.insert("rounds".into(), int(n as u64, "rounds")?);
    }
    if let Some(seed) = flags.seed {
        t.insert("seed".into(), int(seed, "seed")?);
    }
    Ok(t)
}

/// Resolves the layered configuration into a validated [`RunConfig`].
pub fn parse_config(preset: Option<Preset>, file: Option<&str>, flags: &Overrides) -> Result<RunConfig> {
    let mut table = defaults();
    if let Some(p) = preset {
        merge(&mut table, parse_table(p.overrides(), "preset")?);
    }
    if let Some(text) = file {
        merge(&mut table, parse_table(text, "config file")?);
    }
    let flags = flag_table(flags, &table)?;
    merge(&mut table, flags);

    let is_feddw = table
        .get("strategy")
        .and_then(|s| s.get("kind"))
        .and_then(Value::as_str)
        == Some("feddw");
    if let Some(Value::Table(model)) = table.get_mut("model") {
        model
            .entry("classifier_bias")
            .or_insert(Value::Boolean(!is_feddw));
    }

    let config: RunConfig = serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        let key = e.path().to_string();
        HarnessError::config(key, e.into_inner().to_string())
    })?;
    validate(&config)?;
    Ok(config)
}

fn validate(config: &RunConfig) -> Result<()> {
    use feddw_core::fl::Strategy;
    let key = match &config.strategy {
        Strategy::FedDw(reg) if !(reg.mu >= 0.0) => Some("strategy.mu"),
        Strategy::FedProx { prox_mu } if !(*prox_mu >= 0.0) => Some("strategy.prox_mu"),
        _ => None,
    };
    config.validate().map_err(|e| {
        let message = match e {
            feddw_core::Error::InvalidInput(m) => m,
            other => other.to_string(),
        };
        let key = key.map(str::to_owned).unwrap_or_else(|| guess_key(&message));
        HarnessError::config(key, message)
    })
}

/// Names the offending key for messages that start with it.
fn guess_key(message: &str) -> String {
    const KEYS: [&str; 8] = [
        "participation_rate",
        "learning_rate",
        "local_epochs",
        "batch_size",
        "clients",
        "beta",
        "linearization_refresh",
        "classifier_bias",
    ];
    KEYS.iter()
        .find(|k| message.contains(*k))
        .map(|k| match *k {
            "linearization_refresh" => "strategy.linearization_refresh".to_owned(),
            "classifier_bias" => "model.classifier_bias".to_owned(),
            k => k.to_owned(),
        })
        .unwrap_or_else(|| ".".to_owned())
}

/// Canonical TOML text of a config; parsing it back yields the same config.
pub fn emit_config(config: &RunConfig) -> Result<String> {
    Ok(toml::to_string(config)?)
}

/// Parses a stand-alone config file with no preset or flags.
pub fn config_from_str(text: &str) -> Result<RunConfig> {
    parse_config(None, Some(text), &Overrides::default())
}

