//! Scenario configuration files.
//!
//! Configs are JSON objects. Only `p` and `q` are required; every other field
//! falls back to the defaults of [`ScenarioConfig::new`], with `r_b`
//! defaulting to `r_b_true` and `lr_rank` to `r_a · r_b`. Unknown keys are
//! rejected so a typo never silently becomes a default.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::sim::ScenarioConfig;

const KNOWN_KEYS: &[&str] = &[
    "p",
    "q",
    "r_b_true",
    "spatial_eigs",
    "noise_var",
    "cnr_db",
    "texture",
    "n_train",
    "n_test",
    "corruption_frac",
    "target_amp_law",
    "target_snr_db",
    "doppler_grid",
    "phase_coeffs",
    "temporal_decades",
    "r_a",
    "r_b",
    "lr_rank",
    "seed",
];

fn usize_field(obj: &Map<String, Value>, key: &str) -> Result<Option<usize>> {
    match obj.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|n| Some(n as usize))
            .ok_or_else(|| Error::Config(format!("key `{key}`: expected a non-negative integer, got {v}"))),
    }
}

/// Parses and validates a JSON scenario config.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Config("config must be a JSON object".into()))?;
    if let Some(k) = obj.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown key `{k}`")));
    }
    let p = usize_field(obj, "p")?.ok_or_else(|| Error::Config("missing required key `p`".into()))?;
    let q = usize_field(obj, "q")?.ok_or_else(|| Error::Config("missing required key `q`".into()))?;

    let mut defaults = ScenarioConfig::new(p, q);
    if let Some(r) = usize_field(obj, "r_b_true")? {
        defaults.r_b_true = r;
        defaults.r_b = r;
    }
    if let Some(r) = usize_field(obj, "r_a")? {
        defaults.r_a = r;
    }
    if let Some(r) = usize_field(obj, "r_b")? {
        defaults.r_b = r;
    }
    defaults.lr_rank = defaults.r_a * defaults.r_b;

    let base = match serde_json::to_value(&defaults)? {
        Value::Object(m) => m,
        _ => unreachable!("ScenarioConfig serializes to an object"),
    };
    let merged = |only: Option<&str>| -> Value {
        let mut m = base.clone();
        for (k, v) in obj {
            if only.is_none_or(|o| o == k) {
                m.insert(k.clone(), v.clone());
            }
        }
        Value::Object(m)
    };
    let cfg: ScenarioConfig = match serde_json::from_value(merged(None)) {
        Ok(cfg) => cfg,
        Err(e) => {
            // Name the offending key by retrying one override at a time.
            let key = obj
                .keys()
                .find(|k| serde_json::from_value::<ScenarioConfig>(merged(Some(k))).is_err());
            return Err(Error::Config(match key {
                Some(k) => format!("key `{k}`: {e}"),
                None => e.to_string(),
            }));
        }
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Reads, parses and validates a config file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Canonical JSON form of a config (all fields explicit).
pub fn config_to_json(cfg: &ScenarioConfig) -> Result<String> {
    Ok(serde_json::to_string_pretty(cfg)?)
}
