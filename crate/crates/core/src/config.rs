//! JSON config plumbing: simulator presets and `key.path=value` overrides.

use serde::{Deserialize, Deserializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::sim::SimConfig;

/// Replaces a `"preset": name` entry with the preset's fields; keys given
/// next to it override the preset.
pub fn expand_sim_preset(value: Value) -> Result<Value> {
    let Value::Object(mut obj) = value else {
        return Err(Error::config("simulator", "expected a JSON object"));
    };
    let Some(name) = obj.remove("preset") else {
        return Ok(Value::Object(obj));
    };
    let name = name
        .as_str()
        .ok_or_else(|| Error::config("preset", "expected a string"))?
        .to_string();
    let preset = SimConfig::preset(&name)
        .ok_or_else(|| Error::config("preset", format!("unknown preset {name:?}")))?;
    let Value::Object(mut base) = serde_json::to_value(preset)? else {
        unreachable!("SimConfig serializes to an object")
    };
    base.extend(obj);
    Ok(Value::Object(base))
}

/// Parses a simulator config, expanding any preset first.
pub fn sim_config_from_value(value: Value) -> Result<SimConfig> {
    let cfg: SimConfig = serde_json::from_value(expand_sim_preset(value)?)
        .map_err(|e| Error::config("simulator", e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Serde adapter for simulator configs embedded in larger documents.
pub fn deserialize_sim_config<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<SimConfig, D::Error> {
    let value = Value::deserialize(d)?;
    let expanded = expand_sim_preset(value).map_err(serde::de::Error::custom)?;
    serde_json::from_value(expanded).map_err(serde::de::Error::custom)
}

/// Applies `a.b.c=value`. The value is parsed as JSON when possible and kept
/// as a string otherwise; missing intermediate objects are created.
pub fn apply_override(root: &mut Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config("--set", format!("expected key=value, got {spec:?}")))?;
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::config("--set", format!("bad key path {path:?}")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let keys: Vec<&str> = path.split('.').collect();
    for (i, key) in keys.iter().enumerate() {
        if !node.is_object() {
            return Err(Error::config(
                "--set",
                format!("{} is not an object", keys[..i].join(".")),
            ));
        }
        let obj = node.as_object_mut().expect("checked above");
        if i + 1 == keys.len() {
            obj.insert(key.to_string(), value);
            return Ok(());
        }
        node = obj
            .entry(key.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("path has at least one key")
}
