//! Parameter sources: `key = value` files, JSON files (plain or a previous
//! manifest) and command-line overrides, merged in that order.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::{Map, Value};

use crate::error::{CliError, CliResult};

pub type Params = Map<String, Value>;

fn normalize_key(k: &str) -> String {
    k.trim().replace('-', "_")
}

fn scalar(raw: &str) -> Value {
    let s = raw.trim();
    if s == "true" || s == "false" {
        return Value::Bool(s == "true");
    }
    if let Ok(i) = s.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(i) = s.parse::<i64>() {
        return Value::from(i);
    }
    if let Ok(f) = s.parse::<f64>() {
        if f.is_finite() {
            return Value::from(f);
        }
    }
    Value::String(s.to_string())
}

/// Text value to JSON; comma-separated text becomes a list.
pub fn parse_value(raw: &str) -> Value {
    let s = raw.trim();
    let s = s
        .strip_prefix('[')
        .and_then(|x| x.strip_suffix(']'))
        .unwrap_or(s);
    if s.contains(',') {
        Value::Array(
            s.split(',')
                .filter(|x| !x.trim().is_empty())
                .map(scalar)
                .collect(),
        )
    } else {
        scalar(s)
    }
}

pub fn parse_key_value(text: &str) -> CliResult<Params> {
    let mut out = Params::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::validation(format!("line {}: expected key = value", n + 1)))?;
        out.insert(normalize_key(k), parse_value(v));
    }
    Ok(out)
}

/// A JSON object, or the `parameters` of a manifest.
pub fn parse_json(text: &str) -> CliResult<(Option<String>, Params)> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))?;
    let Value::Object(obj) = v else {
        return Err(CliError::validation("config must be a JSON object"));
    };
    if let (Some(Value::Object(p)), sub) = (obj.get("parameters"), obj.get("subcommand")) {
        let sub = sub.and_then(Value::as_str).map(str::to_string);
        return Ok((
            sub,
            p.iter()
                .map(|(k, v)| (normalize_key(k), v.clone()))
                .collect(),
        ));
    }
    Ok((
        None,
        obj.into_iter()
            .map(|(k, v)| (normalize_key(&k), v))
            .collect(),
    ))
}

/// Loads a config file; the subcommand recorded in a manifest must match.
pub fn load(path: &Path, subcommand: &str) -> CliResult<Params> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        let (sub, params) = parse_json(&text)?;
        if let Some(sub) = sub {
            if sub != subcommand {
                return Err(CliError::validation(format!(
                    "manifest is for `{sub}`, not `{subcommand}`"
                )));
            }
        }
        Ok(params)
    } else {
        parse_key_value(&text)
    }
}

/// Applies `(key, raw text)` overrides from flags.
pub fn overlay(params: &mut Params, flags: &[(&str, Option<String>)]) {
    for (k, v) in flags {
        if let Some(v) = v {
            params.insert(normalize_key(k), parse_value(v));
        }
    }
}

/// Fills a typed parameter set, rejecting keys it does not know.
pub fn resolve<T: DeserializeOwned + serde::Serialize + Default>(params: Params) -> CliResult<T> {
    let known = match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("parameter sets serialize to objects"),
    };
    if let Some(k) = params
        .keys()
        .find(|k| !known.contains_key(*k) && !optional_key(k))
    {
        return Err(CliError::validation(format!("unknown parameter `{k}`")));
    }
    serde_json::from_value(Value::Object(params)).map_err(|e| CliError::validation(e.to_string()))
}

/// Keys of optional fields, absent from serialized defaults.
fn optional_key(k: &str) -> bool {
    matches!(k, "h" | "gate" | "x_max")
}

pub mod de {
    //! Lenient shapes accepted from text configs.
    use serde::{Deserialize, Deserializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }

    pub fn one_or_many<'de, D, T>(d: D) -> Result<Vec<T>, D::Error>
    where
        D: Deserializer<'de>,
        T: Deserialize<'de>,
    {
        Ok(match OneOrMany::deserialize(d)? {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        })
    }

    pub fn opt_one_or_many<'de, D, T>(d: D) -> Result<Option<Vec<T>>, D::Error>
    where
        D: Deserializer<'de>,
        T: Deserialize<'de>,
    {
        one_or_many(d).map(Some)
    }
}
