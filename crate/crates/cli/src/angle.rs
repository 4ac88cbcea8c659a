//! Angles written either as plain floats or as rational multiples of pi.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// An angle that remembers how it was written, so manifests round-trip exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct Angle {
    text: String,
    value: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("cannot parse angle `{0}`")]
pub struct AngleError(pub String);

impl Angle {
    pub fn radians(&self) -> f64 {
        self.value
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn from_radians(value: f64) -> Self {
        Self {
            text: format!("{value:?}"),
            value,
        }
    }
}

fn parse_number(s: &str) -> Result<f64, AngleError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| AngleError(s.to_string()))
}

/// Accepts `1.2`, `pi`, `-pi/3`, `2pi/3`, `2*pi/3`, `pi*0.25`, `3/4*pi`.
pub fn parse_angle(raw: &str) -> Result<f64, AngleError> {
    let s: String = raw
        .chars()
        .filter(|c| !c.is_whitespace())
        .collect::<String>()
        .to_lowercase();
    if s.is_empty() {
        return Err(AngleError(raw.to_string()));
    }
    if !s.contains("pi") {
        let v = match s.split_once('/') {
            Some((n, d)) => parse_number(n)? / parse_number(d)?,
            None => parse_number(&s)?,
        };
        return finite(v, raw);
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(&s)),
    };
    let (num, den) = match body.rsplit_once('/') {
        Some((n, d)) if !d.contains("pi") => (n, parse_number(d)?),
        _ => (body, 1.0),
    };
    let (before, after) = num
        .split_once("pi")
        .ok_or_else(|| AngleError(raw.to_string()))?;
    let factor = |part: &str, strip: fn(&str) -> Option<&str>| -> Result<f64, AngleError> {
        let part = strip(part).unwrap_or(part);
        if part.is_empty() {
            Ok(1.0)
        } else {
            match part.split_once('/') {
                Some((n, d)) => Ok(parse_number(n)? / parse_number(d)?),
                None => parse_number(part),
            }
        }
    };
    let a = factor(before, |p| p.strip_suffix('*'))?;
    let b = factor(after, |p| p.strip_prefix('*'))?;
    finite(sign * a * b * PI / den, raw)
}

fn finite(v: f64, raw: &str) -> Result<f64, AngleError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(AngleError(raw.to_string()))
    }
}

impl FromStr for Angle {
    type Err = AngleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(Self {
            text: s.trim().to_string(),
            value: parse_angle(s)?,
        })
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Angle::from_radians(v)),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}
