//! Observation and stimulus files.
//!
//! Both use the same TOML layout: an array of `[[time]]` tables, each with
//! optional `inputs`, `state` and `expect` maps from names to bits. A
//! single-instant observation file has exactly one entry.
//!
//! ```toml
//! [[time]]
//! inputs = { CLK = 1, E1 = 1, E2 = 0 }
//! state  = { Q1 = 1, Q2 = 0 }
//! expect = { A1 = 0, A2 = 0, A3 = 1, A4 = 0 }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::logic::Value;
use crate::model::{ComponentModel, ModelError, ObsRole, ObservationSet};

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("malformed stimulus file: {0}")]
    Parse(String),
    #[error("an observation file for single-instant diagnosis needs exactly one [[time]] entry, found {0}")]
    NotSingleInstant(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A bit written as `0`, `1`, `'0'`, `"1"`, `true` or `false`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bit(pub Value);

impl Serialize for Bit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.0.as_bool() as u8)
    }
}

impl<'de> Deserialize<'de> for Bit {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct BitVisitor;
        impl Visitor<'_> for BitVisitor {
            type Value = Bit;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a bit: 0, 1, \"0\" or \"1\"")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Bit, E> {
                match v {
                    0 => Ok(Bit(Value::Zero)),
                    1 => Ok(Bit(Value::One)),
                    _ => Err(E::custom(format!("{v} is not a bit"))),
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Bit, E> {
                self.visit_i64(v as i64)
            }
            fn visit_bool<E: de::Error>(self, v: bool) -> Result<Bit, E> {
                Ok(Bit(v.into()))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Bit, E> {
                v.parse().map(Bit).map_err(E::custom)
            }
        }
        d.deserialize_any(BitVisitor)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimePoint {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub inputs: BTreeMap<String, Bit>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub state: BTreeMap<String, Bit>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub expect: BTreeMap<String, Bit>,
}

impl TimePoint {
    /// All bindings with their roles, inputs first.
    pub fn bindings(&self) -> impl Iterator<Item = (&str, Value, ObsRole)> {
        fn tag(
            m: &BTreeMap<String, Bit>,
            r: ObsRole,
        ) -> impl Iterator<Item = (&str, Value, ObsRole)> {
            m.iter().map(move |(k, v)| (k.as_str(), v.0, r))
        }
        tag(&self.inputs, ObsRole::Input)
            .chain(tag(&self.state, ObsRole::State))
            .chain(tag(&self.expect, ObsRole::Expected))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stimulus {
    #[serde(default)]
    pub time: Vec<TimePoint>,
}

impl Stimulus {
    pub fn parse(text: &str) -> Result<Self, StimulusError> {
        toml::from_str(text).map_err(|e| StimulusError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("stimulus serializes")
    }

    /// Observations for a single-instant model. Variable names may be given
    /// as `process.VAR`.
    pub fn instant_observations(
        &self,
        model: &ComponentModel,
    ) -> Result<ObservationSet, StimulusError> {
        let [t] = self.time.as_slice() else {
            return Err(StimulusError::NotSingleInstant(self.time.len()));
        };
        let mut obs = ObservationSet::new();
        for (name, value, role) in t.bindings() {
            let resolved = match name.split_once('.') {
                Some((p, v)) => format!("{p}/{v}#0"),
                None => name.to_string(),
            };
            let key = model
                .connections()
                .find(|(_, n)| {
                    n.eq_ignore_ascii_case(&resolved)
                        || n.eq_ignore_ascii_case(&format!("{resolved}_current"))
                })
                .map(|(_, n)| n.to_string())
                .ok_or_else(|| ModelError::UnknownSignal(name.to_string()))?;
            obs.bind(model, &key, value, role)?;
        }
        Ok(obs)
    }
}
