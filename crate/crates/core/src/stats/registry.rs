//! Language metadata: names, families, dominant word order, coordinates and
//! exclusion rules for controlled comparisons.

use crate::error::{AtdError, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::path::Path;

/// Environment variable naming a registry file to use when none is given.
pub const REGISTRY_ENV: &str = "ATD_REGISTRY";

const BUILTIN: &str = include_str!("../../data/registry.json");

const WORD_ORDERS: [&str; 6] = ["SOV", "SVO", "VSO", "VOS", "OVS", "OSV"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageInfo {
    pub code: String,
    pub name: String,
    pub family: String,
    #[serde(default)]
    pub word_order: Option<String>,
    /// Set when the order is an editorial assignment rather than sourced.
    #[serde(default)]
    pub word_order_editorial: bool,
    #[serde(default)]
    pub lat: Option<f64>,
    #[serde(default)]
    pub lon: Option<f64>,
    #[serde(default)]
    pub m2m_retained: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExclusionReason {
    Genetic,
    Areal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedLanguage {
    pub code: String,
    pub reason: ExclusionReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExclusionRule {
    pub focal: String,
    pub excluded: Vec<ExcludedLanguage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Registry {
    pub version: u32,
    #[serde(default)]
    pub coordinates: String,
    pub languages: Vec<LanguageInfo>,
    #[serde(default)]
    pub exclusions: Vec<ExclusionRule>,
}

impl Registry {
    /// The registry shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN).expect("built-in registry is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Registry = serde_json::from_str(text)?;
        r.validate()?;
        Ok(r)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// An explicit path, else `$ATD_REGISTRY`, else the built-in registry.
    pub fn resolve(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => Self::load(p),
            None => match std::env::var_os(REGISTRY_ENV) {
                Some(p) if !p.is_empty() => Self::load(p),
                _ => Ok(Self::builtin()),
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut codes = BTreeSet::new();
        for l in &self.languages {
            if l.code.is_empty() || !codes.insert(l.code.as_str()) {
                return Err(AtdError::Registry(format!("duplicate or empty code {:?}", l.code)));
            }
            if let Some(lat) = l.lat {
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(AtdError::Registry(format!("{}: latitude {lat} out of range", l.code)));
                }
            }
            if let Some(lon) = l.lon {
                if !(-180.0..=180.0).contains(&lon) {
                    return Err(AtdError::Registry(format!("{}: longitude {lon} out of range", l.code)));
                }
            }
            if let Some(wo) = &l.word_order {
                if !WORD_ORDERS.contains(&wo.as_str()) {
                    return Err(AtdError::Registry(format!("{}: unknown word order {wo:?}", l.code)));
                }
            }
        }
        for rule in &self.exclusions {
            for code in std::iter::once(&rule.focal).chain(rule.excluded.iter().map(|e| &e.code)) {
                if !codes.contains(code.as_str()) {
                    return Err(AtdError::Registry(format!(
                        "exclusion rule for {} names unknown language {code}",
                        rule.focal
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn get(&self, code: &str) -> Option<&LanguageInfo> {
        self.languages.iter().find(|l| l.code == code)
    }

    pub fn exclusions_for(&self, focal: &str) -> Vec<&ExcludedLanguage> {
        self.exclusions
            .iter()
            .filter(|r| r.focal == focal)
            .flat_map(|r| &r.excluded)
            .collect()
    }

    /// Codes retained in the encoder-decoder setting, in registry order.
    pub fn m2m_codes(&self) -> Vec<String> {
        self.languages
            .iter()
            .filter(|l| l.m2m_retained)
            .map(|l| l.code.clone())
            .collect()
    }
}
