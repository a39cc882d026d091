use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_err, Error, Result};

/// How a raw column is turned into categories.
///
/// `Numeric` defers the choice between `DiscreteNumeric` and `BinnedNumeric`
/// to fit time, based on the number of distinct training values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    #[serde(alias = "ordered")]
    OrderedCategorical,
    #[serde(alias = "categorical", alias = "unordered")]
    UnorderedCategorical,
    #[serde(alias = "discrete")]
    DiscreteNumeric,
    #[serde(alias = "binned")]
    BinnedNumeric,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    /// Explicit category ordering, lowest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<String>>,
    #[serde(default)]
    pub immutable: bool,
    /// Only non-decreasing changes are actionable.
    #[serde(default)]
    pub monotone: bool,
}

impl FeatureSpec {
    pub fn new(name: impl Into<String>, kind: FeatureKind) -> Self {
        Self {
            name: name.into(),
            kind,
            order: None,
            immutable: false,
            monotone: false,
        }
    }

    pub fn ordered(mut self, order: &[&str]) -> Self {
        self.order = Some(order.iter().map(|s| s.to_string()).collect());
        self
    }

    pub fn immutable(mut self) -> Self {
        self.immutable = true;
        self
    }

    pub fn monotone(mut self) -> Self {
        self.monotone = true;
        self
    }
}

/// `(effect ↑) ⇒ (cause ↑)`: the effect may only increase if the cause increases too.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CausalPair {
    pub effect: String,
    pub cause: String,
}

fn default_discrete_threshold() -> usize {
    25
}

fn default_positive() -> String {
    "1".to_string()
}

/// Declarative description of a tabular dataset and its recourse constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    #[serde(default)]
    pub name: String,
    /// Label column in the raw CSV.
    pub label: String,
    /// Raw label value of the accepted (favourable) class.
    #[serde(default = "default_positive")]
    pub positive: String,
    /// `Numeric` features with at most this many distinct training values
    /// are treated as discrete numerics instead of being binned.
    #[serde(default = "default_discrete_threshold")]
    pub discrete_threshold: usize,
    pub features: Vec<FeatureSpec>,
    #[serde(default)]
    pub causal: Vec<CausalPair>,
}

impl Schema {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let schema: Schema = toml::from_str(text)?;
        schema.check()?;
        Ok(schema)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(io_err(path))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("schema serializes")
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.features.iter().position(|f| f.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.features.iter().map(|f| f.name.as_str()).collect()
    }

    /// Features whose ordering must be meaningful: monotone ones and both
    /// sides of every causal rule.
    pub fn requires_order(&self, index: usize) -> bool {
        let f = &self.features[index];
        f.monotone
            || self
                .causal
                .iter()
                .any(|c| c.effect == f.name || c.cause == f.name)
    }

    /// Structural checks that do not need data.
    pub fn check(&self) -> Result<()> {
        if self.features.is_empty() {
            return Err(Error::Schema("no features declared".into()));
        }
        let mut seen = HashSet::new();
        for f in &self.features {
            if !seen.insert(f.name.as_str()) {
                return Err(Error::Schema(format!("duplicate feature `{}`", f.name)));
            }
            if f.name == self.label {
                return Err(Error::Schema(format!(
                    "label `{}` is also declared as a feature",
                    f.name
                )));
            }
            if f.immutable && f.monotone {
                return Err(Error::Schema(format!(
                    "feature `{}` is both immutable and monotone",
                    f.name
                )));
            }
            if let Some(order) = &f.order {
                if order.is_empty() {
                    return Err(Error::Schema(format!("feature `{}` has an empty order", f.name)));
                }
                let distinct: HashSet<_> = order.iter().collect();
                if distinct.len() != order.len() {
                    return Err(Error::Schema(format!(
                        "feature `{}` repeats a category in its order",
                        f.name
                    )));
                }
            }
        }
        for rule in &self.causal {
            for side in [&rule.effect, &rule.cause] {
                if self.index_of(side).is_none() {
                    return Err(Error::Schema(format!("causal rule references unknown feature `{side}`")));
                }
            }
            if rule.effect == rule.cause {
                return Err(Error::Schema(format!("causal rule on `{}` refers to itself", rule.effect)));
            }
        }
        Ok(())
    }
}
