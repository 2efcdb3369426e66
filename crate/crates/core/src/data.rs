//! Grouped observations and per-group sufficient statistics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{FabError, Result};

/// Per-group observation vectors keyed by group identifier, kept in
/// identifier order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupedData {
    groups: BTreeMap<String, Vec<f64>>,
}

impl GroupedData {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_groups<I, S>(groups: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut out = Self::new();
        for (id, values) in groups {
            let id = id.into();
            for v in values {
                out.push(id.clone(), v)?;
            }
        }
        Ok(out)
    }

    pub fn push(&mut self, id: impl Into<String>, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(FabError::domain("observation", value));
        }
        self.groups.entry(id.into()).or_default().push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn total_obs(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.groups.keys().map(String::as_str)
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.groups.get(id).map(Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.groups.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Summaries in identifier order.
    pub fn summaries(&self) -> Vec<GroupSummary> {
        self.groups
            .values()
            .map(|v| GroupSummary::from_values(v).expect("groups are never empty"))
            .collect()
    }

    /// Applies `f` to every observation (e.g. to shift or rescale).
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = Self::new();
        for (id, values) in &self.groups {
            for &v in values {
                out.push(id.clone(), f(v))?;
            }
        }
        Ok(out)
    }
}

/// Sufficient statistics of one group: size, mean, unbiased variance and
/// the sum of squared deviations `x2 = (n-1) s2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub n: usize,
    pub ybar: f64,
    /// `None` when `n = 1`.
    pub s2: Option<f64>,
    pub x2: f64,
}

impl GroupSummary {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(FabError::InsufficientData("empty group".into()));
        }
        let ybar = values.iter().sum::<f64>() / n as f64;
        let x2: f64 = values.iter().map(|v| (v - ybar) * (v - ybar)).sum();
        let s2 = (n >= 2).then(|| x2 / (n - 1) as f64);
        Ok(Self { n, ybar, s2, x2 })
    }

    /// From reported statistics of a group with `n >= 2`.
    pub fn from_stats(n: usize, ybar: f64, s2: f64) -> Result<Self> {
        if n < 2 {
            return Err(FabError::domain("group size for a variance (need n >= 2)", n as f64));
        }
        if !ybar.is_finite() {
            return Err(FabError::domain("ybar", ybar));
        }
        if !(s2 >= 0.0) || !s2.is_finite() {
            return Err(FabError::domain("s2", s2));
        }
        Ok(Self {
            n,
            ybar,
            s2: Some(s2),
            x2: s2 * (n - 1) as f64,
        })
    }

    pub fn single(ybar: f64) -> Result<Self> {
        if !ybar.is_finite() {
            return Err(FabError::domain("ybar", ybar));
        }
        Ok(Self {
            n: 1,
            ybar,
            s2: None,
            x2: 0.0,
        })
    }

    /// The sample variance, or an error for singleton groups.
    pub fn variance(&self) -> Result<f64> {
        self.s2
            .ok_or_else(|| FabError::InsufficientData("sample variance needs n >= 2".into()))
    }

    pub fn df(&self) -> usize {
        self.n - 1
    }
}
