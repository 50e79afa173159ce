use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{FormulationPrefs, Provenance, Tier, WeightConfig, WeightTable};
use crate::error::{Error, Result};
use crate::features::{FeatureId, FEATURE_COUNT};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Multipliers<S> {
    pub high: S,
    pub low: S,
}

/// On-disk form of a weight table together with the phrasing preferences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightsDocument<S> {
    pub weights: BTreeMap<FeatureId, S>,
    pub tiers: BTreeMap<FeatureId, Tier>,
    pub threshold: S,
    pub multipliers: Multipliers<S>,
    #[serde(default)]
    pub prefs: FormulationPrefs,
    #[serde(default)]
    pub provenance: Provenance<S>,
}

impl<S: Scalar> WeightsDocument<S> {
    pub fn new(table: &WeightTable<S>, prefs: FormulationPrefs) -> Self {
        let config = table.config();
        Self {
            weights: FeatureId::ALL.iter().map(|&f| (f, table.weight(f))).collect(),
            tiers: FeatureId::ALL.iter().map(|&f| (f, table.tier(f))).collect(),
            threshold: config.threshold,
            multipliers: Multipliers {
                high: config.high_multiplier,
                low: config.low_multiplier,
            },
            prefs,
            provenance: table.provenance().clone(),
        }
    }

    /// Validates completeness and normalization and rebuilds the table.
    pub fn into_table(self) -> Result<(WeightTable<S>, FormulationPrefs)> {
        let missing: Vec<&str> = FeatureId::ALL
            .iter()
            .filter(|f| !self.weights.contains_key(f))
            .map(|f| f.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Document(format!("missing weights for {}", missing.join(", "))));
        }
        let mut weights = [S::zero(); FEATURE_COUNT];
        let mut tiers = [Tier::High; FEATURE_COUNT];
        for f in FeatureId::ALL {
            weights[f.index()] = self.weights[&f];
            tiers[f.index()] = self.tiers.get(&f).copied().unwrap_or_default();
        }
        let config = WeightConfig {
            threshold: self.threshold,
            high_multiplier: self.multipliers.high,
            low_multiplier: self.multipliers.low,
        };
        let table = WeightTable::from_parts(weights, tiers, config, self.provenance)?;
        Ok((table, self.prefs))
    }
}

impl<S> WeightsDocument<S>
where
    S: Scalar + Serialize + for<'de> Deserialize<'de>,
{
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("weights document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }
}
