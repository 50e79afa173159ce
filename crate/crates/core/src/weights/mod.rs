//! Feature weights derived from Likert ratings.
//!
//! Rated features are ordered by mean rating, adjacent features in that order
//! are compared with a χ² test, and a significant difference splits the list
//! into a high and a low tier. A feature's weight is its mean rating times its
//! tier multiplier, normalized so all eleven weights sum to one. Features that
//! were never rated borrow the mean and tier of their closest rated analogue.

mod document;
mod formulation;
mod ratings;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FEATURE_COUNT};
use crate::num::Scalar;
use crate::stats::{chi_square_test, ChiSquare, RatingCounts};

pub use document::{Multipliers, WeightsDocument};
pub use formulation::{
    formulation_prefs, formulation_report, DimensionOutcome, DiseaseNaming, FormulationPrefs, FormulationReport,
    NumericStyle, VerbStyle,
};
pub use ratings::{
    parse_feature_ratings, parse_formulation_ratings, read_feature_ratings, read_formulation_ratings,
    records_from_counts, FormulationDimension, FormulationVariant, RatedItem, Rating, RatingRecord,
};

/// Features that must be rated for a full derivation.
pub const RATED_FEATURES: [FeatureId; 7] = [
    FeatureId::QueryInDetailedDescription,
    FeatureId::QueryInSummary,
    FeatureId::PrimaryPurposeAvailable,
    FeatureId::PublicationCount,
    FeatureId::StageAvailable,
    FeatureId::QueryInTitle,
    FeatureId::IsRecruiting,
];

/// Unrated feature and the rated feature whose mean and tier it borrows.
pub const PROXIES: [(FeatureId, FeatureId); 4] = [
    (FeatureId::PreferredTermInTitle, FeatureId::QueryInTitle),
    (FeatureId::PreferredTermInSummary, FeatureId::QueryInSummary),
    (
        FeatureId::PreferredTermInDetailedDescription,
        FeatureId::QueryInDetailedDescription,
    ),
    (FeatureId::OverallStatusAvailable, FeatureId::StageAvailable),
];

const MIN_RATINGS: u64 = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tier {
    #[default]
    High,
    Low,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig<S> {
    /// Adjacent pairs with p below this are cut into separate tiers.
    pub threshold: S,
    pub high_multiplier: S,
    pub low_multiplier: S,
}

impl<S: Scalar> Default for WeightConfig<S> {
    fn default() -> Self {
        Self {
            threshold: S::lit(0.05),
            high_multiplier: S::lit(1.5),
            low_multiplier: S::one(),
        }
    }
}

impl<S: Scalar> WeightConfig<S> {
    pub fn multiplier(&self, tier: Tier) -> S {
        match tier {
            Tier::High => self.high_multiplier,
            Tier::Low => self.low_multiplier,
        }
    }
}

/// χ² comparison of two features adjacent in mean order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTestResult<S> {
    pub item_a: FeatureId,
    pub item_b: FeatureId,
    /// `None` when the pair collapses to a single rating level.
    pub test: Option<ChiSquare<S>>,
    pub significant: bool,
}

/// Mean ordering, adjacent tests, and tier labels over a set of rated features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tiering<S> {
    pub order: Vec<FeatureId>,
    pub means: BTreeMap<FeatureId, S>,
    pub adjacent: Vec<PairwiseTestResult<S>>,
    pub tiers: BTreeMap<FeatureId, Tier>,
    pub warnings: Vec<String>,
}

fn mean_of<S: Scalar>(counts: &RatingCounts) -> S {
    let n: u64 = counts.iter().sum();
    let total: u64 = counts.iter().enumerate().map(|(i, &c)| (i as u64 + 1) * c).sum();
    S::from_count(total) / S::from_count(n)
}

/// Orders features by mean rating and splits them into tiers.
///
/// Ties in the mean are broken by feature enumeration order. Of all
/// significant adjacent pairs, the one with the widest gap in means becomes
/// the high/low boundary; with no significant pair every feature is high.
pub fn tier_features<S: Scalar>(
    histograms: &BTreeMap<FeatureId, RatingCounts>,
    config: &WeightConfig<S>,
) -> Tiering<S> {
    let means: BTreeMap<FeatureId, S> = histograms.iter().map(|(&f, c)| (f, mean_of::<S>(c))).collect();
    let mut order: Vec<FeatureId> = means.keys().copied().collect();
    order.sort_by(|a, b| {
        means[b]
            .partial_cmp(&means[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    });

    let mut warnings = Vec::new();
    let mut adjacent = Vec::new();
    for pair in order.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let test = match chi_square_test::<S>(&histograms[&a], &histograms[&b]) {
            Ok(t) => Some(t),
            Err(e) => {
                warnings.push(format!("{a} vs {b}: {e}; treated as not significant"));
                None
            }
        };
        let significant = test.is_some_and(|t| t.p_value < config.threshold);
        adjacent.push(PairwiseTestResult {
            item_a: a,
            item_b: b,
            test,
            significant,
        });
    }

    let cut = adjacent
        .iter()
        .enumerate()
        .filter(|(_, t)| t.significant)
        .map(|(i, t)| (i, means[&t.item_a] - means[&t.item_b]))
        .fold(None, |best: Option<(usize, S)>, (i, gap)| match best {
            Some((_, g)) if g >= gap => best,
            _ => Some((i, gap)),
        })
        .map(|(i, _)| i);

    let tiers = order
        .iter()
        .enumerate()
        .map(|(pos, &f)| {
            let tier = match cut {
                Some(c) if pos > c => Tier::Low,
                _ => Tier::High,
            };
            (f, tier)
        })
        .collect();

    Tiering {
        order,
        means,
        adjacent,
        tiers,
        warnings,
    }
}

/// Weight of each feature as mean × tier multiplier, normalized to sum to one.
pub fn tiered_weights<S: Scalar>(
    means: &BTreeMap<FeatureId, S>,
    tiers: &BTreeMap<FeatureId, Tier>,
    config: &WeightConfig<S>,
) -> BTreeMap<FeatureId, S> {
    let raw: BTreeMap<FeatureId, S> = means
        .iter()
        .map(|(f, &m)| (*f, m * config.multiplier(tiers.get(f).copied().unwrap_or_default())))
        .collect();
    let total: S = raw.values().copied().sum();
    raw.into_iter().map(|(f, w)| (f, w / total)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance<S> {
    /// Mean rating of every rated feature.
    pub means: BTreeMap<FeatureId, S>,
    /// Unrated feature → rated feature it borrowed from.
    pub proxies: BTreeMap<FeatureId, FeatureId>,
    pub order: Vec<FeatureId>,
    pub adjacent: Vec<PairwiseTestResult<S>>,
    pub warnings: Vec<String>,
}

impl<S> Default for Provenance<S> {
    fn default() -> Self {
        Self {
            means: BTreeMap::new(),
            proxies: BTreeMap::new(),
            order: Vec::new(),
            adjacent: Vec::new(),
            warnings: Vec::new(),
        }
    }
}

/// Per-feature weights summing to one, with tier labels and provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightTable<S> {
    weights: [S; FEATURE_COUNT],
    tiers: [Tier; FEATURE_COUNT],
    config: WeightConfig<S>,
    provenance: Provenance<S>,
}

fn sum_tolerance<S: Scalar>() -> S {
    S::lit(1e-9).max(S::epsilon() * S::lit(64.0))
}

impl<S: Scalar> WeightTable<S> {
    /// Builds a table from explicit weights. Weights must be non-negative,
    /// finite and sum to one.
    pub fn from_weights(weights: [S; FEATURE_COUNT]) -> Result<Self> {
        Self::from_parts(
            weights,
            [Tier::High; FEATURE_COUNT],
            WeightConfig::default(),
            Provenance::default(),
        )
    }

    /// Builds a table from a sparse map; unspecified features weigh zero.
    pub fn from_map(map: &BTreeMap<FeatureId, S>) -> Result<Self> {
        let mut weights = [S::zero(); FEATURE_COUNT];
        for (f, &w) in map {
            weights[f.index()] = w;
        }
        Self::from_weights(weights)
    }

    /// Equal weight on every feature.
    pub fn uniform() -> Self {
        let w = S::one() / S::from_count(FEATURE_COUNT as u64);
        Self::from_weights([w; FEATURE_COUNT]).expect("uniform weights are valid")
    }

    pub fn from_parts(
        weights: [S; FEATURE_COUNT],
        tiers: [Tier; FEATURE_COUNT],
        config: WeightConfig<S>,
        provenance: Provenance<S>,
    ) -> Result<Self> {
        if let Some(f) = FeatureId::ALL
            .into_iter()
            .find(|f| !(weights[f.index()] >= S::zero() && weights[f.index()].is_finite()))
        {
            return Err(Error::Document(format!("weight of {f} is negative or not finite")));
        }
        let total: S = weights.iter().copied().sum();
        if (total - S::one()).abs() > sum_tolerance() {
            return Err(Error::Document(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self {
            weights,
            tiers,
            config,
            provenance,
        })
    }

    pub fn weight(&self, feature: FeatureId) -> S {
        self.weights[feature.index()]
    }

    pub fn tier(&self, feature: FeatureId) -> Tier {
        self.tiers[feature.index()]
    }

    pub fn config(&self) -> &WeightConfig<S> {
        &self.config
    }

    pub fn provenance(&self) -> &Provenance<S> {
        &self.provenance
    }

    pub fn total(&self) -> S {
        self.weights.iter().copied().sum()
    }

    /// Features of the given tier in enumeration order.
    pub fn tier_members(&self, tier: Tier) -> Vec<FeatureId> {
        FeatureId::ALL.into_iter().filter(|&f| self.tier(f) == tier).collect()
    }
}

/// Derives the weight table from feature ratings with the default configuration.
pub fn derive_weights<S: Scalar>(ratings: &[RatingRecord]) -> Result<WeightTable<S>> {
    derive_weights_with(ratings, &WeightConfig::default())
}

pub fn derive_weights_with<S: Scalar>(ratings: &[RatingRecord], config: &WeightConfig<S>) -> Result<WeightTable<S>> {
    let mut histograms: BTreeMap<FeatureId, RatingCounts> = BTreeMap::new();
    for rec in ratings {
        if let RatedItem::Feature(f) = rec.item {
            ratings::tally(histograms.entry(f).or_default(), rec.rating);
        }
    }
    let count = |f: &FeatureId| histograms.get(f).map_or(0, |c| c.iter().sum::<u64>());
    let mut missing: Vec<FeatureId> = RATED_FEATURES
        .iter()
        .chain(histograms.keys())
        .filter(|f| count(f) < MIN_RATINGS)
        .copied()
        .collect();
    missing.sort();
    missing.dedup();
    if !missing.is_empty() {
        return Err(Error::IncompleteFeatures { missing });
    }

    let tiering = tier_features(&histograms, config);
    let mut means = tiering.means.clone();
    let mut tiers = tiering.tiers.clone();
    let mut proxies = BTreeMap::new();
    for (unrated, source) in PROXIES {
        if let std::collections::btree_map::Entry::Vacant(slot) = means.entry(unrated) {
            slot.insert(tiering.means[&source]);
            tiers.insert(unrated, tiering.tiers[&source]);
            proxies.insert(unrated, source);
        }
    }

    let weights_map = tiered_weights(&means, &tiers, config);
    let mut weights = [S::zero(); FEATURE_COUNT];
    let mut tier_arr = [Tier::High; FEATURE_COUNT];
    for f in FeatureId::ALL {
        weights[f.index()] = weights_map[&f];
        tier_arr[f.index()] = tiers[&f];
    }
    let provenance = Provenance {
        means: tiering.means,
        proxies,
        order: tiering.order,
        adjacent: tiering.adjacent,
        warnings: tiering.warnings,
    };
    WeightTable::from_parts(weights, tier_arr, *config, provenance)
}
