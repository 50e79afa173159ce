//! Explainability scores, ranking, and the five engine variants.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Concept, TrialCorpus};
use crate::error::{Error, Result};
use crate::explain::ExplanationSentence;
use crate::features::{extract_features, FeatureId, FeatureVector};
use crate::num::Scalar;
use crate::text::normalize_term;
use crate::weights::WeightTable;

/// Contribution of one feature: weight times normalized score.
pub fn feature_explainability<S: Scalar>(weight: S, score: S) -> S {
    weight * score
}

/// Query-independent, query-dependent, and total explainability of a trial.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explainability<S> {
    pub e_it: S,
    pub e_dtc: S,
    pub e_ct: S,
}

pub fn score_trial<S: Scalar>(fv: &FeatureVector<S>, weights: &WeightTable<S>) -> Explainability<S> {
    let group = |dependent: bool| {
        FeatureId::ALL
            .into_iter()
            .filter(|f| f.is_query_dependent() == dependent)
            .map(|f| feature_explainability(weights.weight(f), fv.score(f)))
            .fold(S::zero(), |acc, e| acc + e)
    };
    let e_it = group(false);
    let mut e_dtc = group(true);
    // Rounding can push the sum a few ulps past 1 when every feature saturates.
    if e_it + e_dtc > S::one() {
        e_dtc = S::one() - e_it;
    }
    Explainability {
        e_it,
        e_dtc,
        e_ct: e_it + e_dtc,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredTrial<S> {
    pub nct_id: String,
    pub cui: String,
    pub title: String,
    pub e_it: S,
    pub e_dtc: S,
    pub e_ct: S,
    pub features: FeatureVector<S>,
    pub explanations: Vec<ExplanationSentence<S>>,
}

fn by_score_then_id<S: Scalar>(a: &ScoredTrial<S>, b: &ScoredTrial<S>) -> Ordering {
    b.e_ct
        .partial_cmp(&a.e_ct)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.nct_id.cmp(&b.nct_id))
}

/// Scores one trial for a resolved concept and query.
pub fn score_one<S: Scalar>(
    trial: &crate::corpus::TrialRecord,
    concept: &Concept,
    query: &str,
    weights: &WeightTable<S>,
) -> Result<ScoredTrial<S>> {
    let features = extract_features(trial, concept, query)?;
    let Explainability { e_it, e_dtc, e_ct } = score_trial(&features, weights);
    Ok(ScoredTrial {
        nct_id: trial.nct_id.clone(),
        cui: concept.cui.clone(),
        title: trial.title.clone(),
        e_it,
        e_dtc,
        e_ct,
        features,
        explanations: Vec::new(),
    })
}

/// Trials linked to `concept`, highest explainability first, ties by nct_id.
pub fn rank_trials<S: Scalar>(
    corpus: &TrialCorpus,
    concept: &Concept,
    query: &str,
    weights: &WeightTable<S>,
) -> Result<Vec<ScoredTrial<S>>> {
    let mut scored = corpus
        .linked_to(&concept.cui)
        .map(|t| score_one(t, concept, query, weights))
        .collect::<Result<Vec<_>>>()?;
    scored.sort_by(by_score_then_id);
    Ok(scored)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineVariant {
    /// Ordered, with explanations.
    #[default]
    Amsterdam,
    /// Ordered, no explanations.
    Berlin,
    /// Ingestion order, with explanations.
    Copenhagen,
    /// Ingestion order, no explanations.
    Dublin,
    /// Alphabetical by title, no explanations.
    Edinburgh,
}

impl EngineVariant {
    pub const ALL: [EngineVariant; 5] = [
        EngineVariant::Amsterdam,
        EngineVariant::Berlin,
        EngineVariant::Copenhagen,
        EngineVariant::Dublin,
        EngineVariant::Edinburgh,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EngineVariant::Amsterdam => "amsterdam",
            EngineVariant::Berlin => "berlin",
            EngineVariant::Copenhagen => "copenhagen",
            EngineVariant::Dublin => "dublin",
            EngineVariant::Edinburgh => "edinburgh",
        }
    }

    pub fn shows_explanations(self) -> bool {
        matches!(self, EngineVariant::Amsterdam | EngineVariant::Copenhagen)
    }
}

impl fmt::Display for EngineVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EngineVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|v| v.as_str() == key)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?}")))
    }
}

/// Reorders and projects a ranked list according to an engine variant.
pub fn apply_variant<S: Scalar>(
    mut ranked: Vec<ScoredTrial<S>>,
    variant: EngineVariant,
    corpus_order: &HashMap<String, usize>,
) -> Vec<ScoredTrial<S>> {
    let position = |t: &ScoredTrial<S>| corpus_order.get(&t.nct_id).copied().unwrap_or(usize::MAX);
    match variant {
        EngineVariant::Amsterdam | EngineVariant::Berlin => {}
        EngineVariant::Copenhagen | EngineVariant::Dublin => {
            ranked.sort_by(|a, b| position(a).cmp(&position(b)).then_with(|| a.nct_id.cmp(&b.nct_id)))
        }
        EngineVariant::Edinburgh => ranked.sort_by_cached_key(|t| (normalize_term(&t.title), t.nct_id.clone())),
    }
    if !variant.shows_explanations() {
        for t in &mut ranked {
            t.explanations.clear();
        }
    }
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TrialRecord;
    use crate::features::FEATURE_COUNT;
    use std::collections::{BTreeMap, BTreeSet};

    fn stub(id: &str, title: &str, e_ct: f64) -> ScoredTrial<f64> {
        ScoredTrial {
            nct_id: id.into(),
            cui: "C".into(),
            title: title.into(),
            e_it: e_ct,
            e_dtc: 0.0,
            e_ct,
            features: FeatureVector::zero(),
            explanations: vec![ExplanationSentence {
                feature: FeatureId::StageAvailable,
                text: "x".into(),
                weight: 0.1,
            }],
        }
    }

    #[test]
    fn feature_contribution() {
        assert_eq!(feature_explainability(0.2, 0.0), 0.0);
        assert_eq!(feature_explainability(0.2, 1.0), 0.2);
        assert!((feature_explainability(0.15_f64, 2.0 / 3.0) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn score_identities() {
        let w = WeightTable::<f64>::uniform();
        let zero = score_trial(&FeatureVector::zero(), &w);
        assert_eq!((zero.e_it, zero.e_dtc, zero.e_ct), (0.0, 0.0, 0.0));

        let full = FeatureVector::<f64>::from_raw([10; FEATURE_COUNT]);
        let s = score_trial(&full, &w);
        assert!((s.e_it - 5.0 / 11.0).abs() < 1e-15);
        assert!((s.e_dtc - 6.0 / 11.0).abs() < 1e-15);
        assert!((s.e_ct - 1.0).abs() < 1e-12 && s.e_ct <= 1.0);
    }

    #[test]
    fn toy_weights() {
        let w = WeightTable::from_map(&BTreeMap::from([
            (FeatureId::QueryInTitle, 0.6),
            (FeatureId::StageAvailable, 0.4),
        ]))
        .unwrap();
        let e_dtc = feature_explainability(0.6_f64, 1.0);
        let e_it = feature_explainability(0.4, 0.5);
        assert_eq!((e_dtc, e_it), (0.6, 0.2));
        assert!((e_it + e_dtc - 0.8).abs() < 1e-15);

        let mut fv = FeatureVector::<f64>::zero();
        fv.set_raw(FeatureId::QueryInTitle, 1);
        fv.set_raw(FeatureId::StageAvailable, 1);
        let s = score_trial(&fv, &w);
        assert_eq!((s.e_dtc, s.e_it, s.e_ct), (0.6, 0.4, 1.0));
    }

    #[test]
    fn ranking_ties_by_id() {
        let concept = Concept {
            cui: "C1".into(),
            preferred_term: "Lyme disease".into(),
            synonyms: vec![],
            parent_cuis: vec![],
        };
        let trial = |id: &str, pubs: u64, linked: bool| TrialRecord {
            nct_id: id.into(),
            title: "t".into(),
            brief_summary: String::new(),
            detailed_description: String::new(),
            stage: None,
            overall_status: None,
            primary_purpose: None,
            condition_cuis: BTreeSet::from([if linked { "C1" } else { "C2" }.to_string()]),
            publication_count: pubs,
        };
        let (corpus, _) = TrialCorpus::from_records([
            trial("NCT004", 1, true),
            trial("NCT002", 3, true),
            trial("NCT003", 5, true),
            trial("NCT001", 3, true),
            trial("NCT009", 5, false),
        ]);
        let w = WeightTable::from_map(&BTreeMap::from([(FeatureId::PublicationCount, 1.0)])).unwrap();
        let ranked = rank_trials(&corpus, &concept, "lyme disease", &w).unwrap();
        let ids: Vec<_> = ranked.iter().map(|t| t.nct_id.as_str()).collect();
        assert_eq!(ids, vec!["NCT003", "NCT001", "NCT002", "NCT004"]);

        let other = Concept {
            cui: "C3".into(),
            ..concept
        };
        assert!(rank_trials(&corpus, &other, "lyme disease", &w).unwrap().is_empty());
    }

    #[test]
    fn variants() {
        let ranked = vec![
            stub("NCT3", "Zeta trial", 0.9),
            stub("NCT1", "Alpha trial", 0.5),
            stub("NCT2", "mid trial", 0.2),
        ];
        let order = HashMap::from([("NCT2".into(), 0), ("NCT3".into(), 1), ("NCT1".into(), 2)]);
        let ids = |v: &[ScoredTrial<f64>]| v.iter().map(|t| t.nct_id.clone()).collect::<Vec<_>>();

        assert_eq!(apply_variant(ranked.clone(), EngineVariant::Amsterdam, &order), ranked);
        let berlin = apply_variant(ranked.clone(), EngineVariant::Berlin, &order);
        assert_eq!(ids(&berlin), ids(&ranked));
        assert!(berlin.iter().all(|t| t.explanations.is_empty()));
        let cph = apply_variant(ranked.clone(), EngineVariant::Copenhagen, &order);
        assert_eq!(ids(&cph), vec!["NCT2", "NCT3", "NCT1"]);
        assert!(cph.iter().all(|t| !t.explanations.is_empty()));
        let dub = apply_variant(ranked.clone(), EngineVariant::Dublin, &order);
        assert_eq!(ids(&dub), vec!["NCT2", "NCT3", "NCT1"]);
        assert!(dub.iter().all(|t| t.explanations.is_empty()));
        let edi = apply_variant(ranked, EngineVariant::Edinburgh, &order);
        let titles: Vec<_> = edi.iter().map(|t| t.title.as_str()).collect();
        assert_eq!(titles, vec!["Alpha trial", "mid trial", "Zeta trial"]);
    }

    #[test]
    fn variant_names() {
        assert_eq!("Berlin".parse::<EngineVariant>().unwrap(), EngineVariant::Berlin);
        assert!("paris".parse::<EngineVariant>().is_err());
    }
}
