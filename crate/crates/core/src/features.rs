//! The eleven explainability features and their extraction from a trial.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{terms_of, Concept, TrialRecord};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::text::normalize_term;

/// Mention counts saturate at this many occurrences.
pub const MENTION_CAP: u64 = 3;
/// Publication counts saturate at this many publications.
pub const PUBLICATION_CAP: u64 = 5;

pub const FEATURE_COUNT: usize = 11;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureId {
    QueryInTitle,
    PreferredTermInTitle,
    QueryInSummary,
    PreferredTermInSummary,
    QueryInDetailedDescription,
    PreferredTermInDetailedDescription,
    StageAvailable,
    OverallStatusAvailable,
    IsRecruiting,
    PrimaryPurposeAvailable,
    PublicationCount,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Binary,
    Numeric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependency {
    QueryDependent,
    QueryIndependent,
}

impl FeatureId {
    /// Every feature, in the fixed enumeration order used for tie-breaks.
    pub const ALL: [FeatureId; FEATURE_COUNT] = [
        FeatureId::QueryInTitle,
        FeatureId::PreferredTermInTitle,
        FeatureId::QueryInSummary,
        FeatureId::PreferredTermInSummary,
        FeatureId::QueryInDetailedDescription,
        FeatureId::PreferredTermInDetailedDescription,
        FeatureId::StageAvailable,
        FeatureId::OverallStatusAvailable,
        FeatureId::IsRecruiting,
        FeatureId::PrimaryPurposeAvailable,
        FeatureId::PublicationCount,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn kind(self) -> FeatureKind {
        use FeatureId::*;
        match self {
            QueryInTitle
            | PreferredTermInTitle
            | StageAvailable
            | OverallStatusAvailable
            | IsRecruiting
            | PrimaryPurposeAvailable => FeatureKind::Binary,
            QueryInSummary
            | PreferredTermInSummary
            | QueryInDetailedDescription
            | PreferredTermInDetailedDescription
            | PublicationCount => FeatureKind::Numeric,
        }
    }

    pub fn dependency(self) -> Dependency {
        use FeatureId::*;
        match self {
            QueryInTitle
            | PreferredTermInTitle
            | QueryInSummary
            | PreferredTermInSummary
            | QueryInDetailedDescription
            | PreferredTermInDetailedDescription => Dependency::QueryDependent,
            StageAvailable | OverallStatusAvailable | IsRecruiting | PrimaryPurposeAvailable | PublicationCount => {
                Dependency::QueryIndependent
            }
        }
    }

    pub fn is_query_dependent(self) -> bool {
        self.dependency() == Dependency::QueryDependent
    }

    /// Numeric features that count term occurrences in text.
    pub fn is_mention_count(self) -> bool {
        self.kind() == FeatureKind::Numeric && self != FeatureId::PublicationCount
    }

    pub fn is_preferred_term(self) -> bool {
        matches!(
            self,
            FeatureId::PreferredTermInTitle
                | FeatureId::PreferredTermInSummary
                | FeatureId::PreferredTermInDetailedDescription
        )
    }

    pub fn as_str(self) -> &'static str {
        use FeatureId::*;
        match self {
            QueryInTitle => "query_in_title",
            PreferredTermInTitle => "preferred_term_in_title",
            QueryInSummary => "query_in_summary",
            PreferredTermInSummary => "preferred_term_in_summary",
            QueryInDetailedDescription => "query_in_detailed_description",
            PreferredTermInDetailedDescription => "preferred_term_in_detailed_description",
            StageAvailable => "stage_available",
            OverallStatusAvailable => "overall_status_available",
            IsRecruiting => "is_recruiting",
            PrimaryPurposeAvailable => "primary_purpose_available",
            PublicationCount => "publication_count",
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FeatureId::ALL
            .into_iter()
            .find(|f| f.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown feature id {s:?}")))
    }
}

/// Maps a raw value onto [0, 1]. Binary features pass through; numeric
/// features rise linearly up to their cap and saturate.
pub fn normalize<S: Scalar>(feature: FeatureId, raw: u64) -> S {
    let cap = match feature.kind() {
        FeatureKind::Binary => 1,
        FeatureKind::Numeric if feature == FeatureId::PublicationCount => PUBLICATION_CAP,
        FeatureKind::Numeric => MENTION_CAP,
    };
    S::from_count(raw.min(cap)) / S::from_count(cap)
}

/// Raw values and normalized scores for all eleven features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<S> {
    raw: [u64; FEATURE_COUNT],
    score: [S; FEATURE_COUNT],
}

impl<S: Scalar> FeatureVector<S> {
    pub fn zero() -> Self {
        Self {
            raw: [0; FEATURE_COUNT],
            score: [S::zero(); FEATURE_COUNT],
        }
    }

    /// Builds a vector from raw values, normalizing each one.
    pub fn from_raw(raw: [u64; FEATURE_COUNT]) -> Self {
        let mut fv = Self::zero();
        for f in FeatureId::ALL {
            fv.set_raw(f, raw[f.index()]);
        }
        fv
    }

    pub fn set_raw(&mut self, feature: FeatureId, raw: u64) {
        let raw = match feature.kind() {
            FeatureKind::Binary => raw.min(1),
            FeatureKind::Numeric => raw,
        };
        self.raw[feature.index()] = raw;
        self.score[feature.index()] = normalize(feature, raw);
    }

    pub fn raw(&self, feature: FeatureId) -> u64 {
        self.raw[feature.index()]
    }

    pub fn score(&self, feature: FeatureId) -> S {
        self.score[feature.index()]
    }

    pub fn iter(&self) -> impl Iterator<Item = (FeatureId, u64, S)> + '_ {
        FeatureId::ALL.into_iter().map(move |f| (f, self.raw(f), self.score(f)))
    }
}

/// Counts non-overlapping, case-insensitive, whole-word occurrences of `term`
/// in `text`. Any non-alphanumeric character is a word boundary.
pub fn count_mentions(text: &str, term: &str) -> Result<u64> {
    let needle = normalize_term(term);
    if needle.is_empty() {
        return Err(Error::InvalidArgument("empty term".into()));
    }
    let hay = normalize_term(text);
    let bounded = |c: Option<char>| c.is_none_or(|c| !c.is_alphanumeric());

    let mut count = 0;
    let mut pos = 0;
    while let Some(off) = hay[pos..].find(&needle) {
        let start = pos + off;
        let end = start + needle.len();
        if bounded(hay[..start].chars().next_back()) && bounded(hay[end..].chars().next()) {
            count += 1;
            pos = end;
        } else {
            pos = start + hay[start..].chars().next().map_or(1, char::len_utf8);
        }
    }
    Ok(count)
}

fn present(field: &Option<String>) -> u64 {
    field.as_deref().is_some_and(|s| !s.trim().is_empty()) as u64
}

/// Computes the feature vector of `trial` for a query that resolved to `concept`.
///
/// Preferred-term features are zeroed when the query is the preferred term
/// itself, so the same text evidence is never counted twice.
pub fn extract_features<S: Scalar>(trial: &TrialRecord, concept: &Concept, query: &str) -> Result<FeatureVector<S>> {
    if !trial.is_linked_to(&concept.cui) {
        return Err(Error::Contract(format!(
            "trial {} is not linked to {}",
            trial.nct_id, concept.cui
        )));
    }
    let query_key = normalize_term(query);
    if !terms_of(concept).iter().any(|t| normalize_term(t) == query_key) {
        return Err(Error::Contract(format!(
            "query {query:?} does not resolve to {}",
            concept.cui
        )));
    }
    let suppress_preferred = query_key == normalize_term(&concept.preferred_term);

    use FeatureId::*;
    let mut fv = FeatureVector::zero();
    let texts = [
        (&trial.title, QueryInTitle, PreferredTermInTitle),
        (&trial.brief_summary, QueryInSummary, PreferredTermInSummary),
        (
            &trial.detailed_description,
            QueryInDetailedDescription,
            PreferredTermInDetailedDescription,
        ),
    ];
    for (text, query_feature, preferred_feature) in texts {
        fv.set_raw(query_feature, count_mentions(text, query)?);
        if !suppress_preferred {
            fv.set_raw(preferred_feature, count_mentions(text, &concept.preferred_term)?);
        }
    }

    fv.set_raw(StageAvailable, present(&trial.stage));
    fv.set_raw(OverallStatusAvailable, present(&trial.overall_status));
    fv.set_raw(PrimaryPurposeAvailable, present(&trial.primary_purpose));
    let recruiting = trial
        .overall_status
        .as_deref()
        .is_some_and(|s| normalize_term(s) == "recruiting");
    fv.set_raw(IsRecruiting, recruiting as u64);
    fv.set_raw(PublicationCount, trial.publication_count);
    Ok(fv)
}
