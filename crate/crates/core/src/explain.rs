//! Explanation sentences rendered from a template catalog.
//!
//! At most `max_sentences` sentences are shown per result, only for features
//! that pass their display threshold, heaviest weight first.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureId, FeatureKind, FeatureVector};
use crate::num::Scalar;
use crate::weights::{DiseaseNaming, FormulationPrefs, NumericStyle, VerbStyle, WeightTable};

const DEFAULT_CATALOG: &str = include_str!("../data/templates.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplanationSentence<S> {
    pub feature: FeatureId,
    pub text: String,
    pub weight: S,
}

/// Display thresholds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub max_sentences: usize,
    /// Mentions needed before a mention-count feature is explained.
    pub min_mentions: u64,
    /// Mentions needed for the preferred-term-in-description sentence, whose
    /// wording says "multiple times".
    pub min_repeated_mentions: u64,
    /// Publications needed for the "multiple publications" sentence.
    pub min_publications: u64,
}

impl Default for ExplainConfig {
    fn default() -> Self {
        Self {
            max_sentences: 3,
            min_mentions: 1,
            min_repeated_mentions: 2,
            min_publications: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub factual: String,
    pub action: String,
    #[serde(default)]
    pub factual_numeric: Option<String>,
    #[serde(default)]
    pub action_numeric: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplateCatalog {
    templates: BTreeMap<FeatureId, Template>,
}

const PLACEHOLDERS: [&str; 4] = ["{condition}", "{Condition}", "{count}", "{times}"];

fn check_template(feature: FeatureId, key: &str, text: &str, numeric: bool) -> Result<()> {
    let mut rest = text.to_string();
    for p in PLACEHOLDERS {
        if !numeric && (p == "{count}" || p == "{times}") && rest.contains(p) {
            return Err(Error::Catalog(format!(
                "{feature}.{key}: {p} only allowed in numeric variants"
            )));
        }
        rest = rest.replace(p, "");
    }
    if rest.contains('{') || rest.contains('}') {
        return Err(Error::Catalog(format!(
            "{feature}.{key}: unknown placeholder in {text:?}"
        )));
    }
    if !numeric && rest.chars().any(|c| c.is_ascii_digit()) {
        return Err(Error::Catalog(format!(
            "{feature}.{key}: digits in a non-numeric template"
        )));
    }
    if text.trim().is_empty() || text.contains('\n') {
        return Err(Error::Catalog(format!(
            "{feature}.{key}: template must be a non-empty single line"
        )));
    }
    Ok(())
}

impl TemplateCatalog {
    pub fn parse(text: &str) -> Result<Self> {
        let raw: BTreeMap<String, Template> = toml::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
        let mut templates = BTreeMap::new();
        for (key, t) in raw {
            let feature: FeatureId = key
                .parse()
                .map_err(|_| Error::Catalog(format!("unknown feature {key:?}")))?;
            check_template(feature, "factual", &t.factual, false)?;
            check_template(feature, "action", &t.action, false)?;
            if let Some(n) = &t.factual_numeric {
                check_template(feature, "factual_numeric", n, true)?;
            }
            if let Some(n) = &t.action_numeric {
                check_template(feature, "action_numeric", n, true)?;
            }
            templates.insert(feature, t);
        }
        let missing: Vec<&str> = FeatureId::ALL
            .iter()
            .filter(|f| !templates.contains_key(f))
            .map(|f| f.as_str())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Catalog(format!("no template for {}", missing.join(", "))));
        }
        Ok(Self { templates })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Text of the shipped catalog.
    pub fn default_source() -> &'static str {
        DEFAULT_CATALOG
    }

    pub fn template(&self, feature: FeatureId) -> &Template {
        &self.templates[&feature]
    }
}

impl Default for TemplateCatalog {
    fn default() -> Self {
        Self::parse(DEFAULT_CATALOG).expect("shipped catalog is valid")
    }
}

fn passes_threshold<S: Scalar>(fv: &FeatureVector<S>, feature: FeatureId, cfg: &ExplainConfig) -> bool {
    let raw = fv.raw(feature);
    match feature {
        FeatureId::PublicationCount => raw >= cfg.min_publications,
        FeatureId::PreferredTermInDetailedDescription => raw >= cfg.min_repeated_mentions.max(1),
        f if f.is_mention_count() => raw >= cfg.min_mentions.max(1),
        f => {
            debug_assert_eq!(f.kind(), FeatureKind::Binary);
            fv.score(f) == S::one()
        }
    }
}

/// Features whose sentence may be shown, in enumeration order.
///
/// A recruiting trial never also gets the plain status-availability sentence.
pub fn eligible_features<S: Scalar>(fv: &FeatureVector<S>, cfg: &ExplainConfig) -> Vec<FeatureId> {
    let recruiting = passes_threshold(fv, FeatureId::IsRecruiting, cfg);
    FeatureId::ALL
        .into_iter()
        .filter(|&f| passes_threshold(fv, f, cfg))
        .filter(|&f| !(recruiting && f == FeatureId::OverallStatusAvailable))
        .collect()
}

pub fn is_eligible<S: Scalar>(fv: &FeatureVector<S>, feature: FeatureId, cfg: &ExplainConfig) -> bool {
    eligible_features(fv, cfg).contains(&feature)
}

/// Top `k` eligible features by weight, ties in enumeration order.
pub fn select_explanations<S: Scalar>(
    fv: &FeatureVector<S>,
    weights: &WeightTable<S>,
    k: usize,
    cfg: &ExplainConfig,
) -> Vec<FeatureId> {
    let mut eligible = eligible_features(fv, cfg);
    eligible.sort_by(|a, b| {
        weights
            .weight(*b)
            .partial_cmp(&weights.weight(*a))
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(b))
    });
    eligible.truncate(k);
    eligible
}

fn times(n: u64) -> String {
    if n == 1 {
        "once".to_string()
    } else {
        format!("{n} times")
    }
}

/// Instantiates the template of `feature` under the given phrasing preferences.
pub fn render_sentence<S: Scalar>(
    catalog: &TemplateCatalog,
    feature: FeatureId,
    prefs: &FormulationPrefs,
    condition_name: &str,
    fv: &FeatureVector<S>,
    cfg: &ExplainConfig,
) -> Result<String> {
    if !is_eligible(fv, feature, cfg) {
        return Err(Error::Contract(format!("{feature} is not eligible for explanation")));
    }
    let t = catalog.template(feature);
    let numeric = prefs.numeric_style == NumericStyle::Numeric;
    let template = match (prefs.verb_style, numeric) {
        (VerbStyle::Factual, true) => t.factual_numeric.as_ref().unwrap_or(&t.factual),
        (VerbStyle::Factual, false) => &t.factual,
        (VerbStyle::Action, true) => t.action_numeric.as_ref().unwrap_or(&t.action),
        (VerbStyle::Action, false) => &t.action,
    };
    let name = condition_name.split_whitespace().collect::<Vec<_>>().join(" ");
    let (lower, upper) = match prefs.disease_naming {
        DiseaseNaming::Specific if !name.is_empty() => (name.clone(), name),
        _ => ("the condition".to_string(), "The condition".to_string()),
    };
    let raw = fv.raw(feature);
    let text = template
        .replace("{condition}", &lower)
        .replace("{Condition}", &upper)
        .replace("{count}", &raw.to_string())
        .replace("{times}", &times(raw));
    Ok(text.trim().to_string())
}

/// Selects and renders the explanation sentences for one result.
pub fn explain<S: Scalar>(
    fv: &FeatureVector<S>,
    weights: &WeightTable<S>,
    prefs: &FormulationPrefs,
    catalog: &TemplateCatalog,
    condition_name: &str,
    cfg: &ExplainConfig,
) -> Vec<ExplanationSentence<S>> {
    select_explanations(fv, weights, cfg.max_sentences, cfg)
        .into_iter()
        .map(|feature| ExplanationSentence {
            feature,
            text: render_sentence(catalog, feature, prefs, condition_name, fv, cfg)
                .expect("selected features are eligible"),
            weight: weights.weight(feature),
        })
        .collect()
}
