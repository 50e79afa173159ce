//! End-to-end search over a loaded index.

use std::collections::HashMap;

use serde::Serialize;

use crate::corpus::{ConceptGraph, TrialCorpus};
use crate::error::{Error, Result};
use crate::explain::{explain, ExplainConfig, TemplateCatalog};
use crate::num::Scalar;
use crate::scoring::{apply_variant, rank_trials, score_one, EngineVariant, ScoredTrial};
use crate::weights::{FormulationPrefs, WeightTable};

/// Result page size used when the caller does not ask for one.
pub const DEFAULT_LIMIT: usize = 10;

/// Immutable search data: trials, concepts, and sentence templates.
#[derive(Clone, Debug)]
pub struct Index {
    corpus: TrialCorpus,
    graph: ConceptGraph,
    catalog: TemplateCatalog,
    explain: ExplainConfig,
    order: HashMap<String, usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome<S> {
    pub query: String,
    pub cui: String,
    pub variant: EngineVariant,
    /// Trials linked to the concept, before the limit is applied.
    pub total: usize,
    pub results: Vec<ScoredTrial<S>>,
}

impl Index {
    pub fn new(corpus: TrialCorpus, graph: ConceptGraph, catalog: TemplateCatalog) -> Self {
        let order = corpus.ingestion_order();
        Self {
            corpus,
            graph,
            catalog,
            explain: ExplainConfig::default(),
            order,
        }
    }

    pub fn with_explain_config(mut self, cfg: ExplainConfig) -> Self {
        self.explain = cfg;
        self
    }

    pub fn corpus(&self) -> &TrialCorpus {
        &self.corpus
    }

    pub fn graph(&self) -> &ConceptGraph {
        &self.graph
    }

    pub fn catalog(&self) -> &TemplateCatalog {
        &self.catalog
    }

    pub fn explain_config(&self) -> &ExplainConfig {
        &self.explain
    }

    pub fn ingestion_order(&self) -> &HashMap<String, usize> {
        &self.order
    }

    /// Resolves the query, ranks linked trials, keeps the top `limit`,
    /// explains them, then applies the variant's ordering and projection.
    pub fn search<S: Scalar>(
        &self,
        weights: &WeightTable<S>,
        prefs: &FormulationPrefs,
        query: &str,
        variant: EngineVariant,
        limit: usize,
    ) -> Result<SearchOutcome<S>> {
        let concept = self.graph.resolve_query(query)?;
        let mut ranked = rank_trials(&self.corpus, concept, query, weights)?;
        let total = ranked.len();
        ranked.truncate(limit);
        let name = query.trim();
        for t in &mut ranked {
            t.explanations = explain(&t.features, weights, prefs, &self.catalog, name, &self.explain);
        }
        Ok(SearchOutcome {
            query: name.to_string(),
            cui: concept.cui.clone(),
            variant,
            total,
            results: apply_variant(ranked, variant, &self.order),
        })
    }

    /// Full scoring breakdown of one trial for a query.
    pub fn trial<S: Scalar>(
        &self,
        weights: &WeightTable<S>,
        prefs: &FormulationPrefs,
        nct_id: &str,
        query: &str,
    ) -> Result<ScoredTrial<S>> {
        let concept = self.graph.resolve_query(query)?;
        let trial = self
            .corpus
            .get(nct_id)
            .ok_or_else(|| Error::UnknownTrial(nct_id.to_string()))?;
        if !trial.is_linked_to(&concept.cui) {
            return Err(Error::TrialNotLinked {
                nct_id: nct_id.to_string(),
                cui: concept.cui.clone(),
            });
        }
        let mut scored = score_one(trial, concept, query, weights)?;
        scored.explanations = explain(
            &scored.features,
            weights,
            prefs,
            &self.catalog,
            query.trim(),
            &self.explain,
        );
        Ok(scored)
    }
}
