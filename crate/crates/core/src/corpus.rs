//! Trial corpus, condition concept graph, and query resolution.
//!
//! Both input files are newline-delimited JSON. Loading never aborts on a bad
//! record: malformed lines are skipped with their line number, duplicates are
//! rejected with a warning, and the caller gets a [`LoadReport`] alongside the
//! loaded data.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::normalize_term;

const MAX_SUGGESTIONS: usize = 5;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub nct_id: String,
    #[serde(default)]
    pub title: String,
    #[serde(default)]
    pub brief_summary: String,
    #[serde(default)]
    pub detailed_description: String,
    #[serde(default)]
    pub stage: Option<String>,
    #[serde(default)]
    pub overall_status: Option<String>,
    #[serde(default)]
    pub primary_purpose: Option<String>,
    #[serde(default)]
    pub condition_cuis: BTreeSet<String>,
    #[serde(default)]
    pub publication_count: u64,
}

impl TrialRecord {
    pub fn is_linked_to(&self, cui: &str) -> bool {
        self.condition_cuis.contains(cui)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub cui: String,
    pub preferred_term: String,
    #[serde(default)]
    pub synonyms: Vec<String>,
    #[serde(default)]
    pub parent_cuis: Vec<String>,
}

/// Preferred term followed by synonyms, deduplicated on the normalized form.
/// The first spelling of each term is kept.
pub fn terms_of(concept: &Concept) -> Vec<String> {
    let mut seen = BTreeSet::new();
    std::iter::once(&concept.preferred_term)
        .chain(&concept.synonyms)
        .filter(|t| seen.insert(normalize_term(t)))
        .cloned()
        .collect()
}

/// A line that could not be loaded.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SkippedLine {
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub skipped: Vec<SkippedLine>,
    pub warnings: Vec<String>,
}

impl LoadReport {
    fn skip(&mut self, line: usize, reason: impl Into<String>) {
        self.skipped.push(SkippedLine {
            line,
            reason: reason.into(),
        });
    }
}

/// Trials in ingestion order, unique by `nct_id`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrialCorpus {
    trials: Vec<TrialRecord>,
    by_id: HashMap<String, usize>,
}

impl TrialCorpus {
    /// Builds a corpus, rejecting later duplicates. Returns the ids that were rejected.
    pub fn from_records(records: impl IntoIterator<Item = TrialRecord>) -> (Self, Vec<String>) {
        let mut corpus = Self::default();
        let mut rejected = Vec::new();
        for rec in records {
            if let Some(rec) = corpus.push(rec) {
                rejected.push(rec.nct_id);
            }
        }
        (corpus, rejected)
    }

    /// Appends the record unless its id is taken; hands it back if so.
    fn push(&mut self, rec: TrialRecord) -> Option<TrialRecord> {
        if self.by_id.contains_key(&rec.nct_id) {
            return Some(rec);
        }
        self.by_id.insert(rec.nct_id.clone(), self.trials.len());
        self.trials.push(rec);
        None
    }

    pub fn len(&self) -> usize {
        self.trials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trials.is_empty()
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn get(&self, nct_id: &str) -> Option<&TrialRecord> {
        self.by_id.get(nct_id).map(|&i| &self.trials[i])
    }

    /// Ingestion position of a trial.
    pub fn position(&self, nct_id: &str) -> Option<usize> {
        self.by_id.get(nct_id).copied()
    }

    /// Map from nct_id to ingestion position.
    pub fn ingestion_order(&self) -> HashMap<String, usize> {
        self.by_id.clone()
    }

    pub fn linked_to<'a>(&'a self, cui: &'a str) -> impl Iterator<Item = &'a TrialRecord> + 'a {
        self.trials.iter().filter(move |t| t.is_linked_to(cui))
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn parse_trials(content: &str) -> (TrialCorpus, LoadReport) {
    let mut report = LoadReport::default();
    let mut corpus = TrialCorpus::default();
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = match serde_json::from_str(line) {
            Ok(rec) => rec,
            Err(e) => {
                report.skip(lineno, e.to_string());
                continue;
            }
        };
        if rec.nct_id.trim().is_empty() {
            report.skip(lineno, "empty nct_id");
            continue;
        }
        if rec.condition_cuis.is_empty() {
            report.warnings.push(format!(
                "line {lineno}: {} has no condition_cuis and is not indexable",
                rec.nct_id
            ));
        }
        if let Some(rec) = corpus.push(rec) {
            report
                .warnings
                .push(format!("line {lineno}: duplicate nct_id {} rejected", rec.nct_id));
        }
    }
    (corpus, report)
}

pub fn load_trials(path: impl AsRef<Path>) -> Result<(TrialCorpus, LoadReport)> {
    let content = read_to_string(path.as_ref())?;
    Ok(parse_trials(&content))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ConceptGraph {
    concepts: BTreeMap<String, Concept>,
    term_index: BTreeMap<String, String>,
}

impl ConceptGraph {
    /// Builds the graph in input order. Term conflicts keep the first claimant;
    /// a concept whose preferred term is already claimed is dropped entirely.
    pub fn build(input: impl IntoIterator<Item = Concept>, report: &mut LoadReport) -> Self {
        let mut graph = Self::default();
        for mut concept in input {
            if graph.concepts.contains_key(&concept.cui) {
                report.warnings.push(format!("duplicate cui {} rejected", concept.cui));
                continue;
            }
            let preferred = normalize_term(&concept.preferred_term);
            if let Some(owner) = graph.term_index.get(&preferred) {
                report.warnings.push(format!(
                    "concept {} dropped: preferred term {:?} already maps to {owner}",
                    concept.cui, concept.preferred_term
                ));
                continue;
            }
            graph.term_index.insert(preferred.clone(), concept.cui.clone());

            let mut synonyms = Vec::with_capacity(concept.synonyms.len());
            for syn in std::mem::take(&mut concept.synonyms) {
                let key = normalize_term(&syn);
                if key.is_empty() {
                    report
                        .warnings
                        .push(format!("concept {}: blank synonym dropped", concept.cui));
                    continue;
                }
                match graph.term_index.get(&key) {
                    Some(owner) if *owner == concept.cui => {
                        if key == preferred {
                            report.warnings.push(format!(
                                "concept {}: synonym {syn:?} repeats the preferred term",
                                concept.cui
                            ));
                        }
                    }
                    Some(owner) => report.warnings.push(format!(
                        "concept {}: term {syn:?} already maps to {owner}; mapping dropped",
                        concept.cui
                    )),
                    None => {
                        graph.term_index.insert(key, concept.cui.clone());
                        synonyms.push(syn);
                    }
                }
            }
            concept.synonyms = synonyms;
            graph.concepts.insert(concept.cui.clone(), concept);
        }

        let known: BTreeSet<String> = graph.concepts.keys().cloned().collect();
        for concept in graph.concepts.values_mut() {
            let cui = concept.cui.clone();
            concept.parent_cuis.retain(|p| {
                let ok = known.contains(p);
                if !ok {
                    report
                        .warnings
                        .push(format!("concept {cui}: dangling parent {p} dropped"));
                }
                ok
            });
        }
        graph
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn get(&self, cui: &str) -> Option<&Concept> {
        self.concepts.get(cui)
    }

    pub fn concepts(&self) -> impl Iterator<Item = &Concept> {
        self.concepts.values()
    }

    pub fn term_index(&self) -> &BTreeMap<String, String> {
        &self.term_index
    }

    /// Exact whole-string match of the normalized query against preferred terms and synonyms.
    pub fn resolve_query(&self, query: &str) -> Result<&Concept> {
        let key = normalize_term(query);
        if key.is_empty() {
            return Err(Error::InvalidQuery("query is empty".into()));
        }
        match self.term_index.get(&key) {
            Some(cui) => Ok(&self.concepts[cui]),
            None => Err(Error::UnknownCondition {
                query: query.trim().to_string(),
                suggestions: self.suggest(&key),
            }),
        }
    }

    fn display_term(&self, key: &str, cui: &str) -> String {
        self.concepts
            .get(cui)
            .and_then(|c| terms_of(c).into_iter().find(|t| normalize_term(t) == key))
            .unwrap_or_else(|| key.to_string())
    }

    fn suggest(&self, key: &str) -> Vec<String> {
        let mut scored: Vec<(usize, &String, &String)> = self
            .term_index
            .iter()
            .map(|(term, cui)| (shared_prefix(term, key), term, cui))
            .filter(|(n, _, _)| *n > 0)
            .collect();
        scored.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        scored
            .into_iter()
            .take(MAX_SUGGESTIONS)
            .map(|(_, term, cui)| self.display_term(term, cui))
            .collect()
    }
}

fn shared_prefix(a: &str, b: &str) -> usize {
    a.chars().zip(b.chars()).take_while(|(x, y)| x == y).count()
}

pub fn parse_concepts(content: &str) -> (ConceptGraph, LoadReport) {
    let mut report = LoadReport::default();
    let mut parsed = Vec::new();
    for (idx, line) in content.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<Concept>(line) {
            Ok(c) if c.cui.trim().is_empty() => report.skip(lineno, "empty cui"),
            Ok(c) if c.preferred_term.trim().is_empty() => report.skip(lineno, "empty preferred_term"),
            Ok(c) => parsed.push(c),
            Err(e) => report.skip(lineno, e.to_string()),
        }
    }
    let graph = ConceptGraph::build(parsed, &mut report);
    (graph, report)
}

pub fn load_concepts(path: impl AsRef<Path>) -> Result<(ConceptGraph, LoadReport)> {
    let content = read_to_string(path.as_ref())?;
    Ok(parse_concepts(&content))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_line(id: &str) -> String {
        format!(
            r#"{{"nct_id":"{id}","title":"t","brief_summary":"s","detailed_description":"d","condition_cuis":["CX0001"]}}"#
        )
    }

    fn hiv() -> Concept {
        Concept {
            cui: "CX0001".into(),
            preferred_term: "HIV".into(),
            synonyms: vec!["human immunodeficiency virus".into()],
            parent_cuis: vec![],
        }
    }

    fn graph_of(concepts: Vec<Concept>) -> (ConceptGraph, LoadReport) {
        let mut report = LoadReport::default();
        let g = ConceptGraph::build(concepts, &mut report);
        (g, report)
    }

    #[test]
    fn three_distinct_trials() {
        let text = [trial_line("NCT1"), trial_line("NCT2"), trial_line("NCT3")].join("\n");
        let (corpus, report) = parse_trials(&text);
        assert_eq!(corpus.len(), 3);
        assert!(report.skipped.is_empty());
    }

    #[test]
    fn duplicate_id_rejects_later_record() {
        let mut lines = vec![trial_line("NCT1"), trial_line("NCT2"), trial_line("NCT3")];
        lines.push(r#"{"nct_id":"NCT2","title":"other","condition_cuis":["CX0001"]}"#.into());
        let (corpus, report) = parse_trials(&lines.join("\n"));
        assert_eq!(corpus.len(), 3);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(corpus.get("NCT2").unwrap().title, "t");
    }

    #[test]
    fn malformed_lines_skipped_with_line_number() {
        let text = format!(
            "{}\nnot json\n{{\"title\":\"no id\"}}\n{{\"nct_id\":\"NCT9\",\"publication_count\":-1}}\n{}",
            trial_line("NCT1"),
            trial_line("NCT2")
        );
        let (corpus, report) = parse_trials(&text);
        assert_eq!(corpus.len(), 2);
        let lines: Vec<usize> = report.skipped.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![2, 3, 4]);
    }

    #[test]
    fn missing_optional_fields_default() {
        let (corpus, _) = parse_trials(r#"{"nct_id":"NCT1","title":"x","condition_cuis":["C"]}"#);
        let t = corpus.get("NCT1").unwrap();
        assert_eq!(t.detailed_description, "");
        assert_eq!(t.publication_count, 0);
        assert!(t.stage.is_none());
    }

    #[test]
    fn unreadable_file_is_fatal() {
        let err = load_trials("/nonexistent/trials.jsonl").unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
        assert!(err.to_string().contains("/nonexistent/trials.jsonl"));
    }

    #[test]
    fn term_index_covers_preferred_and_synonyms() {
        let (g, report) = graph_of(vec![hiv()]);
        assert_eq!(g.term_index().len(), 2);
        assert!(g.term_index().values().all(|c| c == "CX0001"));
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn conflicting_synonym_first_wins() {
        let a = Concept {
            cui: "C1".into(),
            preferred_term: "Neoplasm".into(),
            synonyms: vec!["cancer".into()],
            parent_cuis: vec![],
        };
        let b = Concept {
            cui: "C2".into(),
            preferred_term: "Malignancy".into(),
            synonyms: vec!["Cancer".into()],
            parent_cuis: vec![],
        };
        let (g, report) = graph_of(vec![a, b]);
        assert_eq!(report.warnings.len(), 1);
        assert_eq!(g.term_index()["cancer"], "C1");
        assert!(g.get("C2").unwrap().synonyms.is_empty());
    }

    #[test]
    fn dangling_parent_dropped() {
        let mut c = hiv();
        c.parent_cuis = vec!["CX9999".into()];
        let (g, report) = graph_of(vec![c]);
        assert!(g.get("CX0001").unwrap().parent_cuis.is_empty());
        assert_eq!(report.warnings.len(), 1);
    }

    #[test]
    fn resolves_exact_and_normalized() {
        let (g, _) = graph_of(vec![hiv()]);
        assert_eq!(g.resolve_query("HIV").unwrap().cui, "CX0001");
        assert_eq!(g.resolve_query("  hiv ").unwrap().cui, "CX0001");
        assert_eq!(g.resolve_query("Human  Immunodeficiency Virus").unwrap().cui, "CX0001");
    }

    #[test]
    fn unknown_condition_suggests_by_prefix() {
        let (g, _) = graph_of(vec![hiv()]);
        match g.resolve_query("hivv") {
            Err(Error::UnknownCondition { suggestions, .. }) => {
                assert!(suggestions.contains(&"HIV".to_string()))
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(g.resolve_query("   "), Err(Error::InvalidQuery(_))));
    }

    #[test]
    fn terms_of_dedups_case_insensitively() {
        assert_eq!(terms_of(&hiv()), vec!["HIV", "human immunodeficiency virus"]);
        let c = Concept {
            cui: "C".into(),
            preferred_term: "Lyme Disease".into(),
            synonyms: vec!["lyme disease".into()],
            parent_cuis: vec![],
        };
        assert_eq!(terms_of(&c), vec!["Lyme Disease"]);
        let lone = Concept { synonyms: vec![], ..c };
        assert_eq!(terms_of(&lone).len(), 1);
    }
}
