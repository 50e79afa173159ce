use std::collections::BTreeMap;
use std::path::PathBuf;

use approx::assert_abs_diff_eq;
use xtrials_core::corpus::{load_concepts, load_trials, terms_of};
use xtrials_core::features::FeatureId;
use xtrials_core::stats::{chi_square_test, RatingCounts};
use xtrials_core::weights::{
    derive_weights, formulation_report, read_feature_ratings, read_formulation_ratings, DiseaseNaming, NumericStyle,
    RatedItem, Tier, VerbStyle,
};
use xtrials_core::{EngineVariant, FormulationPrefs, Index, TemplateCatalog, WeightTable};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn histograms() -> BTreeMap<FeatureId, RatingCounts> {
    let mut out: BTreeMap<FeatureId, RatingCounts> = BTreeMap::new();
    for rec in read_feature_ratings(fixture("feature_ratings.csv")).unwrap() {
        if let RatedItem::Feature(f) = rec.item {
            out.entry(f).or_default()[rec.rating.get() as usize - 1] += 1;
        }
    }
    out
}

#[test]
fn loading_is_idempotent() {
    let (a, ra) = load_trials(fixture("trials.jsonl")).unwrap();
    let (b, rb) = load_trials(fixture("trials.jsonl")).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra, rb);
    assert!(ra.skipped.is_empty());
    let (g1, _) = load_concepts(fixture("concepts.jsonl")).unwrap();
    let (g2, _) = load_concepts(fixture("concepts.jsonl")).unwrap();
    assert_eq!(g1, g2);
}

#[test]
fn every_term_resolves_to_its_concept() {
    let (g, report) = load_concepts(fixture("concepts.jsonl")).unwrap();
    assert!(report.warnings.is_empty(), "{:?}", report.warnings);
    for c in g.concepts() {
        for term in terms_of(c) {
            assert_eq!(g.resolve_query(&term).unwrap().cui, c.cui);
            assert_eq!(g.resolve_query(&term.to_uppercase()).unwrap().cui, c.cui);
        }
    }
}

#[test]
fn fixture_means_match_expected() {
    let hist = histograms();
    let expected = [
        (FeatureId::QueryInDetailedDescription, 3.69),
        (FeatureId::QueryInSummary, 3.53),
        (FeatureId::PrimaryPurposeAvailable, 3.53),
        (FeatureId::PublicationCount, 3.51),
        (FeatureId::StageAvailable, 3.44),
        (FeatureId::QueryInTitle, 3.15),
        (FeatureId::IsRecruiting, 3.13),
    ];
    for (f, m) in expected {
        let c = hist[&f];
        let n: u64 = c.iter().sum();
        let total: u64 = c.iter().enumerate().map(|(i, &v)| (i as u64 + 1) * v).sum();
        assert_abs_diff_eq!(total as f64 / n as f64, m, epsilon = 1e-12);
    }
}

#[test]
fn fixture_reproduces_full_significance_pattern() {
    use FeatureId::*;
    let hist = histograms();
    let significant = [
        (QueryInSummary, QueryInTitle),
        (QueryInDetailedDescription, QueryInTitle),
        (PublicationCount, QueryInTitle),
        (StageAvailable, QueryInTitle),
        (PrimaryPurposeAvailable, QueryInTitle),
        (IsRecruiting, QueryInSummary),
        (IsRecruiting, QueryInDetailedDescription),
        (IsRecruiting, PublicationCount),
        (IsRecruiting, PrimaryPurposeAvailable),
    ];
    let rated: Vec<FeatureId> = hist.keys().copied().collect();
    for (i, &a) in rated.iter().enumerate() {
        for &b in &rated[i + 1..] {
            let p = chi_square_test::<f64>(&hist[&a], &hist[&b]).unwrap().p_value;
            let expect = significant.contains(&(a, b)) || significant.contains(&(b, a));
            assert_eq!(p < 0.05, expect, "{a} vs {b}: p = {p}");
        }
    }
}

#[test]
fn derived_tiers_from_fixture() {
    let ratings = read_feature_ratings(fixture("feature_ratings.csv")).unwrap();
    let table: WeightTable = derive_weights(&ratings).unwrap();
    assert_eq!(
        table.tier_members(Tier::Low),
        vec![
            FeatureId::QueryInTitle,
            FeatureId::PreferredTermInTitle,
            FeatureId::IsRecruiting
        ]
    );
    let order = &table.provenance().order;
    assert_eq!(order[1], FeatureId::QueryInSummary);
    assert_eq!(order[2], FeatureId::PrimaryPurposeAvailable);
    assert_abs_diff_eq!(table.total(), 1.0, epsilon = 1e-9);
    assert!(FeatureId::ALL.iter().all(|&f| table.weight(f) > 0.0));
    let top = table.weight(FeatureId::QueryInDetailedDescription);
    assert!(FeatureId::ALL.iter().all(|&f| table.weight(f) <= top));
    assert_eq!(table.weight(FeatureId::PreferredTermInDetailedDescription), top);
}

#[test]
fn formulation_from_fixture() {
    let ratings = read_formulation_ratings(fixture("formulation_ratings.csv")).unwrap();
    let report = formulation_report::<f64>(&ratings, 0.05).unwrap();
    assert_eq!(report.prefs.numeric_style, NumericStyle::NonNumeric);
    assert_eq!(report.prefs.verb_style, VerbStyle::Factual);
    assert_eq!(report.prefs.disease_naming, DiseaseNaming::Generic);
    let ps: Vec<f64> = report.outcomes.iter().map(|o| o.test.unwrap().p_value).collect();
    assert_abs_diff_eq!(ps[0], 0.01, epsilon = 0.002);
    assert_abs_diff_eq!(ps[1], 0.036, epsilon = 0.002);
    assert_abs_diff_eq!(ps[2], 0.44, epsilon = 0.01);
}

#[test]
fn search_over_fixture() {
    let (corpus, _) = load_trials(fixture("trials.jsonl")).unwrap();
    let (graph, _) = load_concepts(fixture("concepts.jsonl")).unwrap();
    let index = Index::new(corpus, graph, TemplateCatalog::default());
    let ratings = read_feature_ratings(fixture("feature_ratings.csv")).unwrap();
    let table: WeightTable = derive_weights(&ratings).unwrap();
    let prefs = FormulationPrefs::default();

    let out = index
        .search(&table, &prefs, "HIV", EngineVariant::Amsterdam, 10)
        .unwrap();
    assert_eq!(out.cui, "CX0001");
    assert_eq!(out.total, 12);
    assert_eq!(out.results.len(), 10);
    assert!(out.results.windows(2).all(|w| w[0].e_ct >= w[1].e_ct));
    assert!(out.results.iter().all(|r| r.explanations.len() <= 3));
    assert_eq!(out.results[0].nct_id, "NCT00000101");

    let syn = index
        .search(
            &table,
            &prefs,
            "human immunodeficiency virus",
            EngineVariant::Amsterdam,
            10,
        )
        .unwrap();
    assert_eq!(syn.cui, "CX0001");
    assert!(index
        .search(&table, &prefs, "hivv", EngineVariant::Amsterdam, 10)
        .is_err());
}
