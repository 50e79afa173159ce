//! The subcommands behind the `xtrials` binary.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use xtrials_core::weights::{
    derive_weights, formulation_report, read_feature_ratings, read_formulation_ratings, FormulationReport,
};
use xtrials_core::{EngineVariant, Tier, WeightTable, WeightsDocument};

use crate::api::{round3, AppState};
use crate::error::CliError;
use crate::manifest::{build_index, load_weights, open_index, BuildOptions, IndexManifest, LoadedWeights};

pub fn cmd_build_index(
    trials: &Path,
    concepts: &Path,
    out_dir: &Path,
    options: &BuildOptions,
) -> Result<IndexManifest, CliError> {
    build_index(trials, concepts, out_dir, options)
}

#[derive(Debug)]
pub struct Derived {
    pub document: WeightsDocument,
    pub formulation: FormulationReport<f64>,
}

/// Derives weights and phrasing preferences from the two rating files and
/// writes the combined document to `out`.
pub fn cmd_derive_weights(feature_csv: &Path, formulation_csv: &Path, out: &Path) -> Result<Derived, CliError> {
    let feature_ratings = read_feature_ratings(feature_csv)?;
    let formulation_ratings = read_formulation_ratings(formulation_csv)?;
    let table: WeightTable = derive_weights(&feature_ratings)?;
    let formulation = formulation_report::<f64>(&formulation_ratings, table.config().threshold)?;
    let document = WeightsDocument::new(&table, formulation.prefs);
    std::fs::write(out, document.to_json()).map_err(|source| CliError::Write {
        path: out.to_path_buf(),
        source,
    })?;
    Ok(Derived { document, formulation })
}

/// Human-readable tier partition and phrasing choices.
pub fn describe_derived(derived: &Derived) -> String {
    let doc = &derived.document;
    let mut out = String::new();
    for tier in [Tier::High, Tier::Low] {
        let members: Vec<&str> = doc
            .tiers
            .iter()
            .filter(|(_, &t)| t == tier)
            .map(|(f, _)| f.as_str())
            .collect();
        let label = match tier {
            Tier::High => "high",
            Tier::Low => "low",
        };
        let _ = writeln!(out, "{label} tier: {}", members.join(", "));
    }
    for (f, w) in &doc.weights {
        let _ = writeln!(out, "  {:<40} {w:.6}", f.as_str());
    }
    let prefs = &doc.prefs;
    let _ = writeln!(
        out,
        "phrasing: {}, {}, {}",
        serde_json::to_value(prefs.numeric_style)
            .unwrap()
            .as_str()
            .unwrap_or_default(),
        serde_json::to_value(prefs.verb_style)
            .unwrap()
            .as_str()
            .unwrap_or_default(),
        serde_json::to_value(prefs.disease_naming)
            .unwrap()
            .as_str()
            .unwrap_or_default(),
    );
    out
}

/// Opens an index and picks the weights: an explicit path wins over the
/// file bundled in the index.
pub fn open_state(index_dir: &Path, weights: Option<&Path>, templates: Option<&Path>) -> Result<AppState, CliError> {
    let opened = open_index(index_dir, templates)?;
    let weights_path: PathBuf = match weights {
        Some(p) => p.to_path_buf(),
        None => opened.weights_path.clone().ok_or_else(|| {
            CliError::Validation(format!(
                "{} has no bundled weights; pass --weights",
                index_dir.display()
            ))
        })?,
    };
    let loaded: LoadedWeights = load_weights(&weights_path)?;
    Ok(AppState::new(
        opened.index,
        Some(opened.manifest),
        loaded,
        Some(weights_path),
    ))
}

fn cell(text: &str) -> String {
    text.replace('|', "\\|").replace('\n', " ")
}

/// One Markdown table per engine variant, for side-by-side comparison.
pub fn simulate_variants(state: &AppState, query: &str, limit: usize) -> Result<String, CliError> {
    let w = state.weights();
    let mut out = String::new();
    for (i, variant) in EngineVariant::ALL.into_iter().enumerate() {
        let res = state.index().search(&w.table, &w.prefs, query, variant, limit)?;
        if i == 0 {
            let _ = writeln!(out, "# Simulated search engines for \"{}\" ({})\n", res.query, res.cui);
            let _ = writeln!(
                out,
                "{} linked trials, showing the top {}.\n",
                res.total,
                res.results.len()
            );
        }
        let ordering = match variant {
            EngineVariant::Amsterdam | EngineVariant::Berlin => "ranked by score",
            EngineVariant::Copenhagen | EngineVariant::Dublin => "ingestion order",
            EngineVariant::Edinburgh => "alphabetical by title",
        };
        let shown = if variant.shows_explanations() {
            "with explanations"
        } else {
            "without explanations"
        };
        let _ = writeln!(out, "## {variant}: {ordering}, {shown}\n");
        let _ = writeln!(out, "| # | NCT ID | Title | Score | Explanations |");
        let _ = writeln!(out, "|---|---|---|---|---|");
        for (rank, t) in res.results.iter().enumerate() {
            let expl: Vec<String> = t.explanations.iter().map(|s| cell(&s.text)).collect();
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.3} | {} |",
                rank + 1,
                t.nct_id,
                cell(&t.title),
                round3(t.e_ct),
                expl.join("<br>")
            );
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn cmd_simulate_variants(
    index_dir: &Path,
    weights: Option<&Path>,
    templates: Option<&Path>,
    query: &str,
    limit: usize,
    out: Option<&Path>,
) -> Result<String, CliError> {
    let state = open_state(index_dir, weights, templates)?;
    let report = simulate_variants(&state, query, limit)?;
    if let Some(path) = out {
        std::fs::write(path, &report).map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;
    }
    Ok(report)
}

/// Binds and serves until interrupted. The bound address is printed on
/// standard output so callers can use port 0.
pub async fn serve(state: AppState, host: &str, port: u16) -> Result<(), CliError> {
    let listener = tokio::net::TcpListener::bind((host, port))
        .await
        .map_err(|e| CliError::Runtime(format!("cannot bind {host}:{port}: {e}")))?;
    let addr = listener.local_addr().map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("listening on http://{addr}");
    let app = crate::api::router(Arc::new(state));
    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|e| CliError::Runtime(e.to_string()))
}
