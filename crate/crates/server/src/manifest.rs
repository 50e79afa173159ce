//! On-disk index directory: validated trials and concepts plus a manifest of
//! content digests that the service checks before it starts.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use xtrials_core::corpus::{load_concepts, load_trials};
use xtrials_core::{Index, TemplateCatalog, WeightTable, WeightsDocument};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const CONCEPTS_FILE: &str = "concepts.jsonl";
pub const WEIGHTS_FILE: &str = "weights.json";
pub const TEMPLATES_FILE: &str = "templates.toml";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the index directory.
    pub path: String,
    pub sha256: String,
    /// Where the file was copied from.
    pub source: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordCounts {
    pub trials: usize,
    pub concepts: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexManifest {
    pub built_at: DateTime<Utc>,
    pub trials: FileEntry,
    pub concepts: FileEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<FileEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub templates: Option<FileEntry>,
    pub counts: RecordCounts,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl IndexManifest {
    fn entries(&self) -> impl Iterator<Item = &FileEntry> {
        [
            Some(&self.trials),
            Some(&self.concepts),
            self.weights.as_ref(),
            self.templates.as_ref(),
        ]
        .into_iter()
        .flatten()
    }
}

/// Optional inputs bundled into the index alongside trials and concepts.
#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    pub weights: Option<PathBuf>,
    pub templates: Option<PathBuf>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| {
        xtrials_core::Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn to_jsonl<T: Serialize>(items: impl IntoIterator<Item = T>) -> String {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn entry(name: &str, bytes: &[u8], source: &Path) -> FileEntry {
    FileEntry {
        path: name.to_string(),
        sha256: sha256_hex(bytes),
        source: source.display().to_string(),
    }
}

/// Validates the inputs and writes the index directory.
pub fn build_index(
    trials_path: &Path,
    concepts_path: &Path,
    out_dir: &Path,
    options: &BuildOptions,
) -> Result<IndexManifest, CliError> {
    let (corpus, trial_report) = load_trials(trials_path)?;
    let (graph, concept_report) = load_concepts(concepts_path)?;
    if corpus.is_empty() {
        return Err(CliError::Validation(format!(
            "{} contains no valid trial records",
            trials_path.display()
        )));
    }
    if graph.is_empty() {
        return Err(CliError::Validation(format!(
            "{} contains no valid concepts",
            concepts_path.display()
        )));
    }

    let mut warnings = Vec::new();
    for skip in &trial_report.skipped {
        warnings.push(format!(
            "{}:{}: skipped: {}",
            trials_path.display(),
            skip.line,
            skip.reason
        ));
    }
    warnings.extend(
        trial_report
            .warnings
            .iter()
            .map(|w| format!("{}: {w}", trials_path.display())),
    );
    for skip in &concept_report.skipped {
        warnings.push(format!(
            "{}:{}: skipped: {}",
            concepts_path.display(),
            skip.line,
            skip.reason
        ));
    }
    warnings.extend(
        concept_report
            .warnings
            .iter()
            .map(|w| format!("{}: {w}", concepts_path.display())),
    );
    for t in corpus.trials() {
        for cui in &t.condition_cuis {
            if graph.get(cui).is_none() {
                warnings.push(format!("trial {} links unknown concept {cui}", t.nct_id));
            }
        }
    }

    let weights = match &options.weights {
        Some(path) => {
            let bytes = read_bytes(path)?;
            let text = String::from_utf8_lossy(&bytes);
            WeightsDocument::from_json(&text)?.into_table()?;
            Some((path, bytes))
        }
        None => None,
    };
    let templates = match &options.templates {
        Some(path) => {
            let bytes = read_bytes(path)?;
            TemplateCatalog::parse(&String::from_utf8_lossy(&bytes))?;
            Some((path, bytes))
        }
        None => None,
    };

    fs::create_dir_all(out_dir).map_err(|source| CliError::Write {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let trials_bytes = to_jsonl(corpus.trials());
    let concepts_bytes = to_jsonl(graph.concepts());
    write_file(&out_dir.join(TRIALS_FILE), trials_bytes.as_bytes())?;
    write_file(&out_dir.join(CONCEPTS_FILE), concepts_bytes.as_bytes())?;

    let mut manifest = IndexManifest {
        built_at: Utc::now(),
        trials: entry(TRIALS_FILE, trials_bytes.as_bytes(), trials_path),
        concepts: entry(CONCEPTS_FILE, concepts_bytes.as_bytes(), concepts_path),
        weights: None,
        templates: None,
        counts: RecordCounts {
            trials: corpus.len(),
            concepts: graph.len(),
        },
        warnings,
    };
    if let Some((src, bytes)) = weights {
        write_file(&out_dir.join(WEIGHTS_FILE), &bytes)?;
        manifest.weights = Some(entry(WEIGHTS_FILE, &bytes, src));
    }
    if let Some((src, bytes)) = templates {
        write_file(&out_dir.join(TEMPLATES_FILE), &bytes)?;
        manifest.templates = Some(entry(TEMPLATES_FILE, &bytes, src));
    }
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&out_dir.join(MANIFEST_FILE), json.as_bytes())?;
    Ok(manifest)
}

/// An index directory whose files all matched their manifest digests.
#[derive(Debug)]
pub struct OpenedIndex {
    pub manifest: IndexManifest,
    pub index: Index,
    /// Weights bundled into the index, if any.
    pub weights_path: Option<PathBuf>,
}

pub fn read_manifest(dir: &Path) -> Result<IndexManifest, CliError> {
    let path = dir.join(MANIFEST_FILE);
    let bytes = read_bytes(&path)?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::Validation(format!("{}: invalid manifest: {e}", path.display())))
}

/// Checks every digest first, then loads. Nothing is loaded from a directory
/// with a mismatched file. `templates` overrides the bundled catalog.
pub fn open_index(dir: &Path, templates: Option<&Path>) -> Result<OpenedIndex, CliError> {
    let manifest = read_manifest(dir)?;
    let mut contents: BTreeMap<String, Vec<u8>> = BTreeMap::new();
    for e in manifest.entries() {
        let path = dir.join(&e.path);
        let bytes = read_bytes(&path)?;
        if sha256_hex(&bytes) != e.sha256 {
            return Err(CliError::DigestMismatch { path });
        }
        contents.insert(e.path.clone(), bytes);
    }

    let text = |name: &str| String::from_utf8_lossy(&contents[name]).into_owned();
    let (corpus, report) = xtrials_core::corpus::parse_trials(&text(&manifest.trials.path));
    let (graph, _) = xtrials_core::corpus::parse_concepts(&text(&manifest.concepts.path));
    if !report.skipped.is_empty() || corpus.len() != manifest.counts.trials || graph.len() != manifest.counts.concepts {
        return Err(CliError::Validation(format!(
            "{}: record counts do not match the manifest",
            dir.display()
        )));
    }

    let catalog = match (templates, &manifest.templates) {
        (Some(path), _) => TemplateCatalog::load(path)?,
        (None, Some(e)) => TemplateCatalog::parse(&text(&e.path))?,
        (None, None) => TemplateCatalog::default(),
    };
    let weights_path = manifest.weights.as_ref().map(|e| dir.join(&e.path));
    Ok(OpenedIndex {
        index: Index::new(corpus, graph, catalog),
        manifest,
        weights_path,
    })
}

/// Weight table together with the document it was read from.
#[derive(Clone, Debug)]
pub struct LoadedWeights {
    pub document: WeightsDocument,
    pub table: WeightTable,
    pub prefs: xtrials_core::FormulationPrefs,
}

pub fn load_weights(path: &Path) -> Result<LoadedWeights, CliError> {
    let document = WeightsDocument::read(path).map_err(|e| with_path(path, e))?;
    let (table, prefs) = document.clone().into_table().map_err(|e| with_path(path, e))?;
    Ok(LoadedWeights { document, table, prefs })
}

fn with_path(path: &Path, err: xtrials_core::Error) -> CliError {
    match err {
        xtrials_core::Error::Document(msg) => {
            xtrials_core::Error::Document(format!("{}: {msg}", path.display())).into()
        }
        other => other.into(),
    }
}
