//! Likert rating records and their CSV encodings.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureId;
use crate::stats::{RatingCounts, LEVELS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationDimension {
    NumericStyle,
    VerbStyle,
    DiseaseNaming,
}

impl FormulationDimension {
    pub const ALL: [FormulationDimension; 3] = [
        FormulationDimension::NumericStyle,
        FormulationDimension::VerbStyle,
        FormulationDimension::DiseaseNaming,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FormulationDimension::NumericStyle => "numeric_style",
            FormulationDimension::VerbStyle => "verb_style",
            FormulationDimension::DiseaseNaming => "disease_naming",
        }
    }
}

impl fmt::Display for FormulationDimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FormulationDimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|d| d.as_str() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown dimension {s:?}")))
    }
}

/// Which of the two phrasings of a dimension was rated.
///
/// `A` is non-numeric, factual, or condition-specific; `B` is numeric, action,
/// or generic.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormulationVariant {
    A,
    B,
}

impl FromStr for FormulationVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "A" => Ok(Self::A),
            "b" | "B" => Ok(Self::B),
            other => Err(Error::InvalidArgument(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RatedItem {
    Feature(FeatureId),
    Formulation(FormulationDimension, FormulationVariant),
}

/// A Likert rating in 1..=5.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rating(u8);

impl Rating {
    pub fn new(value: u8) -> Result<Self> {
        if (1..=LEVELS as u8).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::InvalidArgument(format!("rating {value} outside 1..={LEVELS}")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatingRecord {
    pub participant_id: String,
    pub item: RatedItem,
    pub rating: Rating,
}

impl RatingRecord {
    pub fn feature(participant: impl Into<String>, feature: FeatureId, rating: u8) -> Result<Self> {
        Ok(Self {
            participant_id: participant.into(),
            item: RatedItem::Feature(feature),
            rating: Rating::new(rating)?,
        })
    }

    pub fn formulation(
        participant: impl Into<String>,
        dimension: FormulationDimension,
        variant: FormulationVariant,
        rating: u8,
    ) -> Result<Self> {
        Ok(Self {
            participant_id: participant.into(),
            item: RatedItem::Formulation(dimension, variant),
            rating: Rating::new(rating)?,
        })
    }
}

/// Adds one rating to a histogram.
pub(crate) fn tally(counts: &mut RatingCounts, rating: Rating) {
    counts[usize::from(rating.get()) - 1] += 1;
}

/// Expands a histogram back into individual records, one synthetic participant each.
pub fn records_from_counts(item: RatedItem, counts: &RatingCounts, prefix: &str) -> Vec<RatingRecord> {
    let mut out = Vec::new();
    for (level, &n) in counts.iter().enumerate() {
        for _ in 0..n {
            out.push(RatingRecord {
                participant_id: format!("{prefix}{}", out.len() + 1),
                item,
                rating: Rating(level as u8 + 1),
            });
        }
    }
    out
}

#[derive(Deserialize)]
struct FeatureRow {
    participant_id: String,
    feature_id: String,
    rating: String,
}

#[derive(Deserialize)]
struct FormulationRow {
    participant_id: String,
    dimension: String,
    variant: String,
    rating: String,
}

fn schema(path: &Path, row: u64, message: impl fmt::Display) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        row,
        message: message.to_string(),
    }
}

fn parse_rating(path: &Path, row: u64, raw: &str) -> Result<Rating> {
    raw.trim()
        .parse::<u8>()
        .map_err(|_| schema(path, row, format!("rating {raw:?} is not an integer")))
        .and_then(|v| Rating::new(v).map_err(|e| schema(path, row, e)))
}

fn read_rows<T, F>(
    path: &Path,
    reader: impl std::io::Read,
    header: &[&str],
    mut convert: F,
) -> Result<Vec<RatingRecord>>
where
    T: serde::de::DeserializeOwned,
    F: FnMut(T, u64) -> Result<RatingRecord>,
{
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| schema(path, 1, e))?.clone();
    for column in header {
        if !found.iter().any(|h| h == *column) {
            return Err(schema(path, 1, format!("missing column {column:?}")));
        }
    }
    let mut out = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line());
            schema(path, row, e)
        })?;
        let row = record.position().map_or(0, |p| p.line());
        let parsed: T = record.deserialize(Some(&found)).map_err(|e| schema(path, row, e))?;
        out.push(convert(parsed, row)?);
    }
    Ok(out)
}

/// Reads `participant_id,feature_id,rating` rows.
pub fn read_feature_ratings(path: impl AsRef<Path>) -> Result<Vec<RatingRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_feature_ratings(path, file)
}

pub fn parse_feature_ratings(path: &Path, reader: impl std::io::Read) -> Result<Vec<RatingRecord>> {
    read_rows(
        path,
        reader,
        &["participant_id", "feature_id", "rating"],
        |row: FeatureRow, line| {
            let feature = row.feature_id.parse::<FeatureId>().map_err(|e| schema(path, line, e))?;
            Ok(RatingRecord {
                participant_id: row.participant_id,
                item: RatedItem::Feature(feature),
                rating: parse_rating(path, line, &row.rating)?,
            })
        },
    )
}

/// Reads `participant_id,dimension,variant,rating` rows.
pub fn read_formulation_ratings(path: impl AsRef<Path>) -> Result<Vec<RatingRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_formulation_ratings(path, file)
}

pub fn parse_formulation_ratings(path: &Path, reader: impl std::io::Read) -> Result<Vec<RatingRecord>> {
    read_rows(
        path,
        reader,
        &["participant_id", "dimension", "variant", "rating"],
        |row: FormulationRow, line| {
            let dimension = row
                .dimension
                .parse::<FormulationDimension>()
                .map_err(|e| schema(path, line, e))?;
            let variant = row
                .variant
                .parse::<FormulationVariant>()
                .map_err(|e| schema(path, line, e))?;
            Ok(RatingRecord {
                participant_id: row.participant_id,
                item: RatedItem::Formulation(dimension, variant),
                rating: parse_rating(path, line, &row.rating)?,
            })
        },
    )
}
