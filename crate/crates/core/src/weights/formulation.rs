use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ratings::{tally, FormulationDimension, FormulationVariant, RatedItem, RatingRecord};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::stats::{chi_square_test, ChiSquare, RatingCounts};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NumericStyle {
    #[default]
    NonNumeric,
    Numeric,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerbStyle {
    #[default]
    Factual,
    Action,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiseaseNaming {
    #[default]
    Generic,
    Specific,
}

/// Phrasing choices for explanation sentences.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulationPrefs {
    pub numeric_style: NumericStyle,
    pub verb_style: VerbStyle,
    pub disease_naming: DiseaseNaming,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimensionOutcome<S> {
    pub dimension: FormulationDimension,
    pub mean_a: S,
    pub mean_b: S,
    pub test: Option<ChiSquare<S>>,
    /// Variant chosen, or `None` when the default applied.
    pub preferred: Option<FormulationVariant>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulationReport<S> {
    pub prefs: FormulationPrefs,
    pub outcomes: Vec<DimensionOutcome<S>>,
}

fn mean<S: Scalar>(c: &RatingCounts) -> S {
    let n: u64 = c.iter().sum();
    let total: u64 = c.iter().enumerate().map(|(i, &v)| (i as u64 + 1) * v).sum();
    S::from_count(total) / S::from_count(n)
}

/// Picks a phrasing per dimension: the higher-mean variant when the χ² test
/// is significant at `threshold`, the default otherwise.
pub fn formulation_report<S: Scalar>(ratings: &[RatingRecord], threshold: S) -> Result<FormulationReport<S>> {
    let mut hist: BTreeMap<(FormulationDimension, FormulationVariant), RatingCounts> = BTreeMap::new();
    for rec in ratings {
        if let RatedItem::Formulation(d, v) = rec.item {
            tally(hist.entry((d, v)).or_default(), rec.rating);
        }
    }

    let mut missing = Vec::new();
    for d in FormulationDimension::ALL {
        for v in [FormulationVariant::A, FormulationVariant::B] {
            let n: u64 = hist.get(&(d, v)).map_or(0, |c| c.iter().sum());
            if n < 2 {
                missing.push(format!("{d}/{v:?}"));
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteData(format!(
            "fewer than 2 ratings for {}",
            missing.join(", ")
        )));
    }

    let mut prefs = FormulationPrefs::default();
    let mut outcomes = Vec::new();
    for d in FormulationDimension::ALL {
        let a = &hist[&(d, FormulationVariant::A)];
        let b = &hist[&(d, FormulationVariant::B)];
        let (mean_a, mean_b) = (mean::<S>(a), mean::<S>(b));
        // a degenerate table means identical single-level distributions
        let test = chi_square_test::<S>(a, b).ok();
        let preferred = match test {
            Some(t) if t.p_value < threshold && mean_a > mean_b => Some(FormulationVariant::A),
            Some(t) if t.p_value < threshold && mean_b > mean_a => Some(FormulationVariant::B),
            _ => None,
        };
        if let Some(v) = preferred {
            let a_wins = v == FormulationVariant::A;
            match d {
                FormulationDimension::NumericStyle => {
                    prefs.numeric_style = if a_wins {
                        NumericStyle::NonNumeric
                    } else {
                        NumericStyle::Numeric
                    }
                }
                FormulationDimension::VerbStyle => {
                    prefs.verb_style = if a_wins { VerbStyle::Factual } else { VerbStyle::Action }
                }
                FormulationDimension::DiseaseNaming => {
                    prefs.disease_naming = if a_wins {
                        DiseaseNaming::Specific
                    } else {
                        DiseaseNaming::Generic
                    }
                }
            }
        }
        outcomes.push(DimensionOutcome {
            dimension: d,
            mean_a,
            mean_b,
            test,
            preferred,
        });
    }
    Ok(FormulationReport { prefs, outcomes })
}

pub fn formulation_prefs<S: Scalar>(ratings: &[RatingRecord]) -> Result<FormulationPrefs> {
    formulation_report::<S>(ratings, S::lit(0.05)).map(|r| r.prefs)
}
