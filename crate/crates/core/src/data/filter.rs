use std::collections::{BTreeMap, BTreeSet};

use super::{EmbeddingDataset, Split, SplitCounts};
use crate::error::{Error, Result};
use crate::probe::{AttributeSchema, LabeledRows};

/// Minimum distinct word forms an attribute value needs in every split.
pub const MIN_WORD_TYPES: usize = 100;

/// Outcome of the word-type filter for one attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct FilteredAttribute {
    pub attribute: String,
    /// Surviving values in sorted order, with their per-split counts.
    pub kept: Vec<(String, SplitCounts)>,
    pub dropped: Vec<(String, SplitCounts)>,
    /// Counts are tokens rather than word types because no word forms exist.
    pub token_fallback: bool,
    /// Per split: (dataset row, index into `kept`).
    rows: [Vec<(usize, usize)>; 3],
}

impl FilteredAttribute {
    /// `None` when fewer than two values survive.
    pub fn schema(&self) -> Option<AttributeSchema> {
        if self.kept.len() < 2 {
            return None;
        }
        AttributeSchema::new(&self.attribute, self.kept.iter().map(|(v, _)| v.clone()).collect()).ok()
    }

    pub fn split_rows(&self, split: Split) -> &[(usize, usize)] {
        &self.rows[split.index()]
    }

    /// Rows of `split` converted to `f64`, labeled by kept-value index.
    pub fn labeled_rows(&self, dataset: &EmbeddingDataset, split: Split) -> Result<LabeledRows> {
        rows_for(dataset, self.split_rows(split))
    }

    /// Dataset with the attribute removed from tokens whose value was dropped.
    pub fn apply(&self, dataset: &EmbeddingDataset) -> EmbeddingDataset {
        let keep: BTreeSet<&str> = self.kept.iter().map(|(v, _)| v.as_str()).collect();
        let tokens = dataset
            .tokens()
            .iter()
            .cloned()
            .map(|mut t| {
                if t.tag.get(&self.attribute).is_some_and(|v| !keep.contains(v.as_str())) {
                    t.tag.remove(&self.attribute);
                }
                t
            })
            .collect();
        dataset.with_tokens(tokens)
    }
}

/// Rows labeled by position in `schema`, for one split. Rows whose value for
/// the attribute is missing or outside the schema are skipped.
pub fn schema_rows(dataset: &EmbeddingDataset, schema: &AttributeSchema, split: Split) -> Result<LabeledRows> {
    let picked: Vec<(usize, usize)> = dataset
        .tokens()
        .iter()
        .filter(|t| t.split == split)
        .filter_map(|t| {
            let v = t.tag.get(&schema.attribute)?;
            Some((t.row_index, schema.index_of(v)?))
        })
        .collect();
    rows_for(dataset, &picked)
}

fn rows_for(dataset: &EmbeddingDataset, picked: &[(usize, usize)]) -> Result<LabeledRows> {
    let mut data = Vec::with_capacity(picked.len() * dataset.dim());
    for &(row, _) in picked {
        data.extend(dataset.row(row).iter().map(|&x| f64::from(x)));
    }
    LabeledRows::new(dataset.dim(), data, picked.iter().map(|&(_, v)| v).collect())
}

pub fn filter_attribute_values(dataset: &EmbeddingDataset, attribute: &str) -> Result<FilteredAttribute> {
    filter_attribute_values_with(dataset, attribute, MIN_WORD_TYPES)
}

/// Keeps values with at least `min_types` distinct word forms in every split.
pub fn filter_attribute_values_with(
    dataset: &EmbeddingDataset,
    attribute: &str,
    min_types: usize,
) -> Result<FilteredAttribute> {
    let registered = dataset
        .registry()
        .get(attribute)
        .ok_or_else(|| Error::UnknownAttribute(attribute.to_string()))?;

    let carriers: Vec<_> = dataset.tokens().iter().filter(|t| t.tag.contains_key(attribute)).collect();
    let token_fallback = carriers.iter().all(|t| t.word_form.is_empty());
    let counts: BTreeMap<String, SplitCounts> = if token_fallback {
        log::warn!(
            "no word forms for `{attribute}`; filtering on token counts instead of word types"
        );
        let mut counts: BTreeMap<String, SplitCounts> = BTreeMap::new();
        for t in &carriers {
            counts.entry(t.tag[attribute].clone()).or_default()[t.split.index()] += 1;
        }
        counts
    } else {
        registered.clone()
    };

    let (kept, dropped): (Vec<_>, Vec<_>) =
        counts.into_iter().partition(|(_, c)| c.iter().all(|&n| n >= min_types));
    for (v, c) in &dropped {
        log::info!("dropping {attribute}={v}: word types per split {c:?} below {min_types}");
    }
    if kept.len() < 2 {
        log::warn!("attribute `{attribute}` has {} surviving value(s) and is excluded", kept.len());
    }
    let index: BTreeMap<&str, usize> = kept.iter().enumerate().map(|(i, (v, _))| (v.as_str(), i)).collect();
    let mut rows: [Vec<(usize, usize)>; 3] = Default::default();
    for t in carriers {
        if let Some(&v) = index.get(t.tag[attribute].as_str()) {
            rows[t.split.index()].push((t.row_index, v));
        }
    }
    Ok(FilteredAttribute { attribute: attribute.to_string(), kept, dropped, token_fallback, rows })
}
