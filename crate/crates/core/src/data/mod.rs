//! Dataset ingestion, validation, splitting and the word-type filter.

mod filter;
pub mod format;
pub mod tags;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use filter::{
    filter_attribute_values, filter_attribute_values_with, schema_rows, FilteredAttribute, MIN_WORD_TYPES,
};

use crate::error::{Error, Result};
use format::RawLabel;
use tags::{canonicalize_tag, TagOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidInput(format!("unknown split `{other}`"))),
        }
    }
}

/// Morphosyntactic tag: attribute → canonical value.
pub type Tag = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledToken {
    pub row_index: usize,
    pub word_form: String,
    pub split: Split,
    pub tag: Tag,
}

/// Per-split counts of distinct word forms, indexed by [`Split::index`].
pub type SplitCounts = [usize; 3];

/// Embeddings with their tokens, in matrix row order.
#[derive(Debug, Clone)]
pub struct EmbeddingDataset {
    pub id: String,
    d: usize,
    embeddings: Vec<f32>,
    tokens: Vec<LabeledToken>,
    registry: BTreeMap<String, BTreeMap<String, SplitCounts>>,
    /// Pairs dropped during canonicalization, per attribute.
    rejected: BTreeMap<String, usize>,
}

impl EmbeddingDataset {
    /// `tokens[i].row_index` must equal `i`.
    pub fn new(d: usize, embeddings: Vec<f32>, tokens: Vec<LabeledToken>) -> Result<Self> {
        if d == 0 {
            return Err(Error::Format("embedding dimension must be positive".into()));
        }
        if embeddings.len() != d * tokens.len() {
            return Err(Error::Consistency(format!(
                "{} labels but {} embedding rows",
                tokens.len(),
                embeddings.len() / d
            )));
        }
        if let Some(pos) = embeddings.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data { row: pos / d });
        }
        if let Some((i, _)) = tokens.iter().enumerate().find(|(i, t)| t.row_index != *i) {
            return Err(Error::Consistency(format!("token {i} is not in matrix row order")));
        }
        let registry = build_registry(&tokens);
        Ok(Self { id: String::new(), d, embeddings, tokens, registry, rejected: BTreeMap::new() })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn tokens(&self) -> &[LabeledToken] {
        &self.tokens
    }

    pub fn embeddings(&self) -> &[f32] {
        &self.embeddings
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.embeddings[i * self.d..(i + 1) * self.d]
    }

    /// attribute → value → distinct word forms per split.
    pub fn registry(&self) -> &BTreeMap<String, BTreeMap<String, SplitCounts>> {
        &self.registry
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.registry.keys().map(String::as_str)
    }

    pub fn rejected(&self) -> &BTreeMap<String, usize> {
        &self.rejected
    }

    pub fn load(matrix_path: &Path, labels_path: &Path) -> Result<Self> {
        load_dataset(matrix_path, labels_path)
    }

    pub fn save(&self, matrix_path: &Path, labels_path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(matrix_path)?);
        format::write_matrix(&mut out, self.len(), self.d, &self.embeddings)?;
        std::io::Write::flush(&mut out)?;
        let labels: Vec<RawLabel> = self
            .tokens
            .iter()
            .map(|t| RawLabel {
                index: t.row_index,
                split: t.split.to_string(),
                word_form: t.word_form.clone(),
                tag: format_tag(&t.tag),
            })
            .collect();
        let mut out = BufWriter::new(File::create(labels_path)?);
        format::write_labels(&mut out, &labels)?;
        std::io::Write::flush(&mut out)?;
        Ok(())
    }

    /// Copy with the tags of some tokens replaced.
    pub(crate) fn with_tokens(&self, tokens: Vec<LabeledToken>) -> Self {
        let registry = build_registry(&tokens);
        Self {
            id: self.id.clone(),
            d: self.d,
            embeddings: self.embeddings.clone(),
            tokens,
            registry,
            rejected: self.rejected.clone(),
        }
    }
}

fn build_registry(tokens: &[LabeledToken]) -> BTreeMap<String, BTreeMap<String, SplitCounts>> {
    let mut forms: BTreeMap<(&str, &str), [BTreeSet<&str>; 3]> = BTreeMap::new();
    for t in tokens {
        for (a, v) in &t.tag {
            forms.entry((a, v)).or_default()[t.split.index()].insert(&t.word_form);
        }
    }
    let mut registry: BTreeMap<String, BTreeMap<String, SplitCounts>> = BTreeMap::new();
    for ((a, v), sets) in forms {
        registry
            .entry(a.to_string())
            .or_default()
            .insert(v.to_string(), [sets[0].len(), sets[1].len(), sets[2].len()]);
    }
    registry
}

pub fn format_tag(tag: &Tag) -> String {
    tag.iter().map(|(a, v)| format!("{a}={v}")).collect::<Vec<_>>().join(";")
}

/// Parses `Attr=VALUE;Attr=VALUE` and canonicalizes each value. Pairs that are
/// rejected (disjunction, language-specific, cross-attribute conjunction) are
/// left out and reported in the second return value.
pub fn parse_tag(raw: &str) -> Result<(Tag, Vec<String>)> {
    let mut tag = Tag::new();
    let mut rejected = Vec::new();
    let raw = raw.trim();
    if raw.is_empty() || raw == "_" {
        return Ok((tag, rejected));
    }
    for pair in raw.split(';') {
        let pair = pair.trim();
        if pair.is_empty() {
            continue;
        }
        let (attr, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("tag pair `{pair}` is not of the form Attribute=VALUE")))?;
        let attr = attr.trim();
        if attr.is_empty() {
            return Err(Error::Format(format!("tag pair `{pair}` has an empty attribute")));
        }
        if tags::is_language_specific(attr) {
            continue;
        }
        let canonical = match canonicalize_tag(value) {
            Ok(TagOutcome::Accepted(v)) => v,
            Ok(TagOutcome::LanguageSpecific) => continue,
            Ok(TagOutcome::Disjunction) | Err(Error::InvalidTag(_)) => {
                rejected.push(attr.to_string());
                continue;
            }
            Err(e) => return Err(e),
        };
        if tag.insert(attr.to_string(), canonical).is_some() {
            return Err(Error::Format(format!("attribute `{attr}` appears twice in tag `{raw}`")));
        }
    }
    Ok((tag, rejected))
}

/// Loads and validates a matrix file and its labels file.
pub fn load_dataset(matrix_path: &Path, labels_path: &Path) -> Result<EmbeddingDataset> {
    let matrix = format::read_matrix(BufReader::new(File::open(matrix_path)?))?;
    let raw_labels = format::read_labels(BufReader::new(File::open(labels_path)?))?;
    if raw_labels.len() != matrix.n {
        return Err(Error::Consistency(format!(
            "labels file has {} rows but the matrix has {}",
            raw_labels.len(),
            matrix.n
        )));
    }
    if matrix.d == 0 {
        return Err(Error::Format("embedding dimension is zero".into()));
    }
    if let Some(pos) = matrix.values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Data { row: pos / matrix.d });
    }
    let mut slots: Vec<Option<LabeledToken>> = vec![None; matrix.n];
    let mut rejected: BTreeMap<String, usize> = BTreeMap::new();
    for raw in raw_labels {
        if raw.index >= matrix.n {
            return Err(Error::Consistency(format!(
                "label index {} is outside the matrix's {} rows",
                raw.index, matrix.n
            )));
        }
        let split: Split = raw
            .split
            .parse()
            .map_err(|_| Error::Format(format!("row {}: unknown split `{}`", raw.index, raw.split)))?;
        let (tag, dropped) = parse_tag(&raw.tag).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("row {}: {msg}", raw.index)),
            other => other,
        })?;
        for a in dropped {
            *rejected.entry(a).or_default() += 1;
        }
        let slot = &mut slots[raw.index];
        if slot.is_some() {
            return Err(Error::Consistency(format!("label index {} appears twice", raw.index)));
        }
        *slot = Some(LabeledToken { row_index: raw.index, word_form: raw.word_form, split, tag });
    }
    let tokens: Vec<LabeledToken> = slots.into_iter().map(|t| t.expect("every index seen once")).collect();
    for (attr, count) in &rejected {
        log::info!("dropped {count} `{attr}` annotations during canonicalization");
    }
    let mut dataset = EmbeddingDataset::new(matrix.d, matrix.values, tokens)?;
    dataset.rejected = rejected;
    Ok(dataset)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn token(i: usize, split: Split, form: &str, tag: &str) -> LabeledToken {
        LabeledToken { row_index: i, word_form: form.into(), split, tag: parse_tag(tag).unwrap().0 }
    }

    #[test]
    fn parse_tag_canonicalizes_pairs() {
        let (tag, rejected) = parse_tag("Gender=MASC+FEM;Comparison={CMPR};Tense=PST|PRS;Other=LGSPEC1").unwrap();
        assert_eq!(tag.get("Gender").unwrap(), "FEM+MASC");
        assert_eq!(tag.get("Comparison").unwrap(), "CMPR");
        assert!(!tag.contains_key("Tense"));
        assert!(!tag.contains_key("Other"));
        assert_eq!(rejected, vec!["Tense".to_string()]);
        assert!(parse_tag("Tense=PST;Tense=PRS").is_err());
        assert!(parse_tag("Tense").is_err());
        assert!(parse_tag("_").unwrap().0.is_empty());
    }

    #[test]
    fn save_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let tokens = vec![
            token(0, Split::Train, "has", "Person=3;Number=SG;Tense=PRS"),
            token(1, Split::Validation, "had", "Tense=PST"),
            token(2, Split::Test, "", ""),
        ];
        let ds = EmbeddingDataset::new(2, vec![0.5, 1.0, -1.0, 2.0, 3.0, 4.0], tokens).unwrap();
        let (m, l) = (dir.path().join("m.bin"), dir.path().join("l.tsv"));
        ds.save(&m, &l).unwrap();
        let back = load_dataset(&m, &l).unwrap();
        assert_eq!(back.len(), 3);
        assert_eq!(back.tokens(), ds.tokens());
        assert_eq!(back.embeddings(), ds.embeddings());
        assert_eq!(back.registry()["Tense"]["PST"], [0, 1, 0]);
    }

    #[test]
    fn row_count_mismatch_is_a_consistency_error() {
        let dir = tempfile::tempdir().unwrap();
        let (m, l) = (dir.path().join("m.bin"), dir.path().join("l.tsv"));
        format::write_matrix(File::create(&m).unwrap(), 3, 1, &[0.0, 1.0, 2.0]).unwrap();
        let labels: Vec<RawLabel> = (0..4)
            .map(|i| RawLabel { index: i, split: "train".into(), word_form: format!("w{i}"), tag: "A=X".into() })
            .collect();
        format::write_labels(File::create(&l).unwrap(), &labels).unwrap();
        assert!(matches!(load_dataset(&m, &l), Err(Error::Consistency(_))));
    }

    #[test]
    fn nan_reports_its_row() {
        let dir = tempfile::tempdir().unwrap();
        let (m, l) = (dir.path().join("m.bin"), dir.path().join("l.tsv"));
        let mut values = vec![0.0f32; 10 * 2];
        values[7 * 2 + 1] = f32::NAN;
        format::write_matrix(File::create(&m).unwrap(), 10, 2, &values).unwrap();
        let labels: Vec<RawLabel> = (0..10)
            .map(|i| RawLabel { index: i, split: "train".into(), word_form: format!("w{i}"), tag: "A=X".into() })
            .collect();
        format::write_labels(File::create(&l).unwrap(), &labels).unwrap();
        assert!(matches!(load_dataset(&m, &l), Err(Error::Data { row: 7 })));
    }

    #[test]
    fn duplicate_and_out_of_range_indices() {
        let dir = tempfile::tempdir().unwrap();
        let (m, l) = (dir.path().join("m.bin"), dir.path().join("l.tsv"));
        format::write_matrix(File::create(&m).unwrap(), 2, 1, &[0.0, 1.0]).unwrap();
        for idx in [[0, 0], [0, 2]] {
            let labels: Vec<RawLabel> = idx
                .iter()
                .map(|&i| RawLabel { index: i, split: "test".into(), word_form: "w".into(), tag: "".into() })
                .collect();
            format::write_labels(File::create(&l).unwrap(), &labels).unwrap();
            assert!(matches!(load_dataset(&m, &l), Err(Error::Consistency(_))));
        }
    }

    #[test]
    fn split_names() {
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Validation);
        assert!("dev".parse::<Split>().is_err());
    }
}
