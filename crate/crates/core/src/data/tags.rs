//! Canonicalization of UniMorph feature annotations.
//!
//! Applied to the VALUE side of each `Attribute=VALUE` pair:
//!
//! 1. annotations containing a disjunction (`|`, or an `OR` constituent) are rejected;
//! 2. braces are stripped (`{CMPR}` → `CMPR`);
//! 3. `PST+PRF` is accepted as a tense value even though `PRF` is an aspect;
//! 4. conjunctions are sorted alphabetically and must stay within one attribute;
//! 5. language-specific (`LGSPEC*`) features are discarded.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TagOutcome {
    Accepted(String),
    /// Contained a disjunction; the row is excluded for this attribute.
    Disjunction,
    /// Only language-specific features; dropped.
    LanguageSpecific,
}

impl TagOutcome {
    pub fn accepted(&self) -> Option<&str> {
        match self {
            TagOutcome::Accepted(s) => Some(s),
            _ => None,
        }
    }
}

const PERFECT_PAST: [&str; 2] = ["PST", "PRF"];

pub fn canonicalize_tag(raw: &str) -> Result<TagOutcome> {
    let raw = raw.trim();
    if raw.contains('|') {
        return Ok(TagOutcome::Disjunction);
    }
    let stripped: String = raw.chars().filter(|c| *c != '{' && *c != '}').collect();
    let mut parts = Vec::new();
    for part in stripped.split(|c: char| c == '+' || c.is_whitespace()) {
        if part.is_empty() {
            if stripped.contains('+') {
                return Err(Error::InvalidTag(format!("empty constituent in `{raw}`")));
            }
            continue;
        }
        if part == "OR" {
            return Ok(TagOutcome::Disjunction);
        }
        parts.push(part);
    }
    if parts.is_empty() {
        return Err(Error::InvalidTag(format!("empty annotation `{raw}`")));
    }
    parts.retain(|p| !is_language_specific(p));
    if parts.is_empty() {
        return Ok(TagOutcome::LanguageSpecific);
    }
    parts.sort_unstable();
    parts.dedup();

    if parts.len() == 2 && PERFECT_PAST.iter().all(|f| parts.contains(f)) {
        return Ok(TagOutcome::Accepted(PERFECT_PAST.join("+")));
    }
    if parts.len() > 1 {
        let mut owner: Option<(&str, &str)> = None;
        for p in &parts {
            if let Some(attr) = attribute_of(p) {
                match owner {
                    Some((first, other)) if first != attr => {
                        return Err(Error::InvalidTag(format!(
                            "`{raw}` conjoins {other} ({first}) with {p} ({attr})"
                        )));
                    }
                    None => owner = Some((attr, p)),
                    _ => {}
                }
            }
        }
    }
    Ok(TagOutcome::Accepted(parts.join("+")))
}

pub fn is_language_specific(feature: &str) -> bool {
    feature.starts_with("LGSPEC")
}

/// UniMorph dimension of a feature, if it is a known universal feature.
pub fn attribute_of(feature: &str) -> Option<&'static str> {
    UNIMORPH_FEATURES
        .iter()
        .find(|(_, feats)| feats.contains(&feature))
        .map(|(attr, _)| *attr)
}

const UNIMORPH_FEATURES: &[(&str, &[&str])] = &[
    ("Aktionsart", &["ACCMP", "ACH", "ACTY", "ATEL", "DUR", "DYN", "PCT", "SEMEL", "STAT", "TEL"]),
    ("Animacy", &["ANIM", "HUM", "INAN", "NHUM"]),
    ("Argument", &["ARGAC3S"]),
    ("Aspect", &["HAB", "IPFV", "ITER", "PFV", "PRF", "PROG", "PROSP"]),
    (
        "Case",
        &[
            "ABL", "ABS", "ACC", "ALL", "ANTE", "APPRX", "APUD", "AT", "AVR", "BEN", "BYWAY", "CIRC", "COM",
            "COMPV", "DAT", "EQTV", "ERG", "ESS", "FRML", "GEN", "IN", "INS", "INTER", "NOM", "NOMS", "ON",
            "ONHR", "ONVR", "POST", "PRIV", "PROL", "PROPR", "PROX", "PRP", "PRT", "REL", "REM", "SUB", "TERM",
            "TRANS", "VERS", "VOC",
        ],
    ),
    ("Comparison", &["AB", "CMPR", "EQT", "RL", "SPRL"]),
    ("Definiteness", &["DEF", "INDF", "NSPEC", "SPEC"]),
    ("Deixis", &["ABV", "BEL", "EVEN", "MED", "NOREF", "NVIS", "PHOR", "PROX", "REF1", "REF2", "REMT", "VIS"]),
    ("Evidentiality", &["ASSUM", "AUD", "DRCT", "FH", "HRSY", "INFER", "NFH", "NVSEN", "QUOT", "RPRT", "SEN"]),
    ("Finiteness", &["FIN", "NFIN"]),
    ("Gender", &["BANTU1-23", "FEM", "MASC", "NAKH1-8", "NEUT"]),
    ("Information Structure", &["FOC", "TOP"]),
    ("Interrogativity", &["DECL", "INT"]),
    (
        "Mood",
        &[
            "ADM", "AUNPRP", "AUPRP", "COND", "DEB", "DED", "IMP", "IND", "INTEN", "IRR", "LKLY", "OBLIG", "OPT",
            "PERM", "POT", "PURP", "REAL", "SBJV", "SIM",
        ],
    ),
    ("Number", &["DU", "GPAUC", "GRPAUC", "GRPL", "INVN", "PAUC", "PL", "SG", "TRI"]),
    (
        "Part of Speech",
        &[
            "ADJ", "ADP", "ADV", "ART", "AUX", "CLF", "COMP", "CONJ", "DET", "INTJ", "N", "NUM", "PART", "PRO",
            "PROPN", "V", "V.CVB", "V.MSDR", "V.PTCP",
        ],
    ),
    ("Person", &["0", "1", "2", "3", "4", "EXCL", "INCL", "OBV", "PRX"]),
    ("Polarity", &["NEG", "POS"]),
    ("Politeness", &["AVOID", "COL", "ELEV", "FOREG", "FORM", "HIGH", "HUMB", "INFM", "LIT", "LOW", "POL", "STELEV", "STSUPR"]),
    ("Possession", &["ALN", "NALN", "PSS1D", "PSS1P", "PSS1S", "PSS2D", "PSS2P", "PSS2S", "PSS3D", "PSS3P", "PSS3S", "PSSD"]),
    ("Switch-Reference", &["CN_R_MN", "DS", "DSADV", "LOG", "SEQMA", "SIMMA", "SS", "SSADV"]),
    ("Tense", &["1DAY", "FUT", "HOD", "IMMED", "PRS", "PST", "RCT", "RMT"]),
    ("Valency", &["APPL", "CAUS", "DITR", "IMPRS", "INTR", "RECP", "REFL", "TR"]),
    ("Voice", &["ACFOC", "ACT", "AGFOC", "ANTIP", "BFOC", "CFOC", "DIR", "IFOC", "INV", "LFOC", "MID", "PASS", "PFOC"]),
];
