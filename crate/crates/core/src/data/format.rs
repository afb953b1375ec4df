//! On-disk formats: the binary embedding matrix and the labels TSV.
//!
//! Matrix layout, little-endian: magic `IPRB`, version `u16 = 1`, `N: u64`,
//! `d: u32`, then `N·d` `f32` values row-major.

use std::io::{BufRead, Read, Write};

use crate::error::{Error, Result};

pub const MATRIX_MAGIC: &[u8; 4] = b"IPRB";
pub const MATRIX_VERSION: u16 = 1;
pub const LABELS_HEADER: &str = "index\tsplit\tword_form\ttag";

const HEADER_LEN: usize = 4 + 2 + 8 + 4;

/// Rows, dimension and row-major values of an embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatrix {
    pub n: usize,
    pub d: usize,
    pub values: Vec<f32>,
}

pub fn write_matrix<W: Write>(mut out: W, n: usize, d: usize, values: &[f32]) -> Result<()> {
    if values.len() != n * d {
        return Err(Error::InvalidInput(format!("{} values do not form a {n}x{d} matrix", values.len())));
    }
    let d32 = u32::try_from(d).map_err(|_| Error::InvalidInput(format!("dimension {d} does not fit in u32")))?;
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&MATRIX_VERSION.to_le_bytes())?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&d32.to_le_bytes())?;
    let mut buf = Vec::with_capacity(values.len() * 4);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_matrix<R: Read>(mut input: R) -> Result<RawMatrix> {
    let mut header = [0u8; HEADER_LEN];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Format("embedding file is shorter than its header".into()))?;
    if &header[0..4] != MATRIX_MAGIC {
        return Err(Error::Format("embedding file does not start with magic `IPRB`".into()));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != MATRIX_VERSION {
        return Err(Error::Format(format!("unsupported embedding format version {version}")));
    }
    let n = u64::from_le_bytes(header[6..14].try_into().expect("8 bytes"));
    let d = u32::from_le_bytes(header[14..18].try_into().expect("4 bytes")) as usize;
    let n = usize::try_from(n).map_err(|_| Error::Format(format!("row count {n} is too large")))?;
    let expected = n
        .checked_mul(d)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| Error::Format("matrix size overflows".into()))?;
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    if body.len() != expected {
        return Err(Error::Format(format!(
            "header declares {n}x{d} values ({expected} bytes) but body has {} bytes",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(RawMatrix { n, d, values })
}

/// One line of the labels file before canonicalization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLabel {
    pub index: usize,
    pub split: String,
    pub word_form: String,
    pub tag: String,
}

pub fn read_labels<R: BufRead>(input: R) -> Result<Vec<RawLabel>> {
    let mut lines = input.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header != LABELS_HEADER {
        return Err(Error::Format(format!("labels header must be `{}`", LABELS_HEADER.replace('\t', "\\t"))));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.is_empty() {
            continue;
        }
        let line = line.strip_suffix('\r').unwrap_or(&line);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(Error::Format(format!("labels line {lineno}: expected 4 fields, found {}", fields.len())));
        }
        let index = fields[0]
            .parse()
            .map_err(|_| Error::Format(format!("labels line {lineno}: bad index `{}`", fields[0])))?;
        out.push(RawLabel {
            index,
            split: fields[1].to_string(),
            word_form: fields[2].to_string(),
            tag: fields[3].to_string(),
        });
    }
    Ok(out)
}

pub fn write_labels<W: Write>(mut out: W, labels: &[RawLabel]) -> Result<()> {
    writeln!(out, "{LABELS_HEADER}")?;
    for l in labels {
        writeln!(out, "{}\t{}\t{}\t{}", l.index, l.split, l.word_form, l.tag)?;
    }
    Ok(())
}
