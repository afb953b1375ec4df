#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use morphoscope::synth::{SynthSpec, SynthValue};

pub fn morphoscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_morphoscope"))
        .args(args)
        .env("MORPHOSCOPE_LOG", "error")
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it exits 0.
pub fn ok(args: &[&str]) -> String {
    let out = morphoscope(args);
    assert!(
        out.status.success(),
        "morphoscope {args:?} failed with {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn code(args: &[&str]) -> i32 {
    morphoscope(args).status.code().expect("exited normally")
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two unit-variance classes that differ by `shift` on each listed dim.
pub fn two_class_spec(d: usize, shifts: &[(usize, f64)], weights: [f64; 2], n: [usize; 3], seed: u64) -> SynthSpec {
    let mut shifted = vec![0.0; d];
    for &(j, x) in shifts {
        shifted[j] = x;
    }
    SynthSpec {
        d,
        attribute: "Tense".into(),
        values: vec![
            SynthValue { name: "PRS".into(), weight: weights[0], mean: vec![0.0; d], cov: None },
            SynthValue { name: "PST".into(), weight: weights[1], mean: shifted, cov: None },
        ],
        n_per_split: n,
        seed,
        informative_dims: shifts.iter().map(|s| s.0).collect(),
    }
}

/// Writes the spec and runs `synth`; returns (matrix, labels) paths.
pub fn synth(dir: &Path, spec: &SynthSpec) -> (PathBuf, PathBuf) {
    let spec_path = dir.join("spec.json");
    std::fs::write(&spec_path, serde_json::to_string(spec).unwrap()).unwrap();
    let data = dir.join("data");
    ok(&["synth", "--spec", s(&spec_path), "--out", s(&data)]);
    (data.join("embeddings.bin"), data.join("labels.tsv"))
}

/// `--dataset`, `--labels` and `--out` arguments.
pub fn io_args<'a>(data: &'a (PathBuf, PathBuf), out: &'a Path) -> Vec<&'a str> {
    vec!["--dataset", s(&data.0), "--labels", s(&data.1), "--out", s(out)]
}

pub fn tsv_column(path: &Path, name: &str) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split('\t').collect();
    let col = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split('\t').nth(col).unwrap().parse().unwrap()).collect()
}

fn attr<'a>(line: &'a str, name: &str) -> Option<&'a str> {
    let key = format!(" {name}=\"");
    let start = line.find(&key)? + key.len();
    let end = line[start..].find('"')? + start;
    Some(&line[start..end])
}

/// (cx, cy, data-value) of every plotted point.
pub fn svg_points(svg: &str) -> Vec<(f64, f64, String)> {
    svg.lines()
        .filter(|l| l.starts_with("<circle"))
        .map(|l| {
            (
                attr(l, "cx").unwrap().parse().unwrap(),
                attr(l, "cy").unwrap().parse().unwrap(),
                attr(l, "data-value").unwrap().to_string(),
            )
        })
        .collect()
}

/// Distance between the two class centroids and the mean within-class
/// standard deviation along the line joining them.
pub fn centroid_separation(points: &[(f64, f64, String)]) -> (f64, f64) {
    let mut labels: Vec<&str> = points.iter().map(|p| p.2.as_str()).collect();
    labels.sort();
    labels.dedup();
    assert_eq!(labels.len(), 2, "expected two classes, got {labels:?}");
    let class = |v: &str| -> Vec<(f64, f64)> { points.iter().filter(|p| p.2 == v).map(|p| (p.0, p.1)).collect() };
    let centroid = |pts: &[(f64, f64)]| {
        let n = pts.len() as f64;
        (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n)
    };
    let (a, b) = (class(labels[0]), class(labels[1]));
    let (ca, cb) = (centroid(&a), centroid(&b));
    let dist = ((cb.0 - ca.0).powi(2) + (cb.1 - ca.1).powi(2)).sqrt();
    let axis = ((cb.0 - ca.0) / dist, (cb.1 - ca.1) / dist);
    let spread = |pts: &[(f64, f64)], c: (f64, f64)| {
        let proj: Vec<f64> = pts.iter().map(|p| (p.0 - c.0) * axis.0 + (p.1 - c.1) * axis.1).collect();
        (proj.iter().map(|x| x * x).sum::<f64>() / (proj.len() as f64 - 1.0)).sqrt()
    };
    (dist, 0.5 * (spread(&a, ca) + spread(&b, cb)))
}
