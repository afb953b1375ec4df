use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use morphoscope::data::{filter_attribute_values, schema_rows, EmbeddingDataset, Split};
use morphoscope::metrics::majority_baseline;
use morphoscope::probe::{gaussian_param_count, param_count};
use morphoscope::selection::{exhaustive_select, greedy_select, score_prefixes};
use morphoscope::synth::{generate, SynthProvenance, SynthSpec, GENERATOR_NAME};
use morphoscope::{CholFactor, Error, LabeledRows, MetricCurve, ProbeModel, SelectionTrace};
use serde::{Deserialize, Serialize};

use crate::provenance::{dataset_id, sha256_file, OutputProvenance};
use crate::svg::{self, Contour, Scatter};
use crate::{CliError, EvalArgs, ReportArgs, RunConfig, ScatterArgs, SelectArgs, Strategy, SynthArgs};

pub const MODEL_FILE: &str = "model.json";
pub const TRACE_TSV: &str = "trace.tsv";
pub const TRACE_JSON: &str = "trace.json";
pub const METRICS_TSV: &str = "metrics.tsv";
pub const METRICS_JSON: &str = "metrics.json";
pub const REPORT_MD: &str = "report.md";
pub const CURVES_SVG: &str = "curves.svg";
pub const SCATTER_SVG: &str = "scatter.svg";
pub const MATRIX_FILE: &str = "embeddings.bin";
pub const LABELS_FILE: &str = "labels.tsv";

pub const METRICS_HEADER: &str = "prefix\tdim\taccuracy\tlba\tmi_bits\tlbmi_bits\tlbnmi\tloglik_nats";

fn out_dir(config: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = config.out_dir();
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn model_path(config: &RunConfig, flag: &Option<PathBuf>) -> PathBuf {
    flag.clone().unwrap_or_else(|| config.out_dir().join(MODEL_FILE))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(morphoscope::Error::from)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn load_dataset(config: &RunConfig) -> Result<(EmbeddingDataset, [(&'static str, PathBuf); 2]), CliError> {
    let (matrix, labels) = config.dataset_paths()?;
    let mut dataset = EmbeddingDataset::load(matrix, labels)?;
    dataset.id = dataset_id(&sha256_file(matrix)?, &sha256_file(labels)?);
    for (attr, n) in dataset.rejected() {
        log::info!("{n} annotation(s) of `{attr}` rejected during canonicalization");
    }
    Ok((dataset, [("dataset", matrix.to_path_buf()), ("labels", labels.to_path_buf())]))
}

fn load_model(path: &Path) -> Result<ProbeModel, CliError> {
    Ok(ProbeModel::load(path)?)
}

/// Rows of `split` labeled by the model's schema, after checking the model
/// matches the dataset.
fn eval_rows(config: &RunConfig, model: &ProbeModel, dataset: &EmbeddingDataset, split: Split) -> Result<LabeledRows, CliError> {
    if dataset.dim() != model.dim() {
        return Err(CliError::Usage(format!(
            "model has dimension {} but the dataset has {}",
            model.dim(),
            dataset.dim()
        )));
    }
    let attribute = &model.schema().attribute;
    if let Some(requested) = &config.attribute {
        if requested != attribute {
            return Err(CliError::Usage(format!("model probes `{attribute}`, not `{requested}`")));
        }
    }
    if !dataset.registry().contains_key(attribute) {
        return Err(Error::UnknownAttribute(attribute.clone()).into());
    }
    let rows = schema_rows(dataset, model.schema(), split)?;
    if rows.is_empty() {
        return Err(CliError::Usage(format!("no `{attribute}` rows in the {split} split")));
    }
    Ok(rows)
}

fn inputs<'a>(files: &'a [(&'static str, PathBuf)]) -> Vec<(&'static str, &'a Path)> {
    files.iter().map(|(r, p)| (*r, p.as_path())).collect()
}

pub fn fit(config: &RunConfig) -> Result<(), CliError> {
    let attribute = config.attribute()?;
    let (dataset, files) = load_dataset(config)?;
    let filtered = filter_attribute_values(&dataset, attribute)?;
    let schema = filtered.schema().ok_or_else(|| {
        Error::InsufficientData(format!(
            "`{attribute}` has {} value(s) with at least the required word types in every split; need 2",
            filtered.kept.len()
        ))
    })?;
    let train = filtered.labeled_rows(&dataset, Split::Train)?;
    let mut model = ProbeModel::fit(schema, &train, &config.policy)?;
    let prov = OutputProvenance::new("fit", config, &inputs(&files))?;
    model.provenance.dataset_id = dataset.id.clone();
    model.provenance.fit_unix_time = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    model.provenance.inputs = prov.inputs;
    model.provenance.config = prov.config;
    let path = out_dir(config)?.join(MODEL_FILE);
    model.save(&path)?;

    let mut train_counts = vec![0usize; model.n_values()];
    for &v in train.labels() {
        train_counts[v] += 1;
    }
    println!("attribute\t{attribute}");
    for ((value, types), (n, p)) in filtered.kept.iter().zip(train_counts.iter().zip(model.class_prior())) {
        println!(
            "value\t{value}\ttrain_rows={n}\tprior={p:.6}\ttypes(train,validation,test)={},{},{}",
            types[0], types[1], types[2]
        );
    }
    for (value, types) in &filtered.dropped {
        println!("dropped\t{value}\ttypes(train,validation,test)={},{},{}", types[0], types[1], types[2]);
    }
    let d = model.dim() as u64;
    println!(
        "param_count\td={d}\tper_value_gaussian={}\ttotal={}",
        gaussian_param_count(d),
        param_count(d, model.n_values() as u64)
    );
    println!("wrote\t{}", path.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TraceDocument {
    pub split: Split,
    pub strategy: String,
    pub trace: SelectionTrace,
    pub provenance: OutputProvenance,
}

pub fn select(config: &RunConfig, args: &SelectArgs) -> Result<(), CliError> {
    let model_file = model_path(config, &args.model);
    let model = load_model(&model_file)?;
    let (dataset, files) = load_dataset(config)?;
    let split = config.split_or(Split::Validation);
    let rows = eval_rows(config, &model, &dataset, split)?;
    let (trace, strategy) = match args.strategy {
        Strategy::Greedy => (greedy_select(&model, &rows, config.max_k, config.criterion)?, "greedy"),
        Strategy::Exhaustive => {
            let k = args.k.ok_or_else(|| CliError::Usage("--strategy exhaustive needs --k".into()))?;
            let (dims, _) = exhaustive_select(&model, &rows, k, config.criterion)?;
            (score_prefixes(&model, &rows, &dims, config.criterion)?, "exhaustive")
        }
    };
    let dir = out_dir(config)?;
    let mut tsv = BufWriter::new(File::create(dir.join(TRACE_TSV))?);
    trace.write_tsv(&mut tsv)?;
    tsv.flush()?;
    let mut all_inputs = files.to_vec();
    all_inputs.push(("model", model_file));
    let doc = TraceDocument {
        split,
        strategy: strategy.into(),
        trace,
        provenance: OutputProvenance::new("select", config, &inputs(&all_inputs))?,
    };
    write_json(&dir.join(TRACE_JSON), &doc)?;
    if let Some(last) = doc.trace.steps.last() {
        println!(
            "selected {} dims on {split}: {:?}\tfinal loglik {:.4} nats\tLBA {:.4}\tLBNMI {:.4}",
            doc.trace.steps.len(),
            doc.trace.dims(),
            last.log_likelihood,
            last.lba,
            last.lbnmi
        );
    }
    println!("wrote\t{}", dir.join(TRACE_TSV).display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MetricsDocument {
    pub attribute: String,
    pub values: Vec<String>,
    pub split: Split,
    pub n_rows: usize,
    pub entropy_bits: f64,
    pub majority_baseline: f64,
    pub dims: Vec<usize>,
    pub log_likelihood_nats: Vec<f64>,
    pub curve: MetricCurve,
    pub provenance: OutputProvenance,
}

pub fn eval(config: &RunConfig, args: &EvalArgs) -> Result<(), CliError> {
    let model_file = model_path(config, &args.model);
    let trace_file = args.trace.clone().unwrap_or_else(|| config.out_dir().join(TRACE_TSV));
    let model = load_model(&model_file)?;
    let dims = SelectionTrace::read_tsv_dims(BufReader::new(File::open(&trace_file)?))
        .map_err(|e| CliError::Usage(format!("trace {}: {e}", trace_file.display())))?;
    if dims.is_empty() {
        return Err(CliError::Usage(format!("trace {} lists no dimensions", trace_file.display())));
    }
    let (dataset, files) = load_dataset(config)?;
    let split = config.split_or(Split::Test);
    let rows = eval_rows(config, &model, &dataset, split)?;
    let trace = score_prefixes(&model, &rows, &dims, config.criterion)?;
    let curve = MetricCurve::from_prefixes(
        trace.steps.iter().map(|s| s.accuracy).collect(),
        trace.steps.iter().map(|s| s.mi_bits).collect(),
        trace.entropy_bits,
    )?;
    let dir = out_dir(config)?;
    let mut tsv = BufWriter::new(File::create(dir.join(METRICS_TSV))?);
    writeln!(tsv, "{METRICS_HEADER}")?;
    for (i, s) in trace.steps.iter().enumerate() {
        writeln!(
            tsv,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            i + 1,
            s.dim,
            curve.accuracy[i],
            curve.lba[i],
            curve.mi_bits[i],
            curve.lbmi_bits[i],
            curve.lbnmi[i],
            s.log_likelihood
        )?;
    }
    tsv.flush()?;
    let mut all_inputs = files.to_vec();
    all_inputs.push(("model", model_file));
    all_inputs.push(("trace", trace_file));
    let doc = MetricsDocument {
        attribute: model.schema().attribute.clone(),
        values: model.schema().values.clone(),
        split,
        n_rows: rows.len(),
        entropy_bits: trace.entropy_bits,
        majority_baseline: majority_baseline(rows.labels()),
        dims,
        log_likelihood_nats: trace.steps.iter().map(|s| s.log_likelihood).collect(),
        curve,
        provenance: OutputProvenance::new("eval", config, &inputs(&all_inputs))?,
    };
    write_json(&dir.join(METRICS_JSON), &doc)?;
    let last = doc.curve.len() - 1;
    println!(
        "{} on {split} ({} rows): H = {:.4} bits, majority baseline {:.4}, LBA {:.4}, LBMI {:.4} bits, LBNMI {:.4}",
        doc.attribute, doc.n_rows, doc.entropy_bits, doc.majority_baseline, doc.curve.lba[last], doc.curve.lbmi_bits[last], doc.curve.lbnmi[last]
    );
    println!("wrote\t{}", dir.join(METRICS_TSV).display());
    Ok(())
}

pub fn report(config: &RunConfig, args: &ReportArgs) -> Result<(), CliError> {
    let metrics_file = args.metrics.clone().unwrap_or_else(|| config.out_dir().join(METRICS_JSON));
    let text = fs::read_to_string(&metrics_file)?;
    let doc: MetricsDocument = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("metrics {}: {e}", metrics_file.display())))?;
    if doc.curve.is_empty() {
        return Err(CliError::Usage("metrics file has an empty curve".into()));
    }
    let prov = OutputProvenance::new("report", config, &[("metrics", metrics_file.as_path())])?;
    let prov_json = serde_json::to_string(&prov).expect("provenance serializes");
    let dir = out_dir(config)?;
    fs::write(dir.join(REPORT_MD), render_report(&doc, &prov))?;
    let title = format!("{} ({} split)", doc.attribute, doc.split);
    let svg = svg::curves(
        &title,
        &[("LBA", &doc.curve.lba), ("LBNMI", &doc.curve.lbnmi), ("accuracy", &doc.curve.accuracy)],
        &prov_json,
    );
    fs::write(dir.join(CURVES_SVG), svg)?;
    println!("wrote\t{}", dir.join(REPORT_MD).display());
    println!("wrote\t{}", dir.join(CURVES_SVG).display());
    Ok(())
}

fn render_report(doc: &MetricsDocument, prov: &OutputProvenance) -> String {
    let c = &doc.curve;
    let last = c.len() - 1;
    let mut out = String::new();
    let _ = writeln!(out, "# {}\n", doc.attribute);
    let _ = writeln!(out, "Values: {}\n", doc.values.join(", "));
    let _ = writeln!(out, "| quantity | value |\n|---|---|");
    let _ = writeln!(out, "| split | {} |", doc.split);
    let _ = writeln!(out, "| rows | {} |", doc.n_rows);
    let _ = writeln!(out, "| entropy (bits) | {:.4} |", doc.entropy_bits);
    let _ = writeln!(out, "| majority baseline | {:.4} |", doc.majority_baseline);
    let _ = writeln!(out, "| LBA at {} dims | {:.4} |", c.len(), c.lba[last]);
    let _ = writeln!(out, "| LBMI at {} dims (bits) | {:.4} |", c.len(), c.lbmi_bits[last]);
    let _ = writeln!(out, "| LBNMI at {} dims | {:.4} |", c.len(), c.lbnmi[last]);
    if c.lbnmi[last] > 0.0 {
        let target = 0.9 * c.lbnmi[last];
        if let Some(k) = c.lbnmi.iter().position(|&x| x >= target) {
            let _ = writeln!(out, "| dims to reach 90% of final LBNMI | {} |", k + 1);
        }
    }
    let _ = writeln!(out, "\n![curves]({CURVES_SVG})\n");
    let _ = writeln!(out, "## Per prefix\n");
    let _ = writeln!(out, "| k | dim | accuracy | LBA | MI (bits) | LBMI (bits) | LBNMI |\n|---|---|---|---|---|---|---|");
    for i in 0..c.len() {
        let _ = writeln!(
            out,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |",
            i + 1,
            doc.dims[i],
            c.accuracy[i],
            c.lba[i],
            c.mi_bits[i],
            c.lbmi_bits[i],
            c.lbnmi[i]
        );
    }
    let _ = writeln!(out, "\n## Provenance\n");
    let _ = writeln!(out, "- tool: {} {}", prov.tool, prov.tool_version);
    for (role, sha) in prov.inputs.iter().chain(&doc.provenance.inputs) {
        let _ = writeln!(out, "- {role}: sha256 {sha}");
    }
    out
}

fn parse_dims(text: &str, d: usize) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Usage(format!("--dims expects two indices like `3,17`, got `{text}`"));
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(bad());
    }
    let i: usize = parts[0].parse().map_err(|_| bad())?;
    let j: usize = parts[1].parse().map_err(|_| bad())?;
    if i == j {
        return Err(CliError::Usage(format!("--dims needs two different dimensions, got {i} twice")));
    }
    if i >= d || j >= d {
        return Err(CliError::Usage(format!("--dims {i},{j} out of range for dimension {d}")));
    }
    Ok((i, j))
}

pub fn scatter(config: &RunConfig, args: &ScatterArgs) -> Result<(), CliError> {
    let model_file = model_path(config, &args.model);
    let model = load_model(&model_file)?;
    let (i, j) = parse_dims(&args.dims, model.dim())?;
    let (dataset, files) = load_dataset(config)?;
    let split = config.split_or(Split::Test);
    let rows = eval_rows(config, &model, &dataset, split)?;
    let points: Vec<(f64, f64, usize)> = (0..rows.len())
        .map(|r| (rows.row(r)[i], rows.row(r)[j], rows.labels()[r]))
        .collect();
    let contours = model
        .gaussians()
        .iter()
        .zip(&model.schema().values)
        .map(|(g, value)| {
            let l = CholFactor::factorize(g, &[i, j])?.lower();
            Ok(Contour {
                value: value.clone(),
                mean: [g.mean()[i], g.mean()[j]],
                lower: [[l[(0, 0)], 0.0], [l[(1, 0)], l[(1, 1)]]],
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut all_inputs = files.to_vec();
    all_inputs.push(("model", model_file));
    let prov = OutputProvenance::new("scatter", config, &inputs(&all_inputs))?;
    let plot = Scatter {
        title: format!("{} ({} split)", model.schema().attribute, split),
        axis_labels: [format!("dimension {i}"), format!("dimension {j}")],
        values: &model.schema().values,
        points: &points,
        contours: &contours,
        metadata: serde_json::to_string(&prov).expect("provenance serializes"),
    };
    let path = match &config.out {
        Some(p) if p.extension().is_some_and(|e| e == "svg") => p.clone(),
        _ => out_dir(config)?.join(SCATTER_SVG),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&path, svg::scatter(&plot))?;
    println!("wrote\t{}", path.display());
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SynthDocument {
    #[serde(flatten)]
    pub synth: SynthProvenance,
    pub provenance: OutputProvenance,
}

pub fn synth(config: &RunConfig, args: &SynthArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.spec)?;
    let spec: SynthSpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("spec {}: {e}", args.spec.display())))?;
    let dataset = generate(&spec)?;
    let dir = out_dir(config)?;
    dataset.save(&dir.join(MATRIX_FILE), &dir.join(LABELS_FILE))?;
    let doc = SynthDocument {
        synth: SynthProvenance { generator: GENERATOR_NAME.into(), seed: spec.seed, spec },
        provenance: OutputProvenance::new("synth", config, &[("spec", args.spec.as_path())])?,
    };
    write_json(&dir.join("provenance.json"), &doc)?;
    println!("wrote\t{}\t{} rows, d = {}", dir.join(MATRIX_FILE).display(), dataset.len(), dataset.dim());
    println!("wrote\t{}", dir.join(LABELS_FILE).display());
    Ok(())
}
