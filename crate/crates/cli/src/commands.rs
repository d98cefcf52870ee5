use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::{json, Value};

use hostile_core::corpus_io::{
    corpus_stats, load_corpus_with, load_model, load_provenance, save_model, table, Corpus,
    CorpusStats, Format, Label, LabelSet,
};
use hostile_core::ensemble::{predict_batch, train_ensemble, BackendKind, FallbackStrategy, Model};
use hostile_core::metrics::{evaluate, EvalReport, Scope};
use hostile_core::{Error, Result};

use crate::config::{load_model_externals, parse_backend_override, RunConfig};

/// What a command hands back to `main`.
pub struct Outcome {
    /// Printed to stdout.
    pub stdout: String,
    /// Nonzero exit without an error message of its own.
    pub exit_code: u8,
}

impl Outcome {
    fn ok(stdout: String) -> Self {
        Outcome {
            stdout,
            exit_code: 0,
        }
    }
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.to_owned(),
            source: e,
        })?;
    }
    fs::write(path, content).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Write `summary` to `path`, or return it for stdout.
fn emit_summary(summary: &Value, path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => write_file(p, &to_json(summary)).map(|_| String::new()),
        None => Ok(to_json(summary)),
    }
}

fn require(path: Option<PathBuf>, what: &str) -> Result<PathBuf> {
    path.ok_or_else(|| Error::Config(format!("no {what} given (flag or config paths)")))
}

fn load_dataset(cfg: &RunConfig, path: &Path) -> Result<Corpus> {
    load_corpus_with(path, cfg.format_for(path), &cfg.columns)
}

pub struct TrainOptions {
    pub config: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub fallback: Option<String>,
    pub backends: Vec<String>,
    pub jobs: Option<usize>,
    pub summary: Option<PathBuf>,
}

/// Apply command-line overrides; the run seed drives every trainer.
fn apply_overrides(
    cfg: &mut RunConfig,
    seed: Option<u64>,
    fallback: Option<&str>,
    backends: &[String],
    jobs: Option<usize>,
) -> Result<BTreeMap<Label, BackendKind>> {
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.ensemble.train.seed = cfg.seed;
    if let Some(f) = fallback {
        cfg.ensemble.fallback = f.parse()?;
    }
    let mut overrides = BTreeMap::new();
    for b in backends {
        let (label, kind) = parse_backend_override(b)?;
        cfg.ensemble.backends.insert(label, kind.clone());
        overrides.insert(label, kind);
    }
    if let Some(j) = jobs {
        cfg.jobs = j;
    }
    Ok(overrides)
}

pub fn train(opts: TrainOptions) -> Result<Outcome> {
    let start = Instant::now();
    let mut cfg = RunConfig::load_or_default(opts.config.as_deref())?;
    if let Some(t) = opts.train {
        cfg.paths.train = Some(t);
    }
    apply_overrides(
        &mut cfg,
        opts.seed,
        opts.fallback.as_deref(),
        &opts.backends,
        opts.jobs,
    )?;
    cfg.ensemble.validate()?;
    cfg.validate_paths()?;
    let train_path = require(cfg.paths.train.clone(), "training corpus")?;
    let resources = cfg.load_resources()?;
    let corpus = load_dataset(&cfg, &train_path)?;
    let stats = corpus_stats(&corpus)?;
    let (model, report) = train_ensemble(&corpus, &cfg.ensemble, &resources, cfg.jobs)?;
    let hash = cfg.hash();
    let provenance = json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config_hash": hash,
        "config": cfg,
    });
    save_model(&model, &opts.out, provenance)?;
    let summary = json!({
        "command": "train",
        "config_hash": hash,
        "seed": cfg.seed,
        "bundle": opts.out,
        "corpus_stats": stats,
        "classifiers": report.classifiers,
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    Ok(Outcome::ok(emit_summary(
        &summary,
        opts.summary.as_deref(),
    )?))
}

pub struct PredictOptions {
    pub model: PathBuf,
    pub input: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub fallback: Option<String>,
    pub backends: Vec<String>,
    pub summary: Option<PathBuf>,
}

pub fn format_predictions(rows: &[(String, Option<LabelSet>)]) -> Result<String> {
    let tags: Vec<String> = rows
        .iter()
        .map(|(_, l)| l.map(|l| l.to_tags()).unwrap_or_default())
        .collect();
    let mut table_rows = vec![vec!["id", "labels"]];
    table_rows.extend(
        rows.iter()
            .zip(&tags)
            .map(|((id, _), t)| vec![id.as_str(), t.as_str()]),
    );
    table::write(&table_rows, Format::Tsv)
}

/// Read an `id<TAB>labels` prediction file. Rows with an empty label cell
/// map to `None`.
pub fn read_predictions(path: &Path) -> Result<Vec<(String, Option<LabelSet>)>> {
    let content = fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_owned(),
        source: e,
    })?;
    let records = table::parse(&content, Format::Tsv, path)?;
    let mut rows = Vec::with_capacity(records.len());
    for rec in records.into_iter().skip(1) {
        let (id, labels) = match rec.fields.as_slice() {
            [id] => (id, ""),
            [id, labels] => (id, labels.as_str()),
            _ => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: rec.line,
                    message: "expected `id<TAB>labels`".into(),
                })
            }
        };
        let labels = if labels.trim().is_empty() {
            None
        } else {
            Some(LabelSet::parse_tags(labels).map_err(|m| Error::Row {
                id: id.clone(),
                message: m,
            })?)
        };
        rows.push((id.clone(), labels));
    }
    Ok(rows)
}

pub fn predict(opts: PredictOptions) -> Result<Outcome> {
    let start = Instant::now();
    let mut cfg = RunConfig::load_or_default(opts.config.as_deref())?;
    let overrides = apply_overrides(
        &mut cfg,
        None,
        opts.fallback.as_deref(),
        &opts.backends,
        None,
    )?;
    cfg.validate_paths()?;
    let input = require(
        opts.input.or_else(|| cfg.paths.test.clone()),
        "input corpus",
    )?;
    let mut model = load_model(&opts.model)?;
    if let (Some(f), Model::BinaryRelevance(m)) = (opts.fallback.as_deref(), &mut model) {
        m.set_fallback(f.parse::<FallbackStrategy>()?);
    }
    let mut resources = cfg.load_resources()?;
    resources.external.clear();
    load_model_externals(&model, &overrides, &mut resources)?;
    let corpus = load_dataset(&cfg, &input)?;
    let out = predict_batch(&model, &corpus, &resources);
    let predicted: BTreeMap<&str, LabelSet> = out
        .predictions
        .iter()
        .map(|(id, l)| (id.as_str(), *l))
        .collect();
    let rows: Vec<(String, Option<LabelSet>)> = corpus
        .posts
        .iter()
        .map(|p| (p.id.clone(), predicted.get(p.id.as_str()).copied()))
        .collect();
    write_file(&opts.out, &format_predictions(&rows)?)?;
    for (id, err) in &out.failures {
        eprintln!("error: post {id}: {err}");
    }
    let bundle_hash = load_provenance(&opts.model)?
        .get("config_hash")
        .cloned()
        .unwrap_or(Value::Null);
    let summary = json!({
        "command": "predict",
        "config_hash": cfg.hash(),
        "bundle_config_hash": bundle_hash,
        "posts": corpus.len(),
        "predicted": out.predictions.len(),
        "failures": out.failures.iter().map(|(id, e)| json!({"id": id, "error": e.to_string()})).collect::<Vec<_>>(),
        "fallback_count": out.fallback_count,
        "wall_seconds": start.elapsed().as_secs_f64(),
    });
    let stdout = emit_summary(&summary, opts.summary.as_deref())?;
    Ok(Outcome {
        stdout,
        exit_code: if out.failures.is_empty() { 0 } else { 2 },
    })
}

pub struct EvalOptions {
    pub gold: Option<PathBuf>,
    pub predictions: PathBuf,
    pub config: Option<PathBuf>,
    pub scope: Option<String>,
    pub json: Option<PathBuf>,
    pub predict_summary: Option<PathBuf>,
}

fn describe_ids(ids: &[&str]) -> String {
    const SHOWN: usize = 10;
    let mut s = ids
        .iter()
        .take(SHOWN)
        .copied()
        .collect::<Vec<_>>()
        .join(", ");
    if ids.len() > SHOWN {
        s.push_str(&format!(" and {} more", ids.len() - SHOWN));
    }
    s
}

/// Align predictions to gold order; ids must match as sets.
pub fn align(
    gold: &Corpus,
    preds: &[(String, Option<LabelSet>)],
) -> Result<(Vec<LabelSet>, Vec<LabelSet>)> {
    let by_id: BTreeMap<&str, Option<LabelSet>> =
        preds.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let gold_ids: BTreeSet<&str> = gold.posts.iter().map(|p| p.id.as_str()).collect();
    let missing: Vec<&str> = gold_ids
        .iter()
        .copied()
        .filter(|id| !by_id.contains_key(id))
        .collect();
    let extra: Vec<&str> = by_id
        .keys()
        .copied()
        .filter(|id| !gold_ids.contains(id))
        .collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut msg = String::from("prediction ids do not match gold ids");
        if !missing.is_empty() {
            msg.push_str(&format!("; missing: {}", describe_ids(&missing)));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("; unexpected: {}", describe_ids(&extra)));
        }
        return Err(Error::Data(msg));
    }
    let gold_sets = gold.label_sets()?;
    let mut pred_sets = Vec::with_capacity(gold_sets.len());
    for post in &gold.posts {
        let labels = by_id[post.id.as_str()].ok_or_else(|| Error::Row {
            id: post.id.clone(),
            message: "prediction has no labels".into(),
        })?;
        pred_sets.push(labels);
    }
    Ok((gold_sets, pred_sets))
}

pub fn eval(opts: EvalOptions) -> Result<Outcome> {
    let mut cfg = RunConfig::load_or_default(opts.config.as_deref())?;
    if let Some(s) = &opts.scope {
        cfg.scope = s.parse::<Scope>()?;
    }
    let gold_path = require(opts.gold.or_else(|| cfg.paths.val.clone()), "gold corpus")?;
    let gold = load_dataset(&cfg, &gold_path)?;
    let preds = read_predictions(&opts.predictions)?;
    let (g, p) = align(&gold, &preds)?;
    let fallback_count = match &opts.predict_summary {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
            v.get("fallback_count")
                .and_then(Value::as_u64)
                .map(|n| n as usize)
        }
        None => None,
    };
    let report: EvalReport = evaluate(&g, &p, cfg.scope, fallback_count)?;
    if let Some(path) = &opts.json {
        write_file(path, &to_json(&report))?;
    }
    Ok(Outcome::ok(report.table()))
}

pub struct StatsOptions {
    pub inputs: Vec<PathBuf>,
    pub config: Option<PathBuf>,
    pub json: bool,
}

pub fn stats_table(rows: &[(String, CorpusStats)]) -> String {
    let mut out = format!(
        "{:<12} {:>6} {:>6} {:>10} {:>11} {:>14} {:>12}\n",
        "", "Fake", "Hate", "Offensive", "Defamation", "Total Hostile", "Non-Hostile"
    );
    for (name, s) in rows {
        out.push_str(&format!(
            "{:<12} {:>6} {:>6} {:>10} {:>11} {:>14} {:>12}\n",
            name, s.fake, s.hate, s.offensive, s.defamation, s.total_hostile, s.non_hostile
        ));
    }
    out
}

pub fn stats(opts: StatsOptions) -> Result<Outcome> {
    let cfg = RunConfig::load_or_default(opts.config.as_deref())?;
    let inputs = if opts.inputs.is_empty() {
        let mut seen = BTreeSet::new();
        [&cfg.paths.train, &cfg.paths.val, &cfg.paths.test]
            .into_iter()
            .flatten()
            .filter(|p| seen.insert((*p).clone()))
            .cloned()
            .collect()
    } else {
        opts.inputs
    };
    if inputs.is_empty() {
        return Err(Error::Config("no corpus given".into()));
    }
    let mut rows = Vec::new();
    for path in &inputs {
        let name = path.file_stem().map_or_else(
            || path.display().to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        rows.push((name, corpus_stats(&load_dataset(&cfg, path)?)?));
    }
    if rows.len() > 1 {
        let total = rows
            .iter()
            .map(|(_, s)| *s)
            .fold(CorpusStats::default(), |a, b| a + b);
        rows.push(("Total".into(), total));
    }
    let stdout = if opts.json {
        let map: BTreeMap<&str, &CorpusStats> = rows.iter().map(|(n, s)| (n.as_str(), s)).collect();
        to_json(&map)
    } else {
        stats_table(&rows)
    };
    Ok(Outcome::ok(stdout))
}
