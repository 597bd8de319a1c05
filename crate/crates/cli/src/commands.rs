use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use semdlp::classifiers::{load_model, save_model, ClassifierSpec};
use semdlp::corpus::{load_corpus, load_stoplist, write_corpus};
use semdlp::dlp::{load_policy, scan, AuditLog, ContextTemplate};
use semdlp::evaluation::{
    compare, generate_synthetic_corpus, mutate_text, render_accuracy_table, render_comparison,
    run_experiment, AccuracyTable, ComparisonMatrix, EvalError, EvaluationReport, MutationSpec,
    MutationUnit, NamedClassifier, NamedCorpus, SplitPlan, SyntheticSpec, TableAxis,
};
use semdlp::{tokenize, ClassifierKind, LabeledCorpus, StopList, TfIdfConfig};
use serde::Serialize;

use crate::config::{pick, require, usage, Axis, ClassifierSection, FileConfig};
use crate::{
    ClassifierArgs, ClassifyArgs, Cli, Command, EvaluateArgs, GenCorpusArgs, MutateArgs, ScanArgs,
    TrainArgs,
};

struct Globals {
    seed: u64,
    quiet: bool,
}

impl Globals {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let file = FileConfig::load(cli.config.as_deref())?;
    let g = Globals {
        seed: pick(cli.seed, file.seed, 0),
        quiet: cli.quiet || file.quiet.unwrap_or(false),
    };
    match cli.command {
        Command::Train(a) => train(&g, a, &file),
        Command::Evaluate(a) => evaluate(&g, a, &file),
        Command::Classify(a) => classify(&g, a, &file),
        Command::Scan(a) => scan_cmd(&g, a, &file),
        Command::Mutate(a) => mutate(&g, a, &file),
        Command::GenCorpus(a) => gen_corpus(&g, a, &file),
    }
}

fn stoplist(flag: Option<PathBuf>, file: &FileConfig) -> Result<StopList> {
    match flag.or_else(|| file.stoplist.clone()) {
        Some(p) => Ok(load_stoplist(&p)?),
        None => Ok(StopList::new()),
    }
}

fn classifier_spec(kind: ClassifierKind, a: &ClassifierArgs, f: &ClassifierSection) -> Result<ClassifierSpec> {
    let defaults = ClassifierSpec::new(kind);
    let k = pick(a.k.map(|k| k as usize), f.k, defaults.k);
    let alpha = pick(a.alpha, f.alpha, defaults.alpha);
    if k == 0 {
        return Err(usage("k must be at least 1"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(usage(format!("alpha must be a positive number, got {alpha}")));
    }
    let base = TfIdfConfig::default();
    Ok(ClassifierSpec {
        kind,
        tfidf: TfIdfConfig {
            tf_variant: pick(a.tf, f.tf, base.tf_variant),
            idf_variant: pick(a.idf, f.idf, base.idf_variant),
            normalize: pick(a.normalize, f.normalize, base.normalize),
        },
        mode: pick(a.mode, f.mode, defaults.mode),
        k,
        alpha,
    })
}

fn load(root: &Path, lenient: bool, g: &Globals) -> Result<LabeledCorpus> {
    let loaded = load_corpus(root, !lenient).with_context(|| format!("loading corpus {}", root.display()))?;
    for p in &loaded.skipped {
        g.note(format!("skipped non-UTF-8 file {}", p.display()));
    }
    Ok(loaded.corpus)
}

fn train(g: &Globals, a: TrainArgs, f: &FileConfig) -> Result<ExitCode> {
    let root = require(a.corpus, f.train.corpus.clone(), "--corpus")?;
    let out = require(a.out, f.train.out.clone(), "--out")?;
    let kind = pick(a.kind, f.classifier.kind, ClassifierKind::Centroid);
    let spec = classifier_spec(kind, &a.classifier, &f.classifier)?;
    let stop = stoplist(a.classifier.stoplist, f)?;
    let corpus = load(&root, a.lenient || f.train.lenient.unwrap_or(false), g)?;

    let start = Instant::now();
    let model = spec.train(&corpus.tokenize(&stop))?;
    let elapsed = start.elapsed();
    save_model(&model, &out).with_context(|| format!("writing model {}", out.display()))?;
    g.note(format!(
        "trained {kind} on {} documents: {} terms, categories {}, {:.3}s",
        corpus.len(),
        model.tfidf().vocabulary().len(),
        model.categories().join(", "),
        elapsed.as_secs_f64()
    ));
    Ok(ExitCode::SUCCESS)
}

/// `NAME=DIR`, or a bare directory named after its last component.
fn named_corpus(arg: &str) -> (String, PathBuf) {
    if let Some((name, dir)) = arg.split_once('=') {
        if !name.is_empty() && !name.contains(['/', '\\']) {
            return (name.to_string(), PathBuf::from(dir));
        }
    }
    let path = PathBuf::from(arg);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| arg.to_string());
    (name, path)
}

#[derive(Serialize)]
struct EvaluationOutput<'a> {
    axis: Axis,
    report: &'a EvaluationReport,
    table: &'a AccuracyTable,
    comparison: &'a ComparisonMatrix,
}

fn evaluate(g: &Globals, a: EvaluateArgs, f: &FileConfig) -> Result<ExitCode> {
    let e = &f.evaluate;
    let corpus_args = if a.corpora.is_empty() { e.corpora.clone().unwrap_or_default() } else { a.corpora };
    if corpus_args.is_empty() {
        return Err(usage("evaluate needs at least one --corpus"));
    }
    let mut kinds = if a.kinds.is_empty() { e.kinds.clone().unwrap_or_default() } else { a.kinds };
    if kinds.is_empty() {
        kinds = ClassifierKind::ALL.to_vec();
    }
    let mut seen = Vec::new();
    kinds.retain(|k| !seen.contains(k) && {
        seen.push(*k);
        true
    });

    let plan = SplitPlan {
        train_fraction: pick(a.train_fraction, e.train_fraction, 0.8),
        runs: pick(a.runs.map(|r| r as usize), e.runs, 10),
        seed: g.seed,
        stratified: pick(a.stratified, e.stratified, true),
    };
    plan.validate().map_err(|err| usage(err.to_string()))?;
    let axis = pick(a.axis, e.axis, Axis::Datasets);
    let stop = stoplist(a.classifier.stoplist.clone(), f)?;
    let lenient = a.lenient || e.lenient.unwrap_or(false);

    let mut corpora = Vec::new();
    for arg in &corpus_args {
        let (name, dir) = named_corpus(arg);
        corpora.push(NamedCorpus::new(name, load(&dir, lenient, g)?));
    }
    let classifiers = kinds
        .iter()
        .map(|&k| Ok(NamedClassifier::new(k.as_str(), classifier_spec(k, &a.classifier, &f.classifier)?)))
        .collect::<Result<Vec<_>>>()?;

    let start = Instant::now();
    let report = run_experiment(&corpora, &classifiers, &plan, &stop)?;
    let table = report.accuracy_table(TableAxis::from(axis));
    let mut comparison = compare(&table)?;
    if a.t_test || e.t_test.unwrap_or(false) {
        comparison = comparison.with_paired_t(&report);
    }
    g.note(format!(
        "{} classifier(s) x {} corpus(es) x {} run(s) in {:.2}s",
        classifiers.len(),
        corpora.len(),
        plan.runs,
        start.elapsed().as_secs_f64()
    ));

    let tables = format!(
        "Mean accuracy (%)\n{}\nWins/losses, row classifier vs column classifier\n{}",
        render_accuracy_table(&table),
        render_comparison(&comparison)
    );
    if let Some(path) = a.report.or_else(|| e.report.clone()) {
        let out = EvaluationOutput { axis, report: &report, table: &table, comparison: &comparison };
        let json = serde_json::to_string_pretty(&out)? + "\n";
        fs::write(&path, json).with_context(|| format!("writing report {}", path.display()))?;
    }
    if let Some(path) = a.tables.or_else(|| e.tables.clone()) {
        fs::write(&path, &tables).with_context(|| format!("writing tables {}", path.display()))?;
    }
    if !g.quiet {
        print!("{tables}");
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct Classified<'a> {
    path: String,
    #[serde(flatten)]
    prediction: &'a semdlp::Prediction,
}

fn classify(_g: &Globals, a: ClassifyArgs, f: &FileConfig) -> Result<ExitCode> {
    let model_path = require(a.model, f.classify.model.clone(), "--model")?;
    let model = load_model(&model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let stop = stoplist(a.stoplist, f)?;
    let mut out = io::stdout().lock();
    for path in &a.paths {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let prediction = model.predict_tokens(&tokenize(&text, &stop));
        if a.json {
            let line = Classified { path: path.display().to_string(), prediction: &prediction };
            writeln!(out, "{}", serde_json::to_string(&line)?)?;
        } else {
            writeln!(out, "{}\t{}\tmargin {:.6}", path.display(), prediction.category, prediction.margin)?;
            for (cat, score) in &prediction.scores {
                writeln!(out, "  {cat}\t{score:.6}")?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Files as given; directories expanded to their files in name order.
fn expand(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in walkdir::WalkDir::new(p).sort_by_file_name() {
                let entry = entry.with_context(|| format!("walking {}", p.display()))?;
                if entry.file_type().is_file() {
                    out.push(entry.into_path());
                }
            }
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn scan_cmd(g: &Globals, a: ScanArgs, f: &FileConfig) -> Result<ExitCode> {
    let s = &f.scan;
    let model_path = require(a.model, s.model.clone(), "--model")?;
    let policy_path = require(a.policy, s.policy.clone(), "--policy")?;
    let audit_path = require(a.audit_log, s.audit_log.clone(), "--audit-log")?;
    let model = load_model(&model_path).with_context(|| format!("loading model {}", model_path.display()))?;
    let policy = load_policy(&policy_path).with_context(|| format!("loading policy {}", policy_path.display()))?;
    let stop = stoplist(a.stoplist, f)?;
    let defaults = ContextTemplate::default();
    let template = ContextTemplate {
        sender: pick(a.sender, s.sender.clone(), defaults.sender),
        receiver: pick(a.receiver, s.receiver.clone(), defaults.receiver),
        data_state: pick(a.data_state, s.data_state, defaults.data_state),
        receiver_zone: pick(a.receiver_zone, s.receiver_zone, defaults.receiver_zone),
    };
    let files = expand(&a.paths)?;
    let audit = AuditLog::open(&audit_path).with_context(|| format!("opening audit log {}", audit_path.display()))?;
    let report = scan(&files, &model, &policy, &stop, &template, &audit)?;
    if !g.quiet {
        let mut out = io::stdout().lock();
        for v in &report.verdicts {
            writeln!(out, "{}\t{}\t{}", v.action, v.category.as_deref().unwrap_or("-"), v.document_id)?;
        }
    }
    Ok(if report.has_blocking() { ExitCode::from(3) } else { ExitCode::SUCCESS })
}

fn mutate(g: &Globals, a: MutateArgs, f: &FileConfig) -> Result<ExitCode> {
    let m = &f.mutate;
    let operation = require(a.op, m.op, "--op")?;
    let rate = pick(a.rate, m.rate, 0.1);
    if !(0.0..=1.0).contains(&rate) {
        return Err(usage(format!("rate must lie in [0, 1], got {rate}")));
    }
    let unit = pick(a.unit, m.unit, MutationUnit::Word);
    let vocabulary: Vec<String> = match a.vocab.or_else(|| m.vocab.clone()) {
        Some(p) => fs::read_to_string(&p)
            .with_context(|| format!("reading vocabulary {}", p.display()))?
            .split_whitespace()
            .map(str::to_string)
            .collect(),
        None => Vec::new(),
    };
    if operation == semdlp::evaluation::MutationOp::Insert && vocabulary.is_empty() {
        return Err(usage("insert needs a non-empty --vocab file"));
    }
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let spec = MutationSpec::new(operation, rate, unit, g.seed);
    let mutated = mutate_text(&text, &spec, &vocabulary);
    match a.out {
        Some(p) => fs::write(&p, mutated).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().lock().write_all(mutated.as_bytes())?,
    }
    Ok(ExitCode::SUCCESS)
}

fn gen_corpus(g: &Globals, a: GenCorpusArgs, f: &FileConfig) -> Result<ExitCode> {
    let c = &f.gen_corpus;
    let out = require(a.out, c.out.clone(), "--out")?;
    let d = SyntheticSpec::default();
    let spec = SyntheticSpec {
        categories: pick(a.categories, c.categories, d.categories),
        docs_per_category: pick(a.docs, c.docs, d.docs_per_category),
        doc_length: pick(a.length, c.length, d.doc_length),
        topic_vocab_size: pick(a.topic_vocab, c.topic_vocab, d.topic_vocab_size),
        background_vocab_size: pick(a.background_vocab, c.background_vocab, d.background_vocab_size),
        noise: pick(a.noise, c.noise, d.noise),
        seed: g.seed,
    };
    let corpus = generate_synthetic_corpus(&spec).map_err(|e| match e {
        EvalError::InvalidSynthetic(m) => usage(m),
        other => other.into(),
    })?;
    write_corpus(&corpus, &out)?;
    // The generator settings sit beside the category directories; the
    // corpus loader only reads directories at the root.
    let echo = serde_json::to_string_pretty(&spec)? + "\n";
    fs::write(out.join("synthetic.json"), echo)?;
    g.note(format!("wrote {} documents in {} categories to {}", corpus.len(), spec.categories, out.display()));
    Ok(ExitCode::SUCCESS)
}
