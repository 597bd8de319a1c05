//! Acceptance criteria, one pass/fail line each. Runs without the libtest
//! harness so the lines always reach the output; exits nonzero if any
//! criterion fails.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use chrono::{TimeZone, Utc};
use semdlp::classifiers::{load_model, save_model, ClassifierSpec};
use semdlp::dlp::{decide, MatchedRule, PolicyTable};
use semdlp::evaluation::{
    compare, generate_synthetic_corpus, robustness, run_experiment, AccuracyTable, MutationOp,
    MutationSpec, MutationUnit, NamedClassifier, NamedCorpus, SplitPlan, SyntheticSpec,
};
use semdlp::{
    Action, CentroidMode, ClassifierKind, DataState, IdfVariant, LabeledCorpus, Model, Prediction,
    ReceiverZone, StopList, TfIdfConfig, TfIdfModel, TfVariant, TransferContext,
};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_semdlp")
}

fn tokens_of(corpus: &LabeledCorpus) -> Vec<Vec<String>> {
    let stop = StopList::new();
    corpus.tokenize(&stop).documents.into_iter().map(|d| d.tokens).collect()
}

fn all_kinds() -> Vec<NamedClassifier> {
    ClassifierKind::ALL
        .iter()
        .map(|&k| NamedClassifier::new(k.as_str(), ClassifierSpec::new(k)))
        .collect()
}

// 1. TF-IDF against a recount from raw token lists.
fn tfidf_oracle() {
    let spec = SyntheticSpec {
        categories: 2,
        docs_per_category: 10,
        doc_length: 40,
        topic_vocab_size: 12,
        background_vocab_size: 8,
        noise: 0.3,
        seed: 5,
    };
    let docs = tokens_of(&generate_synthetic_corpus(&spec).unwrap());
    assert_eq!(docs.len(), 20);
    let n = docs.len() as f64;
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for d in &docs {
        for t in d.iter().map(String::as_str).collect::<BTreeSet<_>>() {
            *df.entry(t).or_default() += 1;
        }
    }
    for tf_variant in [TfVariant::Raw, TfVariant::Log] {
        for idf_variant in [IdfVariant::Raw, IdfVariant::Log, IdfVariant::Smooth] {
            for normalize in [false, true] {
                let config = TfIdfConfig { tf_variant, idf_variant, normalize };
                let model = TfIdfModel::fit(&docs, config).unwrap();
                let vocab = model.vocabulary();
                assert_eq!(vocab.terms().iter().map(String::as_str).collect::<Vec<_>>(), df.keys().copied().collect::<Vec<_>>());
                for d in &docs {
                    let mut counts: BTreeMap<&str, f64> = BTreeMap::new();
                    for t in d {
                        *counts.entry(t).or_default() += 1.0;
                    }
                    let mut expected: BTreeMap<&str, f64> = counts
                        .iter()
                        .map(|(t, &c)| {
                            let tf = match tf_variant {
                                TfVariant::Raw => c,
                                TfVariant::Log => 1.0 + c.ln(),
                            };
                            let dft = df[t] as f64;
                            let idf = match idf_variant {
                                IdfVariant::Raw => n / dft,
                                IdfVariant::Log => (n / dft).ln(),
                                IdfVariant::Smooth => ((1.0 + n) / (1.0 + dft)).ln() + 1.0,
                            };
                            (*t, tf * idf)
                        })
                        .collect();
                    if normalize {
                        let norm = expected.values().map(|w| w * w).sum::<f64>().sqrt();
                        if norm > 0.0 {
                            expected.values_mut().for_each(|w| *w /= norm);
                        }
                    }
                    let got = model.transform(d);
                    for (term, want) in &df.keys().map(|t| (*t, expected.get(t).copied().unwrap_or(0.0))).collect::<Vec<_>>() {
                        let have = got.get(vocab.index_of(term).unwrap());
                        assert!((have - want).abs() <= 1e-12, "{config:?} {term}: {have} vs {want}");
                    }
                }
            }
        }
    }
}

// 2. Mean-cosine score equals the mean of pairwise cosines with members.
fn mean_cosine_identity() {
    let spec = SyntheticSpec {
        categories: 3,
        docs_per_category: 17,
        doc_length: 12,
        topic_vocab_size: 30,
        background_vocab_size: 40,
        noise: 0.6,
        seed: 11,
    };
    let full = generate_synthetic_corpus(&spec).unwrap();
    let corpus = full.subset(&(0..50).collect::<Vec<_>>());
    let tokenized = corpus.tokenize(&StopList::new());
    let mut clf = ClassifierSpec::new(ClassifierKind::Centroid);
    clf.mode = CentroidMode::MeanCosine;
    let Model::Centroid(model) = clf.train(&tokenized).unwrap() else { unreachable!() };

    let dense = |tokens: &[String]| -> HashMap<usize, f64> { model.tfidf().transform(tokens).iter().collect() };
    let cos = |a: &HashMap<usize, f64>, b: &HashMap<usize, f64>| {
        let dot: f64 = a.iter().map(|(i, x)| x * b.get(i).unwrap_or(&0.0)).sum();
        let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) }
    };
    let vectors: Vec<_> = tokenized.documents.iter().map(|d| dense(&d.tokens)).collect();
    let mut pairs = 0;
    for (i, doc) in tokenized.documents.iter().enumerate() {
        let scores = model.predict_tokens(&doc.tokens).scores;
        for cat in model.categories() {
            let members: Vec<usize> = (0..vectors.len())
                .filter(|&j| tokenized.documents[j].category.as_deref() == Some(cat))
                .collect();
            let want = members.iter().map(|&j| cos(&vectors[i], &vectors[j])).sum::<f64>() / members.len() as f64;
            assert!((scores[cat] - want).abs() <= 1e-9, "{} / {cat}: {} vs {want}", doc.id, scores[cat]);
            pairs += 1;
        }
    }
    assert_eq!(pairs, 150);
}

// 3. Win/loss counts from the published mean accuracies.
fn table_two() {
    let table = AccuracyTable::from_rows(
        &["Centroid", "NB", "kNN"],
        &["col1", "col2", "col3", "col4"],
        &[
            &[91.8, 93.9, 82.7, 94.2],
            &[89.3, 91.2, 84.3, 72.3],
            &[85.8, 87.5, 77.5, 84.6],
        ],
    );
    let m = compare(&table).unwrap();
    let cell = |r, c| {
        let wl = m.get(r, c).unwrap();
        format!("{}/{}", wl.wins, wl.losses)
    };
    assert_eq!(cell("Centroid", "NB"), "3/1");
    assert_eq!(cell("NB", "kNN"), "3/1");
    assert_eq!(cell("Centroid", "kNN"), "4/0");
    // The published table prints 4/1 for this pair, which no strict
    // elementwise comparison of the four means can produce.
    let printed = "4/1";
    assert_ne!(cell("Centroid", "kNN"), printed);
    println!("    note: Centroid vs kNN recomputes to 4/0; the published cell reads {printed}");
}

fn experiment(noise: f64) -> Vec<(String, f64)> {
    let spec = SyntheticSpec { noise, ..SyntheticSpec::default() };
    let corpus = generate_synthetic_corpus(&spec).unwrap();
    let plan = SplitPlan { seed: 1, ..SplitPlan::default() };
    let report = run_experiment(&[NamedCorpus::new("synthetic", corpus)], &all_kinds(), &plan, &StopList::new()).unwrap();
    report.cells.iter().map(|c| (c.classifier.clone(), c.mean_accuracy)).collect()
}

// 4. Perfect accuracy without noise; clear signal at noise 0.5.
fn separability() {
    for (name, acc) in experiment(0.0) {
        assert_eq!(acc, 1.0, "{name} at noise 0");
    }
    let noisy = experiment(0.5);
    println!("    noise 0.5 means: {noisy:?}");
    for (name, acc) in noisy {
        if name == "centroid" {
            assert!(acc >= 0.90, "centroid at noise 0.5: {acc}");
        }
        assert!(acc > 0.40, "{name} at noise 0.5: {acc}");
    }
}

// 5. Stability of a centroid model under word mutations.
fn robustness_criterion() {
    let spec = SyntheticSpec { noise: 0.2, ..SyntheticSpec::default() };
    let corpus = generate_synthetic_corpus(&spec).unwrap();
    let stop = StopList::new();
    let model = ClassifierSpec::new(ClassifierKind::Centroid).train(&corpus.tokenize(&stop)).unwrap();
    let docs = corpus.documents();
    let background = spec.background_words();
    let stability = |op, rate| robustness(&model, docs, &MutationSpec::new(op, rate, MutationUnit::Word, 1), &background, &stop);
    for rate in [0.1, 0.25, 0.5, 1.0] {
        assert_eq!(stability(MutationOp::Exchange, rate), 1.0, "exchange at {rate}");
    }
    let delete = stability(MutationOp::Delete, 0.1);
    let insert = stability(MutationOp::Insert, 0.1);
    println!("    delete 0.1: {delete}, insert 0.1: {insert}");
    assert!(delete >= 0.95);
    assert!(insert >= 0.95);
}

fn run_cli(args: &[&str]) -> std::process::Output {
    let out = Command::new(bin()).args(args).output().expect("run semdlp");
    assert!(
        out.status.code().is_some(),
        "semdlp {args:?} was killed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

// 6. Byte-identical reports; model files preserve predictions exactly.
fn determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = run_cli(&["--quiet", "--seed", "3", "gen-corpus", "--out", path_str(&corpus), "--categories", "3", "--docs", "20", "--noise", "0.4"]);
    assert!(out.status.success());
    let reports: Vec<Vec<u8>> = (0..2)
        .map(|i| {
            let report = dir.path().join(format!("report{i}.json"));
            let named = format!("syn={}", path_str(&corpus));
            let out = run_cli(&["--quiet", "--seed", "7", "evaluate", "--corpus", &named, "--runs", "4", "--t-test", "--report", path_str(&report)]);
            assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
            fs::read(&report).unwrap()
        })
        .collect();
    assert!(!reports[0].is_empty());
    assert_eq!(reports[0], reports[1]);

    let train = generate_synthetic_corpus(&SyntheticSpec { noise: 0.5, docs_per_category: 25, ..SyntheticSpec::default() }).unwrap();
    let probe = generate_synthetic_corpus(&SyntheticSpec { noise: 0.5, docs_per_category: 25, seed: 99, ..SyntheticSpec::default() }).unwrap();
    let probe = tokens_of(&probe);
    assert_eq!(probe.len(), 100);
    let tokenized = train.tokenize(&StopList::new());
    for kind in ClassifierKind::ALL {
        let model = ClassifierSpec::new(kind).train(&tokenized).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        save_model(&model, &path).unwrap();
        let loaded = load_model(&path).unwrap();
        for doc in &probe {
            let (a, b): (Prediction, Prediction) = (model.predict_tokens(doc), loaded.predict_tokens(doc));
            assert_eq!(a, b, "{kind}");
        }
        let again = dir.path().join(format!("{kind}-2.json"));
        save_model(&loaded, &again).unwrap();
        assert_eq!(fs::read(&path).unwrap(), fs::read(&again).unwrap(), "{kind} model bytes");
    }
}

const POLICY: &str = r#"{
  "category_levels": {"pub": "Public", "priv": "Privileged", "cls": "Classified", "top": "TopClassified"},
  "uncertain_margin": 0.1,
  "uncertain_action": "Quarantine",
  "default_action": "Allow",
  "rules": [
    {"min_level": "TopClassified", "receiver_zone": "external", "action": "Block"},
    {"min_level": "TopClassified", "action": "Encrypt"},
    {"min_level": "Classified", "data_state": "in_transit", "receiver_zone": "external", "action": "Quarantine"},
    {"min_level": "Classified", "format": "pdf", "action": "Encrypt"},
    {"min_level": "Privileged", "max_size_bytes": 1000, "action": "Audit"},
    {"min_level": "Privileged", "action": "Alert"}
  ]
}"#;

/// Category, data state, zone, format, size, margin, then the expected
/// action and matched rule.
type Case = (&'static str, DataState, ReceiverZone, &'static str, u64, f64, Action, MatchedRule);

// 7. Hand-enumerated verdicts, then a 100-file scan through the CLI.
fn policy_engine() {
    use Action::*;
    use DataState::*;
    use ReceiverZone::*;
    let policy = PolicyTable::parse(POLICY).unwrap();
    let t = Utc.with_ymd_and_hms(2025, 3, 1, 12, 0, 0).unwrap();
    let rule = MatchedRule::Rule;
    #[rustfmt::skip]
    let cases: [Case; 12] = [
        ("top",  InTransit, External, "txt", 500,  0.8,  Block,      rule(0)),
        ("top",  InTransit, Internal, "txt", 500,  0.8,  Encrypt,    rule(1)),
        ("top",  AtRest,    Internal, "pdf", 5000, 0.8,  Encrypt,    rule(1)),
        ("cls",  InTransit, External, "txt", 500,  0.8,  Quarantine, rule(2)),
        ("cls",  InUse,     External, "PDF", 500,  0.8,  Encrypt,    rule(3)),
        ("cls",  InTransit, Internal, "txt", 500,  0.8,  Audit,      rule(4)),
        ("cls",  AtRest,    Internal, "txt", 5000, 0.8,  Alert,      rule(5)),
        ("priv", InTransit, External, "pdf", 500,  0.8,  Audit,      rule(4)),
        ("priv", InTransit, External, "txt", 1000, 0.8,  Audit,      rule(4)),
        ("priv", InUse,     Internal, "txt", 1001, 0.8,  Alert,      rule(5)),
        // A margin equal to the threshold is not gated.
        ("pub",  InTransit, External, "pdf", 10,   0.1,  Allow,      MatchedRule::Default),
        ("top",  InTransit, External, "txt", 500,  0.05, Quarantine, MatchedRule::Uncertain),
    ];
    for (i, (cat, state, zone, format, size, margin, action, matched)) in cases.into_iter().enumerate() {
        let prediction = Prediction {
            category: cat.to_string(),
            scores: BTreeMap::from([(cat.to_string(), 1.0)]),
            margin,
        };
        let ctx = TransferContext {
            sender: "alice".into(),
            receiver: "bob".into(),
            format: format.into(),
            timestamp: t,
            size_bytes: size,
            data_state: state,
            receiver_zone: zone,
        };
        let v = decide(&format!("case{i}"), &prediction, &ctx, &policy, t).unwrap();
        assert_eq!((v.action, v.matched_rule), (action, matched), "case {i}");
    }

    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(run_cli(&["--quiet", "--seed", "1", "gen-corpus", "--out", path_str(&corpus), "--categories", "4", "--docs", "25"]).status.success());
    let model = dir.path().join("model.json");
    assert!(run_cli(&["--quiet", "train", "--corpus", path_str(&corpus), "--out", path_str(&model)]).status.success());
    let policy_path = dir.path().join("policy.json");
    fs::write(
        &policy_path,
        r#"{"category_levels": {"cat00": "Public", "cat01": "Privileged", "cat02": "Classified", "cat03": "TopClassified"},
            "default_action": "Allow",
            "rules": [{"min_level": "TopClassified", "action": "Block"}, {"min_level": "Classified", "action": "Encrypt"}]}"#,
    )
    .unwrap();
    let audit = dir.path().join("audit.jsonl");
    let dirs: Vec<PathBuf> = (0..4).map(|c| corpus.join(format!("cat{c:02}"))).collect();
    let mut args = vec!["--quiet", "scan", "--model", path_str(&model), "--policy", path_str(&policy_path), "--audit-log", path_str(&audit)];
    args.extend(dirs.iter().map(|d| path_str(d)));
    let out = run_cli(&args);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let log = fs::read_to_string(&audit).unwrap();
    assert_eq!(log.lines().count(), 100);
    assert!(log.lines().all(|l| serde_json::from_str::<serde_json::Value>(l).is_ok()));
    assert_eq!(log.lines().filter(|l| l.contains("\"action\":\"Block\"")).count(), 25);
}

struct Criterion {
    id: u8,
    what: &'static str,
    budget: Duration,
    run: fn(),
}

fn main() {
    let criteria = [
        Criterion { id: 1, what: "TF-IDF matches brute-force recount within 1e-12", budget: Duration::from_secs(1), run: tfidf_oracle },
        Criterion { id: 2, what: "mean-cosine equals mean pairwise cosine within 1e-9", budget: Duration::from_secs(1), run: mean_cosine_identity },
        Criterion { id: 3, what: "win/loss counts from published means: 3/1, 3/1, 4/0", budget: Duration::from_secs(1), run: table_two },
        Criterion { id: 4, what: "separability at noise 0 and 0.5", budget: Duration::from_secs(30), run: separability },
        Criterion { id: 5, what: "robustness to exchange, deletion, insertion", budget: Duration::from_secs(10), run: robustness_criterion },
        Criterion { id: 6, what: "byte-identical reports and lossless model files", budget: Duration::from_secs(60), run: determinism },
        Criterion { id: 7, what: "policy verdict table and 100-file scan", budget: Duration::from_secs(60), run: policy_engine },
    ];
    let start = Instant::now();
    let mut failed = 0;
    for c in &criteria {
        let t = Instant::now();
        let ok = catch_unwind(AssertUnwindSafe(c.run)).is_ok();
        let elapsed = t.elapsed();
        let in_budget = elapsed <= c.budget;
        let pass = ok && in_budget;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {} ({:.2}s{})",
            c.id,
            if pass { "PASS" } else { "FAIL" },
            c.what,
            elapsed.as_secs_f64(),
            if in_budget { String::new() } else { format!(", over {}s budget", c.budget.as_secs()) },
        );
    }
    let total = start.elapsed();
    let pass = total < Duration::from_secs(120);
    if !pass {
        failed += 1;
    }
    println!(
        "criterion 8 {}: acceptance run under 2 minutes ({:.2}s)",
        if pass { "PASS" } else { "FAIL" },
        total.as_secs_f64()
    );
    if failed > 0 {
        println!("{failed} criterion line(s) failed");
        std::process::exit(1);
    }
}
