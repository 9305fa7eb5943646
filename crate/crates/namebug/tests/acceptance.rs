//! Acceptance criteria A1 to A10. Each criterion prints one PASS/FAIL line
//! to stderr (bypassing test output capture) and the test fails if any
//! criterion fails.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use namebug::formats::SynthSpecToml;
use namebug_core::detector::{
    evaluate, evaluate_predictions, generate_pairs, scan, train_detector, DetectorConfig, DetectorModel, EvalReport,
    Pattern, DEFAULT_THRESHOLDS,
};
use namebug_core::embeddings::{build_cbow_dataset, nearest, random_embedding, train_cbow, CbowConfig, EmbeddingMatrix};
use namebug_core::frontend::{parse, tokenize, BinaryOp, NodeKind};
use namebug_core::naming::{build_vocabulary, coverage_curve, embedding_token_stream, extract_name, TokenCounts, Vocabulary};
use namebug_core::neuralnet::Mlp;
use namebug_core::patterns::{gen_wrong_operand, mutate_operator, EncodingTables, Encoder};
use namebug_core::synthcorpus::{generate, ConventionSpec, Split, SynthCorpus};
use namebug_core::SourceFile;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    failed: Vec<&'static str>,
}

impl Outcome {
    fn record(&mut self, id: &'static str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        let _ = writeln!(std::io::stderr(), "{id} {verdict} {detail}");
        if !pass {
            self.failed.push(id);
        }
    }
}

// ---------------------------------------------------------------------------
// A1

fn a1(o: &mut Outcome) {
    let t = Instant::now();
    let rows = [
        ("list", "ID:list"),
        ("23", "LIT:23"),
        ("this", "LIT:this"),
        ("i++", "ID:i"),
        ("myObject.prop", "ID:prop"),
        ("myArray[5]", "ID:myArray"),
        ("nextElement()", "ID:nextElement"),
        ("db.allNames()[3]", "ID:allNames"),
    ];
    let mut mismatches = Vec::new();
    for (src, want) in rows {
        let program = parse(&format!("{src};"), "a1.js").unwrap();
        let NodeKind::Program(body) = &program.kind else { unreachable!() };
        let NodeKind::ExprStmt(e) = &body[0].kind else { unreachable!() };
        let got = extract_name(e).map(|n| n.as_str().to_string());
        if got.as_deref() != Some(want) {
            mismatches.push(format!("{src} -> {got:?}"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    o.record(
        "A1",
        mismatches.is_empty() && secs < 1.0,
        format!("name extraction: {}/8 rows exact, {secs:.3}s {mismatches:?}", 8 - mismatches.len()),
    );
}

// ---------------------------------------------------------------------------
// A2

fn a2(o: &mut Outcome) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for trial in 0..50u64 {
        let input = rng.gen_range(2..10);
        let hidden = rng.gen_range(2..10);
        let mut net = Mlp::init(input, hidden, trial);
        for p in net.parameters_mut() {
            *p += rng.gen_range(-0.3..0.3);
        }
        // Resample inputs that put a hidden unit near the ReLU kink.
        let x = loop {
            let x: Vec<f64> = (0..input).map(|_| rng.gen_range(-2.0..2.0)).collect();
            if net.min_abs_preactivation(&x).unwrap() >= 1e-4 {
                break x;
            }
        };
        let label = if rng.gen_bool(0.5) { 1.0 } else { 0.0 };
        worst = worst.max(net.gradient_check(&x, label).unwrap());
    }
    let secs = t.elapsed().as_secs_f64();
    o.record(
        "A2",
        worst < 1e-4 && secs < 30.0,
        format!("gradient check: max relative error {worst:.3e} over 50 networks (< 1e-4), {secs:.2}s"),
    );
}

// ---------------------------------------------------------------------------
// A3, A4, A6, A9 (pairing), A10 share one corpus and its models.

struct Experiment {
    train: Vec<SourceFile>,
    held: Vec<SourceFile>,
    held_sources: Vec<(String, String)>,
    buggy: Vec<SourceFile>,
    vocab: Vocabulary,
    learned: EmbeddingMatrix,
    random: EmbeddingMatrix,
    tables: EncodingTables,
    config: DetectorConfig,
}

fn parse_corpus(c: &SynthCorpus) -> (Vec<SourceFile>, Vec<Vec<String>>) {
    let mut files = Vec::new();
    let mut streams = Vec::new();
    for f in &c.files {
        files.push(SourceFile { id: f.id.clone(), program: parse(&f.source, &f.id).unwrap() });
        streams.push(embedding_token_stream(&tokenize(&f.source, &f.id).unwrap()));
    }
    (files, streams)
}

const EVAL_SEED: u64 = 11;

fn experiment() -> Experiment {
    let mut spec = ConventionSpec::demo(1);
    spec.file_count = 500;
    spec.bug_rate = 0.0;
    let train = generate(&spec, Split::Train).unwrap();
    spec.file_count = 200;
    let held = generate(&spec, Split::HeldOut).unwrap();
    let (train_files, streams) = parse_corpus(&train);
    let (held_files, _) = parse_corpus(&held);
    spec.bug_rate = 0.3;
    let (buggy, _) = parse_corpus(&generate(&spec, Split::HeldOut).unwrap());
    let vocab = build_vocabulary(&streams, 10_000).unwrap();
    let cbow = CbowConfig { window: 10, dim: 64, ..CbowConfig::default() };
    let dataset = build_cbow_dataset(&streams, &vocab, cbow.window);
    let learned = train_cbow(&dataset, &cbow, &vocab).unwrap().embedding;
    let random = random_embedding(&vocab, 64, 7).unwrap();
    let mut config = DetectorConfig { hidden: 64, ..DetectorConfig::default() };
    config.fit.epochs = 10;
    Experiment {
        train: train_files,
        held: held_files,
        buggy,
        held_sources: held.files.iter().map(|f| (f.id.clone(), f.source.clone())).collect(),
        vocab,
        learned,
        random,
        tables: EncodingTables::new(3),
        config,
    }
}

fn train_eval(x: &Experiment, emb: &EmbeddingMatrix, p: Pattern) -> (DetectorModel, EvalReport) {
    let enc = Encoder::new(&x.vocab, emb, &x.tables).unwrap();
    let model = train_detector(&x.train, p, &enc, &x.config).unwrap();
    let report = evaluate(&x.held, &model, &enc, &DEFAULT_THRESHOLDS, EVAL_SEED).unwrap();
    (model, report)
}

fn a3_a4_a6_a10(o: &mut Outcome, x: &Experiment, started: Instant) -> Vec<DetectorModel> {
    let mut learned = Vec::new();
    let mut random = Vec::new();
    let mut models = Vec::new();
    for p in Pattern::ALL {
        let (m, r) = train_eval(x, &x.learned, p);
        learned.push(r);
        models.push(m);
    }
    let a3_secs = started.elapsed().as_secs_f64();
    for p in Pattern::ALL {
        random.push(train_eval(x, &x.random, p).1);
    }
    let a4_secs = started.elapsed().as_secs_f64();

    let accs: Vec<String> = Pattern::ALL
        .iter()
        .zip(&learned)
        .map(|(p, r)| format!("{p} {:.4}", r.accuracy))
        .collect();
    o.record(
        "A3",
        learned.iter().all(|r| r.accuracy >= 0.85) && a3_secs < 600.0,
        format!("held-out accuracy (>= 0.85): {}, {a3_secs:.1}s", accs.join(", ")),
    );

    let not_worse = learned.iter().zip(&random).all(|(l, r)| l.accuracy >= r.accuracy - 0.01);
    let better = learned.iter().zip(&random).filter(|(l, r)| l.accuracy > r.accuracy).count();
    let cmp: Vec<String> = Pattern::ALL
        .iter()
        .zip(learned.iter().zip(&random))
        .map(|(p, (l, r))| format!("{p} {:.4} vs {:.4}", l.accuracy, r.accuracy))
        .collect();
    o.record(
        "A4",
        not_worse && better >= 2 && a4_secs < 900.0,
        format!("learned vs random: {}; strictly better on {better}/3, {a4_secs:.1}s", cmp.join(", ")),
    );

    // A6: monotone sweeps and nested warning sets.
    let mut monotone = true;
    let mut nested = true;
    let mut sizes = Vec::new();
    for (m, r) in models.iter().zip(&learned) {
        for w in r.per_threshold.windows(2) {
            monotone &= w[1].recall <= w[0].recall && w[1].fps <= w[0].fps;
        }
        let enc = m.encoder(&x.vocab, &x.learned).unwrap();
        let key = |w: &namebug_core::detector::Warning| (w.origin.clone(), w.summary.clone());
        let low: BTreeSet<_> = scan(&x.buggy, m, &enc, 0.5).unwrap().iter().map(key).collect();
        let high: BTreeSet<_> = scan(&x.buggy, m, &enc, 0.9).unwrap().iter().map(key).collect();
        nested &= high.is_subset(&low);
        sizes.push(format!("{} {}/{}", m.pattern, high.len(), low.len()));
    }
    o.record(
        "A6",
        monotone && nested,
        format!(
            "recall/#fps non-increasing: {monotone}; warnings(0.9) within warnings(0.5): {nested} ({})",
            sizes.join(", ")
        ),
    );

    // A10: parse and scan each held-out file with the trained models.
    let mut worst_mean = 0.0f64;
    for m in &models {
        let enc = m.encoder(&x.vocab, &x.learned).unwrap();
        let t = Instant::now();
        for (id, src) in &x.held_sources {
            let file = SourceFile { id: id.clone(), program: parse(src, id).unwrap() };
            scan(std::slice::from_ref(&file), m, &enc, 0.5).unwrap();
        }
        worst_mean = worst_mean.max(t.elapsed().as_secs_f64() * 1e3 / x.held_sources.len() as f64);
    }
    o.record(
        "A10",
        worst_mean < 50.0,
        format!("mean scan time per file {worst_mean:.3} ms (< 50 ms) over {} files", x.held_sources.len()),
    );
    models
}

// ---------------------------------------------------------------------------
// A5

/// Straightforward counting, written independently of the library code.
fn brute_force(pos: &[f64], neg: &[f64], t: f64) -> (usize, usize, usize, usize) {
    let mut correct = 0;
    let mut caught = 0;
    let mut fps = 0;
    for &d in pos {
        if !(d >= 0.5) {
            correct += 1;
        }
        if d > t {
            fps += 1;
        }
    }
    for &d in neg {
        if d >= 0.5 {
            correct += 1;
        }
        if d > t {
            caught += 1;
        }
    }
    (correct, pos.len() + neg.len(), caught, fps)
}

fn a5(o: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let specials = [0.0, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 0.4999999999, 0.5000000001];
    let draw = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.3) {
            specials[rng.gen_range(0..specials.len())]
        } else {
            rng.gen::<f64>()
        }
    };
    let mut mismatches = 0;
    let mut boundary_hits = 0;
    for _ in 0..1000 {
        let np = rng.gen_range(1..60);
        let nn = rng.gen_range(1..60);
        let pos: Vec<f64> = (0..np).map(|_| draw(&mut rng)).collect();
        let neg: Vec<f64> = (0..nn).map(|_| draw(&mut rng)).collect();
        boundary_hits += pos.iter().chain(&neg).filter(|d| DEFAULT_THRESHOLDS.contains(d)).count();
        let report = evaluate_predictions(&pos, &neg, &DEFAULT_THRESHOLDS);
        for (row, &t) in report.per_threshold.iter().zip(&DEFAULT_THRESHOLDS) {
            let (correct, total, caught, fps) = brute_force(&pos, &neg, t);
            let ok = report.accuracy == correct as f64 / total as f64
                && row.threshold == t
                && row.recall == caught as f64 / neg.len() as f64
                && row.fps == fps
                && report.count_pos == pos.len()
                && report.count_neg == neg.len();
            if !ok {
                mismatches += 1;
            }
        }
    }
    o.record(
        "A5",
        mismatches == 0 && boundary_hits > 0,
        format!("metric oracle: {mismatches} mismatches over 1000 sets x 5 thresholds ({boundary_hits} boundary values)"),
    );
}

// ---------------------------------------------------------------------------
// A7

fn run_cli(args: &[&str]) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["namebug"];
    argv.extend_from_slice(args);
    let code = namebug::cli::run(argv, &mut out, &mut err);
    assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
}

fn a7(o: &mut Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut spec = ConventionSpec::demo(7);
    spec.file_count = 60;
    fs::write(root.join("spec.toml"), SynthSpecToml::from_spec(&spec, 20).to_toml()).unwrap();
    fs::write(
        root.join("run.toml"),
        "train = 'corpus/train'\nvalidate = 'corpus/heldout'\nseed = 3\nhidden = 32\n\
         [cbow]\ndim = 32\nepochs = 2\n[fit]\nepochs = 3\n",
    )
    .unwrap();
    let p = |rel: &str| root.join(rel).to_str().unwrap().to_string();
    run_cli(&["synth", &p("spec.toml"), "--out", &p("corpus")]);
    for out in ["run1", "run2"] {
        let out = p(out);
        let args = ["--config", &p("run.toml"), "--out", &out];
        run_cli(&[&args[..], &["pipeline"]].concat());
        for pattern in Pattern::ALL {
            run_cli(&[&args[..], &["scan", "--pattern", pattern.as_str()]].concat());
        }
    }
    let mut names = vec!["vocab.txt".to_string(), "tokens.txt".to_string(), "embedding.txt".to_string()];
    for pattern in Pattern::ALL {
        names.push(format!("examples-{pattern}.txt"));
        names.push(format!("model-{pattern}.txt"));
        names.push(format!("warnings-{pattern}.txt"));
        names.push(format!("eval-{pattern}.json"));
    }
    let read = |run: &str, name: &str| fs::read(Path::new(&p(run)).join(name)).unwrap();
    let differing: Vec<&String> = names.iter().filter(|n| read("run1", n) != read("run2", n)).collect();
    o.record(
        "A7",
        differing.is_empty(),
        format!("two pipeline runs: {}/{} output files byte-identical {differing:?}", names.len() - differing.len(), names.len()),
    );
}

// ---------------------------------------------------------------------------
// A8

fn a8(o: &mut Outcome) {
    // Planted pairs s<k>a / s<k>b share one context distribution.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let groups = 5;
    let mut streams = Vec::new();
    for _ in 0..2000 {
        let k = rng.gen_range(0..groups);
        let member = if rng.gen_bool(0.5) { format!("ID:s{k}a") } else { format!("ID:s{k}b") };
        let mut s: Vec<String> = (0..3).map(|_| format!("ID:c{k}_{}", rng.gen_range(0..6))).collect();
        s.push(member);
        s.extend((0..3).map(|_| format!("ID:c{k}_{}", rng.gen_range(0..6))));
        streams.push(s);
    }
    let vocab = build_vocabulary(&streams, 1000).unwrap();
    let cfg = CbowConfig { dim: 32, window: 6, epochs: 5, ..CbowConfig::default() };
    let m = train_cbow(&build_cbow_dataset(&streams, &vocab, cfg.window), &cfg, &vocab).unwrap();
    let mut found = 0;
    for k in 0..groups {
        for (a, b) in [("a", "b"), ("b", "a")] {
            let near = nearest(&m.embedding, &vocab, &format!("ID:s{k}{a}"), 3).unwrap();
            found += near.iter().any(|(t, _)| *t == format!("ID:s{k}{b}")) as usize;
        }
    }

    // Zipf(1.2) corpus over 5,000 types.
    let types = 5000;
    let weights: Vec<f64> = (1..=types).map(|r| (r as f64).powf(-1.2)).collect();
    let total: f64 = weights.iter().sum();
    let mut cdf = Vec::with_capacity(types);
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cdf.push(acc);
    }
    let stream: Vec<String> = (0..200_000)
        .map(|_| {
            let u: f64 = rng.gen();
            format!("ID:t{}", cdf.partition_point(|&c| c < u).min(types - 1))
        })
        .collect();
    let counts = TokenCounts::from_streams(&[stream.clone()]);
    let distinct = counts.distinct();
    let caps: Vec<usize> = (1..=20).map(|i| (distinct * i / 20).max(2)).collect();
    let curve = coverage_curve(&counts, &caps).unwrap();
    let monotone = curve.windows(2).all(|w| w[1].1 >= w[0].1);
    let cap10 = (distinct / 10).max(2);
    let at10 = coverage_curve(&counts, &[cap10]).unwrap()[0].1;
    // Oracle: sort the counts directly.
    let mut freq = std::collections::BTreeMap::<&str, u64>::new();
    for t in &stream {
        *freq.entry(t).or_default() += 1;
    }
    let mut sorted: Vec<u64> = freq.values().copied().collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let oracle = sorted.iter().take(cap10 - 2).sum::<u64>() as f64 / stream.len() as f64;
    o.record(
        "A8",
        found == 2 * groups && monotone && at10 >= 0.85 && (at10 - oracle).abs() < 1e-12,
        format!(
            "planted partners in top-3: {found}/{}; coverage monotone: {monotone}; coverage at cap {cap10} (10% of {distinct}) = {at10:.4} (>= 0.85, oracle {oracle:.4})",
            2 * groups
        ),
    );
}

// ---------------------------------------------------------------------------
// A9

fn a9(o: &mut Outcome, x: &Experiment) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_dev = 0.0f64;
    let mut never_same = true;
    for op in BinaryOp::ALL {
        let mut counts = [0usize; BinaryOp::COUNT];
        let draws = 10_000;
        for _ in 0..draws {
            let m = mutate_operator(op, &mut rng);
            never_same &= m != op;
            counts[m.index()] += 1;
        }
        let expected = 1.0 / (BinaryOp::COUNT - 1) as f64;
        for alt in BinaryOp::ALL.iter().filter(|&&a| a != op) {
            worst_dev = worst_dev.max((counts[alt.index()] as f64 / draws as f64 - expected).abs());
        }
    }

    let mut left = 0usize;
    let mut total = 0usize;
    for f in &x.train {
        for (p, n) in gen_wrong_operand(f, namebug_core::hash::file_seed(5, &f.id)) {
            total += 1;
            left += (p.left != n.left || p.type_left != n.type_left) as usize;
        }
    }
    let left_share = left as f64 / total as f64;

    let mut paired = true;
    let mut distinct = true;
    let enc = Encoder::new(&x.vocab, &x.learned, &x.tables).unwrap();
    for p in Pattern::ALL {
        for (pos, neg) in generate_pairs(p, &x.train, 13) {
            paired &= pos.label() == namebug_core::patterns::Label::Positive
                && neg.label() == namebug_core::patterns::Label::Negative
                && pos.origin() == neg.origin();
            distinct &= pos.represent(&enc) != neg.represent(&enc);
        }
    }
    o.record(
        "A9",
        worst_dev <= 0.02 && never_same && (left_share - 0.5).abs() <= 0.02 && paired && distinct,
        format!(
            "operator replacement max deviation {worst_dev:.4} over {} alternatives (<= 0.02); left operand share {left_share:.4} of {total} (0.5 +- 0.02); pairs well formed: {paired}; x_neg != x_pos: {distinct}",
            BinaryOp::COUNT - 1
        ),
    );
}

#[test]
fn acceptance_criteria() {
    let mut o = Outcome { failed: Vec::new() };
    let _ = writeln!(std::io::stderr());
    a1(&mut o);
    a2(&mut o);
    let started = Instant::now();
    let x = experiment();
    let _models = a3_a4_a6_a10(&mut o, &x, started);
    a5(&mut o);
    a7(&mut o);
    a8(&mut o);
    a9(&mut o, &x);
    assert!(o.failed.is_empty(), "failed criteria: {:?}", o.failed);
}
