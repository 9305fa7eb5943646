//! End-to-end runs of the in-memory pipeline on small synthetic corpora.

use namebug_core::detector::{evaluate, generate_pairs, scan, train_detector, DetectorConfig, Pattern};
use namebug_core::embeddings::{build_cbow_dataset, random_embedding, train_cbow, CbowConfig};
use namebug_core::frontend::ast::same_shape;
use namebug_core::frontend::{parse, to_source, tokenize};
use namebug_core::naming::{build_vocabulary, embedding_token_stream};
use namebug_core::patterns::{binop_vector_len, call_vector_len, EncodingTables, Encoder, Label};
use namebug_core::synthcorpus::{generate, ConventionSpec, Split};
use namebug_core::SourceFile;
use proptest::prelude::*;

fn corpus(seed: u64, files: usize, split: Split) -> (Vec<SourceFile>, Vec<Vec<String>>) {
    let mut spec = ConventionSpec::demo(seed);
    spec.file_count = files;
    let c = generate(&spec, split).unwrap();
    let mut parsed = Vec::new();
    let mut streams = Vec::new();
    for f in &c.files {
        parsed.push(SourceFile { id: f.id.clone(), program: parse(&f.source, &f.id).unwrap() });
        streams.push(embedding_token_stream(&tokenize(&f.source, &f.id).unwrap()));
    }
    (parsed, streams)
}

#[test]
fn small_corpus_trains_and_scans() {
    let (train, streams) = corpus(4, 60, Split::Train);
    let (held, _) = corpus(4, 30, Split::HeldOut);
    let vocab = build_vocabulary(&streams, 10_000).unwrap();
    let cbow = CbowConfig { dim: 16, window: 10, epochs: 2, ..CbowConfig::default() };
    let emb = train_cbow(&build_cbow_dataset(&streams, &vocab, cbow.window), &cbow, &vocab)
        .unwrap()
        .embedding;
    let tables = EncodingTables::new(1);
    let enc = Encoder::new(&vocab, &emb, &tables).unwrap();
    let mut config = DetectorConfig { hidden: 16, ..DetectorConfig::default() };
    config.fit.epochs = 3;
    for p in Pattern::ALL {
        let want = match p {
            Pattern::SwappedArgs => call_vector_len(16),
            _ => binop_vector_len(16),
        };
        let pairs = generate_pairs(p, &train, 2);
        assert!(!pairs.is_empty(), "{p}");
        assert!(pairs.iter().all(|(a, b)| a.represent(&enc).len() == want && b.represent(&enc).len() == want));

        let model = train_detector(&train, p, &enc, &config).unwrap();
        let report = evaluate(&held, &model, &enc, &[0.5, 0.9], 3).unwrap();
        assert!(report.accuracy > 0.5, "{p}: {}", report.accuracy);
        assert_eq!(report.count_pos, report.count_neg);

        let warnings = scan(&held, &model, &enc, 0.5).unwrap();
        assert!(warnings.windows(2).all(|w| w[0].probability >= w[1].probability));
        assert!(warnings.iter().all(|w| w.probability > 0.5));
    }
}

#[test]
fn random_embedding_plugs_into_the_encoder() {
    let (train, streams) = corpus(9, 10, Split::Train);
    let vocab = build_vocabulary(&streams, 50).unwrap();
    let emb = random_embedding(&vocab, 8, 1).unwrap();
    let tables = EncodingTables::new(2);
    let enc = Encoder::new(&vocab, &emb, &tables).unwrap();
    for (pos, neg) in generate_pairs(Pattern::WrongOperator, &train, 0) {
        assert_eq!(pos.represent(&enc).len(), binop_vector_len(8));
        assert_ne!(pos.represent(&enc), neg.represent(&enc));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn generated_files_survive_printing(seed in any::<u64>()) {
        let (files, _) = corpus(seed, 3, Split::HeldOut);
        for f in &files {
            let again = parse(&to_source(&f.program), &f.id).unwrap();
            prop_assert!(same_shape(&f.program, &again));
        }
    }

    #[test]
    fn generators_pair_each_positive_with_a_distinct_negative(seed in any::<u64>(), gen_seed in any::<u64>()) {
        let (files, streams) = corpus(seed, 3, Split::Train);
        let vocab = build_vocabulary(&streams, 10_000).unwrap();
        let emb = random_embedding(&vocab, 12, seed).unwrap();
        let tables = EncodingTables::new(seed);
        let enc = Encoder::new(&vocab, &emb, &tables).unwrap();
        for p in Pattern::ALL {
            let pairs = generate_pairs(p, &files, gen_seed);
            prop_assert_eq!(&pairs, &generate_pairs(p, &files, gen_seed));
            for (pos, neg) in &pairs {
                prop_assert_eq!(pos.label(), Label::Positive);
                prop_assert_eq!(neg.label(), Label::Negative);
                prop_assert_eq!(pos.origin(), neg.origin());
                prop_assert_ne!(pos.represent(&enc), neg.represent(&enc));
            }
        }
    }
}
