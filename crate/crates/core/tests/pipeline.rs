mod common;

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{synthetic_corpus, SynthSpec};
use scntm::corpus::{load_linqs, split_train_test};
use scntm::eval::{self, Predictor};
use scntm::model::{init_model, Eta, ModelConfig, ScntmModel};
use scntm::sampler::{self, SamplerConfig};

fn trained(eta: Eta, topics: usize) -> (scntm::corpus::Split, ScntmModel) {
    let corpus = synthetic_corpus(&SynthSpec {
        docs: 80,
        vocab: 60,
        classes: 3,
        words_per_doc: 10,
        title_words: 4,
        citations: 120,
        authors: 8,
        ..Default::default()
    });
    let split = split_train_test(&corpus, 0.2, 3).unwrap();
    let mut model = init_model(
        &split.train,
        &ModelConfig {
            eta,
            max_topics: topics,
            ..Default::default()
        },
        5,
    )
    .unwrap();
    sampler::run(
        &mut model,
        &SamplerConfig {
            iterations: 30,
            network_start: 10,
            ..Default::default()
        },
    )
    .unwrap();
    (split, model)
}

#[test]
fn checkpoint_roundtrip_is_lossless() {
    let (_, mut model) = trained(Eta::Finite(2), 4);
    let json = model.to_json().unwrap();
    let mut restored = ScntmModel::from_json(&json).unwrap();
    assert_eq!(restored.to_json().unwrap(), json);
    assert_eq!(restored.log_joint().unwrap(), model.log_joint().unwrap());
    restored.check_consistency().unwrap();

    // Both copies continue identically.
    let config = SamplerConfig {
        iterations: 3,
        network_start: 0,
        seed: 4,
        ..Default::default()
    };
    sampler::run(&mut model, &config).unwrap();
    sampler::run(&mut restored, &config).unwrap();
    assert_eq!(restored.to_json().unwrap(), model.to_json().unwrap());
}

#[test]
fn count_dumps_split_theta_prime_into_tables_and_citations() {
    let (_, model) = trained(Eta::Infinite, 3);
    assert!(model.network_active);
    let mut citations = 0;
    for d in 0..model.num_docs() {
        let c = eval::document_counts(&model, d);
        for k in 0..3 {
            assert_eq!(c.theta_prime_customers[k], c.theta_tables[k] + c.network[k]);
            assert!(c.theta_prime_tables[k] <= c.theta_prime_customers[k]);
        }
        citations += c.network.iter().sum::<u32>();
    }
    assert_eq!(citations as usize, 2 * model.edges.len());
    let summary = eval::count_summary(&model);
    assert!(summary.contains("phi_prime") && summary.contains("active_topics=3"), "{summary}");
}

#[test]
fn test_estimates_are_seeded_and_normalized() {
    let (split, model) = trained(Eta::Finite(0), 4);
    let predictor = Predictor::new(&model);
    let a = predictor.estimate_split(&split, false, 40, 9).unwrap();
    let b = predictor.estimate_split(&split, false, 40, 9).unwrap();
    assert_eq!(a, b);
    for theta in &a {
        assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
    let ppl = eval::test_perplexity(&predictor, &split, false, 40, 9).unwrap();
    assert!(ppl.is_finite() && ppl > 1.0 && ppl < model.vocab_size() as f64 * 2.0, "{ppl}");
}

#[test]
fn single_topic_estimates_are_certain() {
    let (split, model) = trained(Eta::Finite(0), 1);
    let predictor = Predictor::new(&model);
    let doc = &split.test.docs[0];
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let theta = predictor.estimate_theta(doc, &doc.title, &[0, 1], 10, &mut rng).unwrap();
    assert_eq!(theta.len(), 1);
    assert!((theta[0] - 1.0).abs() < 1e-12);
}

#[test]
fn linqs_files_train_end_to_end() {
    let corpus = synthetic_corpus(&SynthSpec {
        docs: 50,
        vocab: 40,
        citations: 80,
        ..Default::default()
    });
    let mut content = String::new();
    for doc in &corpus.docs {
        let mut row = vec![0u8; corpus.vocab.len()];
        doc.tokens().for_each(|w| row[w as usize] = 1);
        let cells: Vec<String> = row.iter().map(u8::to_string).collect();
        let label = &corpus.categories[doc.category.unwrap()];
        writeln!(content, "{}\t{}\t{label}", doc.id, cells.join("\t")).unwrap();
    }
    let mut cites = String::new();
    for &(i, j) in corpus.edges() {
        if i != j {
            writeln!(cites, "{}\t{}", corpus.docs[j as usize].id, corpus.docs[i as usize].id).unwrap();
        }
    }
    let loaded = load_linqs(content.as_bytes(), cites.as_bytes()).unwrap();
    assert_eq!(loaded.num_docs(), corpus.num_docs());
    assert_eq!(loaded.num_citations(), corpus.num_citations());
    for (i, j) in corpus.edges().iter().map(|&(i, j)| (i as usize, j as usize)) {
        assert!(loaded.has_edge(i, j));
    }
    let mut model = init_model(
        &loaded,
        &ModelConfig {
            eta: Eta::Infinite,
            max_topics: 4,
            ..Default::default()
        },
        1,
    )
    .unwrap();
    let stats = sampler::run(
        &mut model,
        &SamplerConfig {
            iterations: 10,
            network_start: 5,
            check_every: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert!(stats.mean_acceptance().is_some());
}
