#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scntm::corpus::{Corpus, Document};

/// Shape of a generated corpus.
pub struct SynthSpec {
    pub docs: usize,
    pub vocab: usize,
    pub classes: usize,
    pub words_per_doc: usize,
    pub title_words: usize,
    pub citations: usize,
    pub authors: usize,
    /// Probability that a word comes from the document's own class topic.
    pub purity: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            docs: 300,
            vocab: 200,
            classes: 4,
            words_per_doc: 12,
            title_words: 0,
            citations: 600,
            authors: 0,
            purity: 0.85,
            seed: 7,
        }
    }
}

/// Class-structured documents whose citations mostly stay within a class.
pub fn synthetic_corpus(spec: &SynthSpec) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let band = spec.vocab / spec.classes;
    let draw_word = |rng: &mut ChaCha8Rng, class: usize| -> u32 {
        let offset = (rng.random::<f64>().powi(2) * band as f64) as usize;
        (class * band + offset.min(band - 1)) as u32
    };
    let mut classes = Vec::with_capacity(spec.docs);
    let mut docs = Vec::with_capacity(spec.docs);
    for d in 0..spec.docs {
        let class = rng.random_range(0..spec.classes);
        classes.push(class);
        let pick = |rng: &mut ChaCha8Rng| {
            let c = if rng.random::<f64>() < spec.purity {
                class
            } else {
                rng.random_range(0..spec.classes)
            };
            draw_word(rng, c)
        };
        let title = (0..spec.title_words).map(|_| pick(&mut rng)).collect();
        let abstract_tokens = (0..spec.words_per_doc).map(|_| pick(&mut rng)).collect();
        let author = (spec.authors > 0).then(|| (class * 7 + rng.random_range(0..3)) % spec.authors);
        docs.push(Document {
            id: format!("doc{d}"),
            title,
            abstract_tokens,
            author,
            category: Some(class),
        });
    }
    let mut edges = Vec::new();
    while edges.len() < spec.citations {
        let (i, j) = (rng.random_range(0..spec.docs), rng.random_range(0..spec.docs));
        if i != j && (classes[i] == classes[j] || rng.random::<f64>() < 0.15) {
            edges.push((i, j));
        }
    }
    Corpus::new(
        docs,
        (0..spec.vocab).map(|w| format!("w{w}")).collect(),
        (0..spec.authors).map(|a| format!("author{a}")).collect(),
        (0..spec.classes).map(|c| format!("class{c}")).collect(),
        edges,
    )
    .expect("valid synthetic corpus")
}

/// Write a corpus in the JSONL layout the CLI reads.
pub fn write_jsonl(corpus: &Corpus, dir: &std::path::Path) {
    use std::fmt::Write as _;
    let word = |w: &u32| serde_json::Value::String(corpus.vocab[*w as usize].clone());
    let mut docs = String::new();
    for doc in &corpus.docs {
        let mut obj = serde_json::json!({
            "id": doc.id,
            "title": doc.title.iter().map(word).collect::<Vec<_>>(),
            "abstract": doc.abstract_tokens.iter().map(word).collect::<Vec<_>>(),
        });
        if let Some(a) = doc.author {
            obj["author"] = corpus.authors[a].clone().into();
        }
        if let Some(c) = doc.category {
            obj["category"] = corpus.categories[c].clone().into();
        }
        writeln!(docs, "{obj}").unwrap();
    }
    std::fs::write(dir.join("documents.jsonl"), docs).unwrap();
    let mut cites = String::new();
    for &(i, j) in corpus.edges() {
        if i != j {
            writeln!(cites, "{} {}", corpus.docs[i as usize].id, corpus.docs[j as usize].id).unwrap();
        }
    }
    std::fs::write(dir.join("cites.txt"), cites).unwrap();
}
