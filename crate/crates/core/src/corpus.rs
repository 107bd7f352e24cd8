//! Documents, vocabulary, labels, and the citation graph in integer-indexed form.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::io::BufRead;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: Vec<u32>,
    #[serde(rename = "abstract")]
    pub abstract_tokens: Vec<u32>,
    /// First author only.
    pub author: Option<usize>,
    pub category: Option<usize>,
}

impl Document {
    pub fn len(&self) -> usize {
        self.title.len() + self.abstract_tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Title tokens followed by abstract tokens.
    pub fn tokens(&self) -> impl Iterator<Item = u32> + '_ {
        self.title.iter().chain(self.abstract_tokens.iter()).copied()
    }
}

/// A finalized corpus. Citation pairs `(citing, cited)` are deduplicated and
/// every document cites itself exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub docs: Vec<Document>,
    pub vocab: Vec<String>,
    pub authors: Vec<String>,
    pub categories: Vec<String>,
    edges: Vec<(u32, u32)>,
}

impl Corpus {
    /// Validate indices, deduplicate citations, and add the self-loops.
    pub fn new(
        docs: Vec<Document>,
        vocab: Vec<String>,
        authors: Vec<String>,
        categories: Vec<String>,
        citations: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let d = docs.len();
        let mut seen = HashSet::with_capacity(d);
        for doc in &docs {
            if !seen.insert(doc.id.as_str()) {
                return Err(Error::DuplicateDocument(doc.id.clone()));
            }
            if let Some(bad) = doc.tokens().find(|&w| w as usize >= vocab.len()) {
                return Err(Error::InvalidCorpus(format!(
                    "document `{}` uses token {bad} outside a vocabulary of {}",
                    doc.id,
                    vocab.len()
                )));
            }
            if doc.author.is_some_and(|a| a >= authors.len()) {
                return Err(Error::InvalidCorpus(format!("document `{}` has an invalid author", doc.id)));
            }
            if doc.category.is_some_and(|c| c >= categories.len()) {
                return Err(Error::InvalidCorpus(format!("document `{}` has an invalid category", doc.id)));
            }
        }
        let mut edges = BTreeSet::new();
        for (i, j) in citations {
            if i >= d || j >= d {
                return Err(Error::InvalidCorpus(format!(
                    "citation ({i}, {j}) refers to a document outside 0..{d}"
                )));
            }
            edges.insert((i as u32, j as u32));
        }
        for i in 0..d {
            edges.insert((i as u32, i as u32));
        }
        Ok(Corpus {
            docs,
            vocab,
            authors,
            categories,
            edges: edges.into_iter().collect(),
        })
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn num_tokens(&self) -> usize {
        self.docs.iter().map(Document::len).sum()
    }

    /// All citation pairs including self-loops, sorted.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    /// Number of citations between distinct documents.
    pub fn num_citations(&self) -> usize {
        self.edges.iter().filter(|(i, j)| i != j).count()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.binary_search(&(i as u32, j as u32)).is_ok()
    }

    /// Document frequency of every vocabulary word.
    pub fn document_frequencies(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.vocab.len()];
        let mut mark = vec![usize::MAX; self.vocab.len()];
        for (d, doc) in self.docs.iter().enumerate() {
            for w in doc.tokens() {
                if mark[w as usize] != d {
                    mark[w as usize] = d;
                    df[w as usize] += 1;
                }
            }
        }
        df
    }

    pub fn word_frequencies(&self) -> Vec<usize> {
        let mut freq = vec![0usize; self.vocab.len()];
        for doc in &self.docs {
            for w in doc.tokens() {
                freq[w as usize] += 1;
            }
        }
        freq
    }

    /// Number of documents per author.
    pub fn author_document_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.authors.len()];
        for doc in &self.docs {
            if let Some(a) = doc.author {
                counts[a] += 1;
            }
        }
        counts
    }

    /// A corpus restricted to `keep` (in that order), with citations between kept documents.
    pub fn subset(&self, keep: &[usize]) -> Result<Corpus> {
        let mut position = vec![usize::MAX; self.docs.len()];
        for (new, &old) in keep.iter().enumerate() {
            position[old] = new;
        }
        let docs = keep.iter().map(|&i| self.docs[i].clone()).collect();
        let edges = self
            .edges
            .iter()
            .filter(|(i, j)| i != j)
            .filter_map(|&(i, j)| {
                let (pi, pj) = (position[i as usize], position[j as usize]);
                (pi != usize::MAX && pj != usize::MAX).then_some((pi, pj))
            });
        Corpus::new(
            docs,
            self.vocab.clone(),
            self.authors.clone(),
            self.categories.clone(),
            edges,
        )
    }
}

fn read_lines<R: BufRead>(reader: R, source: &str) -> Result<Vec<(usize, String)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::parse(source, i + 1, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((i + 1, line));
    }
    Ok(out)
}

fn intern(table: &mut Vec<String>, index: &mut HashMap<String, usize>, key: &str) -> usize {
    if let Some(&i) = index.get(key) {
        return i;
    }
    table.push(key.to_string());
    index.insert(key.to_string(), table.len() - 1);
    table.len() - 1
}

/// Load the LINQS `.content` / `.cites` pair.
///
/// Content rows are `<doc_id> <feature values...> <class_label>`; every
/// non-zero feature becomes one occurrence of the token `w<column>`. Cites rows
/// are `<cited_id> <citing_id>`. Citations naming unknown documents are dropped.
pub fn load_linqs<C: BufRead, L: BufRead>(content: C, cites: L) -> Result<Corpus> {
    let rows = read_lines(content, "content")?;
    let mut width = None;
    let mut docs = Vec::with_capacity(rows.len());
    let mut categories = Vec::new();
    let mut category_index = HashMap::new();
    let mut seen = HashSet::new();
    for (line_no, line) in &rows {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expected = *width.get_or_insert(fields.len());
        if fields.len() < 3 {
            return Err(Error::parse("content", *line_no, "expected an id, features, and a label"));
        }
        if fields.len() != expected {
            return Err(Error::parse(
                "content",
                *line_no,
                format!("expected {expected} columns, found {}", fields.len()),
            ));
        }
        let id = fields[0];
        if !seen.insert(id.to_string()) {
            return Err(Error::DuplicateDocument(id.to_string()));
        }
        let mut tokens = Vec::new();
        for (col, raw) in fields[1..fields.len() - 1].iter().enumerate() {
            let value: f64 = raw
                .parse()
                .map_err(|_| Error::parse("content", *line_no, format!("bad feature value `{raw}`")))?;
            if value != 0.0 {
                tokens.push(col as u32);
            }
        }
        let category = intern(&mut categories, &mut category_index, fields[fields.len() - 1]);
        docs.push(Document {
            id: id.to_string(),
            title: Vec::new(),
            abstract_tokens: tokens,
            author: None,
            category: Some(category),
        });
    }
    let features = width.map_or(0, |w| w - 2);
    let vocab = (0..features).map(|i| format!("w{i}")).collect();
    let citations = read_citations(cites, &docs, true)?;
    Corpus::new(docs, vocab, Vec::new(), categories, citations)
}

/// Parse an edge list into `(citing, cited)` document indices.
fn read_citations<L: BufRead>(reader: L, docs: &[Document], cited_first: bool) -> Result<Vec<(usize, usize)>> {
    let index: HashMap<&str, usize> = docs.iter().enumerate().map(|(i, d)| (d.id.as_str(), i)).collect();
    let mut out = Vec::new();
    let mut dropped = 0usize;
    for (line_no, line) in read_lines(reader, "cites")? {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse("cites", line_no, "expected two document ids"));
        }
        let (citing, cited) = if cited_first {
            (fields[1], fields[0])
        } else {
            (fields[0], fields[1])
        };
        match (index.get(citing), index.get(cited)) {
            (Some(&i), Some(&j)) if i != j => out.push((i, j)),
            (Some(_), Some(_)) => {}
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} citations naming unknown documents");
    }
    Ok(out)
}

#[derive(Deserialize)]
struct JsonDocument {
    id: String,
    #[serde(default)]
    title: Vec<String>,
    #[serde(default, rename = "abstract")]
    abstract_tokens: Vec<String>,
    #[serde(default)]
    author: Option<String>,
    #[serde(default)]
    category: Option<String>,
}

/// Load one JSON object per line plus a `citing_id cited_id` edge list.
pub fn load_jsonl<D: BufRead, L: BufRead>(documents: D, cites: L) -> Result<Corpus> {
    let mut vocab = Vec::new();
    let mut vocab_index = HashMap::new();
    let mut authors = Vec::new();
    let mut author_index = HashMap::new();
    let mut categories = Vec::new();
    let mut category_index = HashMap::new();
    let mut docs = Vec::new();
    for (line_no, line) in read_lines(documents, "documents")? {
        let raw: JsonDocument =
            serde_json::from_str(&line).map_err(|e| Error::parse("documents", line_no, e.to_string()))?;
        let mut encode = |tokens: &[String]| -> Vec<u32> {
            tokens
                .iter()
                .map(|t| intern(&mut vocab, &mut vocab_index, t) as u32)
                .collect()
        };
        let title = encode(&raw.title);
        let abstract_tokens = encode(&raw.abstract_tokens);
        docs.push(Document {
            id: raw.id,
            title,
            abstract_tokens,
            author: raw.author.map(|a| intern(&mut authors, &mut author_index, &a)),
            category: raw.category.map(|c| intern(&mut categories, &mut category_index, &c)),
        });
    }
    let mut seen = HashSet::new();
    if let Some(dup) = docs.iter().find(|d| !seen.insert(d.id.as_str())) {
        return Err(Error::DuplicateDocument(dup.id.clone()));
    }
    let citations = read_citations(cites, &docs, false)?;
    Corpus::new(docs, vocab, authors, categories, citations)
}

/// Forward TF-IDF: `t = (c / sum_w c) * log(D / df_w)`.
pub fn tfidf_from_counts(counts: &[Vec<u32>]) -> Vec<Vec<f64>> {
    let d = counts.len();
    let width = counts.iter().map(Vec::len).max().unwrap_or(0);
    let mut df = vec![0usize; width];
    for row in counts {
        for (w, &c) in row.iter().enumerate() {
            if c > 0 {
                df[w] += 1;
            }
        }
    }
    counts
        .iter()
        .map(|row| {
            let total: u32 = row.iter().sum();
            row.iter()
                .enumerate()
                .map(|(w, &c)| {
                    if c == 0 {
                        0.0
                    } else {
                        c as f64 / total as f64 * (d as f64 / df[w] as f64).ln()
                    }
                })
                .collect()
        })
        .collect()
}

/// Invert TF-IDF under the assumption that the rarest word of each document occurs once.
pub fn recover_counts_from_tfidf(tfidf: &[Vec<f64>]) -> Result<Vec<Vec<u32>>> {
    let d = tfidf.len();
    let width = tfidf.iter().map(Vec::len).max().unwrap_or(0);
    let mut df = vec![0usize; width];
    for row in tfidf {
        for (w, &t) in row.iter().enumerate() {
            if t < 0.0 || !t.is_finite() {
                return Err(Error::InvalidArgument(format!("tf-idf entry {t} is not a non-negative number")));
            }
            if t > 0.0 {
                df[w] += 1;
            }
        }
    }
    let idf: Vec<f64> = df
        .iter()
        .map(|&n| if n == 0 { 0.0 } else { (d as f64 / n as f64).ln() })
        .collect();

    let mut out = Vec::with_capacity(d);
    for (row_no, row) in tfidf.iter().enumerate() {
        let mut tf = vec![0.0; row.len()];
        let mut min_tf = f64::INFINITY;
        for (w, &t) in row.iter().enumerate() {
            if t > 0.0 {
                if idf[w] == 0.0 {
                    return Err(Error::UnrecoverableWord { word: w });
                }
                tf[w] = t / idf[w];
                min_tf = min_tf.min(tf[w]);
            }
        }
        if !min_tf.is_finite() {
            return Err(Error::EmptyDocumentRow(row_no));
        }
        let normalizer = 1.0 / min_tf;
        let counts = tf
            .iter()
            .enumerate()
            .map(|(w, &f)| {
                if f == 0.0 {
                    return 0;
                }
                let exact = f * normalizer;
                let rounded = exact.round().max(1.0);
                if (exact - rounded).abs() > 1e-6 * rounded {
                    warn!("row {row_no}, word {w}: recovered count {exact} is not close to an integer");
                }
                rounded as u32
            })
            .collect();
        out.push(counts);
    }
    Ok(out)
}

/// Drop stopwords, words in more than `common_frac` of documents, and words
/// occurring fewer than `rare_count` times; re-index the vocabulary densely.
pub fn filter_vocabulary(
    corpus: &Corpus,
    stopwords: &HashSet<String>,
    common_frac: f64,
    rare_count: usize,
) -> Result<Corpus> {
    if !(common_frac > 0.0 && common_frac <= 1.0) {
        return Err(Error::InvalidArgument(format!("common_frac must lie in (0, 1], got {common_frac}")));
    }
    let df = corpus.document_frequencies();
    let freq = corpus.word_frequencies();
    let d = corpus.num_docs() as f64;
    let mut remap = vec![u32::MAX; corpus.vocab.len()];
    let mut vocab = Vec::new();
    for (w, word) in corpus.vocab.iter().enumerate() {
        let too_common = df[w] as f64 > common_frac * d;
        if stopwords.contains(word) || too_common || freq[w] < rare_count {
            continue;
        }
        remap[w] = vocab.len() as u32;
        vocab.push(word.clone());
    }
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let encode = |tokens: &[u32]| -> Vec<u32> {
        tokens
            .iter()
            .map(|&w| remap[w as usize])
            .filter(|&w| w != u32::MAX)
            .collect()
    };
    let docs = corpus
        .docs
        .iter()
        .map(|doc| Document {
            id: doc.id.clone(),
            title: encode(&doc.title),
            abstract_tokens: encode(&doc.abstract_tokens),
            author: doc.author,
            category: doc.category,
        })
        .collect();
    let citations = corpus
        .edges
        .iter()
        .filter(|(i, j)| i != j)
        .map(|&(i, j)| (i as usize, j as usize));
    Corpus::new(
        docs,
        vocab,
        corpus.authors.clone(),
        corpus.categories.clone(),
        citations,
    )
}

/// A training corpus, a test corpus, and the withheld test-to-train citations.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
    /// Original index of each training document.
    pub train_index: Vec<usize>,
    /// Original index of each test document.
    pub test_index: Vec<usize>,
    /// For each test document, the training documents it cites.
    pub test_links: Vec<Vec<usize>>,
}

fn make_split(corpus: &Corpus, mut train_index: Vec<usize>, mut test_index: Vec<usize>) -> Result<Split> {
    train_index.sort_unstable();
    test_index.sort_unstable();
    let mut train_pos = vec![usize::MAX; corpus.num_docs()];
    for (p, &i) in train_index.iter().enumerate() {
        train_pos[i] = p;
    }
    let mut test_pos = vec![usize::MAX; corpus.num_docs()];
    for (p, &i) in test_index.iter().enumerate() {
        test_pos[i] = p;
    }
    let mut test_links = vec![Vec::new(); test_index.len()];
    for &(i, j) in corpus.edges() {
        let (ti, tj) = (test_pos[i as usize], train_pos[j as usize]);
        if ti != usize::MAX && tj != usize::MAX {
            test_links[ti].push(tj);
        }
    }
    Ok(Split {
        train: corpus.subset(&train_index)?,
        test: corpus.subset(&test_index)?,
        train_index,
        test_index,
        test_links,
    })
}

/// Seeded random split with `floor(D * test_frac)` test documents.
pub fn split_train_test(corpus: &Corpus, test_frac: f64, seed: u64) -> Result<Split> {
    if !(test_frac > 0.0 && test_frac < 1.0) {
        return Err(Error::InvalidArgument(format!("test_frac must lie in (0, 1), got {test_frac}")));
    }
    let d = corpus.num_docs();
    let n_test = (d as f64 * test_frac).floor() as usize;
    if n_test == 0 || n_test == d {
        return Err(Error::InvalidArgument(format!(
            "test_frac {test_frac} leaves an empty side for {d} documents"
        )));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order[..n_test].to_vec();
    let train = order[n_test..].to_vec();
    make_split(corpus, train, test)
}

/// Seeded `folds`-way cross-validation splits; fold `f` holds out every document whose
/// shuffled position is congruent to `f`.
pub fn kfold(corpus: &Corpus, folds: usize, seed: u64) -> Result<Vec<Split>> {
    let d = corpus.num_docs();
    if folds < 2 || folds > d {
        return Err(Error::InvalidArgument(format!("cannot make {folds} folds from {d} documents")));
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (0..folds)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) = order.iter().enumerate().partition(|(p, _)| p % folds == f);
            make_split(
                corpus,
                train.into_iter().map(|(_, &i)| i).collect(),
                test.into_iter().map(|(_, &i)| i).collect(),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Corpus {
        let docs = vec![
            Document {
                id: "a".into(),
                title: vec![0],
                abstract_tokens: vec![1, 2, 2],
                author: Some(0),
                category: Some(0),
            },
            Document {
                id: "b".into(),
                title: vec![],
                abstract_tokens: vec![1, 3],
                author: None,
                category: Some(1),
            },
            Document {
                id: "c".into(),
                title: vec![3],
                abstract_tokens: vec![1],
                author: Some(0),
                category: None,
            },
        ];
        let vocab = ["the", "model", "topic", "graph"].iter().map(|s| s.to_string()).collect();
        Corpus::new(docs, vocab, vec!["x".into()], vec!["ml".into(), "db".into()], [(0, 1), (2, 1), (0, 1)]).unwrap()
    }

    #[test]
    fn finalization_adds_self_loops_and_dedups() {
        let c = toy();
        assert_eq!(c.num_citations(), 2);
        assert_eq!(c.edges().len(), 5);
        for i in 0..3 {
            assert!(c.has_edge(i, i));
        }
    }

    #[test]
    fn invalid_indices_are_rejected() {
        let c = toy();
        let mut docs = c.docs.clone();
        docs[0].abstract_tokens.push(9);
        assert!(Corpus::new(docs, c.vocab.clone(), vec![], vec![], []).is_err());
        assert!(Corpus::new(c.docs.clone(), c.vocab.clone(), c.authors.clone(), c.categories.clone(), [(0, 7)]).is_err());
    }

    #[test]
    fn linqs_parsing() {
        let content = "p1 1 0 1 ml\np2 0 1 0 db\np3 0 0 1 ml\n";
        let cites = "p1 p2\np1 p3\np1 p3\nzz p1\np2 p2\n";
        let c = load_linqs(content.as_bytes(), cites.as_bytes()).unwrap();
        assert_eq!(c.num_docs(), 3);
        assert_eq!(c.vocab, vec!["w0", "w1", "w2"]);
        assert_eq!(c.docs[0].abstract_tokens, vec![0, 2]);
        assert_eq!(c.categories, vec!["ml", "db"]);
        // cited first: p2 cites p1, p3 cites p1
        assert!(c.has_edge(1, 0) && c.has_edge(2, 0));
        assert_eq!(c.num_citations(), 2);
    }

    #[test]
    fn linqs_empty_cites_only_self_loops() {
        let c = load_linqs("p1 1 0 a\np2 0 1 b\n".as_bytes(), "".as_bytes()).unwrap();
        assert_eq!(c.num_citations(), 0);
        assert_eq!(c.edges(), &[(0, 0), (1, 1)]);
    }

    #[test]
    fn linqs_short_row_reports_line() {
        let err = load_linqs("p1 1 0 a\np2 0 b\n".as_bytes(), "".as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            load_linqs("p1 1 a\np1 0 b\n".as_bytes(), "".as_bytes()),
            Err(Error::DuplicateDocument(_))
        ));
    }

    #[test]
    fn jsonl_parsing() {
        let docs = r#"{"id":"d1","title":["deep","nets"],"abstract":["nets","train"],"author":"smith","category":"ml"}
{"id":"d2","abstract":["query","plans"],"category":"db"}
"#;
        let cites = "d1 d2\n";
        let c = load_jsonl(docs.as_bytes(), cites.as_bytes()).unwrap();
        assert_eq!(c.vocab, vec!["deep", "nets", "train", "query", "plans"]);
        assert_eq!(c.docs[0].title, vec![0, 1]);
        assert_eq!(c.docs[0].abstract_tokens, vec![1, 2]);
        assert_eq!(c.docs[0].author, Some(0));
        assert_eq!(c.docs[1].author, None);
        assert!(c.has_edge(0, 1));
        assert!(!c.has_edge(1, 0));
    }

    #[test]
    fn tfidf_roundtrip_small() {
        // words a, b, c; c only in doc 3 so no word spans every document
        let counts = vec![vec![1, 2, 0], vec![0, 1, 0], vec![2, 0, 1]];
        let tfidf = tfidf_from_counts(&counts);
        assert_eq!(recover_counts_from_tfidf(&tfidf).unwrap(), counts);
    }

    #[test]
    fn tfidf_single_unique_word() {
        let tfidf = vec![vec![0.7, 0.0], vec![0.0, 0.3]];
        assert_eq!(recover_counts_from_tfidf(&tfidf).unwrap(), vec![vec![1, 0], vec![0, 1]]);
    }

    #[test]
    fn tfidf_errors() {
        let everywhere = vec![vec![0.5, 0.1], vec![0.5, 0.0]];
        assert!(matches!(
            recover_counts_from_tfidf(&everywhere),
            Err(Error::UnrecoverableWord { word: 0 })
        ));
        let empty_row = vec![vec![0.5, 0.0], vec![0.0, 0.0]];
        assert!(matches!(recover_counts_from_tfidf(&empty_row), Err(Error::EmptyDocumentRow(1))));
    }

    #[test]
    fn vocabulary_filters() {
        let c = toy();
        let same = filter_vocabulary(&c, &HashSet::new(), 1.0, 0).unwrap();
        assert_eq!(same, c);

        // "model" is in every document
        let f = filter_vocabulary(&c, &HashSet::new(), 0.5, 0).unwrap();
        assert!(!f.vocab.contains(&"model".to_string()));
        assert_eq!(f.num_citations(), c.num_citations());

        let stop: HashSet<String> = ["the".to_string()].into();
        let f = filter_vocabulary(&c, &stop, 1.0, 2).unwrap();
        assert_eq!(f.vocab, vec!["model", "topic", "graph"]);
        assert_eq!(filter_vocabulary(&f, &stop, 1.0, 2).unwrap(), f);

        assert!(matches!(
            filter_vocabulary(&c, &HashSet::new(), 1.0, 100),
            Err(Error::EmptyVocabulary)
        ));
        assert!(filter_vocabulary(&c, &HashSet::new(), 0.0, 0).is_err());
    }

    #[test]
    fn split_is_deterministic_and_partitions() {
        let docs: Vec<Document> = (0..50)
            .map(|i| Document {
                id: format!("d{i}"),
                title: vec![],
                abstract_tokens: vec![(i % 3) as u32],
                author: None,
                category: None,
            })
            .collect();
        let cites: Vec<(usize, usize)> = (1..50).map(|i| (i, i - 1)).collect();
        let c = Corpus::new(docs, vec!["a".into(), "b".into(), "c".into()], vec![], vec![], cites).unwrap();
        let s1 = split_train_test(&c, 0.1, 42).unwrap();
        let s2 = split_train_test(&c, 0.1, 42).unwrap();
        assert_eq!(s1.test_index, s2.test_index);
        assert_eq!(s1.test.num_docs(), 5);
        assert_eq!(s1.train.num_docs(), 45);
        let mut all: Vec<usize> = s1.train_index.iter().chain(&s1.test_index).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        for (t, links) in s1.test_links.iter().enumerate() {
            for &j in links {
                assert!(c.has_edge(s1.test_index[t], s1.train_index[j]));
            }
        }
        assert!(split_train_test(&c, 0.0, 1).is_err());
        assert!(split_train_test(&c, 0.01, 1).is_err());
    }

    #[test]
    fn kfold_covers_each_document_once() {
        let docs: Vec<Document> = (0..23)
            .map(|i| Document {
                id: format!("d{i}"),
                title: vec![],
                abstract_tokens: vec![0],
                author: None,
                category: None,
            })
            .collect();
        let c = Corpus::new(docs, vec!["a".into()], vec![], vec![], []).unwrap();
        let folds = kfold(&c, 5, 3).unwrap();
        let mut held: Vec<usize> = folds.iter().flat_map(|s| s.test_index.clone()).collect();
        held.sort_unstable();
        assert_eq!(held, (0..23).collect::<Vec<_>>());
    }
}
