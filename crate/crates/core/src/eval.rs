//! Held-out topic estimation, perplexity, clustering scores and diagnostics.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Document, Split};
use crate::error::{Error, Result};
use crate::model::{significance, Eta, NodeGroup, ScntmModel};
use crate::sampler::ChainStats;

/// Number of Monte Carlo samples used for a test document's topic estimate.
pub const DEFAULT_SAMPLES: usize = 500;

/// Read-only quantities needed to estimate topics of unseen documents.
#[derive(Debug, Clone)]
pub struct Predictor {
    /// `phi[k][w]`.
    pub phi: Vec<Vec<f64>>,
    nu: Vec<Vec<f64>>,
    mu: Vec<f64>,
    /// `theta_prime` posterior means of the training documents.
    pub train_theta: Vec<Vec<f64>>,
    discount: f64,
    concentration: f64,
    author_docs: Vec<usize>,
    eta: Eta,
    num_authors: usize,
    num_categories: usize,
}

impl Predictor {
    pub fn new(model: &ScntmModel) -> Self {
        let family = model.hierarchy.family(NodeGroup::ThetaPrime.family());
        Predictor {
            phi: model.phi_means(),
            nu: model.nu_means(),
            mu: model.hierarchy.posterior_mean(model.mu),
            train_theta: model.theta_prime_means(),
            discount: family.discount,
            concentration: family.concentration,
            author_docs: model.corpus.author_document_counts(),
            eta: model.config.eta,
            num_authors: model.corpus.authors.len(),
            num_categories: model.corpus.categories.len(),
        }
    }

    pub fn num_topics(&self) -> usize {
        self.mu.len()
    }

    /// Prior topic distribution for an unseen document.
    pub fn prior_for(&self, doc: &Document) -> &[f64] {
        let (a, e) = (self.num_authors, self.num_categories);
        match (doc.author, doc.category) {
            (Some(x), _) if x < a && significance(self.author_docs[x], self.eta) => &self.nu[x],
            (None, _) if self.eta == Eta::Finite(0) => &self.nu[a + e],
            (_, Some(c)) if c < e => &self.nu[a + c],
            _ => {
                log::warn!("document `{}` has no usable prior; falling back to the root", doc.id);
                &self.mu
            }
        }
    }

    /// Eq-21 style estimate from `theta_prime` customers, with table counts at half the customers.
    fn theta_from_counts(&self, prior: &[f64], customers: &[u32]) -> Vec<f64> {
        let (a, b) = (self.discount, self.concentration);
        let total_c: u32 = customers.iter().sum();
        let tables: Vec<u32> = customers.iter().map(|c| c.div_ceil(2)).collect();
        let total_t: u32 = tables.iter().sum();
        let denom = b + total_c as f64;
        let mass = a * total_t as f64 + b;
        prior
            .iter()
            .zip(customers.iter().zip(&tables))
            .map(|(p, (&c, &t))| (mass * p + c as f64 - a * t as f64) / denom)
            .collect()
    }

    /// Monte Carlo estimate of a test document's `theta_prime`. `tokens` are the
    /// estimation tokens and `links` the training documents it cites.
    pub fn estimate_theta<R: Rng + ?Sized>(
        &self,
        doc: &Document,
        tokens: &[u32],
        links: &[usize],
        samples: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        if samples == 0 {
            return Err(Error::InvalidArgument("at least one sample is required".into()));
        }
        let k = self.num_topics();
        let prior = self.prior_for(doc);
        if tokens.is_empty() && links.is_empty() {
            log::warn!("document `{}` has no estimation tokens and no citations; using a uniform estimate", doc.id);
            return Ok(vec![1.0 / k as f64; k]);
        }
        let word_weights: Vec<Vec<f64>> = tokens
            .iter()
            .map(|&w| {
                (0..k)
                    .map(|t| prior[t] * self.phi[t][w as usize])
                    .collect()
            })
            .collect();
        let mut mean = vec![0.0; k];
        let mut theta_counts = vec![0u32; k];
        let mut customers = vec![0u32; k];
        for _ in 0..samples {
            theta_counts.iter_mut().for_each(|c| *c = 0);
            for weights in &word_weights {
                theta_counts[draw(weights, rng)] += 1;
            }
            for (c, t) in customers.iter_mut().zip(&theta_counts) {
                *c = t.div_ceil(2);
            }
            let mut theta = self.theta_from_counts(prior, &customers);
            for _ in links {
                customers[draw(&theta, rng)] += 1;
                theta = self.theta_from_counts(prior, &customers);
            }
            for (m, v) in mean.iter_mut().zip(&theta) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= samples as f64);
        Ok(mean)
    }

    /// Estimate every test document in parallel; document `i` uses its own seeded stream.
    pub fn estimate_split(&self, split: &Split, use_all_tokens: bool, samples: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        split
            .test
            .docs
            .par_iter()
            .enumerate()
            .map(|(i, doc)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 2);
                let tokens = estimation_tokens(doc, use_all_tokens);
                self.estimate_theta(doc, &tokens, &split.test_links[i], samples, &mut rng)
            })
            .collect()
    }
}

/// Title tokens, or every token when asked (or when the title is empty).
pub fn estimation_tokens(doc: &Document, use_all_tokens: bool) -> Vec<u32> {
    if use_all_tokens || doc.title.is_empty() {
        doc.tokens().collect()
    } else {
        doc.title.clone()
    }
}

/// Tokens scored by perplexity: those not used for estimation.
pub fn evaluation_tokens(doc: &Document, use_all_tokens: bool) -> Vec<u32> {
    if use_all_tokens || doc.title.is_empty() {
        doc.tokens().collect()
    } else {
        doc.abstract_tokens.clone()
    }
}

fn draw<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

/// `exp(-mean log sum_k phi[k][w] theta[k])` over the given documents' tokens.
pub fn perplexity(tokens: &[Vec<u32>], thetas: &[Vec<f64>], phi: &[Vec<f64>]) -> Result<f64> {
    if tokens.len() != thetas.len() {
        return Err(Error::InvalidArgument("one topic vector per document is required".into()));
    }
    let mut total = 0.0;
    let mut count = 0usize;
    for (doc, theta) in tokens.iter().zip(thetas) {
        for &w in doc {
            let p: f64 = phi.iter().zip(theta).map(|(row, t)| row[w as usize] * t).sum();
            if !(p > 0.0) {
                return Err(Error::Consistency(format!("word {w} has zero predictive probability")));
            }
            total += p.ln();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::InvalidArgument("perplexity needs at least one token".into()));
    }
    Ok((-total / count as f64).exp())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn dominant_topic(theta: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in theta.iter().enumerate() {
        if v > theta[best] {
            best = k;
        }
    }
    best
}

fn contingency<S: Eq + Hash, C: Eq + Hash>(classes: &[S], clusters: &[C]) -> Result<HashMap<(usize, usize), usize>> {
    if classes.len() != clusters.len() {
        return Err(Error::InvalidArgument(format!(
            "{} class labels but {} cluster labels",
            classes.len(),
            clusters.len()
        )));
    }
    let mut class_ids = HashMap::new();
    let mut cluster_ids = HashMap::new();
    let mut table = HashMap::new();
    for (s, r) in classes.iter().zip(clusters) {
        let n = class_ids.len();
        let si = *class_ids.entry(s).or_insert(n);
        let n = cluster_ids.len();
        let ri = *cluster_ids.entry(r).or_insert(n);
        *table.entry((si, ri)).or_insert(0) += 1;
    }
    Ok(table)
}

/// Fraction of documents whose cluster's majority class is their own.
pub fn purity<S: Eq + Hash, C: Eq + Hash>(classes: &[S], clusters: &[C]) -> Result<f64> {
    let table = contingency(classes, clusters)?;
    if classes.is_empty() {
        return Ok(1.0);
    }
    let mut best: HashMap<usize, usize> = HashMap::new();
    for (&(_, r), &n) in &table {
        let slot = best.entry(r).or_insert(0);
        *slot = (*slot).max(n);
    }
    Ok(best.values().sum::<usize>() as f64 / classes.len() as f64)
}

/// `2 I(S; R) / (H(S) + H(R))` with base-2 logarithms.
pub fn nmi<S: Eq + Hash, C: Eq + Hash>(classes: &[S], clusters: &[C]) -> Result<f64> {
    let table = contingency(classes, clusters)?;
    let d = classes.len() as f64;
    let mut class_sizes: HashMap<usize, f64> = HashMap::new();
    let mut cluster_sizes: HashMap<usize, f64> = HashMap::new();
    for (&(s, r), &n) in &table {
        *class_sizes.entry(s).or_default() += n as f64;
        *cluster_sizes.entry(r).or_default() += n as f64;
    }
    let entropy = |sizes: &HashMap<usize, f64>| -> f64 { -sizes.values().map(|&n| n / d * (n / d).log2()).sum::<f64>() };
    let (hs, hr) = (entropy(&class_sizes), entropy(&cluster_sizes));
    if hs + hr == 0.0 {
        return Ok(1.0);
    }
    let mut info = 0.0;
    for (&(s, r), &n) in &table {
        let n = n as f64;
        info += n / d * (d * n / (class_sizes[&s] * cluster_sizes[&r])).log2();
    }
    Ok((2.0 * info / (hs + hr)).clamp(0.0, 1.0))
}

/// Trace summary of a finished chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub log_likelihood: Vec<f64>,
    pub mean_acceptance: Option<f64>,
    pub mean_exp_near_one: Option<f64>,
    /// Mean over the final 100 iterations minus the mean over the 100 before the network starts.
    pub network_gain: Option<f64>,
}

pub fn diagnostics(stats: &ChainStats, network_start: usize) -> Diagnostics {
    let trace = stats.log_likelihood();
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let network_gain = (network_start >= 1 && trace.len() > network_start).then(|| {
        let before = &trace[network_start.saturating_sub(100)..network_start];
        let after = &trace[trace.len().saturating_sub(100).max(network_start)..];
        mean(after) - mean(before)
    });
    let near: Vec<f64> = stats.iterations.iter().filter_map(|s| s.exp_near_one).collect();
    Diagnostics {
        log_likelihood: trace,
        mean_acceptance: stats.mean_acceptance(),
        mean_exp_near_one: (!near.is_empty()).then(|| mean(&near)),
        network_gain,
    }
}

/// Per-document customer and table counts along the topic chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentCounts {
    pub id: String,
    pub theta_customers: Vec<u32>,
    pub theta_tables: Vec<u32>,
    pub theta_prime_customers: Vec<u32>,
    pub theta_prime_tables: Vec<u32>,
    pub network: Vec<u32>,
}

pub fn document_counts(model: &ScntmModel, d: usize) -> DocumentCounts {
    let k = model.num_topics();
    let cells = |node| (0..k).map(|t| model.hierarchy.cell(node, t)).collect::<Vec<_>>();
    let th = cells(model.theta[d]);
    let tp = cells(model.theta_prime[d]);
    DocumentCounts {
        id: model.corpus.docs[d].id.clone(),
        theta_customers: th.iter().map(|c| c.customers).collect(),
        theta_tables: th.iter().map(|c| c.tables).collect(),
        theta_prime_customers: tp.iter().map(|c| c.customers).collect(),
        theta_prime_tables: tp.iter().map(|c| c.tables).collect(),
        network: (0..k).map(|t| model.network_count(d, t)).collect(),
    }
}

/// Totals per node family, concentrations, and the active topic count.
pub fn count_summary(model: &ScntmModel) -> String {
    let mut out = String::new();
    for group in NodeGroup::ALL {
        let (mut c, mut t) = (0u64, 0u64);
        for id in model.group_nodes(group) {
            let node = model.hierarchy.node(id);
            c += node.total_customers;
            t += node.total_tables;
        }
        let f = model.hierarchy.family(group.family());
        let _ = writeln!(
            out,
            "{}: customers={c} tables={t} discount={} concentration={:.6}",
            group.name(),
            f.discount,
            f.concentration
        );
    }
    let _ = writeln!(out, "active_topics={}", model.active_topics());
    out
}

/// Evaluation outputs plus the configuration that produced them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_perplexity: Option<f64>,
    pub test_perplexity: Option<f64>,
    pub purity: Option<f64>,
    pub nmi: Option<f64>,
    pub mean_acceptance: Option<f64>,
    pub final_log_likelihood: Option<f64>,
    pub config: BTreeMap<String, String>,
}

impl EvalReport {
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.config {
            let _ = writeln!(out, "config.{k}={v}");
        }
        let fields = [
            ("train_perplexity", self.train_perplexity),
            ("test_perplexity", self.test_perplexity),
            ("purity", self.purity),
            ("nmi", self.nmi),
            ("mean_acceptance", self.mean_acceptance),
            ("final_log_likelihood", self.final_log_likelihood),
        ];
        for (k, v) in fields {
            if let Some(v) = v {
                let _ = writeln!(out, "{k}={v}");
            }
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Training-set perplexity under the model's own `theta_prime` posterior means.
pub fn train_perplexity(model: &ScntmModel, predictor: &Predictor) -> Result<f64> {
    let tokens: Vec<Vec<u32>> = (0..model.num_docs()).map(|d| model.doc_tokens(d).to_vec()).collect();
    perplexity(&tokens, &predictor.train_theta, &predictor.phi)
}

/// Held-out perplexity of the split's test documents.
pub fn test_perplexity(predictor: &Predictor, split: &Split, use_all_tokens: bool, samples: usize, seed: u64) -> Result<f64> {
    let thetas = predictor.estimate_split(split, use_all_tokens, samples, seed)?;
    let tokens: Vec<Vec<u32>> = split
        .test
        .docs
        .iter()
        .map(|d| evaluation_tokens(d, use_all_tokens))
        .collect();
    perplexity(&tokens, &thetas, &predictor.phi)
}

/// Purity and NMI of test documents' dominant topics against their categories.
pub fn cluster_scores(predictor: &Predictor, split: &Split, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let thetas = predictor.estimate_split(split, true, samples, seed)?;
    let mut classes = Vec::new();
    let mut clusters = Vec::new();
    for (doc, theta) in split.test.docs.iter().zip(&thetas) {
        if let Some(c) = doc.category {
            classes.push(c);
            clusters.push(dominant_topic(theta));
        }
    }
    Ok((purity(&classes, &clusters)?, nmi(&classes, &clusters)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dominant_topic_examples() {
        assert_eq!(dominant_topic(&[0.2, 0.7, 0.1]), 1);
        assert_eq!(dominant_topic(&[0.5, 0.5]), 0);
        assert_eq!(dominant_topic(&[1.0]), 0);
    }

    #[test]
    fn clustering_identities() {
        assert_eq!(purity(&["a", "a", "b"], &[1, 2, 3]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 1, 1], &[5, 5, 9, 9]).unwrap(), 1.0);
        assert_eq!(purity(&['a', 'a', 'b', 'b'], &[1, 2, 1, 2]).unwrap(), 0.5);
        assert!(nmi(&['a', 'a', 'b', 'b'], &[1, 2, 1, 2]).unwrap().abs() < 1e-15);
        assert!((purity(&['a', 'a', 'b'], &[0, 0, 0]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!(purity(&[1, 2], &[1]).is_err());
    }

    #[test]
    fn nmi_is_symmetric() {
        let s = [0, 0, 1, 2, 2, 2, 1];
        let r = [1, 0, 1, 1, 0, 0, 1];
        assert!((nmi(&s, &r).unwrap() - nmi(&r, &s).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn uniform_predictive_gives_vocabulary_size() {
        let v = 37;
        let phi = vec![vec![1.0 / v as f64; v]; 3];
        let tokens = vec![vec![0, 5, 36], vec![2]];
        let thetas = vec![vec![0.2, 0.3, 0.5], vec![1.0, 0.0, 0.0]];
        let p = perplexity(&tokens, &thetas, &phi).unwrap();
        assert!((p - v as f64).abs() < 1e-9 * v as f64);
        let single = perplexity(&[vec![0, 0]], &[vec![1.0]], &[vec![1.0]]).unwrap();
        assert_eq!(single, 1.0);
    }

    #[test]
    fn two_topic_perplexity_by_hand() {
        let phi = vec![vec![0.7, 0.3], vec![0.1, 0.9]];
        let theta = vec![vec![0.25, 0.75]];
        let tokens = vec![vec![0, 1, 1]];
        let p0: f64 = 0.7 * 0.25 + 0.1 * 0.75;
        let p1: f64 = 0.3 * 0.25 + 0.9 * 0.75;
        let expected = (-(p0.ln() + 2.0 * p1.ln()) / 3.0).exp();
        assert!((perplexity(&tokens, &theta, &phi).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn diagnostics_gain() {
        let stats = ChainStats {
            iterations: (1..=300)
                .map(|i| crate::sampler::IterationStats {
                    iteration: i,
                    log_likelihood: if i <= 200 { -10.0 } else { -4.0 },
                    acceptance_rate: (i > 200).then_some(0.9),
                    exp_near_one: None,
                    seconds: 0.0,
                })
                .collect(),
        };
        let d = diagnostics(&stats, 200);
        assert_eq!(d.log_likelihood.len(), 300);
        assert_eq!(d.network_gain, Some(6.0));
        assert!((d.mean_acceptance.unwrap() - 0.9).abs() < 1e-12);
    }
}
