//! The supervised citation network topic model: node graph, latent
//! assignments, and citation-rate parameters.
//!
//! Topic side: `mu` (GEM root) -> `nu[b]` (per author / category) ->
//! `theta_prime[d]` -> `theta[d]`. Word side: uniform base -> `gamma` ->
//! `phi[k]` -> `phi_prime[d][k]`. Each citation `(i, j)` carries a citing topic
//! `y`, and contributes one customer to `theta_prime[i]` and one to
//! `theta_prime[j]` at that topic once the network is switched on.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::pyp::{Ascent, Base, FamilyId, Hierarchy, NodeId, NodeKind};

/// Author threshold: an author with at least this many documents parents them directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eta {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Eta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Eta::Finite(n) => write!(f, "{n}"),
            Eta::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for Eta {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Eta::Infinite),
            other => other
                .parse()
                .map(Eta::Finite)
                .map_err(|_| format!("eta must be a non-negative integer or `inf`, got `{s}`")),
        }
    }
}

impl Serialize for Eta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Eta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = String::deserialize(d)?;
        raw.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub eta: Eta,
    pub max_topics: usize,
    /// Discount of `mu`, `nu`, `theta_prime`, `theta`.
    pub topic_discount: f64,
    /// Discount of `gamma`, `phi`, `phi_prime`.
    pub word_discount: f64,
    pub initial_concentration: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            eta: Eta::Finite(0),
            max_topics: 20,
            topic_discount: 0.01,
            word_discount: 0.7,
            initial_concentration: 0.1,
        }
    }
}

/// Node families that share one concentration parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeGroup {
    Mu,
    Nu,
    ThetaPrime,
    Theta,
    Gamma,
    Phi,
    PhiPrime,
}

impl NodeGroup {
    pub const ALL: [NodeGroup; 7] = [
        NodeGroup::Mu,
        NodeGroup::Nu,
        NodeGroup::ThetaPrime,
        NodeGroup::Theta,
        NodeGroup::Gamma,
        NodeGroup::Phi,
        NodeGroup::PhiPrime,
    ];

    pub fn family(self) -> FamilyId {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            NodeGroup::Mu => "mu",
            NodeGroup::Nu => "nu",
            NodeGroup::ThetaPrime => "theta_prime",
            NodeGroup::Theta => "theta",
            NodeGroup::Gamma => "gamma",
            NodeGroup::Phi => "phi",
            NodeGroup::PhiPrime => "phi_prime",
        }
    }
}

/// Which `nu` node parents a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Prior {
    Author(usize),
    Category(usize),
    /// Shared node for author-less documents when every author is significant.
    Anonymous,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScntmModel {
    pub config: ModelConfig,
    pub corpus: Corpus,
    pub hierarchy: Hierarchy,
    pub mu: NodeId,
    /// Authors first, then categories, then the anonymous node.
    pub nu: Vec<NodeId>,
    pub theta_prime: Vec<NodeId>,
    pub theta: Vec<NodeId>,
    pub gamma: NodeId,
    pub phi: Vec<NodeId>,
    /// Indexed `d * max_topics + k`.
    pub phi_prime: Vec<NodeId>,
    pub doc_prior: Vec<Prior>,
    /// Flattened tokens, document `d` spans `offsets[d]..offsets[d + 1]`.
    pub tokens: Vec<u32>,
    pub offsets: Vec<usize>,
    pub z: Vec<u32>,
    /// Citation pairs (with self-loops) and their citing topics.
    pub edges: Vec<(u32, u32)>,
    pub y: Vec<u32>,
    /// Whether citation customers are currently seated in `theta_prime`.
    pub network_active: bool,
    /// `h[d * K + k]`: citation customers of document `d` at topic `k`.
    pub network_counts: Vec<u32>,
    pub lambda_plus: Vec<f64>,
    pub lambda_minus: Vec<f64>,
    pub lambda_topic: Vec<f64>,
    pub out_degree: Vec<u32>,
    pub in_degree: Vec<u32>,
}

impl ScntmModel {
    pub fn num_docs(&self) -> usize {
        self.theta.len()
    }

    pub fn num_topics(&self) -> usize {
        self.config.max_topics
    }

    pub fn vocab_size(&self) -> usize {
        self.corpus.vocab.len()
    }

    pub fn doc_tokens(&self, d: usize) -> &[u32] {
        &self.tokens[self.offsets[d]..self.offsets[d + 1]]
    }

    pub fn phi_prime_node(&self, d: usize, k: usize) -> NodeId {
        self.phi_prime[d * self.config.max_topics + k]
    }

    pub fn nu_node(&self, prior: Prior) -> NodeId {
        let a = self.corpus.authors.len();
        let e = self.corpus.categories.len();
        match prior {
            Prior::Author(i) => self.nu[i],
            Prior::Category(i) => self.nu[a + i],
            Prior::Anonymous => self.nu[a + e],
        }
    }

    pub fn nu_label(&self, b: usize) -> String {
        let a = self.corpus.authors.len();
        let e = self.corpus.categories.len();
        if b < a {
            format!("author:{}", self.corpus.authors[b])
        } else if b < a + e {
            format!("category:{}", self.corpus.categories[b - a])
        } else {
            "anonymous".to_string()
        }
    }

    /// Customer count of network origin for document `d`, topic `k`.
    pub fn network_count(&self, d: usize, k: usize) -> u32 {
        self.network_counts[d * self.config.max_topics + k]
    }

    pub fn group_nodes(&self, group: NodeGroup) -> Vec<NodeId> {
        match group {
            NodeGroup::Mu => vec![self.mu],
            NodeGroup::Nu => self.nu.clone(),
            NodeGroup::ThetaPrime => self.theta_prime.clone(),
            NodeGroup::Theta => self.theta.clone(),
            NodeGroup::Gamma => vec![self.gamma],
            NodeGroup::Phi => self.phi.clone(),
            NodeGroup::PhiPrime => self.phi_prime.clone(),
        }
    }

    /// Number of topics holding a table at the root.
    pub fn active_topics(&self) -> usize {
        self.hierarchy.node(self.mu).active()
    }
}

/// `1` iff the author has at least `eta` documents.
pub fn significance(author_docs: usize, eta: Eta) -> bool {
    match eta {
        Eta::Finite(n) => author_docs as u64 >= n,
        Eta::Infinite => false,
    }
}

/// Choose the `nu` node for every document.
pub fn document_priors(corpus: &Corpus, eta: Eta) -> Result<Vec<Prior>> {
    let author_docs = corpus.author_document_counts();
    corpus
        .docs
        .iter()
        .map(|doc| match (doc.author, doc.category) {
            (Some(a), _) if significance(author_docs[a], eta) => Ok(Prior::Author(a)),
            (None, _) if eta == Eta::Finite(0) => Ok(Prior::Anonymous),
            (_, Some(c)) => Ok(Prior::Category(c)),
            _ => Err(Error::MissingParent(doc.id.clone())),
        })
        .collect()
}

/// Build the node graph and seat every word with a uniformly random topic.
pub fn init_model(corpus: &Corpus, config: &ModelConfig, seed: u64) -> Result<ScntmModel> {
    let k = config.max_topics;
    if k == 0 {
        return Err(Error::InvalidArgument("max_topics must be at least 1".into()));
    }
    if corpus.vocab.is_empty() && corpus.num_tokens() > 0 {
        return Err(Error::InvalidCorpus("tokens present but the vocabulary is empty".into()));
    }
    let priors = document_priors(corpus, config.eta)?;
    let d = corpus.num_docs();
    let v = corpus.vocab.len().max(1);

    let mut h = Hierarchy::new();
    for group in NodeGroup::ALL {
        let discount = match group {
            NodeGroup::Gamma | NodeGroup::Phi | NodeGroup::PhiPrime => config.word_discount,
            _ => config.topic_discount,
        };
        let id = h.add_family(group.name(), discount, config.initial_concentration)?;
        debug_assert_eq!(id, group.family());
    }
    let mu = h.add_node(NodeKind::GemRoot, NodeGroup::Mu.family(), Base::Root, k, false);
    let n_nu = corpus.authors.len() + corpus.categories.len() + 1;
    let nu: Vec<NodeId> = (0..n_nu)
        .map(|_| h.add_node(NodeKind::Pyp, NodeGroup::Nu.family(), Base::Node(mu), k, false))
        .collect();

    let gamma = h.add_node(NodeKind::Pyp, NodeGroup::Gamma.family(), Base::Uniform(v), v, false);
    let phi: Vec<NodeId> = (0..k)
        .map(|_| h.add_node(NodeKind::Pyp, NodeGroup::Phi.family(), Base::Node(gamma), v, false))
        .collect();

    let mut model = ScntmModel {
        config: config.clone(),
        corpus: corpus.clone(),
        hierarchy: h,
        mu,
        nu,
        theta_prime: Vec::with_capacity(d),
        theta: Vec::with_capacity(d),
        gamma,
        phi,
        phi_prime: Vec::with_capacity(d * k),
        doc_prior: priors,
        tokens: Vec::with_capacity(corpus.num_tokens()),
        offsets: Vec::with_capacity(d + 1),
        z: Vec::new(),
        edges: corpus.edges().to_vec(),
        y: vec![0; corpus.edges().len()],
        network_active: false,
        network_counts: vec![0; d * k],
        lambda_plus: vec![1.0; d],
        lambda_minus: vec![1.0; d],
        lambda_topic: vec![1.0; k],
        out_degree: vec![0; d],
        in_degree: vec![0; d],
    };
    for doc in 0..d {
        let parent = model.nu_node(model.doc_prior[doc]);
        let tp = model
            .hierarchy
            .add_node(NodeKind::Pyp, NodeGroup::ThetaPrime.family(), Base::Node(parent), k, false);
        let th = model
            .hierarchy
            .add_node(NodeKind::Pyp, NodeGroup::Theta.family(), Base::Node(tp), k, false);
        model.theta_prime.push(tp);
        model.theta.push(th);
        for topic in 0..k {
            let pp = model.hierarchy.add_node(
                NodeKind::Pyp,
                NodeGroup::PhiPrime.family(),
                Base::Node(model.phi[topic]),
                v,
                true,
            );
            model.phi_prime.push(pp);
        }
    }
    model.offsets.push(0);
    for doc in &corpus.docs {
        model.tokens.extend(doc.tokens());
        model.offsets.push(model.tokens.len());
    }
    for &(i, j) in &model.edges {
        model.out_degree[i as usize] += 1;
        model.in_degree[j as usize] += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    model.z = (0..model.tokens.len()).map(|_| rng.random_range(0..k) as u32).collect();
    let mut ascent = Ascent::default();
    for doc in 0..d {
        for n in model.offsets[doc]..model.offsets[doc + 1] {
            let (topic, word) = (model.z[n] as usize, model.tokens[n] as usize);
            seat(&mut model.hierarchy, model.theta[doc], topic, &mut ascent, &mut rng)?;
            let pp = model.phi_prime[doc * k + topic];
            seat(&mut model.hierarchy, pp, word, &mut ascent, &mut rng)?;
        }
    }
    model.y = initial_citing_topics(&model);
    Ok(model)
}

/// Add one customer at `k` of `node`, drawing the table configuration from its conditional.
pub(crate) fn seat<R: Rng + ?Sized>(
    h: &mut Hierarchy,
    node: NodeId,
    k: usize,
    ascent: &mut Ascent,
    rng: &mut R,
) -> Result<usize> {
    h.ascent(node, k, ascent);
    if ascent.weight() <= 0.0 {
        return Err(Error::Consistency(format!(
            "node {node}: no admissible seating for outcome {k}"
        )));
    }
    let depth = ascent.sample_depth(rng);
    h.add_customer(node, k, depth)?;
    Ok(depth)
}

/// Dominant topic (by `theta` customers) of each citing document.
fn initial_citing_topics(model: &ScntmModel) -> Vec<u32> {
    let k = model.config.max_topics;
    let dominant: Vec<u32> = model
        .theta
        .iter()
        .map(|&node| {
            let mut best = (0u32, 0usize);
            for topic in 0..k {
                let c = model.hierarchy.cell(node, topic).customers;
                if c > best.0 {
                    best = (c, topic);
                }
            }
            best.1 as u32
        })
        .collect();
    model.edges.iter().map(|&(i, _)| dominant[i as usize]).collect()
}

impl ScntmModel {
    /// Seat the citation customers: citing topics are re-initialized from each
    /// citing document's dominant topic and both endpoints receive a customer.
    pub fn activate_network<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<()> {
        if self.network_active {
            return Ok(());
        }
        self.y = initial_citing_topics(self);
        let k = self.config.max_topics;
        let mut ascent = Ascent::default();
        for e in 0..self.edges.len() {
            let (i, j) = (self.edges[e].0 as usize, self.edges[e].1 as usize);
            let topic = self.y[e] as usize;
            seat(&mut self.hierarchy, self.theta_prime[i], topic, &mut ascent, rng)?;
            seat(&mut self.hierarchy, self.theta_prime[j], topic, &mut ascent, rng)?;
            self.network_counts[i * k + topic] += 1;
            self.network_counts[j * k + topic] += 1;
        }
        self.network_active = true;
        Ok(())
    }

    /// Recount every direct customer from `z` and `y` and verify the whole hierarchy.
    pub fn check_consistency(&self) -> Result<()> {
        let k = self.config.max_topics;
        let mut direct: HashMap<(NodeId, usize), u64> = HashMap::new();
        for d in 0..self.num_docs() {
            for n in self.offsets[d]..self.offsets[d + 1] {
                let (topic, word) = (self.z[n] as usize, self.tokens[n] as usize);
                if topic >= k {
                    return Err(Error::Consistency(format!("token {n} has topic {topic} >= {k}")));
                }
                *direct.entry((self.theta[d], topic)).or_default() += 1;
                *direct.entry((self.phi_prime[d * k + topic], word)).or_default() += 1;
            }
        }
        let mut recount = vec![0u32; self.network_counts.len()];
        if self.network_active {
            for (e, &(i, j)) in self.edges.iter().enumerate() {
                let topic = self.y[e] as usize;
                recount[i as usize * k + topic] += 1;
                recount[j as usize * k + topic] += 1;
                *direct.entry((self.theta_prime[i as usize], topic)).or_default() += 1;
                *direct.entry((self.theta_prime[j as usize], topic)).or_default() += 1;
            }
        }
        if recount != self.network_counts {
            return Err(Error::Consistency("network counts disagree with citing topics".into()));
        }
        self.hierarchy
            .check_all(|node, k| direct.get(&(node, k)).copied().unwrap_or(0))?;
        if self.active_topics() > k {
            return Err(Error::Consistency("more active topics than the cap".into()));
        }
        if self
            .lambda_plus
            .iter()
            .chain(&self.lambda_minus)
            .chain(&self.lambda_topic)
            .any(|&l| !(l > 0.0 && l.is_finite()))
        {
            return Err(Error::Consistency("citation rates must be positive".into()));
        }
        Ok(())
    }

    /// Posterior mean of every `nu` node.
    pub fn nu_means(&self) -> Vec<Vec<f64>> {
        let mu = self.hierarchy.posterior_mean(self.mu);
        self.nu
            .iter()
            .map(|&n| self.hierarchy.posterior_mean_given(n, &mu))
            .collect()
    }

    /// Posterior mean of every document's `theta_prime`.
    pub fn theta_prime_means(&self) -> Vec<Vec<f64>> {
        let nu = self.nu_means();
        let index: HashMap<NodeId, usize> = self.nu.iter().enumerate().map(|(b, &n)| (n, b)).collect();
        self.theta_prime
            .iter()
            .map(|&tp| {
                let parent = self.hierarchy.parent(tp).expect("theta_prime has a parent");
                self.hierarchy.posterior_mean_given(tp, &nu[index[&parent]])
            })
            .collect()
    }

    /// Posterior mean of the background word distribution.
    pub fn gamma_mean(&self) -> Vec<f64> {
        self.hierarchy.posterior_mean(self.gamma)
    }

    /// Posterior mean of every topic-word distribution.
    pub fn phi_means(&self) -> Vec<Vec<f64>> {
        let gamma = self.gamma_mean();
        self.phi
            .iter()
            .map(|&n| self.hierarchy.posterior_mean_given(n, &gamma))
            .collect()
    }

    /// `sum_{i,j,k} lambda+_i lambda-_j lambdaT_k theta'_ik theta'_jk`.
    pub fn exp_penalty(&self, theta_prime: &[Vec<f64>]) -> f64 {
        let k = self.config.max_topics;
        let mut plus = vec![0.0; k];
        let mut minus = vec![0.0; k];
        for (d, row) in theta_prime.iter().enumerate() {
            for t in 0..k {
                plus[t] += self.lambda_plus[d] * row[t];
                minus[t] += self.lambda_minus[d] * row[t];
            }
        }
        (0..k).map(|t| self.lambda_topic[t] * plus[t] * minus[t]).sum()
    }

    /// Log of the joint: every node's `f`, the root labelling term, the
    /// uniform word base, and (when active) the citation terms.
    pub fn log_joint(&mut self) -> Result<f64> {
        self.check_consistency()?;
        let mut total = 0.0;
        for id in 0..self.hierarchy.len() {
            total += self.hierarchy.log_f(id)?;
        }
        total += self.hierarchy.log_label_term(self.mu);
        let v = self.vocab_size().max(1) as f64;
        total -= self.hierarchy.node(self.gamma).total_tables as f64 * v.ln();
        if self.network_active {
            total += self.log_network_terms();
        }
        Ok(total)
    }

    fn log_network_terms(&self) -> f64 {
        let k = self.config.max_topics;
        let mut total = 0.0;
        for d in 0..self.num_docs() {
            total += self.out_degree[d] as f64 * self.lambda_plus[d].ln();
            total += self.in_degree[d] as f64 * self.lambda_minus[d].ln();
        }
        let mut edges_per_topic = vec![0u64; k];
        for &t in &self.y {
            edges_per_topic[t as usize] += 1;
        }
        for t in 0..k {
            total += edges_per_topic[t] as f64 * self.lambda_topic[t].ln();
        }
        total - self.exp_penalty(&self.theta_prime_means())
    }

    /// Serialize to JSON. Integer counts round-trip exactly.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let mut model: ScntmModel = serde_json::from_str(s)?;
        model.hierarchy.rebuild_caches();
        Ok(model)
    }
}
