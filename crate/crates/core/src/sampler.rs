//! Markov chain for the model: collapsed word-topic moves, Metropolis-Hastings
//! moves on citing topics, and auxiliary-variable hyperparameter updates.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{NodeGroup, ScntmModel};
use crate::pyp::{Ascent, Hierarchy, NodeId};
use crate::stirling::log_add_exp;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub iterations: usize,
    /// Citation moves run on iterations strictly after this one.
    pub network_start: usize,
    pub seed: u64,
    /// Gamma prior (shape, rate) on every concentration.
    pub tau0: f64,
    pub tau1: f64,
    /// Gamma prior (shape, rate) on every citation rate.
    pub eps0: f64,
    pub eps1: f64,
    /// Resample concentrations and citation rates each iteration.
    pub update_hyperparameters: bool,
    /// Full count recheck every this many iterations; 0 disables it.
    pub check_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            iterations: 2000,
            network_start: 1000,
            seed: 1,
            tau0: 1.0,
            tau1: 1.0,
            eps0: 1.0,
            eps1: 1.0,
            update_hyperparameters: true,
            check_every: 0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.network_start > self.iterations {
            return Err(Error::InvalidArgument(format!(
                "network_start ({}) exceeds iterations ({})",
                self.network_start, self.iterations
            )));
        }
        for (name, v) in [
            ("tau0", self.tau0),
            ("tau1", self.tau1),
            ("eps0", self.eps0),
            ("eps1", self.eps1),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// One line of the progress stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub iteration: usize,
    pub log_likelihood: f64,
    /// `None` before the network phase or when there are no citations.
    pub acceptance_rate: Option<f64>,
    /// Fraction of per-topic exponential factors in `[0.99, 1]`.
    pub exp_near_one: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ChainStats {
    pub iterations: Vec<IterationStats>,
}

impl ChainStats {
    pub fn log_likelihood(&self) -> Vec<f64> {
        self.iterations.iter().map(|s| s.log_likelihood).collect()
    }

    pub fn mean_acceptance(&self) -> Option<f64> {
        let rates: Vec<f64> = self.iterations.iter().filter_map(|s| s.acceptance_rate).collect();
        (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
    }

    /// One JSON object per iteration.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for s in &self.iterations {
            out.push_str(&serde_json::to_string(s)?);
            out.push('\n');
        }
        Ok(out)
    }
}

/// Per-sweep cache of posterior means used by the citation moves.
#[derive(Debug, Clone)]
struct Snapshot {
    nu: Vec<Vec<f64>>,
    /// Index into `nu` of each document's parent.
    parent: Vec<usize>,
    theta_prime: Vec<Vec<f64>>,
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl Snapshot {
    fn take(model: &ScntmModel) -> Self {
        let nu = model.nu_means();
        let parent: Vec<usize> = model
            .theta_prime
            .iter()
            .map(|&tp| {
                let p = model.hierarchy.parent(tp).expect("theta_prime has a parent");
                model.nu.iter().position(|&n| n == p).expect("parent is a nu node")
            })
            .collect();
        let theta_prime: Vec<Vec<f64>> = model
            .theta_prime
            .iter()
            .zip(&parent)
            .map(|(&tp, &b)| model.hierarchy.posterior_mean_given(tp, &nu[b]))
            .collect();
        let mut snap = Snapshot {
            nu,
            parent,
            theta_prime,
            plus: Vec::new(),
            minus: Vec::new(),
        };
        snap.refresh_sums(model);
        snap
    }

    fn refresh_sums(&mut self, model: &ScntmModel) {
        let k = model.num_topics();
        self.plus = vec![0.0; k];
        self.minus = vec![0.0; k];
        for (d, row) in self.theta_prime.iter().enumerate() {
            for t in 0..k {
                self.plus[t] += model.lambda_plus[d] * row[t];
                self.minus[t] += model.lambda_minus[d] * row[t];
            }
        }
    }

    fn mean_of(&self, model: &ScntmModel, d: usize) -> Vec<f64> {
        model
            .hierarchy
            .posterior_mean_given(model.theta_prime[d], &self.nu[self.parent[d]])
    }
}

/// Outcome of one citation move, exposed for inspection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CitationMove {
    pub proposed: usize,
    /// Table depths drawn for the two re-seated customers, when any were drawn.
    pub depths: Option<(usize, usize)>,
    pub acceptance: f64,
    pub accepted: bool,
}

/// Sampler state: the chain's RNG plus scratch buffers.
pub struct Sampler {
    pub config: SamplerConfig,
    rng: ChaCha8Rng,
    topic_ascents: Vec<Ascent>,
    word_ascents: Vec<Ascent>,
    weights: Vec<f64>,
    pair: (Ascent, Ascent),
    snapshot: Option<Snapshot>,
    exp_total: u64,
    exp_near_one: u64,
}

impl Sampler {
    pub fn new(config: SamplerConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(1);
        Sampler {
            config,
            rng,
            topic_ascents: Vec::new(),
            word_ascents: Vec::new(),
            weights: Vec::new(),
            pair: Default::default(),
            snapshot: None,
            exp_total: 0,
            exp_near_one: 0,
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Unnormalized conditional of a token's topic given every other
    /// assignment; the token itself must already be removed.
    pub fn topic_weights(&mut self, model: &mut ScntmModel, d: usize, word: usize) -> &[f64] {
        let k = model.num_topics();
        self.topic_ascents.resize_with(k, Ascent::default);
        self.word_ascents.resize_with(k, Ascent::default);
        self.weights.resize(k, 0.0);
        for t in 0..k {
            let pp = model.phi_prime_node(d, t);
            model.hierarchy.ascent(model.theta[d], t, &mut self.topic_ascents[t]);
            model.hierarchy.ascent(pp, word, &mut self.word_ascents[t]);
            self.weights[t] = self.topic_ascents[t].weight() * self.word_ascents[t].weight();
        }
        &self.weights
    }

    /// Resample the topic of token `n` (a global token index) of document `d`.
    pub fn sample_word_topic(&mut self, model: &mut ScntmModel, d: usize, n: usize) -> Result<()> {
        let (old, word) = (model.z[n] as usize, model.tokens[n] as usize);
        let old_leaf = model.phi_prime_node(d, old);
        let topic_side = model.hierarchy.remove_customer(model.theta[d], old, &mut self.rng)?;
        let word_side = model.hierarchy.remove_customer(old_leaf, word, &mut self.rng)?;
        let forced = topic_side.transient || word_side.transient;

        self.topic_weights(model, d, word);
        let new = if forced {
            old
        } else {
            sample_index(&self.weights, &mut self.rng).ok_or_else(|| {
                Error::Consistency(format!("document {d}, token {n}: every topic has zero weight"))
            })?
        };
        let topic_depth = self.topic_ascents[new].sample_depth_from(topic_side.min_depth, &mut self.rng);
        let word_depth = self.word_ascents[new].sample_depth_from(word_side.min_depth, &mut self.rng);
        model.hierarchy.add_customer(model.theta[d], new, topic_depth)?;
        model.hierarchy.add_customer(model.phi_prime_node(d, new), word, word_depth)?;
        model.z[n] = new as u32;
        Ok(())
    }

    /// One pass over every token.
    pub fn word_sweep(&mut self, model: &mut ScntmModel) -> Result<()> {
        for d in 0..model.num_docs() {
            for n in model.offsets[d]..model.offsets[d + 1] {
                self.sample_word_topic(model, d, n)?;
            }
        }
        Ok(())
    }

    /// Recompute the posterior means the citation moves condition on.
    pub fn refresh_snapshot(&mut self, model: &ScntmModel) {
        self.snapshot = Some(Snapshot::take(model));
    }

    /// Metropolis-Hastings move on the citing topic of edge `e`.
    pub fn sample_citing_topic(&mut self, model: &mut ScntmModel, e: usize) -> Result<CitationMove> {
        if !model.network_active {
            return Err(Error::InvalidArgument("citation moves need an active network".into()));
        }
        if e >= model.edges.len() {
            return Err(Error::InvalidArgument(format!("edge {e} does not exist")));
        }
        if self.snapshot.is_none() {
            self.refresh_snapshot(model);
        }
        let mut snap = self.snapshot.take().expect("snapshot present");
        let result = self.citation_move(model, e, &mut snap);
        self.snapshot = Some(snap);
        result
    }

    fn citation_move(&mut self, model: &mut ScntmModel, e: usize, snap: &mut Snapshot) -> Result<CitationMove> {
        let k = model.num_topics();
        let (i, j) = (model.edges[e].0 as usize, model.edges[e].1 as usize);
        let (node_i, node_j) = (model.theta_prime[i], model.theta_prime[j]);
        let old = model.y[e] as usize;

        let q_old = proposal(&model.lambda_topic, &snap.theta_prime[i], &snap.theta_prime[j]);
        let new = sample_index(&q_old, &mut self.rng)
            .ok_or_else(|| Error::Consistency(format!("edge {e}: proposal has no mass")))?;
        let lp = model.lambda_plus[i] * model.lambda_minus[j];
        for t in 0..k {
            let x = lp * model.lambda_topic[t] * snap.theta_prime[i][t] * snap.theta_prime[j][t];
            self.exp_total += 1;
            if (-x).exp() >= 0.99 {
                self.exp_near_one += 1;
            }
        }

        let removed_i = model.hierarchy.remove_customer(node_i, old, &mut self.rng)?;
        let removed_j = model.hierarchy.remove_customer(node_j, old, &mut self.rng)?;
        // Counts are additive, so either order restores the same state; seating the
        // deeper customer first never passes through a cell without a table.
        let restore = |h: &mut Hierarchy| -> Result<()> {
            let mut seats = [(node_i, removed_i.depth), (node_j, removed_j.depth)];
            seats.sort_by_key(|s| std::cmp::Reverse(s.1));
            for (node, depth) in seats {
                h.add_customer(node, old, depth)?;
            }
            Ok(())
        };
        let blocked = !(model.hierarchy.chain_valid(node_i, old) && model.hierarchy.chain_valid(node_j, old));
        if blocked && new != old {
            restore(&mut model.hierarchy)?;
            return Ok(CitationMove {
                proposed: new,
                depths: None,
                acceptance: 0.0,
                accepted: false,
            });
        }

        let w_old = if new == old {
            None
        } else {
            Some(pair_weight(&mut model.hierarchy, node_i, node_j, old, &mut self.pair, None)?.0)
        };
        let (w_new, depths) =
            pair_weight(&mut model.hierarchy, node_i, node_j, new, &mut self.pair, Some(&mut self.rng))?;
        let Some((depth_i, depth_j)) = depths else {
            restore(&mut model.hierarchy)?;
            return Ok(CitationMove {
                proposed: new,
                depths: None,
                acceptance: 0.0,
                accepted: false,
            });
        };
        let weight_ratio = match w_old {
            Some(w) => w_new / w,
            None => 1.0,
        };

        let theta_i = snap.mean_of(model, i);
        let theta_j = if i == j { theta_i.clone() } else { snap.mean_of(model, j) };
        let q_new = proposal(&model.lambda_topic, &theta_i, &theta_j);

        let mut plus = snap.plus.clone();
        let mut minus = snap.minus.clone();
        for t in 0..k {
            let di = theta_i[t] - snap.theta_prime[i][t];
            plus[t] += model.lambda_plus[i] * di;
            minus[t] += model.lambda_minus[i] * di;
            if i != j {
                let dj = theta_j[t] - snap.theta_prime[j][t];
                plus[t] += model.lambda_plus[j] * dj;
                minus[t] += model.lambda_minus[j] * dj;
            }
        }
        let penalty_old: f64 = (0..k).map(|t| model.lambda_topic[t] * snap.plus[t] * snap.minus[t]).sum();
        let penalty_new: f64 = (0..k).map(|t| model.lambda_topic[t] * plus[t] * minus[t]).sum();

        let acceptance = (penalty_old - penalty_new).exp() * weight_ratio * q_new[old] / q_old[new];
        let accepted = acceptance >= 1.0 || self.rng.random::<f64>() < acceptance;
        if accepted {
            model.y[e] = new as u32;
            model.network_counts[i * k + old] -= 1;
            model.network_counts[j * k + old] -= 1;
            model.network_counts[i * k + new] += 1;
            model.network_counts[j * k + new] += 1;
            snap.theta_prime[i] = theta_i;
            snap.theta_prime[j] = theta_j;
            snap.plus = plus;
            snap.minus = minus;
        } else {
            model.hierarchy.remove_customer_at_depth(node_j, new, depth_j)?;
            model.hierarchy.remove_customer_at_depth(node_i, new, depth_i)?;
            restore(&mut model.hierarchy)?;
        }
        Ok(CitationMove {
            proposed: new,
            depths: Some((depth_i, depth_j)),
            acceptance: acceptance.min(1.0),
            accepted,
        })
    }

    /// One pass over every citation; returns the acceptance rate.
    pub fn network_sweep(&mut self, model: &mut ScntmModel) -> Result<Option<f64>> {
        if model.edges.is_empty() {
            return Ok(None);
        }
        self.refresh_snapshot(model);
        let mut accepted = 0usize;
        for e in 0..model.edges.len() {
            if self.sample_citing_topic(model, e)?.accepted {
                accepted += 1;
            }
        }
        Ok(Some(accepted as f64 / model.edges.len() as f64))
    }

    /// Auxiliary-variable update of one family's shared concentration.
    pub fn sample_concentration(&mut self, model: &mut ScntmModel, group: NodeGroup) {
        let family = group.family();
        let (discount, beta) = {
            let f = model.hierarchy.family(family);
            (f.discount, f.concentration)
        };
        let mut shape = self.config.tau0;
        let mut rate = self.config.tau1;
        let mut any = false;
        for id in model.group_nodes(group) {
            let node = model.hierarchy.node(id);
            if node.total_customers == 0 {
                continue;
            }
            any = true;
            rate -= log1m_beta_sample(node.total_customers as f64, beta, &mut self.rng);
            for j in 0..node.total_tables {
                let p = beta / (beta + j as f64 * discount);
                if self.rng.random::<f64>() < p {
                    shape += 1.0;
                }
            }
        }
        if any {
            let draw = gamma_sample(shape, rate, &mut self.rng).max(f64::MIN_POSITIVE);
            model.hierarchy.set_concentration(family, draw);
        }
    }

    /// Gibbs update of every citation rate given fresh posterior means.
    pub fn sample_lambdas(&mut self, model: &mut ScntmModel) {
        let theta = model.theta_prime_means();
        let (e0, e1) = (self.config.eps0, self.config.eps1);
        let rng = &mut self.rng;
        let k = model.num_topics();
        let sums = |weights: &[f64]| -> Vec<f64> {
            let mut s = vec![0.0; k];
            for (row, &w) in theta.iter().zip(weights) {
                for t in 0..k {
                    s[t] += w * row[t];
                }
            }
            s
        };
        let minus = sums(&model.lambda_minus);
        for d in 0..model.num_docs() {
            let rate: f64 = (0..k).map(|t| model.lambda_topic[t] * theta[d][t] * minus[t]).sum();
            model.lambda_plus[d] = positive(gamma_sample(e0 + model.out_degree[d] as f64, e1 + rate, rng));
        }
        let plus = sums(&model.lambda_plus);
        for d in 0..model.num_docs() {
            let rate: f64 = (0..k).map(|t| model.lambda_topic[t] * theta[d][t] * plus[t]).sum();
            model.lambda_minus[d] = positive(gamma_sample(e0 + model.in_degree[d] as f64, e1 + rate, rng));
        }
        let minus = sums(&model.lambda_minus);
        let mut per_topic = vec![0u64; k];
        for &t in &model.y {
            per_topic[t as usize] += 1;
        }
        for t in 0..k {
            model.lambda_topic[t] = positive(gamma_sample(e0 + per_topic[t] as f64, e1 + plus[t] * minus[t], rng));
        }
    }

    /// Hyperparameter step of one iteration.
    pub fn update_hyperparameters(&mut self, model: &mut ScntmModel) {
        for group in NodeGroup::ALL {
            self.sample_concentration(model, group);
        }
        if model.network_active && !model.edges.is_empty() {
            self.sample_lambdas(model);
        }
    }

    /// Run the configured number of iterations, reporting each one to `on_iteration`.
    pub fn run_with<F>(&mut self, model: &mut ScntmModel, mut on_iteration: F) -> Result<ChainStats>
    where
        F: FnMut(&IterationStats),
    {
        self.config.validate()?;
        let mut stats = ChainStats::default();
        for it in 1..=self.config.iterations {
            let start = Instant::now();
            self.word_sweep(model)?;
            let mut acceptance = None;
            let mut near_one = None;
            if it > self.config.network_start {
                if !model.network_active {
                    model.activate_network(&mut self.rng)?;
                }
                self.exp_total = 0;
                self.exp_near_one = 0;
                acceptance = self.network_sweep(model)?;
                if self.exp_total > 0 {
                    near_one = Some(self.exp_near_one as f64 / self.exp_total as f64);
                }
            }
            if self.config.update_hyperparameters {
                self.update_hyperparameters(model);
            }
            if self.config.check_every > 0 && it % self.config.check_every == 0 {
                if let Err(err) = model.check_consistency() {
                    log::error!("iteration {it}: {err}\n{}", crate::eval::count_summary(model));
                    return Err(err);
                }
            }
            let record = IterationStats {
                iteration: it,
                log_likelihood: word_log_likelihood(model),
                acceptance_rate: acceptance,
                exp_near_one: near_one,
                seconds: start.elapsed().as_secs_f64(),
            };
            log::debug!(
                "iteration {it}: log-likelihood {:.3}, acceptance {:?}",
                record.log_likelihood,
                record.acceptance_rate
            );
            on_iteration(&record);
            stats.iterations.push(record);
        }
        Ok(stats)
    }

    pub fn run(&mut self, model: &mut ScntmModel) -> Result<ChainStats> {
        self.run_with(model, |_| {})
    }
}

/// Run a fresh chain for `config` on `model`.
pub fn run(model: &mut ScntmModel, config: &SamplerConfig) -> Result<ChainStats> {
    Sampler::new(config.clone()).run(model)
}

/// `sum_n log phi'_{d, z_n}(w_n)` under posterior means.
pub fn word_log_likelihood(model: &ScntmModel) -> f64 {
    let phi = model.phi_means();
    let h = &model.hierarchy;
    let mut total = 0.0;
    for d in 0..model.num_docs() {
        for n in model.offsets[d]..model.offsets[d + 1] {
            let (t, w) = (model.z[n] as usize, model.tokens[n] as usize);
            total += h.posterior_mean_at(model.phi_prime_node(d, t), w, phi[t][w]).ln();
        }
    }
    total
}

/// Proposal over citing topics, proportional to `lambdaT_k theta_i[k] theta_j[k]`.
fn proposal(lambda_topic: &[f64], theta_i: &[f64], theta_j: &[f64]) -> Vec<f64> {
    let mut q: Vec<f64> = lambda_topic
        .iter()
        .zip(theta_i.iter().zip(theta_j))
        .map(|(l, (a, b))| l * a * b)
        .collect();
    let total: f64 = q.iter().sum();
    if total > 0.0 {
        q.iter_mut().for_each(|v| *v /= total);
    }
    q
}

/// Marginal weight of adding one customer at `k` to `a` and then one to `b`,
/// summed over the table configurations that leave both chains valid. With
/// `rng`, a configuration is also drawn and left seated; `None` means no
/// configuration is admissible.
pub(crate) fn pair_weight(
    h: &mut Hierarchy,
    a: NodeId,
    b: NodeId,
    k: usize,
    scratch: &mut (Ascent, Ascent),
    rng: Option<&mut ChaCha8Rng>,
) -> Result<(f64, Option<(usize, usize)>)> {
    let (first, second) = scratch;
    h.ascent(a, k, first);
    let mut configs: Vec<(usize, usize, f64)> = Vec::new();
    for depth_a in 0..=first.levels.len() {
        let wa = first.depth_weight(depth_a);
        if wa <= 0.0 {
            continue;
        }
        h.add_customer(a, k, depth_a)?;
        h.ascent(b, k, second);
        for depth_b in 0..=second.levels.len() {
            let wb = second.depth_weight(depth_b);
            if wb <= 0.0 {
                continue;
            }
            h.add_customer(b, k, depth_b)?;
            if h.chain_valid(a, k) && h.chain_valid(b, k) {
                configs.push((depth_a, depth_b, wa * wb));
            }
            h.remove_customer_at_depth(b, k, depth_b)?;
        }
        h.remove_customer_at_depth(a, k, depth_a)?;
    }
    let weights: Vec<f64> = configs.iter().map(|c| c.2).collect();
    let total: f64 = weights.iter().sum();
    let Some(rng) = rng else {
        return Ok((total, None));
    };
    let Some(pick) = sample_index(&weights, rng) else {
        return Ok((0.0, None));
    };
    let (depth_a, depth_b, _) = configs[pick];
    h.add_customer(a, k, depth_a)?;
    h.add_customer(b, k, depth_b)?;
    Ok((total, Some((depth_a, depth_b))))
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return None;
    }
    let mut u = rng.random::<f64>() * total;
    let mut last = None;
    for (i, &w) in weights.iter().enumerate() {
        if w <= 0.0 {
            continue;
        }
        if u < w {
            return Some(i);
        }
        u -= w;
        last = Some(i);
    }
    last
}

fn positive(x: f64) -> f64 {
    x.max(f64::MIN_POSITIVE)
}

/// Draw from Gamma(shape, rate).
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> f64 {
    Gamma::new(shape, 1.0 / rate)
        .expect("positive gamma parameters")
        .sample(rng)
}

/// `log X` for `X ~ Gamma(shape, 1)`, accurate for tiny shapes where `X` underflows.
fn log_gamma_sample<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> f64 {
    if shape >= 1.0 {
        return Gamma::new(shape, 1.0).expect("positive shape").sample(rng).ln();
    }
    let boosted = Gamma::new(shape + 1.0, 1.0).expect("positive shape").sample(rng).ln();
    let u: f64 = 1.0 - rng.random::<f64>();
    boosted + u.ln() / shape
}

/// `log(1 - xi)` for `xi ~ Beta(a, b)`, computed without cancellation.
fn log1m_beta_sample<R: Rng + ?Sized>(a: f64, b: f64, rng: &mut R) -> f64 {
    if a >= 1.0 && b >= 1.0 {
        let xi: f64 = Beta::new(a, b).expect("positive beta parameters").sample(rng);
        if xi < 1.0 {
            return (-xi).ln_1p();
        }
    }
    let x = log_gamma_sample(a, rng);
    let y = log_gamma_sample(b, rng);
    y - log_add_exp(x, y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Corpus, Document};
    use crate::model::{init_model, Eta, ModelConfig};

    fn toy(k: usize) -> ScntmModel {
        let docs = (0..4)
            .map(|d| Document {
                id: format!("d{d}"),
                title: vec![],
                abstract_tokens: (0..6).map(|n| ((d * 3 + n) % 5) as u32).collect(),
                author: Some(d % 2),
                category: Some(d % 2),
            })
            .collect();
        let corpus = Corpus::new(
            docs,
            (0..5).map(|i| format!("w{i}")).collect(),
            vec!["x".into(), "y".into()],
            vec!["p".into(), "q".into()],
            [(0, 1), (1, 2), (3, 0), (2, 3)],
        )
        .unwrap();
        let config = ModelConfig {
            eta: Eta::Finite(0),
            max_topics: k,
            ..Default::default()
        };
        init_model(&corpus, &config, 3).unwrap()
    }

    #[test]
    fn zero_iterations_leave_model_unchanged() {
        let mut m = toy(3);
        let before = m.to_json().unwrap();
        let stats = run(
            &mut m,
            &SamplerConfig {
                iterations: 0,
                network_start: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(stats.iterations.is_empty());
        assert_eq!(m.to_json().unwrap(), before);
    }

    #[test]
    fn network_start_after_iterations_is_rejected() {
        let mut m = toy(2);
        let config = SamplerConfig {
            iterations: 3,
            network_start: 4,
            ..Default::default()
        };
        assert!(matches!(run(&mut m, &config), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_topic_keeps_topic_and_accepts() {
        let mut m = toy(1);
        let mut s = Sampler::new(SamplerConfig::default());
        s.word_sweep(&mut m).unwrap();
        assert!(m.z.iter().all(|&t| t == 0));
        m.activate_network(s.rng()).unwrap();
        for e in 0..m.edges.len() {
            let mv = s.sample_citing_topic(&mut m, e).unwrap();
            assert!(mv.accepted);
            assert_eq!(mv.acceptance, 1.0);
        }
    }

    #[test]
    fn sweeps_preserve_invariants() {
        let mut m = toy(3);
        let config = SamplerConfig {
            iterations: 30,
            network_start: 10,
            check_every: 1,
            ..Default::default()
        };
        let stats = run(&mut m, &config).unwrap();
        assert_eq!(stats.iterations.len(), 30);
        assert!(stats.iterations[..10].iter().all(|s| s.acceptance_rate.is_none()));
        for s in &stats.iterations[10..] {
            let a = s.acceptance_rate.unwrap();
            assert!((0.0..=1.0).contains(&a));
        }
        m.check_consistency().unwrap();
    }

    #[test]
    fn runs_are_reproducible() {
        let config = SamplerConfig {
            iterations: 8,
            network_start: 3,
            seed: 42,
            ..Default::default()
        };
        let (mut a, mut b) = (toy(3), toy(3));
        run(&mut a, &config).unwrap();
        run(&mut b, &config).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
    }

    #[test]
    fn symmetric_fresh_model_gives_uniform_conditional() {
        let corpus = Corpus::new(
            vec![Document {
                id: "only".into(),
                title: vec![],
                abstract_tokens: vec![],
                author: None,
                category: None,
            }],
            vec!["a".into(), "b".into()],
            vec![],
            vec![],
            [],
        )
        .unwrap();
        let mut m = init_model(
            &corpus,
            &ModelConfig {
                max_topics: 2,
                ..Default::default()
            },
            0,
        )
        .unwrap();
        let mut s = Sampler::new(SamplerConfig::default());
        let w = s.topic_weights(&mut m, 0, 1).to_vec();
        assert!((w[0] / (w[0] + w[1]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn citation_move_on_unknown_edge_fails() {
        let mut m = toy(2);
        let mut s = Sampler::new(SamplerConfig::default());
        assert!(s.sample_citing_topic(&mut m, 0).is_err());
        m.activate_network(s.rng()).unwrap();
        assert!(s.sample_citing_topic(&mut m, 99).is_err());
    }

    #[test]
    fn concentration_shape_with_single_table() {
        // T = 1 everywhere: only psi_0 = 1 can fire, so the posterior shape is tau0 + #nodes.
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| gamma_sample(3.0, 1.0 - 0.5f64.ln(), &mut rng)).sum::<f64>() / n as f64;
        let expected = 3.0 / (1.0 - 0.5f64.ln());
        let se = (3.0f64).sqrt() / (1.0 - 0.5f64.ln()) / (n as f64).sqrt();
        assert!((mean - expected).abs() < 3.0 * se, "{mean} vs {expected}");
    }

    #[test]
    fn log1m_beta_handles_tiny_concentration() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10_000 {
            let v = log1m_beta_sample(5000.0, 0.001, &mut rng);
            assert!(v.is_finite() && v < 0.0);
        }
        let n = 50_000;
        let mean: f64 = (0..n).map(|_| log1m_beta_sample(2.0, 3.0, &mut rng)).sum::<f64>() / n as f64;
        // E log(1 - xi) = digamma(3) - digamma(5) = -(1/3 + 1/4)
        assert!((mean + 7.0 / 12.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn pair_weight_matches_sequential_product_when_nodes_differ() {
        let mut m = toy(2);
        let mut s = Sampler::new(SamplerConfig::default());
        m.activate_network(s.rng()).unwrap();
        let (a, b) = (m.theta_prime[0], m.theta_prime[1]);
        let mut h = m.hierarchy.clone();
        let mut scratch = Default::default();
        let (w, _) = pair_weight(&mut h, a, b, 1, &mut scratch, None).unwrap();
        let before = {
            let mut total = 0.0;
            for id in 0..h.len() {
                total += h.log_f(id).unwrap();
            }
            total + h.log_label_term(m.mu)
        };
        let mut brute = 0.0;
        for da in 0..=3 {
            for db in 0..=3 {
                let mut g = h.clone();
                if g.add_customer(a, 1, da).is_err() || g.add_customer(b, 1, db).is_err() {
                    continue;
                }
                let mut total = 0.0;
                let mut ok = true;
                for id in 0..g.len() {
                    match g.log_f(id) {
                        Ok(v) => total += v,
                        Err(_) => ok = false,
                    }
                }
                if ok {
                    brute += (total + g.log_label_term(m.mu) - before).exp();
                }
            }
        }
        assert!((w - brute).abs() < 1e-9 * brute, "{w} vs {brute}");
    }
}
