//! Topic summaries, author influence, and the author-topic graph in DOT syntax.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{Prior, ScntmModel};

pub const DEFAULT_EDGE_THRESHOLD: f64 = 0.05;
pub const DEFAULT_LABEL_WORDS: usize = 5;

/// The `n` most probable words of topic `k`, highest first; ties keep vocabulary order.
pub fn top_words(model: &ScntmModel, k: usize, n: usize) -> Result<Vec<(String, f64)>> {
    if k >= model.num_topics() {
        return Err(Error::InvalidArgument(format!(
            "topic {k} out of range (model has {})",
            model.num_topics()
        )));
    }
    let gamma = model.gamma_mean();
    let phi = model.hierarchy.posterior_mean_given(model.phi[k], &gamma);
    let mut order: Vec<usize> = (0..phi.len()).collect();
    order.sort_by(|&a, &b| phi[b].total_cmp(&phi[a]).then(a.cmp(&b)));
    Ok(order
        .into_iter()
        .take(n)
        .map(|w| (model.corpus.vocab[w].clone(), phi[w]))
        .collect())
}

/// Sum of `lambda-` over the author's documents.
pub fn author_influence(model: &ScntmModel, author: usize) -> Result<f64> {
    if author >= model.corpus.authors.len() {
        return Err(Error::InvalidArgument(format!("unknown author index {author}")));
    }
    Ok(model
        .corpus
        .docs
        .iter()
        .zip(&model.lambda_minus)
        .filter(|(doc, _)| doc.author == Some(author))
        .map(|(_, l)| l)
        .sum())
}

/// Posterior mean topic proportions of an author's `nu` node.
pub fn author_topics(model: &ScntmModel, author: usize) -> Result<Vec<f64>> {
    if author >= model.corpus.authors.len() {
        return Err(Error::InvalidArgument(format!("unknown author index {author}")));
    }
    let mu = model.hierarchy.posterior_mean(model.mu);
    Ok(model
        .hierarchy
        .posterior_mean_given(model.nu_node(Prior::Author(author)), &mu))
}

/// Normalized `theta_prime` customer totals per topic.
pub fn corpus_topic_weights(model: &ScntmModel) -> Vec<f64> {
    let k = model.num_topics();
    let mut w = vec![0.0; k];
    for &node in &model.theta_prime {
        for (t, slot) in w.iter_mut().enumerate() {
            *slot += model.hierarchy.cell(node, t).customers as f64;
        }
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        w.iter_mut().for_each(|v| *v /= total);
    }
    w
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Author-topic graph: one box per topic shaded by corpus weight, one ellipse
/// per top author sized by influence, and author-topic edges at or above
/// `edge_threshold`.
pub fn emit_graph(model: &ScntmModel, author_count: usize, edge_threshold: f64) -> Result<String> {
    let k = model.num_topics();
    let weights = corpus_topic_weights(model);
    let heaviest = weights.iter().cloned().fold(0.0, f64::max);
    let mut out = String::from("graph author_topics {\n    node [style=filled];\n");
    for (t, &w) in weights.iter().enumerate() {
        let label: Vec<String> = top_words(model, t, DEFAULT_LABEL_WORDS)?
            .into_iter()
            .map(|(word, _)| word)
            .collect();
        let shade = if heaviest > 0.0 { w / heaviest } else { 0.0 };
        let green = (255.0 - 150.0 * shade).round() as u8;
        let blue = (255.0 - 75.0 * shade).round() as u8;
        let _ = writeln!(
            out,
            "    topic{t} [shape=box, label=\"{}\", fillcolor=\"#ff{green:02x}{blue:02x}\", weight=\"{w:.4}\"];",
            escape(&label.join(", "))
        );
    }

    let mut authors: Vec<(usize, f64)> = (0..model.corpus.authors.len())
        .map(|a| author_influence(model, a).map(|i| (a, i)))
        .collect::<Result<_>>()?;
    authors.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
    authors.truncate(author_count);
    let strongest = authors.first().map_or(0.0, |a| a.1);
    for &(a, influence) in &authors {
        let size = if strongest > 0.0 { influence / strongest } else { 0.0 };
        let _ = writeln!(
            out,
            "    author{a} [shape=ellipse, label=\"{}\", fillcolor=\"#ffffff\", width=\"{:.3}\"];",
            escape(&model.corpus.authors[a]),
            0.75 + 2.25 * size
        );
    }
    for &(a, _) in &authors {
        let topics = author_topics(model, a)?;
        for (t, &w) in topics.iter().enumerate().take(k) {
            if w >= edge_threshold {
                let _ = writeln!(out, "    author{a} -- topic{t} [penwidth=\"{:.3}\"];", 1.0 + 9.0 * w);
            }
        }
    }
    out.push_str("}\n");
    Ok(out)
}
