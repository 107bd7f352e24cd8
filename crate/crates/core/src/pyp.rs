//! Collapsed Pitman-Yor nodes stored as customer/table counts.
//!
//! A [`Hierarchy`] is an arena of [`PypNode`]s. Every node belongs to a
//! [`Family`] that carries the discount and the (shared) concentration.
//! Probability vectors are never stored: the marginal likelihood of a node is
//!
//! ```text
//! f(N) = (b|a)_T / (b)_C * prod_k S^{c_k}_{t_k,a} / binom(c_k, t_k)
//! ```
//!
//! where the binomial accounts for which customers hold the tables. A table
//! opened at a node is a customer at its parent.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stirling::{log_pochhammer, log_pochhammer_stride, StirlingCache};

pub type NodeId = usize;
pub type FamilyId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    /// Topic root: a table count is 1 exactly when the customer count is positive.
    GemRoot,
    Pyp,
}

/// What sits above a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Base {
    Node(NodeId),
    /// Fixed uniform base over `n` outcomes; each table contributes `1/n`.
    Uniform(usize),
    /// No parent (GEM roots).
    Root,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Family {
    pub name: String,
    pub discount: f64,
    pub concentration: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub customers: u32,
    pub tables: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountStore {
    Dense(Vec<Cell>),
    /// Sorted by key, zero cells removed.
    Sparse(Vec<(u32, Cell)>),
}

impl CountStore {
    pub fn get(&self, k: usize) -> Cell {
        match self {
            CountStore::Dense(cells) => cells[k],
            CountStore::Sparse(entries) => match entries.binary_search_by_key(&(k as u32), |e| e.0) {
                Ok(i) => entries[i].1,
                Err(_) => Cell::default(),
            },
        }
    }

    fn set(&mut self, k: usize, cell: Cell) {
        match self {
            CountStore::Dense(cells) => cells[k] = cell,
            CountStore::Sparse(entries) => {
                match entries.binary_search_by_key(&(k as u32), |e| e.0) {
                    Ok(i) if cell.customers == 0 && cell.tables == 0 => {
                        entries.remove(i);
                    }
                    Ok(i) => entries[i].1 = cell,
                    Err(_) if cell.customers == 0 && cell.tables == 0 => {}
                    Err(i) => entries.insert(i, (k as u32, cell)),
                }
            }
        }
    }

    /// Non-empty cells in key order.
    pub fn iter(&self) -> Box<dyn Iterator<Item = (usize, Cell)> + '_> {
        match self {
            CountStore::Dense(cells) => Box::new(
                cells
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.customers > 0 || c.tables > 0)
                    .map(|(k, c)| (k, *c)),
            ),
            CountStore::Sparse(entries) => Box::new(entries.iter().map(|(k, c)| (*k as usize, *c))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PypNode {
    pub kind: NodeKind,
    pub family: FamilyId,
    pub base: Base,
    /// Number of outcomes (topics or vocabulary words).
    pub dim: usize,
    pub counts: CountStore,
    pub total_customers: u64,
    pub total_tables: u64,
}

impl PypNode {
    pub fn cell(&self, k: usize) -> Cell {
        self.counts.get(k)
    }

    pub fn is_empty(&self) -> bool {
        self.total_customers == 0
    }

    /// Number of outcomes with at least one table.
    pub fn active(&self) -> usize {
        self.counts.iter().filter(|(_, c)| c.tables > 0).count()
    }
}

/// Likelihood-ratio factors for adding one customer at a single level.
#[derive(Debug, Clone, Copy)]
pub struct LevelRatio {
    pub node: NodeId,
    /// Ratio for joining an existing table (customer count +1 only).
    pub join: f64,
    /// Ratio for opening a table here, excluding whatever happens at the parent.
    pub open: f64,
}

/// The chain of per-level ratios for one candidate addition, plus the
/// marginal weight obtained by summing over every table configuration.
#[derive(Debug, Clone, Default)]
pub struct Ascent {
    pub levels: Vec<LevelRatio>,
    /// `suffix[l]` is the total weight of adding a customer at level `l`.
    pub suffix: Vec<f64>,
    /// Factor contributed by the fixed base when every level opens a table.
    pub base_factor: f64,
}

impl Ascent {
    pub fn weight(&self) -> f64 {
        self.suffix.first().copied().unwrap_or(0.0)
    }

    /// Draw how many levels open a table, proportional to the configuration weights.
    pub fn sample_depth<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let mut depth = 0;
        for (l, level) in self.levels.iter().enumerate() {
            let total = self.suffix[l];
            if total <= 0.0 {
                break;
            }
            let join = level.join;
            if rng.random::<f64>() * total < join {
                return depth;
            }
            depth += 1;
        }
        depth
    }

    /// Draw a depth of at least `min_depth`, proportional to the configuration weights.
    pub fn sample_depth_from<R: Rng + ?Sized>(&self, min_depth: usize, rng: &mut R) -> usize {
        if min_depth == 0 {
            return self.sample_depth(rng);
        }
        let max = self.levels.len();
        let weights: Vec<f64> = (min_depth..=max).map(|d| self.depth_weight(d)).collect();
        let total: f64 = weights.iter().sum();
        let mut u = rng.random::<f64>() * total;
        for (i, w) in weights.iter().enumerate() {
            if u < *w {
                return min_depth + i;
            }
            u -= w;
        }
        max
    }

    /// Probability of the configuration that opens tables on exactly `depth` levels.
    pub fn depth_probability(&self, depth: usize) -> f64 {
        let total = self.weight();
        if total <= 0.0 {
            return 0.0;
        }
        self.depth_weight(depth) / total
    }

    /// Unnormalized weight of the configuration that opens tables on exactly `depth` levels.
    pub fn depth_weight(&self, depth: usize) -> f64 {
        let mut w = 1.0;
        for level in &self.levels[..depth.min(self.levels.len())] {
            w *= level.open;
        }
        if depth < self.levels.len() {
            w *= self.levels[depth].join;
        } else {
            w *= self.base_factor;
        }
        w
    }
}

/// Outcome of removing one customer with resampled table indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Removal {
    /// Number of levels at which the customer also held a table.
    pub depth: usize,
    /// A level was left with customers but no table; only re-adding the
    /// same outcome with a table there restores a valid state.
    pub transient: bool,
    /// Smallest re-add depth that re-opens every table the removal left missing.
    pub min_depth: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Hierarchy {
    families: Vec<Family>,
    nodes: Vec<PypNode>,
    #[serde(skip)]
    caches: Vec<StirlingCache>,
    #[serde(skip)]
    cache_of_family: Vec<usize>,
}

impl Default for Hierarchy {
    fn default() -> Self {
        Self::new()
    }
}

impl Hierarchy {
    pub fn new() -> Self {
        Hierarchy {
            families: Vec::new(),
            nodes: Vec::new(),
            caches: Vec::new(),
            cache_of_family: Vec::new(),
        }
    }

    pub fn add_family(&mut self, name: &str, discount: f64, concentration: f64) -> Result<FamilyId> {
        if !(0.0..1.0).contains(&discount) {
            return Err(Error::InvalidArgument(format!(
                "discount for {name} must lie in [0, 1), got {discount}"
            )));
        }
        if concentration <= 0.0 || !concentration.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "concentration for {name} must be positive, got {concentration}"
            )));
        }
        self.families.push(Family {
            name: name.to_string(),
            discount,
            concentration,
        });
        self.attach_cache(self.families.len() - 1);
        Ok(self.families.len() - 1)
    }

    fn attach_cache(&mut self, family: FamilyId) {
        let discount = self.families[family].discount;
        let idx = match self.caches.iter().position(|c| c.discount() == discount) {
            Some(i) => i,
            None => {
                self.caches.push(StirlingCache::new(discount));
                self.caches.len() - 1
            }
        };
        if self.cache_of_family.len() <= family {
            self.cache_of_family.resize(family + 1, 0);
        }
        self.cache_of_family[family] = idx;
    }

    /// Rebuild the Stirling caches, e.g. after deserialization.
    pub fn rebuild_caches(&mut self) {
        self.caches.clear();
        self.cache_of_family.clear();
        for f in 0..self.families.len() {
            self.attach_cache(f);
        }
    }

    pub fn add_node(&mut self, kind: NodeKind, family: FamilyId, base: Base, dim: usize, sparse: bool) -> NodeId {
        assert!(family < self.families.len(), "unknown family {family}");
        if let Base::Node(p) = base {
            assert!(p < self.nodes.len(), "parent {p} must be created first");
            assert_eq!(self.nodes[p].dim, dim, "parent dimension mismatch");
        }
        let counts = if sparse {
            CountStore::Sparse(Vec::new())
        } else {
            CountStore::Dense(vec![Cell::default(); dim])
        };
        self.nodes.push(PypNode {
            kind,
            family,
            base,
            dim,
            counts,
            total_customers: 0,
            total_tables: 0,
        });
        self.nodes.len() - 1
    }

    pub fn node(&self, id: NodeId) -> &PypNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[PypNode] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn family(&self, id: FamilyId) -> &Family {
        &self.families[id]
    }

    pub fn families(&self) -> &[Family] {
        &self.families
    }

    pub fn set_concentration(&mut self, family: FamilyId, concentration: f64) {
        assert!(concentration > 0.0 && concentration.is_finite());
        self.families[family].concentration = concentration;
    }

    pub fn cell(&self, id: NodeId, k: usize) -> Cell {
        self.nodes[id].counts.get(k)
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        match self.nodes[id].base {
            Base::Node(p) => Some(p),
            _ => None,
        }
    }

    fn put(&mut self, id: NodeId, k: usize, cell: Cell) {
        self.nodes[id].counts.set(k, cell);
    }

    /// Add a customer at `k` of one node, optionally opening a table. Does not touch the parent.
    fn raw_add(&mut self, id: NodeId, k: usize, open: bool) -> Result<()> {
        let node = &self.nodes[id];
        let mut cell = node.cell(k);
        if cell.customers == 0 && !open {
            return Err(Error::Consistency(format!(
                "node {id}: first customer at {k} must open a table"
            )));
        }
        if open && node.kind == NodeKind::GemRoot && cell.tables >= 1 {
            return Err(Error::Consistency(format!(
                "node {id}: root outcome {k} already has its table"
            )));
        }
        cell.customers += 1;
        if open {
            cell.tables += 1;
        }
        self.put(id, k, cell);
        let node = &mut self.nodes[id];
        node.total_customers += 1;
        if open {
            node.total_tables += 1;
        }
        Ok(())
    }

    fn raw_remove(&mut self, id: NodeId, k: usize, close: bool) -> Result<()> {
        let mut cell = self.nodes[id].cell(k);
        if cell.customers == 0 {
            return Err(Error::Consistency(format!("node {id}: no customer at {k} to remove")));
        }
        if close && cell.tables == 0 {
            return Err(Error::Consistency(format!("node {id}: no table at {k} to remove")));
        }
        cell.customers -= 1;
        if close {
            cell.tables -= 1;
        }
        self.put(id, k, cell);
        let node = &mut self.nodes[id];
        node.total_customers -= 1;
        if close {
            node.total_tables -= 1;
        }
        Ok(())
    }

    /// Add a customer at `k`. A new table becomes a customer at the parent,
    /// which in turn opens a table only if it had no customer there.
    pub fn increment(&mut self, id: NodeId, k: usize, add_table: bool) -> Result<()> {
        let open = add_table || self.nodes[id].cell(k).customers == 0;
        self.raw_add(id, k, open)?;
        if open {
            if let Base::Node(p) = self.nodes[id].base {
                self.increment(p, k, false)?;
            }
        }
        Ok(())
    }

    /// Remove a customer at `k`. A removed table removes a customer at the
    /// parent, closing the parent's table only when every customer there holds one.
    pub fn decrement(&mut self, id: NodeId, k: usize, remove_table: bool) -> Result<()> {
        let cell = self.nodes[id].cell(k);
        let close = remove_table || cell.customers == cell.tables;
        self.raw_remove(id, k, close)?;
        if close {
            if let Base::Node(p) = self.nodes[id].base {
                self.decrement(p, k, false)?;
            }
        }
        Ok(())
    }

    /// Add a customer at `k` that opens tables on exactly `depth` consecutive
    /// levels starting at `id`, then joins an existing table.
    pub fn add_customer(&mut self, id: NodeId, k: usize, depth: usize) -> Result<()> {
        let mut node = id;
        let mut level = 0;
        loop {
            let open = level < depth;
            self.raw_add(node, k, open)?;
            if !open {
                return Ok(());
            }
            match self.nodes[node].base {
                Base::Node(p) => {
                    node = p;
                    level += 1;
                }
                _ => return Ok(()),
            }
        }
    }

    /// Undo [`add_customer`](Self::add_customer) with the same depth.
    pub fn remove_customer_at_depth(&mut self, id: NodeId, k: usize, depth: usize) -> Result<()> {
        let mut node = id;
        let mut level = 0;
        loop {
            let close = level < depth;
            self.raw_remove(node, k, close)?;
            if !close {
                return Ok(());
            }
            match self.nodes[node].base {
                Base::Node(p) => {
                    node = p;
                    level += 1;
                }
                _ => return Ok(()),
            }
        }
    }

    /// `p(u = 1) = t_k / c_k`: whether a customer at `k` holds one of the tables.
    pub fn sample_indicator<R: Rng + ?Sized>(&self, id: NodeId, k: usize, rng: &mut R) -> Result<bool> {
        let cell = self.nodes[id].cell(k);
        if cell.customers == 0 {
            return Err(Error::Consistency(format!(
                "node {id}: indicator requested for empty outcome {k}"
            )));
        }
        if cell.tables == cell.customers {
            return Ok(true);
        }
        Ok(rng.random::<f64>() * (cell.customers as f64) < cell.tables as f64)
    }

    /// Remove a customer at `k`, resampling its table indicator level by level.
    pub fn remove_customer<R: Rng + ?Sized>(&mut self, id: NodeId, k: usize, rng: &mut R) -> Result<Removal> {
        let mut node = id;
        let mut depth = 0;
        let mut transient = false;
        let mut min_depth = 0;
        loop {
            let holds_table = self.sample_indicator(node, k, rng)?;
            self.raw_remove(node, k, holds_table)?;
            if !holds_table {
                break;
            }
            depth += 1;
            let cell = self.nodes[node].cell(k);
            if cell.tables == 0 && cell.customers > 0 {
                transient = true;
                min_depth = depth;
            }
            match self.nodes[node].base {
                Base::Node(p) => node = p,
                _ => break,
            }
        }
        Ok(Removal {
            depth,
            transient,
            min_depth,
        })
    }

    /// Ratios for adding one customer at `k` of node `id`, ignoring the parent.
    pub fn level_ratio(&mut self, id: NodeId, k: usize) -> LevelRatio {
        let node = &self.nodes[id];
        let family = &self.families[node.family];
        let (a, b) = (family.discount, family.concentration);
        let cell = node.cell(k);
        let (c, t) = (cell.customers as usize, cell.tables as usize);
        let denom = b + node.total_customers as f64;
        let new_table = b + a * node.total_tables as f64;
        let cache = &mut self.caches[self.cache_of_family[node.family]];

        if c == 0 {
            let mut open = new_table / denom;
            if node.kind == NodeKind::GemRoot {
                let free = node.dim.saturating_sub(node.total_tables as usize);
                open = if free == 0 { 0.0 } else { open / free as f64 };
            }
            return LevelRatio { node: id, join: 0.0, open };
        }
        if t == 0 {
            // Transient: the only admissible move re-opens the table here.
            return LevelRatio {
                node: id,
                join: 0.0,
                open: 1.0,
            };
        }
        let join = cache.log_ratio(c, t, 1, 0).exp() * (c + 1 - t) as f64 / ((c + 1) as f64 * denom);
        let open = if node.kind == NodeKind::GemRoot {
            0.0
        } else {
            new_table * cache.log_ratio(c, t, 1, 1).exp() * (t + 1) as f64 / ((c + 1) as f64 * denom)
        };
        LevelRatio { node: id, join, open }
    }

    /// Walk from `id` to the top of its chain, collecting ratios for adding a customer at `k`.
    pub fn ascent(&mut self, id: NodeId, k: usize, out: &mut Ascent) {
        out.levels.clear();
        out.suffix.clear();
        let mut node = id;
        out.base_factor = 1.0;
        loop {
            let ratio = self.level_ratio(node, k);
            out.levels.push(ratio);
            match self.nodes[node].base {
                Base::Node(p) => node = p,
                Base::Uniform(n) => {
                    out.base_factor = 1.0 / n as f64;
                    break;
                }
                Base::Root => {
                    out.base_factor = 1.0;
                    break;
                }
            }
        }
        out.suffix.resize(out.levels.len(), 0.0);
        let mut acc = out.base_factor;
        for l in (0..out.levels.len()).rev() {
            let level = out.levels[l];
            acc = level.join + level.open * acc;
            out.suffix[l] = acc;
        }
    }

    /// Whether every node from `id` up holds a table wherever it holds customers of `k`.
    pub fn chain_valid(&self, id: NodeId, k: usize) -> bool {
        let mut node = id;
        loop {
            let cell = self.nodes[node].cell(k);
            if cell.customers > 0 && cell.tables == 0 {
                return false;
            }
            match self.nodes[node].base {
                Base::Node(p) => node = p,
                _ => return true,
            }
        }
    }

    /// `log f(N)` of a single node, including the table-holder binomials.
    pub fn log_f(&mut self, id: NodeId) -> Result<f64> {
        self.check_node(id)?;
        let node = &self.nodes[id];
        let family = &self.families[node.family];
        let (a, b) = (family.discount, family.concentration);
        let cache = &mut self.caches[self.cache_of_family[node.family]];
        let mut total = log_pochhammer_stride(b, a, node.total_tables) - log_pochhammer(b, node.total_customers);
        for (_, cell) in node.counts.iter() {
            let (c, t) = (cell.customers as usize, cell.tables as usize);
            total += cache.log_stirling(c, t) - log_binomial(c, t);
        }
        Ok(total)
    }

    /// `log prod_{j < T} 1 / (dim - j)`: probability of the particular slot
    /// labels a capped root has given to its active outcomes.
    pub fn log_label_term(&self, id: NodeId) -> f64 {
        let node = &self.nodes[id];
        if node.kind != NodeKind::GemRoot {
            return 0.0;
        }
        (0..node.total_tables)
            .map(|j| -((node.dim as f64) - j as f64).ln())
            .sum()
    }

    /// Posterior mean given the parent's mean (or the fixed base).
    pub fn posterior_mean_given(&self, id: NodeId, parent_mean: &[f64]) -> Vec<f64> {
        let node = &self.nodes[id];
        let family = &self.families[node.family];
        let (a, b) = (family.discount, family.concentration);
        let denom = b + node.total_customers as f64;
        let mass = a * node.total_tables as f64 + b;
        let mut out: Vec<f64> = parent_mean.iter().map(|p| mass * p / denom).collect();
        for (k, cell) in node.counts.iter() {
            out[k] += (cell.customers as f64 - a * cell.tables as f64) / denom;
        }
        out
    }

    /// One entry of [`posterior_mean_given`](Self::posterior_mean_given).
    pub fn posterior_mean_at(&self, id: NodeId, k: usize, parent_value: f64) -> f64 {
        let node = &self.nodes[id];
        let family = &self.families[node.family];
        let (a, b) = (family.discount, family.concentration);
        let denom = b + node.total_customers as f64;
        let cell = node.cell(k);
        ((a * node.total_tables as f64 + b) * parent_value + cell.customers as f64
            - a * cell.tables as f64)
            / denom
    }

    /// Posterior mean, recursing through the ancestors. A root spreads its
    /// unassigned mass uniformly over its `dim` slots.
    pub fn posterior_mean(&self, id: NodeId) -> Vec<f64> {
        let node = &self.nodes[id];
        let parent = match node.base {
            Base::Node(p) => self.posterior_mean(p),
            Base::Uniform(n) => vec![1.0 / n as f64; node.dim],
            Base::Root => vec![1.0 / node.dim as f64; node.dim],
        };
        self.posterior_mean_given(id, &parent)
    }

    /// Local invariants of one node.
    pub fn check_node(&self, id: NodeId) -> Result<()> {
        let node = &self.nodes[id];
        let (mut c_sum, mut t_sum) = (0u64, 0u64);
        for (k, cell) in node.counts.iter() {
            if k >= node.dim {
                return Err(Error::Consistency(format!("node {id}: outcome {k} out of range")));
            }
            if cell.tables > cell.customers {
                return Err(Error::Consistency(format!(
                    "node {id}[{k}]: tables {} exceed customers {}",
                    cell.tables, cell.customers
                )));
            }
            if (cell.tables == 0) != (cell.customers == 0) {
                return Err(Error::Consistency(format!(
                    "node {id}[{k}]: {} customers with {} tables",
                    cell.customers, cell.tables
                )));
            }
            if node.kind == NodeKind::GemRoot && cell.tables > 1 {
                return Err(Error::Consistency(format!("root {id}[{k}] holds {} tables", cell.tables)));
            }
            c_sum += cell.customers as u64;
            t_sum += cell.tables as u64;
        }
        if c_sum != node.total_customers || t_sum != node.total_tables {
            return Err(Error::Consistency(format!(
                "node {id}: totals ({}, {}) disagree with cells ({c_sum}, {t_sum})",
                node.total_customers, node.total_tables
            )));
        }
        Ok(())
    }

    /// For every node, the sum of its children's table counts per outcome.
    pub fn child_table_sums(&self) -> Vec<BTreeMap<usize, u64>> {
        let mut sums: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); self.nodes.len()];
        for node in &self.nodes {
            if let Base::Node(p) = node.base {
                for (k, cell) in node.counts.iter() {
                    if cell.tables > 0 {
                        *sums[p].entry(k).or_default() += cell.tables as u64;
                    }
                }
            }
        }
        sums
    }

    /// Local invariants on every node, and parent customers equal to child
    /// tables plus the caller-supplied direct customers.
    pub fn check_all<F>(&self, direct: F) -> Result<()>
    where
        F: Fn(NodeId, usize) -> u64,
    {
        for id in 0..self.nodes.len() {
            self.check_node(id)?;
        }
        let sums = self.child_table_sums();
        for (id, node) in self.nodes.iter().enumerate() {
            for (&k, &v) in &sums[id] {
                if node.cell(k).customers == 0 {
                    return Err(Error::Consistency(format!(
                        "node {id}[{k}]: children hold {v} tables but the node has no customers"
                    )));
                }
            }
            for (k, cell) in node.counts.iter() {
                let child = sums[id].get(&k).copied().unwrap_or(0);
                let expected = child + direct(id, k);
                if expected != cell.customers as u64 {
                    return Err(Error::Consistency(format!(
                        "node {id}[{k}]: {} customers, expected {expected} ({child} from child tables)",
                        cell.customers
                    )));
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn log_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_level(k: usize, alpha: f64, beta: f64) -> (Hierarchy, NodeId, NodeId) {
        let mut h = Hierarchy::new();
        let fam = h.add_family("test", alpha, beta).unwrap();
        let parent = h.add_node(NodeKind::Pyp, fam, Base::Uniform(k), k, false);
        let child = h.add_node(NodeKind::Pyp, fam, Base::Node(parent), k, false);
        (h, parent, child)
    }

    #[test]
    fn log_f_of_empty_node_is_zero() {
        let (mut h, _, child) = two_level(3, 0.5, 0.1);
        assert_eq!(h.log_f(child).unwrap(), 0.0);
    }

    #[test]
    fn log_f_single_customer() {
        let (mut h, _, child) = two_level(1, 0.5, 0.1);
        h.increment(child, 0, true).unwrap();
        assert_relative_eq!(h.log_f(child).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn log_f_two_customers_one_table() {
        let (mut h, _, child) = two_level(1, 0.5, 0.1);
        h.increment(child, 0, true).unwrap();
        h.increment(child, 0, false).unwrap();
        // (0.1|0.5)_1 / (0.1)_2 * S^2_1 / binom(2,1) = 0.1 / 0.11 * 0.5 / 2
        let expected: f64 = 0.1 * 0.5 / (0.1 * 1.1) / 2.0;
        assert_relative_eq!(h.log_f(child).unwrap(), expected.ln(), max_relative = 1e-12);
        assert_relative_eq!(expected, 0.227272727, max_relative = 1e-8);
    }

    #[test]
    fn increment_and_decrement_cascade() {
        let (mut h, parent, child) = two_level(2, 0.5, 1.0);
        h.increment(child, 1, true).unwrap();
        assert_eq!(h.cell(child, 1), Cell { customers: 1, tables: 1 });
        assert_eq!(h.cell(parent, 1), Cell { customers: 1, tables: 1 });

        h.increment(child, 1, false).unwrap();
        h.increment(child, 1, false).unwrap();
        h.increment(child, 1, false).unwrap();
        assert_eq!(h.cell(child, 1), Cell { customers: 4, tables: 1 });
        assert_eq!(h.cell(parent, 1).customers, 1);

        let (mut h, parent, child) = two_level(2, 0.5, 1.0);
        h.increment(child, 0, true).unwrap();
        h.decrement(child, 0, true).unwrap();
        assert_eq!(h.cell(child, 0), Cell::default());
        assert_eq!(h.cell(parent, 0), Cell::default());
        assert!(h.node(parent).is_empty());
    }

    #[test]
    fn decrement_errors() {
        let (mut h, _, child) = two_level(2, 0.5, 1.0);
        assert!(h.decrement(child, 0, false).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(h.sample_indicator(child, 0, &mut rng).is_err());
    }

    #[test]
    fn indicator_frequencies() {
        let (mut h, _, child) = two_level(1, 0.5, 1.0);
        h.add_customer(child, 0, 2).unwrap();
        for _ in 0..3 {
            h.add_customer(child, 0, 0).unwrap();
        }
        assert_eq!(h.cell(child, 0), Cell { customers: 4, tables: 1 });
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let hits = (0..n).filter(|_| h.sample_indicator(child, 0, &mut rng).unwrap()).count();
        let p = hits as f64 / n as f64;
        assert!((p - 0.25).abs() < 4.0 * (0.25f64 * 0.75 / n as f64).sqrt());

        let (mut h, _, child) = two_level(1, 0.5, 1.0);
        h.add_customer(child, 0, 2).unwrap();
        assert!((0..100).all(|_| h.sample_indicator(child, 0, &mut rng).unwrap()));
    }

    #[test]
    fn posterior_mean_examples() {
        let (h, _, child) = two_level(4, 0.3, 0.7);
        let mean = h.posterior_mean(child);
        assert!(mean.iter().all(|&p| (p - 0.25).abs() < 1e-15));

        let mut h = Hierarchy::new();
        let fam = h.add_family("zero", 0.0, 1.0).unwrap();
        let node = h.add_node(NodeKind::Pyp, fam, Base::Uniform(2), 2, false);
        h.increment(node, 0, true).unwrap();
        let mean = h.posterior_mean(node);
        assert_relative_eq!(mean[0], 0.75, epsilon = 1e-15);
        assert_relative_eq!(mean[1], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn level_ratios_match_log_f_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut h, parent, child) = two_level(3, 0.6, 0.4);
        for _ in 0..40 {
            let k = rng.random_range(0..3);
            let depth = if h.cell(child, k).customers == 0 {
                if h.cell(parent, k).customers == 0 { 2 } else { 1 }
            } else {
                rng.random_range(0..2)
            };
            h.add_customer(child, k, depth).unwrap();
        }
        for k in 0..3 {
            let before = h.log_f(child).unwrap();
            let ratio = h.level_ratio(child, k);
            h.raw_add(child, k, false).unwrap();
            let after = h.log_f(child).unwrap();
            assert_relative_eq!(after - before, ratio.join.ln(), max_relative = 1e-10);
            h.raw_remove(child, k, false).unwrap();

            h.raw_add(child, k, true).unwrap();
            let after = h.log_f(child).unwrap();
            assert_relative_eq!(after - before, ratio.open.ln(), max_relative = 1e-10);
            h.raw_remove(child, k, true).unwrap();
        }
    }

    #[test]
    fn sparse_store_drops_empty_cells() {
        let mut store = CountStore::Sparse(Vec::new());
        store.set(5, Cell { customers: 2, tables: 1 });
        store.set(1, Cell { customers: 1, tables: 1 });
        assert_eq!(store.iter().map(|(k, _)| k).collect::<Vec<_>>(), vec![1, 5]);
        store.set(5, Cell::default());
        assert_eq!(store.iter().count(), 1);
        assert_eq!(store.get(5), Cell::default());
    }

    #[test]
    fn binomial_logs() {
        assert_relative_eq!(log_binomial(5, 2), 10f64.ln(), max_relative = 1e-14);
        assert_eq!(log_binomial(4, 0), 0.0);
        assert_eq!(log_binomial(4, 4), 0.0);
    }
}
