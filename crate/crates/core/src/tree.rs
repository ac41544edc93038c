//! Value-tree extraction and allometric scaling statistics.
//!
//! A tree grows upstream from its root toward value-added contributors by
//! breadth-first search: round k examines, for every node added in round
//! k - 1, all sectors whose contribution weight to it strictly exceeds the
//! threshold `alpha`, and runs for at most `gamma` rounds. A candidate
//! reachable from several frontier parents in the same round attaches to
//! the parent with the largest edge weight, ties broken toward the smaller
//! parent index, so extraction is fully deterministic.
//!
//! For scaling statistics, `X_i` counts the nodes of the subtree under `i`
//! and `Y_i` sums the `X` values over that subtree. Root (X, Y) pairs
//! pooled over a forest give the allometric exponent: the slope of
//! `ln Y` on `ln X`, bracketed by the star (`Y = 2X - 1`) and chain
//! (`Y = X(X+1)/2`) closed forms fitted on the same sizes.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mrio::SectorId;
use crate::network::{ValueNetwork, WEIGHT_FLOOR};
use crate::par;
use crate::stats;

/// A rooted tree of value-added contributors.
///
/// Nodes are keyed by their table sector index. `nodes` lists them in
/// extraction order: the root first, then each round's additions sorted by
/// (parent index, child index).
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTree {
    pub root: SectorId,
    pub nodes: Vec<SectorId>,
    /// Child sector index -> (parent sector index, contribution weight of
    /// the child-to-parent edge).
    pub parent: BTreeMap<usize, (usize, f64)>,
    /// Sector index -> breadth-first round it was added in; the root is 0.
    pub depth: BTreeMap<usize, u32>,
    pub alpha: f64,
    pub gamma: u32,
    pub year: i32,
}

impl ValueTree {
    pub fn size(&self) -> usize {
        self.nodes.len()
    }

    pub fn contains(&self, sector_index: usize) -> bool {
        self.depth.contains_key(&sector_index)
    }

    pub fn sector(&self, sector_index: usize) -> Option<&SectorId> {
        self.nodes.iter().find(|s| s.index == sector_index)
    }

    /// Children of every node, sorted by child index.
    pub fn children_map(&self) -> BTreeMap<usize, Vec<usize>> {
        let mut children: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (&child, &(parent, _)) in &self.parent {
            children.entry(parent).or_default().push(child);
        }
        children
    }
}

/// All nonempty trees of a network at one (alpha, gamma) setting, keyed by
/// root sector index. A tree is nonempty when at least one contributor
/// joined the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Forest {
    pub trees: BTreeMap<usize, ValueTree>,
    pub alpha: f64,
    pub gamma: u32,
    pub year: i32,
}

impl Forest {
    pub fn len(&self) -> usize {
        self.trees.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trees.is_empty()
    }

    /// Tree sizes in root order.
    pub fn sizes(&self) -> Vec<usize> {
        self.trees.values().map(ValueTree::size).collect()
    }
}

fn check_params(alpha: f64, gamma: u32) -> Result<()> {
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha must be positive and finite, got {alpha}"
        )));
    }
    if gamma < 2 {
        return Err(Error::InvalidParameter(format!(
            "gamma must be at least 2 for a tree topology, got {gamma}"
        )));
    }
    Ok(())
}

/// Incoming-contributor lists: for each node position, the (contributor
/// position, weight) pairs with weight strictly above alpha, ascending by
/// contributor.
fn contributor_lists(net: &ValueNetwork, alpha: f64) -> Vec<Vec<(u32, f64)>> {
    let n = net.len();
    let mut lists = vec![Vec::new(); n];
    for (p, list) in lists.iter_mut().enumerate() {
        for c in 0..n {
            let w = net.weights[(c, p)];
            if w > alpha && w > WEIGHT_FLOOR {
                list.push((c as u32, w));
            }
        }
    }
    lists
}

/// Extract the tree rooted at the given table sector index. Returns `None`
/// when no contributor qualifies.
pub fn extract_tree(
    net: &ValueNetwork,
    root: usize,
    alpha: f64,
    gamma: u32,
) -> Result<Option<ValueTree>> {
    check_params(alpha, gamma)?;
    let root_pos = net
        .position_of(root)
        .ok_or_else(|| Error::UnknownSector(format!("sector index {root}")))?;
    let contributors = contributor_lists(net, alpha);
    Ok(extract_at(net, &contributors, root_pos, alpha, gamma))
}

fn extract_at(
    net: &ValueNetwork,
    contributors: &[Vec<(u32, f64)>],
    root_pos: usize,
    alpha: f64,
    gamma: u32,
) -> Option<ValueTree> {
    let n = net.len();
    let mut in_tree = vec![false; n];
    in_tree[root_pos] = true;

    let mut nodes = vec![net.nodes[root_pos].clone()];
    let mut parent = BTreeMap::new();
    let mut depth = BTreeMap::new();
    depth.insert(net.nodes[root_pos].index, 0u32);

    let mut frontier = vec![root_pos];
    for round in 1..=gamma {
        // Best frontier parent per candidate: largest weight, then smaller
        // parent position (node positions order like sector indices).
        let mut best: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for &p in &frontier {
            for &(c, w) in &contributors[p] {
                let c = c as usize;
                if in_tree[c] {
                    continue;
                }
                match best.entry(c) {
                    Entry::Vacant(e) => {
                        e.insert((w, p));
                    }
                    Entry::Occupied(mut e) => {
                        let (bw, bp) = *e.get();
                        if w > bw || (w == bw && p < bp) {
                            e.insert((w, p));
                        }
                    }
                }
            }
        }
        if best.is_empty() {
            break;
        }
        let mut added: Vec<(usize, usize, f64)> =
            best.into_iter().map(|(c, (w, p))| (p, c, w)).collect();
        added.sort_unstable_by_key(|&(p, c, _)| (p, c));
        frontier.clear();
        for (p, c, w) in added {
            in_tree[c] = true;
            let child_id = &net.nodes[c];
            parent.insert(child_id.index, (net.nodes[p].index, w));
            depth.insert(child_id.index, round);
            nodes.push(child_id.clone());
            frontier.push(c);
        }
    }

    if nodes.len() < 2 {
        return None;
    }
    Some(ValueTree {
        root: net.nodes[root_pos].clone(),
        nodes,
        parent,
        depth,
        alpha,
        gamma,
        year: net.year,
    })
}

/// Extract one tree per network node, omitting the empty ones.
pub fn extract_forest(net: &ValueNetwork, alpha: f64, gamma: u32) -> Result<Forest> {
    check_params(alpha, gamma)?;
    let contributors = contributor_lists(net, alpha);
    let extracted = par::map_collect(net.len(), |pos| {
        extract_at(net, &contributors, pos, alpha, gamma)
    });
    let trees = extracted
        .into_iter()
        .flatten()
        .map(|tree| (tree.root.index, tree))
        .collect();
    Ok(Forest {
        trees,
        alpha,
        gamma,
        year: net.year,
    })
}

/// Subtree node counts: `X_i = 1 + sum of X over the children of i`.
pub fn subtree_counts(tree: &ValueTree) -> BTreeMap<usize, u64> {
    let children = tree.children_map();
    let mut counts = BTreeMap::new();
    let mut stack = vec![(tree.root.index, false)];
    while let Some((node, ready)) = stack.pop() {
        let kids = children.get(&node);
        if ready {
            let below: u64 = kids
                .map(|ks| ks.iter().map(|k| counts[k]).sum())
                .unwrap_or(0);
            counts.insert(node, 1 + below);
        } else {
            stack.push((node, true));
            if let Some(ks) = kids {
                for &k in ks {
                    stack.push((k, false));
                }
            }
        }
    }
    counts
}

/// Accumulated subtree sizes: `Y_i = X_i + sum of Y over the children of i`.
pub fn accumulated_sizes(tree: &ValueTree) -> BTreeMap<usize, u64> {
    let x = subtree_counts(tree);
    let children = tree.children_map();
    let mut sizes = BTreeMap::new();
    let mut stack = vec![(tree.root.index, false)];
    while let Some((node, ready)) = stack.pop() {
        let kids = children.get(&node);
        if ready {
            let below: u64 = kids
                .map(|ks| ks.iter().map(|k| sizes[k]).sum())
                .unwrap_or(0);
            sizes.insert(node, x[&node] + below);
        } else {
            stack.push((node, true));
            if let Some(ks) = kids {
                for &k in ks {
                    stack.push((k, false));
                }
            }
        }
    }
    sizes
}

/// Summary statistics of tree sizes over a forest. With no trees only the
/// count is defined.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStats {
    pub count: usize,
    pub min: Option<usize>,
    pub max: Option<usize>,
    pub mean: Option<f64>,
    /// Coefficient of variation: population standard deviation over mean.
    pub cv: Option<f64>,
}

pub fn forest_stats(forest: &Forest) -> TreeStats {
    let sizes = forest.sizes();
    let count = sizes.len();
    if count == 0 {
        return TreeStats {
            count,
            min: None,
            max: None,
            mean: None,
            cv: None,
        };
    }
    let min = sizes.iter().copied().min();
    let max = sizes.iter().copied().max();
    let mean = sizes.iter().sum::<usize>() as f64 / count as f64;
    let variance = sizes
        .iter()
        .map(|&s| (s as f64 - mean).powi(2))
        .sum::<f64>()
        / count as f64;
    TreeStats {
        count,
        min,
        max,
        mean: Some(mean),
        cv: Some(variance.sqrt() / mean),
    }
}

/// Allometric fit over the root (X, Y) pairs of a forest.
#[derive(Debug, Clone, PartialEq)]
pub struct AllometryFit {
    /// Slope of ln Y on ln X.
    pub eta: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Root (X, Y) pairs in root order.
    pub points: Vec<(u64, u64)>,
    /// Slope a pure-star forest would have on the same X values.
    pub eta_star: f64,
    /// Slope a pure-chain forest would have on the same X values.
    pub eta_chain: f64,
}

/// Fit the allometric exponent by ordinary least squares of `ln Y` on
/// `ln X`, pooled over the forest, along with the star and chain reference
/// slopes on the same size multiset. Requires at least two trees of
/// distinct sizes.
pub fn allometric_exponent(forest: &Forest) -> Result<AllometryFit> {
    let points: Vec<(u64, u64)> = forest
        .trees
        .values()
        .map(|tree| {
            let x = tree.size() as u64;
            let y: u64 = subtree_counts(tree).values().sum();
            (x, y)
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 trees, forest has {}",
            points.len()
        )));
    }
    // An explicit distinct-size check: with identical X values the centered
    // sums are pure rounding noise and would fit a meaningless slope.
    let distinct: std::collections::BTreeSet<u64> = points.iter().map(|&(x, _)| x).collect();
    if distinct.len() < 2 {
        return Err(Error::DegenerateFit(
            "all trees have the same size".to_string(),
        ));
    }
    let ln_x: Vec<f64> = points.iter().map(|&(x, _)| (x as f64).ln()).collect();
    let ln_y: Vec<f64> = points.iter().map(|&(_, y)| (y as f64).ln()).collect();
    let fit = stats::ols(&ln_x, &ln_y)
        .ok_or_else(|| Error::DegenerateFit("all trees have the same size".to_string()))?;

    let star: Vec<f64> = points
        .iter()
        .map(|&(x, _)| ((2 * x - 1) as f64).ln())
        .collect();
    let chain: Vec<f64> = points
        .iter()
        .map(|&(x, _)| ((x * (x + 1) / 2) as f64).ln())
        .collect();
    let eta_star = stats::ols(&ln_x, &star)
        .expect("distinct X checked above")
        .slope;
    let eta_chain = stats::ols(&ln_x, &chain)
        .expect("distinct X checked above")
        .slope;

    Ok(AllometryFit {
        eta: fit.slope,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        points,
        eta_star,
        eta_chain,
    })
}
