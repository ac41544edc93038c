//! Plottable tree exports: Graphviz DOT and a nested JSON form that loads
//! back into an equal tree.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mrio::SectorId;
use crate::tree::{accumulated_sizes, subtree_counts, ValueTree};

/// Styling knobs for the DOT export. Countries map to palette entries in
/// sorted order, so the same country always gets the same color within one
/// export; edge pen width is the edge weight times `width_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeStyling {
    pub palette: Vec<String>,
    pub width_scale: f64,
}

impl Default for TreeStyling {
    fn default() -> Self {
        TreeStyling {
            palette: [
                "#4c78a8", "#f58518", "#54a24b", "#e45756", "#72b7b2", "#eeca3b", "#b279a2",
                "#ff9da6", "#9d755d", "#bab0ac",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            width_scale: 8.0,
        }
    }
}

/// Render a tree as a Graphviz digraph. Edges point from contributor to
/// consumer; cross-country edges are red and classed "cross", domestic ones
/// blue and classed "domestic". Nodes are sorted by sector index, so the
/// output is byte-stable.
pub fn export_tree_dot(tree: &ValueTree, styling: &TreeStyling) -> String {
    let mut countries: Vec<&str> = tree.nodes.iter().map(|s| s.country.as_str()).collect();
    countries.sort_unstable();
    countries.dedup();
    let color_of = |country: &str| -> &str {
        let pos = countries
            .iter()
            .position(|c| *c == country)
            .expect("country comes from the node list");
        &styling.palette[pos % styling.palette.len()]
    };

    let mut nodes: Vec<&SectorId> = tree.nodes.iter().collect();
    nodes.sort_unstable_by_key(|s| s.index);

    let mut out = String::from("digraph value_tree {\n");
    out.push_str("  node [style=filled];\n");
    for node in &nodes {
        out.push_str(&format!(
            "  n{} [label=\"{}\", fillcolor=\"{}\"];\n",
            node.index,
            node.label(),
            color_of(&node.country)
        ));
    }
    for (&child, &(parent, weight)) in &tree.parent {
        let child_id = tree.sector(child).expect("parent map keys are tree nodes");
        let parent_id = tree.sector(parent).expect("parent values are tree nodes");
        let cross = child_id.country != parent_id.country;
        out.push_str(&format!(
            "  n{} -> n{} [penwidth={:.3}, color=\"{}\", class=\"{}\"];\n",
            child,
            parent,
            (weight * styling.width_scale).max(0.1),
            if cross { "red" } else { "blue" },
            if cross { "cross" } else { "domestic" },
        ));
    }
    out.push_str("}\n");
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct TreeDoc {
    alpha: f64,
    gamma: u32,
    year: i32,
    root: NodeDoc,
}

#[derive(Debug, Serialize, Deserialize)]
struct NodeDoc {
    label: String,
    index: usize,
    country: String,
    industry: String,
    wiod_code: String,
    depth: u32,
    /// X: nodes in the subtree under this node.
    subtree_count: u64,
    /// Y: sum of X over that subtree.
    accumulated_size: u64,
    /// Contribution weight of the edge to the parent; absent on the root.
    #[serde(skip_serializing_if = "Option::is_none")]
    weight: Option<f64>,
    children: Vec<NodeDoc>,
}

/// Serialize a tree as nested JSON, children sorted by sector index,
/// annotated with depths, subtree counts and accumulated sizes.
pub fn export_tree_json(tree: &ValueTree) -> String {
    let x = subtree_counts(tree);
    let y = accumulated_sizes(tree);
    let children = tree.children_map();

    fn build(
        tree: &ValueTree,
        index: usize,
        weight: Option<f64>,
        x: &std::collections::BTreeMap<usize, u64>,
        y: &std::collections::BTreeMap<usize, u64>,
        children: &std::collections::BTreeMap<usize, Vec<usize>>,
    ) -> NodeDoc {
        let id = tree.sector(index).expect("tree node");
        NodeDoc {
            label: id.label(),
            index,
            country: id.country.clone(),
            industry: id.industry.clone(),
            wiod_code: id.wiod_code.clone(),
            depth: tree.depth[&index],
            subtree_count: x[&index],
            accumulated_size: y[&index],
            weight,
            children: children
                .get(&index)
                .map(|kids| {
                    kids.iter()
                        .map(|&k| build(tree, k, Some(tree.parent[&k].1), x, y, children))
                        .collect()
                })
                .unwrap_or_default(),
        }
    }

    let doc = TreeDoc {
        alpha: tree.alpha,
        gamma: tree.gamma,
        year: tree.year,
        root: build(tree, tree.root.index, None, &x, &y, &children),
    };
    serde_json::to_string_pretty(&doc).expect("tree document serializes")
}

/// Parse a JSON tree export back into a tree equal to the original.
pub fn load_tree_json(text: &str) -> Result<ValueTree> {
    let doc: TreeDoc = serde_json::from_str(text).map_err(|e| Error::InvalidValue {
        location: "tree json".to_string(),
        message: e.to_string(),
    })?;

    struct Flat {
        id: SectorId,
        depth: u32,
        parent: Option<(usize, f64)>,
    }
    fn flatten(node: &NodeDoc, parent: Option<(usize, f64)>, out: &mut Vec<Flat>) -> Result<()> {
        out.push(Flat {
            id: SectorId {
                country: node.country.clone(),
                industry: node.industry.clone(),
                wiod_code: node.wiod_code.clone(),
                index: node.index,
            },
            depth: node.depth,
            parent,
        });
        for child in &node.children {
            let weight = child.weight.ok_or_else(|| Error::InvalidValue {
                location: format!("tree json node {}", child.index),
                message: "non-root node missing edge weight".to_string(),
            })?;
            flatten(child, Some((node.index, weight)), out)?;
        }
        Ok(())
    }

    let mut flat = Vec::new();
    if doc.root.weight.is_some() {
        return Err(Error::InvalidValue {
            location: "tree json root".to_string(),
            message: "root must not carry an edge weight".to_string(),
        });
    }
    flatten(&doc.root, None, &mut flat)?;

    // Rebuild the extraction order: root first, then each level sorted by
    // (parent index, child index).
    let root = flat[0].id.clone();
    flat[1..].sort_by_key(|f| (f.depth, f.parent.map(|(p, _)| p), f.id.index));

    let mut nodes = Vec::with_capacity(flat.len());
    let mut parent = std::collections::BTreeMap::new();
    let mut depth = std::collections::BTreeMap::new();
    for entry in &flat {
        if depth.insert(entry.id.index, entry.depth).is_some() {
            return Err(Error::InvalidValue {
                location: format!("tree json node {}", entry.id.index),
                message: "duplicate node".to_string(),
            });
        }
        if let Some((p, w)) = entry.parent {
            parent.insert(entry.id.index, (p, w));
        }
        nodes.push(entry.id.clone());
    }
    for (&child, &(p, _)) in &parent {
        if depth.get(&p).map(|&d| d + 1) != Some(depth[&child]) {
            return Err(Error::InvalidValue {
                location: format!("tree json node {child}"),
                message: "depth is not one more than its parent's".to_string(),
            });
        }
    }

    Ok(ValueTree {
        root,
        nodes,
        parent,
        depth,
        alpha: doc.alpha,
        gamma: doc.gamma,
        year: doc.year,
    })
}
