//! Tree-based industry importance, rankings, country aggregation and the
//! log-correlation comparison against the centrality baselines.
//!
//! A sector earns importance from every tree it appears in other than its
//! own: each membership contributes the fraction of the tree it pulls
//! (its subtree size over the tree size) times the weight of the tree's
//! root in world final demand. Sectors present only in their own tree
//! score zero.

use std::collections::BTreeMap;

use nalgebra::DVector;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::mrio::{MrioTable, SectorId};
use crate::network::{Measure, MeasureTable, ValueNetwork};
use crate::par;
use crate::stats;
use crate::tree::{subtree_counts, Forest};

/// One tree's contribution to a sector's importance.
#[derive(Debug, Clone, PartialEq)]
pub struct TiContribution {
    pub root: SectorId,
    /// X_i(r) / N(r): the fraction of the tree in the sector's subtree.
    pub subtree_share: f64,
    /// FD(r) / WGDP: the root's weight in world final demand.
    pub demand_share: f64,
    pub score: f64,
    /// True when the root sits in the same country as the sector.
    pub domestic: bool,
}

/// A sector's total importance and its per-tree breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct TiBreakdown {
    pub node: SectorId,
    pub total: f64,
    /// In root order.
    pub contributions: Vec<TiContribution>,
}

/// World GDP as used for the demand shares: total value added over the
/// sectors that are part of the network.
pub fn world_gdp(table: &MrioTable, net: &ValueNetwork) -> f64 {
    net.nodes.iter().map(|s| table.value_added[s.index]).sum()
}

/// Compute the importance breakdown of every sector appearing in the
/// forest. `final_demand` is the aggregated final demand indexed like the
/// table the forest came from.
pub fn tree_importance(
    forest: &Forest,
    final_demand: &DVector<f64>,
    wgdp: f64,
) -> Result<BTreeMap<usize, TiBreakdown>> {
    if !wgdp.is_finite() || wgdp <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "world GDP must be positive and finite, got {wgdp}"
        )));
    }
    let mut breakdowns: BTreeMap<usize, TiBreakdown> = BTreeMap::new();
    for tree in forest.trees.values() {
        if tree.root.index >= final_demand.len() {
            return Err(Error::Dimension {
                context: "tree importance".to_string(),
                expected: format!("final demand covering sector {}", tree.root.index),
                found: format!("length {}", final_demand.len()),
            });
        }
        for node in &tree.nodes {
            breakdowns.entry(node.index).or_insert_with(|| TiBreakdown {
                node: node.clone(),
                total: 0.0,
                contributions: Vec::new(),
            });
        }
    }

    let trees: Vec<_> = forest.trees.values().collect();
    let per_tree = par::map_collect(trees.len(), |t| {
        let tree = trees[t];
        let counts = subtree_counts(tree);
        let size = tree.size() as f64;
        let demand_share = final_demand[tree.root.index] / wgdp;
        tree.nodes
            .iter()
            .filter(|node| node.index != tree.root.index)
            .map(|node| {
                let subtree_share = counts[&node.index] as f64 / size;
                (
                    node.index,
                    TiContribution {
                        root: tree.root.clone(),
                        subtree_share,
                        demand_share,
                        score: subtree_share * demand_share,
                        domestic: node.country == tree.root.country,
                    },
                )
            })
            .collect::<Vec<_>>()
    });
    // Merge in tree order so per-node totals accumulate deterministically.
    for contributions in per_tree {
        for (node_index, contribution) in contributions {
            let breakdown = breakdowns
                .get_mut(&node_index)
                .expect("every tree member was seeded above");
            breakdown.total += contribution.score;
            breakdown.contributions.push(contribution);
        }
    }
    Ok(breakdowns)
}

/// Importance totals as a vector over the network's nodes; sectors in no
/// tree at all score zero.
pub fn importance_vector(
    net: &ValueNetwork,
    breakdowns: &BTreeMap<usize, TiBreakdown>,
) -> Vec<f64> {
    net.nodes
        .iter()
        .map(|s| breakdowns.get(&s.index).map_or(0.0, |b| b.total))
        .collect()
}

/// Which contributions of a breakdown to consider.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeSplit {
    Domestic,
    Foreign,
    All,
}

impl std::str::FromStr for TreeSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "domestic" => Ok(TreeSplit::Domestic),
            "foreign" => Ok(TreeSplit::Foreign),
            "all" => Ok(TreeSplit::All),
            other => Err(Error::InvalidParameter(format!("unknown split '{other}'"))),
        }
    }
}

/// The trees where this sector scores highest, descending, ties toward the
/// smaller root index.
pub fn best_trees_for(breakdown: &TiBreakdown, split: TreeSplit, k: usize) -> Vec<&TiContribution> {
    let mut picked: Vec<&TiContribution> = breakdown
        .contributions
        .iter()
        .filter(|c| match split {
            TreeSplit::Domestic => c.domestic,
            TreeSplit::Foreign => !c.domestic,
            TreeSplit::All => true,
        })
        .collect();
    picked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.root.index.cmp(&b.root.index))
    });
    picked.truncate(k);
    picked
}

/// Top-k sectors by score, descending, ties toward the smaller index.
pub fn rank_top_k(scores: &[f64], sectors: &[SectorId], k: usize) -> Result<Vec<(SectorId, f64)>> {
    if scores.len() != sectors.len() {
        return Err(Error::Dimension {
            context: "ranking".to_string(),
            expected: format!("{} scores", sectors.len()),
            found: scores.len().to_string(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| sectors[a].index.cmp(&sectors[b].index))
    });
    order.truncate(k);
    Ok(order
        .into_iter()
        .map(|i| (sectors[i].clone(), scores[i]))
        .collect())
}

/// Per-country totals, descending; countries tie in first-appearance order.
pub fn country_aggregate(scores: &[f64], sectors: &[SectorId]) -> Result<Vec<(String, f64)>> {
    if scores.len() != sectors.len() {
        return Err(Error::Dimension {
            context: "country aggregation".to_string(),
            expected: format!("{} scores", sectors.len()),
            found: scores.len().to_string(),
        });
    }
    let mut totals: Vec<(String, f64)> = Vec::new();
    for (sector, &score) in sectors.iter().zip(scores) {
        match totals.iter_mut().find(|(c, _)| c == &sector.country) {
            Some((_, t)) => *t += score,
            None => totals.push((sector.country.clone(), score)),
        }
    }
    totals.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(totals)
}

/// Pearson correlations between the five measures on natural logs.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub measures: [Measure; 5],
    pub r: [[f64; 5]; 5],
    /// Two-sided p-values from the t transform of r.
    pub p: [[f64; 5]; 5],
    /// Size of the common sample: sectors with positive finite values on
    /// every measure, the set where all logs are defined.
    pub n_common: usize,
}

impl CorrelationMatrix {
    /// Significance marker: `**` at 1%, `*` at 5%, empty otherwise.
    pub fn stars(&self, i: usize, j: usize) -> &'static str {
        let p = self.p[i][j];
        if p < 0.01 {
            "**"
        } else if p < 0.05 {
            "*"
        } else {
            ""
        }
    }
}

/// Correlate the logs of all five measures over the common sample.
pub fn log_pearson(measures: &MeasureTable) -> Result<CorrelationMatrix> {
    let columns: Vec<&[f64]> = Measure::ALL.iter().map(|&m| measures.column(m)).collect();
    let n = measures.nodes.len();
    let common: Vec<usize> = (0..n)
        .filter(|&i| columns.iter().all(|c| c[i] > 0.0 && c[i].is_finite()))
        .collect();
    if common.len() < 3 {
        return Err(Error::CommonSampleTooSmall { n: common.len() });
    }
    let logs: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| common.iter().map(|&i| c[i].ln()).collect())
        .collect();

    let mut r = [[1.0f64; 5]; 5];
    let mut p = [[0.0f64; 5]; 5];
    let df = (common.len() - 2) as f64;
    let t_dist =
        StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom by the n >= 3 check");
    for i in 0..5 {
        for j in 0..i {
            let rij = stats::pearson(&logs[i], &logs[j]).ok_or_else(|| {
                Error::DegenerateFit(format!(
                    "log({}) has zero variance on the common sample",
                    Measure::ALL[if logs_constant(&logs[i]) { i } else { j }].label()
                ))
            })?;
            let pij = if rij.abs() >= 1.0 {
                0.0
            } else {
                let t = rij * (df / (1.0 - rij * rij)).sqrt();
                2.0 * (1.0 - t_dist.cdf(t.abs()))
            };
            r[i][j] = rij;
            r[j][i] = rij;
            p[i][j] = pij;
            p[j][i] = pij;
        }
    }
    Ok(CorrelationMatrix {
        measures: Measure::ALL,
        r,
        p,
        n_common: common.len(),
    })
}

fn logs_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::two_economy_table;
    use crate::tree::ValueTree;
    use approx::assert_relative_eq;
    use std::collections::BTreeMap;

    fn sector(i: usize, country: &str) -> SectorId {
        SectorId {
            country: country.to_string(),
            industry: "IAA".to_string(),
            wiod_code: format!("c{}", i + 1),
            index: i,
        }
    }

    /// Tree from (child, parent, weight) links with per-node countries.
    fn tree_with(
        root: usize,
        countries: &[(usize, &str)],
        links: &[(usize, usize, f64)],
    ) -> ValueTree {
        let country_of = |i: usize| {
            countries
                .iter()
                .find(|(n, _)| *n == i)
                .map(|(_, c)| *c)
                .unwrap_or("AAA")
        };
        let mut parent = BTreeMap::new();
        let mut depth = BTreeMap::new();
        depth.insert(root, 0);
        let mut nodes = vec![sector(root, country_of(root))];
        let mut remaining: Vec<_> = links.to_vec();
        while !remaining.is_empty() {
            let before = remaining.len();
            remaining.retain(|&(child, par, w)| {
                if let Some(&d) = depth.get(&par) {
                    parent.insert(child, (par, w));
                    depth.insert(child, d + 1);
                    nodes.push(sector(child, country_of(child)));
                    false
                } else {
                    true
                }
            });
            assert!(remaining.len() < before, "links do not form a tree");
        }
        ValueTree {
            root: sector(root, country_of(root)),
            nodes,
            parent,
            depth,
            alpha: 0.01,
            gamma: 3,
            year: 0,
        }
    }

    fn forest_of(trees: Vec<ValueTree>) -> Forest {
        Forest {
            trees: trees.into_iter().map(|t| (t.root.index, t)).collect(),
            alpha: 0.01,
            gamma: 3,
            year: 0,
        }
    }

    #[test]
    fn single_membership_arithmetic() {
        // Node 1 heads a two-node subtree in a four-node tree rooted at 0.
        let tree = tree_with(0, &[], &[(1, 0, 0.5), (2, 1, 0.5), (3, 0, 0.5)]);
        let forest = forest_of(vec![tree]);
        let f = DVector::from_vec(vec![100.0, 0.0, 0.0, 0.0]);
        let ti = tree_importance(&forest, &f, 1000.0).unwrap();
        assert_relative_eq!(ti[&1].total, 0.05, epsilon = 1e-15);
        let c = &ti[&1].contributions[0];
        assert_relative_eq!(c.subtree_share, 0.5, epsilon = 1e-15);
        assert_relative_eq!(c.demand_share, 0.1, epsilon = 1e-15);
        assert!(c.domestic);
    }

    #[test]
    fn own_tree_is_excluded() {
        let tree = tree_with(0, &[], &[(1, 0, 0.5)]);
        let forest = forest_of(vec![tree]);
        let f = DVector::from_vec(vec![100.0, 50.0]);
        let ti = tree_importance(&forest, &f, 1000.0).unwrap();
        // The root is in its own tree only.
        assert_eq!(ti[&0].total, 0.0);
        assert!(ti[&0].contributions.is_empty());
        assert!(ti[&1].total > 0.0);
    }

    #[test]
    fn importance_sums_over_trees() {
        // Node 2 appears in trees rooted at 0 and 1.
        let t0 = tree_with(0, &[], &[(2, 0, 0.5)]);
        let t1 = tree_with(1, &[], &[(2, 1, 0.5), (3, 1, 0.5)]);
        let forest = forest_of(vec![t0, t1]);
        let f = DVector::from_vec(vec![100.0, 200.0, 0.0, 0.0]);
        let ti = tree_importance(&forest, &f, 1000.0).unwrap();
        // (1/2)(0.1) + (1/3)(0.2)
        assert_relative_eq!(ti[&2].total, 0.05 + 0.2 / 3.0, epsilon = 1e-15);
        assert_eq!(ti[&2].contributions.len(), 2);
    }

    #[test]
    fn rejects_nonpositive_wgdp() {
        let forest = forest_of(vec![tree_with(0, &[], &[(1, 0, 0.5)])]);
        let f = DVector::from_vec(vec![1.0, 1.0]);
        assert!(matches!(
            tree_importance(&forest, &f, 0.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn best_trees_ordering_and_split() {
        let t0 = tree_with(0, &[(0, "AAA"), (5, "AAA")], &[(5, 0, 0.5)]);
        let t1 = tree_with(1, &[(1, "BBB"), (5, "AAA")], &[(5, 1, 0.5), (6, 1, 0.5)]);
        let forest = forest_of(vec![t0, t1]);
        let f = DVector::from_vec(vec![100.0, 300.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let ti = tree_importance(&forest, &f, 1000.0).unwrap();
        let b = &ti[&5];

        let all = best_trees_for(b, TreeSplit::All, 10);
        assert_eq!(all.len(), 2);
        assert!(all[0].score >= all[1].score);
        // Root 1 is foreign to node 5: (1/3)(0.3) = 0.1 beats (1/2)(0.1).
        assert_eq!(all[0].root.index, 1);

        let domestic = best_trees_for(b, TreeSplit::Domestic, 10);
        assert_eq!(domestic.len(), 1);
        assert_eq!(domestic[0].root.index, 0);

        let foreign = best_trees_for(b, TreeSplit::Foreign, 10);
        assert_eq!(foreign.len(), 1);
        assert_eq!(foreign[0].root.index, 1);
    }

    #[test]
    fn best_trees_tie_breaks_by_root_index() {
        let t0 = tree_with(0, &[], &[(5, 0, 0.5)]);
        let t1 = tree_with(1, &[], &[(5, 1, 0.5)]);
        let forest = forest_of(vec![t0, t1]);
        let f = DVector::from_vec(vec![100.0, 100.0, 0.0, 0.0, 0.0, 0.0]);
        let ti = tree_importance(&forest, &f, 1000.0).unwrap();
        let picks = best_trees_for(&ti[&5], TreeSplit::All, 2);
        assert_eq!(picks[0].root.index, 0);
        assert_eq!(picks[1].root.index, 1);
    }

    #[test]
    fn rank_golden_value_added() {
        let t = two_economy_table();
        let vt: Vec<f64> = t.value_added.iter().copied().collect();
        let ranked = rank_top_k(&vt, &t.sectors, 1).unwrap();
        assert_eq!(ranked[0].0.index, 3);
        assert_eq!(ranked[0].1, 8470.0);
    }

    #[test]
    fn rank_handles_large_k_and_ties() {
        let t = two_economy_table();
        let ranked = rank_top_k(&[1.0, 1.0, 1.0, 1.0], &t.sectors, 99).unwrap();
        assert_eq!(ranked.len(), 4);
        let indices: Vec<usize> = ranked.iter().map(|(s, _)| s.index).collect();
        assert_eq!(indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn country_totals_from_golden_table() {
        let t = two_economy_table();
        let vt: Vec<f64> = t.value_added.iter().copied().collect();
        let totals = country_aggregate(&vt, &t.sectors).unwrap();
        assert_eq!(totals[0], ("AAB".to_string(), 16640.0));
        assert_eq!(totals[1], ("AAA".to_string(), 60.0));
    }

    #[test]
    fn country_totals_zero_scores_keep_index_order() {
        let t = two_economy_table();
        let totals = country_aggregate(&[0.0; 4], &t.sectors).unwrap();
        assert_eq!(totals[0].0, "AAA");
        assert_eq!(totals[1].0, "AAB");
    }

    fn measure_table(columns: [Vec<f64>; 5]) -> MeasureTable {
        let n = columns[0].len();
        let nodes: Vec<SectorId> = (0..n).map(|i| sector(i, "AAA")).collect();
        let [ti, cc, bc, pr, vt] = columns;
        let pr_sum: f64 = pr.iter().sum();
        let pr: Vec<f64> = pr.iter().map(|p| p / pr_sum).collect();
        MeasureTable::new(nodes, ti, cc, bc, pr, vt, 0).unwrap()
    }

    #[test]
    fn log_pearson_power_law_is_exact() {
        let x: Vec<f64> = (1..=12).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(1.7)).collect();
        let mt = measure_table([
            x.clone(),
            y,
            x.iter().map(|v| v * 2.0).collect(),
            x.iter().map(|v| v.powf(0.5)).collect(),
            x.clone(),
        ]);
        let corr = log_pearson(&mt).unwrap();
        assert_eq!(corr.n_common, 12);
        for i in 0..5 {
            for j in 0..5 {
                assert_relative_eq!(corr.r[i][j], 1.0, epsilon = 1e-12);
                assert_eq!(corr.r[i][j], corr.r[j][i]);
            }
        }
        assert_eq!(corr.stars(0, 1), "**");
    }

    #[test]
    fn log_pearson_matches_raw_moment_formula() {
        // Fixed pseudo-random positive data, 20 points.
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 + 0.1
        };
        let cols: [Vec<f64>; 5] = std::array::from_fn(|_| (0..20).map(|_| next()).collect());
        let mt = measure_table(cols.clone());
        let corr = log_pearson(&mt).unwrap();

        let pr_sum: f64 = cols[3].iter().sum();
        for i in 0..5 {
            for j in 0..5 {
                let fix = |k: usize, v: f64| if k == 3 { v / pr_sum } else { v };
                let a: Vec<f64> = cols[i].iter().map(|&v| fix(i, v).ln()).collect();
                let b: Vec<f64> = cols[j].iter().map(|&v| fix(j, v).ln()).collect();
                let n = 20.0;
                let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
                let saa: f64 = a.iter().map(|v| v * v).sum();
                let sbb: f64 = b.iter().map(|v| v * v).sum();
                let sab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
                let expected =
                    (n * sab - sa * sb) / ((n * saa - sa * sa) * (n * sbb - sb * sb)).sqrt();
                if i == j {
                    assert_eq!(corr.r[i][j], 1.0);
                } else {
                    assert_relative_eq!(corr.r[i][j], expected, epsilon = 1e-12);
                }
            }
        }
    }

    #[test]
    fn log_pearson_common_sample_excludes_nonpositive() {
        let mut ti = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        ti[1] = 0.0;
        let mt = measure_table([
            ti,
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            vec![2.0, 2.0, 3.0, 4.0, 5.0],
            vec![1.0, 1.0, 1.0, 1.0, 2.0],
            vec![5.0, 4.0, 3.0, 2.0, 1.0],
        ]);
        let corr = log_pearson(&mt).unwrap();
        assert_eq!(corr.n_common, 4);
    }

    #[test]
    fn log_pearson_needs_three_common_sectors() {
        let mt = measure_table([
            vec![1.0, 0.0, 0.0, 0.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0, 1.0],
        ]);
        assert!(matches!(
            log_pearson(&mt),
            Err(Error::CommonSampleTooSmall { n: 1 })
        ));
    }
}
