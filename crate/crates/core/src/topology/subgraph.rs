use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::graph::CouplingGraph;
use crate::error::{Error, Result};

/// Connected qubit pattern on local indices `0..qubit_count` that sub-circuits
/// are generated on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubgraphTemplate {
    pub name: String,
    pub qubit_count: usize,
    pub edges: Vec<(usize, usize)>,
}

impl SubgraphTemplate {
    pub fn new(name: impl Into<String>, qubit_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if qubit_count == 0 || qubit_count > 4 {
            return Err(Error::Topology(format!("template size {qubit_count} outside 1..=4")));
        }
        let g = CouplingGraph::new(qubit_count, edges.iter().copied())?;
        if !g.is_connected() {
            return Err(Error::Topology("template must be connected".into()));
        }
        Ok(SubgraphTemplate {
            name: name.into(),
            qubit_count,
            edges: g.edges().collect(),
        })
    }

    pub fn single() -> Self {
        Self::new("single", 1, vec![]).unwrap()
    }

    pub fn path(n: usize) -> Self {
        Self::new(format!("path{n}"), n, (1..n).map(|i| (i - 1, i)).collect()).unwrap()
    }

    /// T-junction: local qubit 0 joined to 1, 2 and 3.
    pub fn star3() -> Self {
        Self::new("star3", 4, vec![(0, 1), (0, 2), (0, 3)]).unwrap()
    }

    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "single" => Ok(Self::single()),
            "path2" => Ok(Self::path(2)),
            "path3" => Ok(Self::path(3)),
            "path4" => Ok(Self::path(4)),
            "star3" => Ok(Self::star3()),
            _ => Err(Error::Topology(format!("unknown template `{name}`"))),
        }
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::path(2), Self::path(3), Self::path(4), Self::star3()]
    }

    /// A bijection `local → physical` onto `qubits` that carries every template
    /// edge onto a device edge, trying assignments in lexicographic order.
    pub fn embed(&self, qubits: &[usize], graph: &CouplingGraph) -> Option<Vec<usize>> {
        if qubits.len() != self.qubit_count {
            return None;
        }
        let mut sorted = qubits.to_vec();
        sorted.sort_unstable();
        let mut chosen = Vec::with_capacity(self.qubit_count);
        let mut used = vec![false; sorted.len()];
        self.embed_rec(&sorted, graph, &mut chosen, &mut used).then_some(chosen)
    }

    fn embed_rec(&self, pool: &[usize], graph: &CouplingGraph, chosen: &mut Vec<usize>, used: &mut [bool]) -> bool {
        let local = chosen.len();
        if local == self.qubit_count {
            return true;
        }
        for i in 0..pool.len() {
            if used[i] {
                continue;
            }
            let ok = self
                .edges
                .iter()
                .filter(|&&(a, b)| a.max(b) == local)
                .all(|&(a, b)| graph.has_edge(chosen[a.min(b)], pool[i]));
            if !ok {
                continue;
            }
            used[i] = true;
            chosen.push(pool[i]);
            if self.embed_rec(pool, graph, chosen, used) {
                return true;
            }
            chosen.pop();
            used[i] = false;
        }
        false
    }

    /// True if the template fits somewhere on the device.
    pub fn occurs_in(&self, graph: &CouplingGraph) -> bool {
        self.qubit_count <= graph.num_qubits()
            && enumerate_subgraphs(graph, self.qubit_count)
                .iter()
                .any(|s| self.embed(&s.qubits, graph).is_some())
    }
}

/// A connected induced sub-graph of the device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subgraph {
    pub qubits: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
}

/// All connected induced sub-graphs with `size` qubits, sorted by qubit set.
/// Grows sets one neighbour at a time; every connected set has a connected
/// subset one smaller, so the level-by-level expansion is complete.
pub fn enumerate_subgraphs(graph: &CouplingGraph, size: usize) -> Vec<Subgraph> {
    if size == 0 || size > graph.num_qubits() {
        return Vec::new();
    }
    let mut level: BTreeSet<Vec<usize>> = (0..graph.num_qubits()).map(|q| vec![q]).collect();
    for _ in 1..size {
        let mut next = BTreeSet::new();
        for set in &level {
            for &q in set {
                for &n in graph.neighbors(q) {
                    if !set.contains(&n) {
                        let mut grown = set.clone();
                        grown.push(n);
                        grown.sort_unstable();
                        next.insert(grown);
                    }
                }
            }
        }
        level = next;
    }
    level
        .into_iter()
        .map(|qubits| Subgraph {
            edges: graph.induced_edges(&qubits),
            qubits,
        })
        .collect()
}

/// Disjoint connected blocks covering the target qubits, plus at most one
/// uncovered qubit left for stitching to pick up.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
    pub singleton: Option<usize>,
}

/// Greedy BFS peeling. Each step starts from the least-connected remaining
/// qubit (ties to the highest index) and peels the largest allowed block that
/// leaves a coverable remainder, backtracking to smaller sizes when needed.
pub fn partition_qubits(graph: &CouplingGraph, target: &[usize], allowed_sizes: &[usize]) -> Result<Partition> {
    let remaining: BTreeSet<usize> = target.iter().copied().collect();
    if remaining.is_empty() {
        return Ok(Partition {
            blocks: Vec::new(),
            singleton: None,
        });
    }
    if let Some(&q) = remaining.iter().find(|&&q| q >= graph.num_qubits()) {
        return Err(Error::QubitOutOfRange {
            index: q,
            width: graph.num_qubits(),
        });
    }
    let as_vec: Vec<usize> = remaining.iter().copied().collect();
    if !graph.is_connected_subset(&as_vec) {
        return Err(Error::Topology(format!("target qubits {as_vec:?} are not connected")));
    }
    let mut sizes: Vec<usize> = allowed_sizes.iter().copied().filter(|&s| s > 0).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes.dedup();

    let mut best_residue = as_vec.clone();
    let mut blocks = Vec::new();
    let mut singleton = None;
    if cover(graph, remaining, &sizes, &mut blocks, &mut singleton, &mut best_residue) {
        blocks.iter_mut().for_each(|b: &mut Vec<usize>| b.sort_unstable());
        blocks.sort();
        Ok(Partition { blocks, singleton })
    } else {
        Err(Error::InfeasibleCover { residue: best_residue })
    }
}

fn cover(
    graph: &CouplingGraph,
    remaining: BTreeSet<usize>,
    sizes: &[usize],
    blocks: &mut Vec<Vec<usize>>,
    singleton: &mut Option<usize>,
    best_residue: &mut Vec<usize>,
) -> bool {
    if remaining.is_empty() {
        return true;
    }
    if remaining.len() < best_residue.len() {
        *best_residue = remaining.iter().copied().collect();
    }
    let degree = |q: usize| graph.neighbors(q).iter().filter(|n| remaining.contains(n)).count();
    let start = remaining
        .iter()
        .copied()
        .min_by(|&a, &b| degree(a).cmp(&degree(b)).then(b.cmp(&a)))
        .expect("non-empty");

    let order = bfs_order(graph, start, &remaining);
    for &k in sizes.iter().filter(|&&k| k <= order.len()) {
        let block: Vec<usize> = order[..k].to_vec();
        let rest: BTreeSet<usize> = remaining.iter().copied().filter(|q| !block.contains(q)).collect();
        blocks.push(block);
        if cover(graph, rest, sizes, blocks, singleton, best_residue) {
            return true;
        }
        blocks.pop();
    }
    if singleton.is_none() {
        *singleton = Some(start);
        let rest: BTreeSet<usize> = remaining.iter().copied().filter(|&q| q != start).collect();
        if cover(graph, rest, sizes, blocks, singleton, best_residue) {
            return true;
        }
        *singleton = None;
    }
    false
}

fn bfs_order(graph: &CouplingGraph, start: usize, within: &BTreeSet<usize>) -> Vec<usize> {
    let mut order = vec![start];
    let mut i = 0;
    while i < order.len() {
        for &n in graph.neighbors(order[i]) {
            if within.contains(&n) && !order.contains(&n) {
                order.push(n);
            }
        }
        i += 1;
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit_sets(subs: &[Subgraph]) -> Vec<Vec<usize>> {
        subs.iter().map(|s| s.qubits.clone()).collect()
    }

    #[test]
    fn enumerate_line3() {
        let g = CouplingGraph::line(3);
        assert_eq!(qubit_sets(&enumerate_subgraphs(&g, 2)), vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(qubit_sets(&enumerate_subgraphs(&g, 3)), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn enumerate_tshape_triples() {
        let g = CouplingGraph::tshape5();
        let triples = qubit_sets(&enumerate_subgraphs(&g, 3));
        assert_eq!(triples, vec![vec![0, 1, 2], vec![0, 1, 3], vec![1, 2, 3], vec![1, 3, 4]]);
    }

    #[test]
    fn partition_examples() {
        let p = partition_qubits(&CouplingGraph::line(4), &[0, 1, 2, 3], &[2]).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(p.singleton, None);

        let line7 = CouplingGraph::line(7);
        let p = partition_qubits(&line7, &(0..7).collect::<Vec<_>>(), &[3, 4]).unwrap();
        assert_eq!(p.blocks, vec![vec![0, 1, 2], vec![3, 4, 5, 6]]);

        let p = partition_qubits(&CouplingGraph::line(5), &[0, 1, 2, 3, 4], &[2]).unwrap();
        assert_eq!(p.blocks.len(), 2);
        assert!(p.blocks.iter().all(|b| b.len() == 2));
        assert!(p.singleton.is_some());
    }

    #[test]
    fn partition_infeasible_reports_residue() {
        // A star with three leaves cannot be covered by pairs with one spare.
        let g = CouplingGraph::tshape5();
        match partition_qubits(&g, &[0, 1, 2, 3], &[2]) {
            Err(Error::InfeasibleCover { residue }) => assert!(!residue.is_empty()),
            other => panic!("expected infeasible cover, got {other:?}"),
        }
        assert!(partition_qubits(&g, &[0, 2], &[2]).is_err());
    }

    #[test]
    fn embedding() {
        let g = CouplingGraph::tshape5();
        assert_eq!(SubgraphTemplate::star3().embed(&[0, 1, 2, 3], &g), Some(vec![1, 0, 2, 3]));
        assert_eq!(SubgraphTemplate::path(4).embed(&[0, 1, 2, 3], &g), None);
        assert_eq!(SubgraphTemplate::path(4).embed(&[0, 1, 3, 4], &g), Some(vec![0, 1, 3, 4]));
        assert!(!SubgraphTemplate::star3().occurs_in(&CouplingGraph::line(6)));
        assert!(SubgraphTemplate::path(3).occurs_in(&g));
    }

    #[test]
    fn template_validation() {
        assert!(SubgraphTemplate::new("bad", 3, vec![(0, 1)]).is_err());
        assert!(SubgraphTemplate::new("big", 5, vec![]).is_err());
        assert!(SubgraphTemplate::builtin("hex").is_err());
    }
}
