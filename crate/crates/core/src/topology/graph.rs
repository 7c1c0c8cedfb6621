use std::collections::{BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Undirected coupling graph over physical qubits. Edges are stored as sorted
/// `(low, high)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile", into = "TopologyFile")]
pub struct CouplingGraph {
    num_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

/// On-disk form: `{"qubits": 5, "edges": [[0,1],[1,2]]}`.
#[derive(Serialize, Deserialize)]
struct TopologyFile {
    qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<TopologyFile> for CouplingGraph {
    type Error = Error;

    fn try_from(f: TopologyFile) -> Result<Self> {
        CouplingGraph::new(f.qubits, f.edges.iter().map(|e| (e[0], e[1])))
    }
}

impl From<CouplingGraph> for TopologyFile {
    fn from(g: CouplingGraph) -> Self {
        TopologyFile {
            qubits: g.num_qubits,
            edges: g.edges.iter().map(|&(a, b)| [a, b]).collect(),
        }
    }
}

// Coupling map of the 65-qubit heavy-hex devices (five rows joined by
// bridge qubits).
const HEAVY_HEX_65: [(usize, usize); 72] = [
    (0, 1), (0, 10), (1, 2), (2, 3), (3, 4), (4, 5), (4, 11), (5, 6), (6, 7), (7, 8),
    (8, 9), (8, 12), (10, 13), (11, 17), (12, 21), (13, 14), (14, 15), (15, 16), (15, 24),
    (16, 17), (17, 18), (18, 19), (19, 20), (19, 25), (20, 21), (21, 22), (22, 23), (23, 26),
    (24, 29), (25, 33), (26, 37), (27, 28), (27, 38), (28, 29), (29, 30), (30, 31), (31, 32),
    (31, 39), (32, 33), (33, 34), (34, 35), (35, 36), (35, 40), (36, 37), (38, 41), (39, 45),
    (40, 49), (41, 42), (42, 43), (43, 44), (43, 52), (44, 45), (45, 46), (46, 47), (47, 48),
    (47, 53), (48, 49), (49, 50), (50, 51), (51, 54), (52, 56), (53, 60), (54, 64), (55, 56),
    (56, 57), (57, 58), (58, 59), (59, 60), (60, 61), (61, 62), (62, 63), (63, 64),
];

impl CouplingGraph {
    pub fn new(num_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(Error::Topology("device needs at least one qubit".into()));
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= num_qubits || b >= num_qubits {
                return Err(Error::Topology(format!(
                    "edge [{a},{b}] references a qubit outside 0..{num_qubits}"
                )));
            }
            if a == b {
                return Err(Error::Topology(format!("self-loop on qubit {a}")));
            }
            set.insert((a.min(b), a.max(b)));
        }
        let mut adjacency = vec![Vec::new(); num_qubits];
        for &(a, b) in &set {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for n in &mut adjacency {
            n.sort_unstable();
        }
        Ok(CouplingGraph {
            num_qubits,
            edges: set,
            adjacency,
        })
    }

    pub fn line(n: usize) -> Self {
        Self::new(n, (1..n).map(|i| (i - 1, i))).expect("valid line")
    }

    /// `rows × cols` lattice, qubit `r * cols + c`.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let q = r * cols + c;
                if c + 1 < cols {
                    edges.push((q, q + 1));
                }
                if r + 1 < rows {
                    edges.push((q, q + cols));
                }
            }
        }
        Self::new(rows * cols, edges).expect("valid grid")
    }

    /// Five-qubit T shape: 0-1-2 with 1-3-4 hanging off the middle.
    pub fn tshape5() -> Self {
        Self::new(5, [(0, 1), (1, 2), (1, 3), (3, 4)]).expect("valid T")
    }

    pub fn heavy_hex65() -> Self {
        Self::new(65, HEAVY_HEX_65).expect("valid heavy-hex")
    }

    /// Resolves `line:N`, `grid:RxC`, `tshape5` or `heavyhex65`.
    pub fn builtin(name: &str) -> Result<Self> {
        let bad = || Error::Topology(format!("unknown topology `{name}`"));
        match name {
            "tshape5" => return Ok(Self::tshape5()),
            "heavyhex65" => return Ok(Self::heavy_hex65()),
            _ => {}
        }
        if let Some(n) = name.strip_prefix("line:") {
            let n: usize = n.parse().map_err(|_| bad())?;
            if n == 0 {
                return Err(bad());
            }
            return Ok(Self::line(n));
        }
        if let Some(dims) = name.strip_prefix("grid:") {
            let (r, c) = dims.split_once('x').ok_or_else(bad)?;
            let (r, c): (usize, usize) = (r.parse().map_err(|_| bad())?, c.parse().map_err(|_| bad())?);
            if r == 0 || c == 0 {
                return Err(bad());
            }
            return Ok(Self::grid(r, c));
        }
        Err(bad())
    }

    /// A built-in name, or else a path to a topology file.
    pub fn resolve(spec: &str) -> Result<Self> {
        match Self::builtin(spec) {
            Ok(g) => Ok(g),
            Err(_) if Path::new(spec).exists() => load_topology_file(spec),
            Err(e) => Err(e),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    /// BFS hop distances from `from`; `usize::MAX` marks unreachable qubits.
    pub fn distances_from(&self, from: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_qubits];
        dist[from] = 0;
        let mut queue = VecDeque::from([from]);
        while let Some(q) = queue.pop_front() {
            for &n in &self.adjacency[q] {
                if dist[n] == usize::MAX {
                    dist[n] = dist[q] + 1;
                    queue.push_back(n);
                }
            }
        }
        dist
    }

    pub fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(|&d| d != usize::MAX)
    }

    /// Edges with both endpoints in `qubits`.
    pub fn induced_edges(&self, qubits: &[usize]) -> Vec<(usize, usize)> {
        self.edges
            .iter()
            .copied()
            .filter(|(a, b)| qubits.contains(a) && qubits.contains(b))
            .collect()
    }

    pub fn is_connected_subset(&self, qubits: &[usize]) -> bool {
        let Some(&first) = qubits.first() else {
            return false;
        };
        let mut seen = vec![first];
        let mut stack = vec![first];
        while let Some(q) = stack.pop() {
            for &n in &self.adjacency[q] {
                if qubits.contains(&n) && !seen.contains(&n) {
                    seen.push(n);
                    stack.push(n);
                }
            }
        }
        seen.len() == qubits.iter().collect::<BTreeSet<_>>().len()
    }
}

/// Parses a JSON topology description.
pub fn load_topology(source: &str) -> Result<CouplingGraph> {
    serde_json::from_str(source).map_err(|e| Error::Topology(format!("parse error: {e}")))
}

pub fn load_topology_file(path: impl AsRef<Path>) -> Result<CouplingGraph> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    load_topology(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line3() {
        let g = CouplingGraph::line(3);
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn heavy_hex_counts() {
        let g = CouplingGraph::heavy_hex65();
        assert_eq!(g.num_qubits(), 65);
        assert_eq!(g.num_edges(), 72);
        assert!(g.is_connected());
        assert!((0..65).all(|q| g.neighbors(q).len() <= 3));
    }

    #[test]
    fn tshape_file() {
        let g = load_topology(r#"{"qubits": 5, "edges": [[0,1],[1,2],[1,3],[3,4]]}"#).unwrap();
        assert_eq!(g.num_qubits(), 5);
        assert_eq!(g.num_edges(), 4);
        assert_eq!(g, CouplingGraph::tshape5());
    }

    #[test]
    fn file_errors() {
        assert!(matches!(load_topology("{qubits: 3"), Err(Error::Topology(_))));
        let dangling = load_topology(r#"{"qubits": 2, "edges": [[0,5]]}"#);
        assert!(matches!(dangling, Err(Error::Topology(m)) if m.contains("outside")));
        assert!(load_topology(r#"{"qubits": 2, "edges": [[1,1]]}"#).is_err());
    }

    #[test]
    fn edges_are_canonical() {
        let g = CouplingGraph::new(3, [(2, 1), (1, 2), (1, 0)]).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
        let json = serde_json::to_string(&g).unwrap();
        assert_eq!(json, r#"{"qubits":3,"edges":[[0,1],[1,2]]}"#);
    }

    #[test]
    fn builtin_names() {
        assert_eq!(CouplingGraph::builtin("line:4").unwrap().num_edges(), 3);
        let g = CouplingGraph::builtin("grid:2x3").unwrap();
        assert_eq!((g.num_qubits(), g.num_edges()), (6, 7));
        assert!(CouplingGraph::builtin("ring:4").is_err());
        assert!(CouplingGraph::builtin("line:x").is_err());
    }
}
