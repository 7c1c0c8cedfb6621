use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::ansatz::{Ansatz, Block, BlockSource, Stage};
use crate::circuit::ParamCircuit;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, stream_rng};
use crate::subcircuit::Library;
use crate::topology::{enumerate_subgraphs, partition_qubits, CouplingGraph, PhysicalMapping};

/// Order in which library entries are offered to the builder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum SelectionPolicy {
    /// Most expressive first.
    Exp,
    /// Most entangling first.
    Ent,
    /// Interleaves the two rankings; `exp_fraction` of the picks come from the
    /// expressibility ranking.
    Mixed { exp_fraction: f64 },
    /// Seeded shuffle of the whole library.
    Random,
}

impl SelectionPolicy {
    pub fn mixed() -> Self {
        SelectionPolicy::Mixed { exp_fraction: 0.5 }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "exp" => Ok(Self::Exp),
            "ent" => Ok(Self::Ent),
            "mixed" => Ok(Self::mixed()),
            "random" => Ok(Self::Random),
            _ => Err(Error::Config(format!("unknown policy `{name}` (exp, ent, mixed, random)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exp => "exp",
            Self::Ent => "ent",
            Self::Mixed { .. } => "mixed",
            Self::Random => "random",
        }
    }

    /// Entry ids in offer order.
    pub fn order(&self, library: &Library, seed: u64) -> Result<Vec<usize>> {
        Ok(match *self {
            Self::Exp => library.by_expressibility.clone(),
            Self::Ent => library.by_entanglement.clone(),
            Self::Mixed { exp_fraction } => {
                if !(exp_fraction > 0.0 && exp_fraction < 1.0) {
                    return Err(Error::Config(format!("mixed ratio {exp_fraction} outside (0, 1)")));
                }
                let mut taken = vec![false; library.len()];
                let (mut e, mut n) = (library.by_expressibility.iter(), library.by_entanglement.iter());
                let mut out = Vec::with_capacity(library.len());
                let mut k = 0usize;
                while out.len() < library.len() {
                    let from_exp = ((k + 1) as f64 * exp_fraction).ceil() > (k as f64 * exp_fraction).ceil();
                    let source = if from_exp { &mut e } else { &mut n };
                    if let Some(&id) = source.by_ref().find(|&&id| !taken[id]) {
                        taken[id] = true;
                        out.push(id);
                    }
                    k += 1;
                }
                out
            }
            Self::Random => {
                let mut ids: Vec<usize> = (0..library.len()).collect();
                ids.shuffle(&mut stream_rng(derive_seed(seed, "combine"), 0));
                ids
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    /// Next block goes to the region whose qubits carry the fewest gates.
    Balanced,
    /// Regions take turns, largest first.
    DecreasingSize,
}

impl Placement {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "balanced" => Ok(Self::Balanced),
            "decreasing_size" | "decreasing-size" => Ok(Self::DecreasingSize),
            _ => Err(Error::Config(format!("unknown placement `{name}` (balanced, decreasing_size)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombineOptions {
    pub policy: SelectionPolicy,
    pub placement: Placement,
    pub depth_threshold: usize,
    pub seed: u64,
}

impl Default for CombineOptions {
    fn default() -> Self {
        CombineOptions {
            policy: SelectionPolicy::Exp,
            placement: Placement::Balanced,
            depth_threshold: 6,
            seed: 0,
        }
    }
}

/// Picks `n` device qubits for the ansatz: the first connected set (in sorted
/// order) that partitions into library-sized blocks without a leftover qubit,
/// or else the first one that partitions at all.
pub fn select_target_qubits(device: &CouplingGraph, n: usize, block_sizes: &[usize]) -> Result<Vec<usize>> {
    let candidates = enumerate_subgraphs(device, n);
    if candidates.is_empty() {
        return Err(Error::Topology(format!("device has no connected set of {n} qubits")));
    }
    let mut fallback = None;
    for s in &candidates {
        if let Ok(p) = partition_qubits(device, &s.qubits, block_sizes) {
            if p.singleton.is_none() {
                return Ok(s.qubits.clone());
            }
            fallback.get_or_insert_with(|| s.qubits.clone());
        }
    }
    fallback.ok_or_else(|| Error::InfeasibleCover {
        residue: candidates[0].qubits.clone(),
    })
}

/// Builds the initial ansatz: partitions the target qubits into regions shaped
/// like library templates, then keeps appending library entries (each used at
/// most once, in policy order) to the region chosen by `placement`, skipping
/// any entry that would push the circuit depth past the threshold. A region is
/// closed once nothing fits; building stops when all regions are closed.
pub fn combine(library: &Library, device: &CouplingGraph, target: &[usize], options: &CombineOptions) -> Result<Ansatz> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary("library has no entries".into()));
    }
    let mut target = target.to_vec();
    target.sort_unstable();
    target.dedup();
    let mapping = PhysicalMapping::new(target.clone(), device.num_qubits())?;
    let partition = partition_qubits(device, &target, &library.template_sizes())?;
    let logical = |p: usize| target.binary_search(&p).expect("target qubit");

    struct Region {
        qubits: Vec<usize>,
        // (entry id, local → logical) for every entry that embeds here.
        fits: Vec<(usize, Vec<usize>)>,
    }
    let mut regions = Vec::new();
    for block in &partition.blocks {
        let mut fits = Vec::new();
        for e in &library.entries {
            if e.template.qubit_count == block.len() {
                if let Some(emb) = e.template.embed(block, device) {
                    fits.push((e.id, emb.into_iter().map(logical).collect()));
                }
            }
        }
        if fits.is_empty() {
            return Err(Error::EmptyLibrary(format!(
                "no library entry fits the {}-qubit region {block:?}",
                block.len()
            )));
        }
        regions.push(Region {
            qubits: block.iter().map(|&p| logical(p)).collect(),
            fits,
        });
    }

    let order = options.policy.order(library, options.seed)?;
    let rank: Vec<usize> = {
        let mut r = vec![0; library.len()];
        for (pos, &id) in order.iter().enumerate() {
            r[id] = pos;
        }
        r
    };
    for r in &mut regions {
        r.fits.sort_by_key(|(id, _)| rank[*id]);
    }

    let width = target.len();
    let mut layers = vec![0usize; width];
    let mut counts = vec![0usize; width];
    let mut used = vec![false; library.len()];
    let mut open = vec![true; regions.len()];
    let mut blocks = Vec::new();
    let mut by_size: Vec<usize> = (0..regions.len()).collect();
    by_size.sort_by(|&a, &b| regions[b].qubits.len().cmp(&regions[a].qubits.len()).then(a.cmp(&b)));
    let mut turn = 0usize;

    while open.iter().any(|&o| o) {
        let r = match options.placement {
            Placement::Balanced => (0..regions.len())
                .filter(|&r| open[r])
                .min_by(|&a, &b| {
                    let load = |r: usize| {
                        let q = &regions[r].qubits;
                        q.iter().map(|&x| counts[x]).sum::<usize>() as f64 / q.len() as f64
                    };
                    load(a).total_cmp(&load(b)).then(a.cmp(&b))
                })
                .expect("an open region"),
            Placement::DecreasingSize => {
                let r = *by_size
                    .iter()
                    .cycle()
                    .skip(turn)
                    .take(by_size.len())
                    .find(|&&r| open[r])
                    .expect("an open region");
                turn = by_size.iter().position(|&x| x == r).expect("listed") + 1;
                r
            }
        };
        let pick = regions[r].fits.iter().find(|(id, map)| {
            !used[*id] && depth_after(&layers, &library.entries[*id].circuit, map) <= options.depth_threshold
        });
        match pick {
            Some((id, map)) => {
                let circuit = library.entries[*id].circuit.clone();
                layers = apply_layers(&layers, &circuit, map);
                for g in circuit.gates() {
                    for &q in &g.qubits {
                        counts[map[q]] += 1;
                    }
                }
                used[*id] = true;
                blocks.push(Block {
                    source: BlockSource::Library { id: *id },
                    stage: Stage::Initial,
                    qubits: map.clone(),
                    circuit,
                });
            }
            None => open[r] = false,
        }
    }

    let mut region_sets: Vec<Vec<usize>> = regions.into_iter().map(|r| r.qubits).collect();
    if let Some(s) = partition.singleton {
        region_sets.push(vec![logical(s)]);
    }
    Ansatz::new(device.clone(), mapping, region_sets, blocks, options.depth_threshold)
}

fn apply_layers(layers: &[usize], circuit: &ParamCircuit, map: &[usize]) -> Vec<usize> {
    let mut l = layers.to_vec();
    for g in circuit.gates() {
        let next = g.qubits.iter().map(|&q| l[map[q]]).max().unwrap_or(0) + 1;
        for &q in &g.qubits {
            l[map[q]] = next;
        }
    }
    l
}

fn depth_after(layers: &[usize], circuit: &ParamCircuit, map: &[usize]) -> usize {
    apply_layers(layers, circuit, map).into_iter().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::MetricConfig;
    use crate::subcircuit::{build_library, LibraryConfig};
    use crate::topology::{is_compatible, SubgraphTemplate};

    fn lib() -> Library {
        build_library(&LibraryConfig {
            templates: vec![SubgraphTemplate::path(2)],
            count_per_template: 30,
            depth_limit: 3,
            metric: MetricConfig {
                fidelity_pairs: 200,
                bins: 20,
                mw_samples: 30,
                seed: 1,
            },
            seed: 1,
            ..LibraryConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn threshold_zero_is_empty() {
        let g = CouplingGraph::line(4);
        let opts = CombineOptions {
            depth_threshold: 0,
            ..CombineOptions::default()
        };
        let a = combine(&lib(), &g, &[0, 1, 2, 3], &opts).unwrap();
        assert!(a.circuit().is_empty());
    }

    #[test]
    fn two_disjoint_blocks_on_four_qubits() {
        let g = CouplingGraph::line(4);
        let library = lib();
        for policy in [SelectionPolicy::Exp, SelectionPolicy::Ent, SelectionPolicy::mixed(), SelectionPolicy::Random] {
            for placement in [Placement::Balanced, Placement::DecreasingSize] {
                let opts = CombineOptions {
                    policy,
                    placement,
                    ..CombineOptions::default()
                };
                let a = combine(&library, &g, &[0, 1, 2, 3], &opts).unwrap();
                assert!(a.circuit().depth() <= 6);
                assert!(is_compatible(a.circuit(), a.mapping(), &g));
                assert_eq!(a.regions(), &[vec![0, 1], vec![2, 3]]);
                assert!(a.circuit().gates().iter().all(|g| !g.is_two_qubit() || g.qubits.iter().all(|&q| q < 2) || g.qubits.iter().all(|&q| q >= 2)));
                assert!(a.blocks().len() >= 2);
                let again = combine(&library, &g, &[0, 1, 2, 3], &opts).unwrap();
                assert_eq!(again, a);
            }
        }
    }

    #[test]
    fn exp_policy_takes_best_first() {
        let library = lib();
        let g = CouplingGraph::line(2);
        let a = combine(&library, &g, &[0, 1], &CombineOptions::default()).unwrap();
        let first_fitting = library
            .by_expressibility
            .iter()
            .find(|&&id| library.entries[id].depth() <= 6)
            .unwrap();
        assert_eq!(a.blocks()[0].source, BlockSource::Library { id: *first_fitting });
    }

    #[test]
    fn mixed_alternates() {
        let library = lib();
        let order = SelectionPolicy::mixed().order(&library, 0).unwrap();
        assert_eq!(order[0], library.by_expressibility[0]);
        let first_ent = *library.by_entanglement.iter().find(|&&id| id != order[0]).unwrap();
        assert_eq!(order[1], first_ent);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..library.len()).collect::<Vec<_>>());
    }

    #[test]
    fn target_selection() {
        let t = CouplingGraph::tshape5();
        assert_eq!(select_target_qubits(&t, 4, &[2]).unwrap(), vec![0, 1, 3, 4]);
        assert_eq!(select_target_qubits(&CouplingGraph::line(6), 4, &[2]).unwrap(), vec![0, 1, 2, 3]);
    }
}
