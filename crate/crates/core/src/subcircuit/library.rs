use std::collections::HashSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_subcircuit, GenOptions};
use crate::circuit::{GateInstance, ParamCircuit};
use crate::error::{Error, Result};
use crate::metrics::{entangling_capability, expressibility, MetricConfig};
use crate::qasm::{format_gate, parse_gate_statement, AngleArg};
use crate::rng::{derive_seed, stream_rng};
use crate::sim::is_identity_at_zero;
use crate::topology::SubgraphTemplate;

pub const SCHEMA_VERSION: u32 = 1;

/// A scored building block on the local qubits of its template.
#[derive(Debug, Clone, PartialEq)]
pub struct SubCircuit {
    pub id: usize,
    pub template: SubgraphTemplate,
    pub circuit: ParamCircuit,
    /// Identity (up to global phase) with all parameters at zero.
    pub appendable: bool,
    /// KL divergence from Haar; lower is better.
    pub expressibility: f64,
    pub entanglement: f64,
}

impl SubCircuit {
    pub fn gate_count(&self) -> usize {
        self.circuit.len()
    }

    pub fn depth(&self) -> usize {
        self.circuit.depth()
    }

    pub fn param_count(&self) -> usize {
        self.circuit.num_params()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryConfig {
    pub templates: Vec<SubgraphTemplate>,
    pub count_per_template: usize,
    pub depth_limit: usize,
    pub options: GenOptions,
    pub metric: MetricConfig,
    pub seed: u64,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        LibraryConfig {
            templates: vec![SubgraphTemplate::path(2)],
            count_per_template: 500,
            depth_limit: 4,
            options: GenOptions::default(),
            metric: MetricConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Library {
    pub config: LibraryConfig,
    pub entries: Vec<SubCircuit>,
    /// Entry indices, most expressive (lowest KL) first.
    pub by_expressibility: Vec<usize>,
    /// Entry indices, most entangling first.
    pub by_entanglement: Vec<usize>,
}

impl Library {
    /// Builds a library from already scored entries, renumbering ids and
    /// computing both rank orders.
    pub fn from_entries(config: LibraryConfig, mut entries: Vec<SubCircuit>) -> Self {
        for (i, e) in entries.iter_mut().enumerate() {
            e.id = i;
        }
        let mut by_expressibility: Vec<usize> = (0..entries.len()).collect();
        by_expressibility.sort_by(|&a, &b| {
            entries[a]
                .expressibility
                .total_cmp(&entries[b].expressibility)
                .then(entries[b].entanglement.total_cmp(&entries[a].entanglement))
                .then(a.cmp(&b))
        });
        let mut by_entanglement: Vec<usize> = (0..entries.len()).collect();
        by_entanglement.sort_by(|&a, &b| {
            entries[b]
                .entanglement
                .total_cmp(&entries[a].entanglement)
                .then(entries[a].expressibility.total_cmp(&entries[b].expressibility))
                .then(a.cmp(&b))
        });
        Library {
            config,
            entries,
            by_expressibility,
            by_entanglement,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn appendable(&self) -> impl Iterator<Item = &SubCircuit> {
        self.entries.iter().filter(|e| e.appendable)
    }

    /// Qubit counts of all templates that have at least one entry.
    pub fn template_sizes(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.entries.iter().map(|e| e.template.qubit_count).collect();
        sizes.sort_unstable();
        sizes.dedup();
        sizes
    }
}

/// Scores a circuit. Single-qubit circuits have no entanglement to measure and
/// score 0.
pub fn score(circuit: &ParamCircuit, metric: &MetricConfig) -> Result<(f64, f64)> {
    let attach = |e: Error| match e {
        Error::Metric { msg, .. } => Error::Metric {
            circuit: circuit.structure_key(),
            msg,
        },
        other => Error::Metric {
            circuit: circuit.structure_key(),
            msg: other.to_string(),
        },
    };
    let expr = expressibility(circuit, metric).map_err(attach)?;
    let ent = if circuit.num_qubits() >= 2 {
        entangling_capability(circuit, metric).map_err(attach)?
    } else {
        0.0
    };
    Ok((expr, ent))
}

/// Generates `count_per_template` circuits per template, scores them, drops
/// structural duplicates (first occurrence wins) and ranks the survivors.
pub fn build_library(config: &LibraryConfig) -> Result<Library> {
    if config.count_per_template == 0 {
        return Err(Error::Config("count per template must be at least 1".into()));
    }
    if config.depth_limit == 0 {
        return Err(Error::Config("depth limit must be at least 1".into()));
    }
    config.metric.validate()?;

    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for template in &config.templates {
        let stream_seed = derive_seed(config.seed, &template.name);
        let circuits: Vec<ParamCircuit> = (0..config.count_per_template)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream_rng(stream_seed, i as u64);
                generate_subcircuit(template, config.depth_limit, config.options, &mut rng)
            })
            .collect();
        let unique: Vec<ParamCircuit> = circuits
            .into_iter()
            .filter(|c| seen.insert(format!("{}/{}", template.name, c.structure_key())))
            .collect();
        let scored: Vec<SubCircuit> = unique
            .into_par_iter()
            .map(|circuit| {
                let (expressibility, entanglement) = score(&circuit, &config.metric)?;
                Ok(SubCircuit {
                    id: 0,
                    template: template.clone(),
                    appendable: is_identity_at_zero(&circuit)?,
                    circuit,
                    expressibility,
                    entanglement,
                })
            })
            .collect::<Result<_>>()?;
        entries.extend(scored);
    }
    Ok(Library::from_entries(config.clone(), entries))
}

#[derive(Serialize, Deserialize)]
struct LibraryFile {
    schema: u32,
    config: LibraryConfig,
    entries: Vec<EntryFile>,
    rank_expressibility: Vec<usize>,
    rank_entanglement: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    id: usize,
    template: SubgraphTemplate,
    num_qubits: usize,
    num_params: usize,
    gates: Vec<String>,
    appendable: bool,
    expressibility: f64,
    entanglement: f64,
}

pub fn library_to_json(lib: &Library) -> Result<String> {
    let entries = lib
        .entries
        .iter()
        .map(|e| EntryFile {
            id: e.id,
            template: e.template.clone(),
            num_qubits: e.circuit.num_qubits(),
            num_params: e.circuit.num_params(),
            gates: e
                .circuit
                .gates()
                .iter()
                .map(|g| format_gate(g.kind, &g.qubits, g.param.map(AngleArg::Symbol), "q"))
                .collect(),
            appendable: e.appendable,
            expressibility: e.expressibility,
            entanglement: e.entanglement,
        })
        .collect();
    let file = LibraryFile {
        schema: SCHEMA_VERSION,
        config: lib.config.clone(),
        entries,
        rank_expressibility: lib.by_expressibility.clone(),
        rank_entanglement: lib.by_entanglement.clone(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn library_from_json(text: &str) -> Result<Library> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(format!("corrupt library: {e}")))?;
    match value.get("schema").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(Error::Schema(format!("unsupported library schema {v}, expected {SCHEMA_VERSION}"))),
        None => return Err(Error::Schema("missing `schema` field".into())),
    }
    let file: LibraryFile = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    let mut entries = Vec::with_capacity(file.entries.len());
    for (i, e) in file.entries.into_iter().enumerate() {
        if e.id != i {
            return Err(Error::Schema(format!("entry {i} has id {}", e.id)));
        }
        if e.num_qubits != e.template.qubit_count {
            return Err(Error::Schema(format!("entry {i} width does not match its template")));
        }
        let mut gates = Vec::with_capacity(e.gates.len());
        for text in &e.gates {
            let stmt = parse_gate_statement(text, "q", e.num_qubits).map_err(|err| Error::Schema(format!("entry {i}: {err}")))?;
            let param = match stmt.arg {
                Some(AngleArg::Symbol(k)) => Some(k),
                Some(AngleArg::Value(_)) => return Err(Error::Schema(format!("entry {i}: bound angle in `{text}`"))),
                None => None,
            };
            gates.push(GateInstance {
                kind: stmt.kind,
                qubits: stmt.qubits,
                param,
            });
        }
        let circuit = ParamCircuit::from_parts(e.num_qubits, gates, e.num_params).map_err(|err| Error::Schema(format!("entry {i}: {err}")))?;
        entries.push(SubCircuit {
            id: e.id,
            template: e.template,
            circuit,
            appendable: e.appendable,
            expressibility: e.expressibility,
            entanglement: e.entanglement,
        });
    }
    for (name, rank) in [("expressibility", &file.rank_expressibility), ("entanglement", &file.rank_entanglement)] {
        let mut sorted = rank.clone();
        sorted.sort_unstable();
        if sorted != (0..entries.len()).collect::<Vec<_>>() {
            return Err(Error::Schema(format!("{name} ranking is not a permutation of the entries")));
        }
    }
    Ok(Library {
        config: file.config,
        entries,
        by_expressibility: file.rank_expressibility,
        by_entanglement: file.rank_entanglement,
    })
}

pub fn save_library(lib: &Library, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, library_to_json(lib)?).map_err(|e| Error::io(path, e))
}

pub fn load_library(path: impl AsRef<Path>) -> Result<Library> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    library_from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> LibraryConfig {
        LibraryConfig {
            count_per_template: 12,
            depth_limit: 3,
            metric: MetricConfig {
                fidelity_pairs: 200,
                bins: 20,
                mw_samples: 30,
                seed: 5,
            },
            seed: 5,
            ..LibraryConfig::default()
        }
    }

    #[test]
    fn count_one_gives_at_most_one() {
        let lib = build_library(&LibraryConfig {
            count_per_template: 1,
            ..small_config()
        })
        .unwrap();
        assert!(lib.len() <= 1);
    }

    #[test]
    fn round_trip_is_exact() {
        let lib = build_library(&small_config()).unwrap();
        let back = library_from_json(&library_to_json(&lib).unwrap()).unwrap();
        assert_eq!(back, lib);
    }

    #[test]
    fn schema_errors() {
        let lib = build_library(&small_config()).unwrap();
        let json = library_to_json(&lib).unwrap();
        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["entries"][0].as_object_mut().unwrap().remove("appendable");
        assert!(matches!(library_from_json(&v.to_string()), Err(Error::Schema(_))));

        let mut v: serde_json::Value = serde_json::from_str(&json).unwrap();
        v["schema"] = 2.into();
        assert!(matches!(library_from_json(&v.to_string()), Err(Error::Schema(_))));
        assert!(matches!(library_from_json("{not json"), Err(Error::Schema(_))));
    }

    #[test]
    fn zero_count_rejected() {
        let cfg = LibraryConfig {
            count_per_template: 0,
            ..small_config()
        };
        assert!(matches!(build_library(&cfg), Err(Error::Config(_))));
    }
}
