use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qansatz::builder::{
    combine, layered_circuit, layers_for, prune, random_circuit, select_target_qubits, stitch, Ansatz, CombineOptions, Placement,
    SelectionPolicy, StitchKind, StitchPlacement,
};
use qansatz::metrics::{entangling_capability, expressibility_with_histogram, FidelityHistogram, MetricConfig};
use qansatz::qasm::parse_qasm;
use qansatz::qnn::{load_dataset, prune_trained, train, train_with_growth, DatasetSpec, Model, TrainConfig};
use qansatz::rng::{derive_seed, stream_rng};
use qansatz::sim::is_identity_at_zero;
use qansatz::subcircuit::{build_library, load_library, save_library, LibraryConfig, GenOptions};
use qansatz::topology::{compiled_stats, is_compatible, CouplingGraph, PhysicalMapping, SubgraphTemplate};
use qansatz::{Error, GateKind, ParamCircuit, Result};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::{read, write, BuildArgs, Command, CompareArgs, EvalArgs, GenArgs, MetricArgs, PruneArgs, StitchArgs, TrainArgs};

pub const SCORES_HEADER: &str = "id,gates,depth,params,expressibility,entanglement,appendable";
pub const COMPARE_HEADER: &str = "variant,qubits,gates,depth,cnots,swaps,compiled_gates,compiled_depth,compiled_cnots";

fn absolute(path: &Path) -> Result<PathBuf> {
    path.canonicalize().map_err(|e| Error::io(path, e))
}

fn topology_spec(spec: &str) -> Result<String> {
    if CouplingGraph::builtin(spec).is_ok() {
        return Ok(spec.to_string());
    }
    CouplingGraph::resolve(spec)?;
    Ok(absolute(Path::new(spec))?.display().to_string())
}

fn render_dataset(spec: &DatasetSpec) -> String {
    match spec {
        DatasetSpec::Synthetic { kind, level } => format!("{}:{level}", kind.name()),
        DatasetSpec::Csv { path } => format!("csv:{}", path.display()),
        DatasetSpec::Images { dir, classes } if classes.is_empty() => format!("images:{}", dir.display()),
        DatasetSpec::Images { dir, classes } => {
            let list: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
            format!("images:{}:{}", dir.display(), list.join(","))
        }
    }
}

fn policy(name: &str, ratio: f64) -> Result<SelectionPolicy> {
    match SelectionPolicy::parse(name)? {
        SelectionPolicy::Mixed { .. } => {
            if !(ratio > 0.0 && ratio < 1.0) {
                return Err(Error::Config(format!("mixed ratio {ratio} must lie in (0, 1)")));
            }
            Ok(SelectionPolicy::Mixed { exp_fraction: ratio })
        }
        p => Ok(p),
    }
}

/// Makes input paths absolute and checks every named option, so a saved
/// config replays from any working directory.
pub(crate) fn resolve(command: Command) -> Result<Command> {
    Ok(match command {
        Command::Gen(mut a) => {
            a.topology = topology_spec(&a.topology)?;
            for t in &a.templates {
                SubgraphTemplate::builtin(t)?;
            }
            Command::Gen(a)
        }
        Command::Eval(mut a) => {
            a.input = absolute(&a.input)?;
            Command::Eval(a)
        }
        Command::Build(mut a) => {
            a.library = absolute(&a.library)?;
            a.topology = topology_spec(&a.topology)?;
            policy(&a.policy, a.mixed_ratio)?;
            Placement::parse(&a.placement)?;
            if let Some(k) = &a.stitch {
                StitchKind::parse(k)?;
            }
            StitchPlacement::parse(&a.stitch_placement)?;
            Command::Build(a)
        }
        Command::Stitch(mut a) => {
            a.ansatz = absolute(&a.ansatz)?;
            StitchKind::parse(&a.kind)?;
            StitchPlacement::parse(&a.placement)?;
            Command::Stitch(a)
        }
        Command::Prune(mut a) => {
            a.ansatz = absolute(&a.ansatz)?;
            a.params = absolute(&a.params)?;
            Command::Prune(a)
        }
        Command::Train(mut a) => {
            let spec = match DatasetSpec::parse(&a.dataset)? {
                DatasetSpec::Csv { path } => DatasetSpec::Csv { path: absolute(&path)? },
                DatasetSpec::Images { dir, classes } => DatasetSpec::Images {
                    dir: absolute(&dir)?,
                    classes,
                },
                s => s,
            };
            a.dataset = render_dataset(&spec);
            a.ansatz = absolute(&a.ansatz)?;
            a.params = a.params.as_deref().map(absolute).transpose()?;
            a.library = a.library.as_deref().map(absolute).transpose()?;
            if a.grow && a.library.is_none() {
                return Err(Error::Config("--grow needs --library".into()));
            }
            a.data_seed = Some(a.data_seed.unwrap_or(a.seed));
            train_config(&a).validate()?;
            Command::Train(a)
        }
        Command::Compare(mut a) => {
            a.ansatz = absolute(&a.ansatz)?;
            Command::Compare(a)
        }
    })
}

pub(crate) fn execute(command: &Command, out: &Path) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a, out),
        Command::Eval(a) => eval(a, out),
        Command::Build(a) => build(a, out),
        Command::Stitch(a) => stitch_cmd(a, out),
        Command::Prune(a) => prune_cmd(a, out),
        Command::Train(a) => train_cmd(a, out),
        Command::Compare(a) => compare(a, out),
    }
}

fn metric_config(m: &MetricArgs, seed: u64) -> MetricConfig {
    MetricConfig {
        fidelity_pairs: m.fidelity_pairs,
        bins: m.bins,
        mw_samples: m.mw_samples,
        seed,
    }
}

fn scores_row(out: &mut String, id: usize, c: &ParamCircuit, expr: f64, ent: f64, appendable: bool) {
    writeln!(out, "{id},{},{},{},{expr},{ent},{appendable}", c.len(), c.depth(), c.num_params()).unwrap();
}

fn gen(a: &GenArgs, out: &Path) -> Result<()> {
    let device = CouplingGraph::resolve(&a.topology)?;
    let templates = a
        .templates
        .iter()
        .map(|t| {
            let t = SubgraphTemplate::builtin(t)?;
            if !t.occurs_in(&device) {
                return Err(Error::Config(format!("template `{}` does not occur in topology `{}`", t.name, a.topology)));
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let config = LibraryConfig {
        templates,
        count_per_template: a.count,
        depth_limit: a.depth_limit,
        options: GenOptions {
            include_fixed_gates: a.fixed_gates,
        },
        metric: metric_config(&a.metric, a.seed),
        seed: a.seed,
    };
    let lib = build_library(&config)?;
    save_library(&lib, out.join("library.json"))?;
    let mut csv = format!("{SCORES_HEADER}\n");
    for e in &lib.entries {
        scores_row(&mut csv, e.id, &e.circuit, e.expressibility, e.entanglement, e.appendable);
    }
    write(out, "scores.csv", &csv)?;
    println!("library: {} entries ({} appendable) -> {}", lib.len(), lib.appendable().count(), out.display());
    Ok(())
}

#[derive(Serialize)]
struct HistogramDump {
    id: usize,
    histogram: FidelityHistogram,
}

fn eval(a: &EvalArgs, out: &Path) -> Result<()> {
    let metric = metric_config(&a.metric, a.seed);
    metric.validate()?;
    let circuits: Vec<(usize, ParamCircuit, bool)> = if a.input.extension().is_some_and(|e| e == "qasm") {
        let (c, _) = parse_qasm(&read(&a.input)?)?;
        let appendable = is_identity_at_zero(&c)?;
        vec![(0, c, appendable)]
    } else {
        load_library(&a.input)?
            .entries
            .into_iter()
            .map(|e| (e.id, e.circuit, e.appendable))
            .collect()
    };
    let scored: Vec<(f64, f64, FidelityHistogram)> = circuits
        .par_iter()
        .map(|(_, c, _)| {
            let (expr, hist) = expressibility_with_histogram(c, &metric)?;
            let ent = if c.num_qubits() >= 2 { entangling_capability(c, &metric)? } else { 0.0 };
            Ok((expr, ent, hist))
        })
        .collect::<Result<_>>()?;
    let mut csv = format!("{SCORES_HEADER}\n");
    for ((id, c, app), (expr, ent, _)) in circuits.iter().zip(&scored) {
        scores_row(&mut csv, *id, c, *expr, *ent, *app);
    }
    write(out, "scores.csv", &csv)?;
    if a.histograms {
        let dump: Vec<HistogramDump> = circuits
            .iter()
            .zip(scored)
            .map(|((id, _, _), (_, _, histogram))| HistogramDump { id: *id, histogram })
            .collect();
        write(out, "histograms.json", &serde_json::to_string_pretty(&dump)?)?;
    }
    println!("scored {} circuit(s) -> {}", circuits.len(), out.display());
    Ok(())
}

fn save_ansatz(ansatz: &Ansatz, params: &[f64], out: &Path) -> Result<()> {
    ansatz.save(out.join("ansatz.json"))?;
    write(out, "ansatz.qasm", &ansatz.to_qasm(params)?)?;
    write(out, "params.json", &serde_json::to_string(params)?)
}

fn describe(ansatz: &Ansatz) -> String {
    let c = ansatz.circuit();
    format!(
        "{} qubits, {} gates, depth {}, {} CNOTs, {} params",
        c.num_qubits(),
        c.len(),
        c.depth(),
        c.count_kind(GateKind::Cnot),
        c.num_params()
    )
}

#[derive(Serialize)]
struct StitchReport {
    edges: Vec<(usize, usize)>,
    warning: Option<String>,
}

fn apply_stitch(ansatz: &Ansatz, kind: &str, placement: &str, out: &Path) -> Result<Ansatz> {
    let outcome = stitch(ansatz, StitchKind::parse(kind)?, StitchPlacement::parse(placement)?)?;
    if let Some(w) = &outcome.warning {
        eprintln!("warning: {w}");
    }
    let report = StitchReport {
        edges: outcome.edges,
        warning: outcome.warning,
    };
    write(out, "stitch.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(outcome.ansatz)
}

fn build(a: &BuildArgs, out: &Path) -> Result<()> {
    let lib = load_library(&a.library)?;
    let device = CouplingGraph::resolve(&a.topology)?;
    let target = select_target_qubits(&device, a.qubits, &lib.template_sizes())?;
    let options = CombineOptions {
        policy: policy(&a.policy, a.mixed_ratio)?,
        placement: Placement::parse(&a.placement)?,
        depth_threshold: a.depth_threshold,
        seed: a.seed,
    };
    let mut ansatz = combine(&lib, &device, &target, &options)?;
    if let Some(kind) = &a.stitch {
        ansatz = apply_stitch(&ansatz, kind, &a.stitch_placement, out)?;
    }
    save_ansatz(&ansatz, &vec![0.0; ansatz.num_params()], out)?;
    println!("ansatz: {} -> {}", describe(&ansatz), out.display());
    Ok(())
}

fn stitch_cmd(a: &StitchArgs, out: &Path) -> Result<()> {
    let ansatz = apply_stitch(&Ansatz::load(&a.ansatz)?, &a.kind, &a.placement, out)?;
    save_ansatz(&ansatz, &vec![0.0; ansatz.num_params()], out)?;
    println!("ansatz: {} -> {}", describe(&ansatz), out.display());
    Ok(())
}

fn load_params(path: &Path) -> Result<Vec<f64>> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn prune_cmd(a: &PruneArgs, out: &Path) -> Result<()> {
    let ansatz = Ansatz::load(&a.ansatz)?;
    let params = load_params(&a.params)?;
    let outcome = prune(&ansatz, &params, a.epsilon)?;
    save_ansatz(&outcome.ansatz, &outcome.params, out)?;
    write(out, "removed.json", &serde_json::to_string_pretty(&outcome.removed)?)?;
    println!("pruned {} gate(s): {} -> {}", outcome.removed.len(), describe(&outcome.ansatz), out.display());
    Ok(())
}

fn train_config(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
        growth_patience: a.patience,
        growth_min_delta: a.min_delta,
        growth_cap: if a.grow { a.growth_cap } else { 0 },
        prune_epsilon: a.epsilon,
        prune_max_drop: a.max_drop,
        prune_finetune_epochs: a.finetune_epochs,
        ..TrainConfig::default()
    }
}

fn train_cmd(a: &TrainArgs, out: &Path) -> Result<()> {
    let config = train_config(a);
    let dataset = load_dataset(&DatasetSpec::parse(&a.dataset)?, a.data_seed.unwrap_or(a.seed))?;
    let ansatz = Ansatz::load(&a.ansatz)?;
    let mut model = Model::new(ansatz, dataset.num_features, dataset.num_classes)?;
    model.params = match &a.params {
        Some(p) => load_params(p)?,
        None => config.initial_params(model.params.len()),
    };
    let mut outcome = match (&a.library, a.grow) {
        (Some(lib), true) => train_with_growth(&model, &load_library(lib)?, &dataset, &config)?,
        _ => train(&model, &dataset, &config)?,
    };
    if a.prune && outcome.report.diverged_at.is_none() {
        outcome = prune_trained(outcome, &dataset, &config)?;
    }
    let report = &outcome.report;
    write(out, "report.json", &serde_json::to_string_pretty(report)?)?;
    write(out, "epochs.csv", &report.epochs_csv())?;
    save_ansatz(&outcome.model.ansatz, &outcome.model.params, out)?;
    if let Some(epoch) = report.diverged_at {
        return Err(Error::Diverged { epoch });
    }
    println!(
        "validation {:.4}, test {}, {} growth / {} prune events; ansatz {} -> {}",
        report.final_validation_accuracy,
        report.final_test_accuracy.map_or("n/a".into(), |a| format!("{a:.4}")),
        report.growth.len(),
        report.prune.len(),
        describe(&outcome.model.ansatz),
        out.display()
    );
    Ok(())
}

/// A permutation of the ansatz's physical qubits under which the circuit
/// needs routing, or the last shuffle tried if none does.
pub fn shuffled_mapping(ansatz: &Ansatz, seed: u64) -> Result<PhysicalMapping> {
    let mapping = ansatz.mapping();
    if mapping.num_logical() < 2 {
        return Err(Error::Config("cannot shuffle a mapping of fewer than 2 qubits".into()));
    }
    let mut rng = stream_rng(derive_seed(seed, "noil"), 0);
    let mut physical = mapping.as_slice().to_vec();
    for _ in 0..256 {
        physical.shuffle(&mut rng);
        if physical.as_slice() == mapping.as_slice() {
            continue;
        }
        let m = PhysicalMapping::new(physical.clone(), mapping.device_size())?;
        if !is_compatible(ansatz.circuit(), &m, ansatz.device()) {
            return Ok(m);
        }
    }
    PhysicalMapping::new(physical, mapping.device_size())
}

fn compare_row(csv: &mut String, name: &str, c: &ParamCircuit, mapping: &PhysicalMapping, device: &CouplingGraph) -> Result<()> {
    let s = compiled_stats(c, mapping, device)?;
    writeln!(
        csv,
        "{name},{},{},{},{},{},{},{},{}",
        c.num_qubits(),
        c.len(),
        c.depth(),
        c.count_kind(GateKind::Cnot),
        s.swap_count,
        s.gate_count,
        s.depth,
        s.cnot_count
    )
    .unwrap();
    Ok(())
}

fn compare(a: &CompareArgs, out: &Path) -> Result<()> {
    let ansatz = Ansatz::load(&a.ansatz)?;
    let device = ansatz.device();
    let native = ansatz.mapping();
    let c = ansatz.circuit();
    let n = c.num_qubits();
    let noil = shuffled_mapping(&ansatz, a.seed)?;
    let random = random_circuit(n, c.len(), &mut stream_rng(derive_seed(a.seed, "random"), 0));
    let layered = layered_circuit(n, layers_for(n, c.len()));

    let mut csv = format!("{COMPARE_HEADER}\n");
    compare_row(&mut csv, "native", c, native, device)?;
    compare_row(&mut csv, "noil", c, &noil, device)?;
    compare_row(&mut csv, "random", &random, native, device)?;
    compare_row(&mut csv, "layered", &layered, native, device)?;
    write(out, "compare.csv", &csv)?;
    print!("{csv}");
    Ok(())
}
