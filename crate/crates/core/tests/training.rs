mod common;

use std::io::Write as _;
use std::sync::OnceLock;

use common::line_ansatz;
use qansatz::builder::{combine, select_target_qubits, Ansatz, CombineOptions};
use qansatz::metrics::MetricConfig;
use qansatz::qnn::*;
use qansatz::subcircuit::{build_library, Library, LibraryConfig};
use qansatz::topology::CouplingGraph;
use qansatz::ParamCircuit;

fn library() -> &'static Library {
    static LIB: OnceLock<Library> = OnceLock::new();
    LIB.get_or_init(|| {
        build_library(&LibraryConfig {
            count_per_template: 80,
            metric: MetricConfig {
                fidelity_pairs: 500,
                mw_samples: 50,
                ..MetricConfig::default()
            },
            seed: 3,
            ..LibraryConfig::default()
        })
        .unwrap()
    })
}

fn initial_ansatz() -> Ansatz {
    let device = CouplingGraph::tshape5();
    let target = select_target_qubits(&device, 4, &library().template_sizes()).unwrap();
    combine(library(), &device, &target, &CombineOptions::default()).unwrap()
}

fn model_for(dataset: &Dataset, config: &TrainConfig) -> Model {
    let mut m = Model::new(initial_ansatz(), dataset.num_features, dataset.num_classes).unwrap();
    m.params = config.initial_params(m.params.len());
    m
}

#[test]
fn synthetic_split_sizes() {
    for kind in SyntheticKind::ALL {
        for level in 1..=3 {
            let d = synthetic(kind, level, 5).unwrap();
            assert_eq!((d.train.len(), d.validation.len(), d.test.len()), (1000, 250, 250));
            assert_eq!(d.num_features, 2);
            for s in d.train.iter().chain(&d.validation).chain(&d.test) {
                assert!(s.label < d.num_classes);
                assert!(s.features.iter().all(|f| (0.0..=std::f64::consts::PI).contains(f)));
            }
        }
    }
    assert!(synthetic(SyntheticKind::Blobs, 0, 0).is_err());
}

#[test]
fn blobs_train_to_high_accuracy() {
    let d = synthetic(SyntheticKind::Blobs, 1, 0).unwrap();
    let config = TrainConfig::default();
    let out = train(&model_for(&d, &config), &d, &config).unwrap();
    let last = out.report.epochs.last().unwrap();
    assert!(out.report.epochs.len() <= 30);
    assert!(last.train_accuracy >= 0.95, "{}", last.train_accuracy);
    assert!(out.report.diverged_at.is_none());
}

#[test]
fn zero_learning_rate_keeps_params() {
    let d = synthetic(SyntheticKind::Moons, 1, 1).unwrap();
    let config = TrainConfig {
        learning_rate: 0.0,
        epochs: 2,
        ..TrainConfig::default()
    };
    let m = model_for(&d, &config);
    let out = train(&m, &d, &config).unwrap();
    assert_eq!(out.model.params, m.params);
}

#[test]
fn training_is_deterministic() {
    let d = synthetic(SyntheticKind::Circles, 2, 4).unwrap();
    let config = TrainConfig {
        epochs: 4,
        seed: 9,
        ..TrainConfig::default()
    };
    let m = model_for(&d, &config);
    let a = train(&m, &d, &config).unwrap();
    let b = train(&m, &d, &config).unwrap();
    assert_eq!(a.report, b.report);
    assert_eq!(a.model.params, b.model.params);
}

#[test]
fn growth_cap_zero_matches_plain_training() {
    let d = synthetic(SyntheticKind::Blobs, 2, 2).unwrap();
    let config = TrainConfig {
        epochs: 6,
        growth_cap: 0,
        ..TrainConfig::default()
    };
    let m = model_for(&d, &config);
    let plain = train(&m, &d, &config).unwrap();
    let grown = train_with_growth(&m, library(), &d, &config).unwrap();
    assert_eq!(plain.report, grown.report);
    assert_eq!(plain.model.params, grown.model.params);
}

#[test]
fn growth_events_are_continuous_and_ordered() {
    let d = synthetic(SyntheticKind::Moons, 2, 3).unwrap();
    // Patience 1 with an unreachable gain target forces growth early.
    let config = TrainConfig {
        epochs: 8,
        growth_patience: 1,
        growth_min_delta: 1.0,
        growth_cap: 3,
        ..TrainConfig::default()
    };
    let m = model_for(&d, &config);
    let out = train_with_growth(&m, library(), &d, &config).unwrap();
    let r = &out.report;
    assert!(!r.growth.is_empty());
    for g in &r.growth {
        assert!(g.max_output_change < 1e-9, "{}", g.max_output_change);
        assert!((g.validation_loss_before - g.validation_loss_after).abs() < 1e-9);
    }
    assert!(r.growth.windows(2).all(|w| w[0].epoch < w[1].epoch));
    let grown: usize = r.growth.iter().map(|g| g.new_params).sum();
    assert_eq!(out.model.params.len(), m.params.len() + grown);
    assert_eq!(r.epochs.len(), 8);
}

#[test]
fn pruning_events_follow_training() {
    let d = synthetic(SyntheticKind::Blobs, 1, 6).unwrap();
    let config = TrainConfig {
        epochs: 5,
        growth_patience: 1,
        growth_min_delta: 1.0,
        growth_cap: 2,
        ..TrainConfig::default()
    };
    let m = model_for(&d, &config);
    let grown = train_with_growth(&m, library(), &d, &config).unwrap();
    let out = prune_trained(grown.clone(), &d, &config).unwrap();
    let r = &out.report;
    let last_growth = r.growth.last().map_or(0, |g| g.epoch);
    assert!(r.prune.iter().all(|p| p.epoch >= last_growth));
    let kept = r.prune.iter().filter(|p| p.kept).count();
    assert_eq!(out.model.params.len() + kept, grown.model.params.len());
    for p in r.prune.iter().filter(|p| p.kept) {
        assert!(p.value.abs() < config.prune_epsilon);
    }
    if let Some(stop) = r.prune.iter().find(|p| !p.kept) {
        let base = r.prune[0].accuracy_before;
        assert!(base - stop.accuracy_after > config.prune_max_drop);
    }
}

#[test]
fn pruning_zero_angle_costs_nothing() {
    let mut c = ParamCircuit::new(2);
    c.ry(0).ry(1).cx(0, 1).rz(1);
    let d = synthetic(SyntheticKind::Blobs, 1, 7).unwrap();
    let config = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let mut m = Model::new(line_ansatz(c), 2, 2).unwrap();
    m.params = vec![1.0, -0.7, 0.0];
    let out = train(&m, &d, &config).unwrap();
    let mut trained = out.clone();
    trained.model.params[2] = 0.0;
    let before = evaluate(&trained.model, &d.validation).unwrap();
    let pruned = prune_trained(trained, &d, &TrainConfig { prune_epsilon: 1e-6, ..config.clone() }).unwrap();
    assert_eq!(pruned.report.prune.len(), 1);
    assert_eq!(pruned.report.prune[0].accuracy_after, before);

    // The trailing RZ never moves the Z readout, so its angle stays at 0.
    assert_eq!(out.model.params[2], 0.0);
    let mut away = out.clone();
    away.model.params[2] = 0.3;
    assert!(away.model.params.iter().all(|p| p.abs() > 1e-12));
    let none = prune_trained(away, &d, &TrainConfig { prune_epsilon: 1e-12, ..config }).unwrap();
    assert!(none.report.prune.is_empty());
}

#[test]
fn report_csv_has_one_row_per_epoch() {
    let d = synthetic(SyntheticKind::Blobs, 1, 8).unwrap();
    let config = TrainConfig {
        epochs: 3,
        ..TrainConfig::default()
    };
    let out = train(&model_for(&d, &config), &d, &config).unwrap();
    let csv = out.report.epochs_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], EPOCH_CSV_HEADER);
    assert_eq!(lines.len(), 4);
    let json = serde_json::to_string(&out.report).unwrap();
    assert_eq!(serde_json::from_str::<TrainReport>(&json).unwrap(), out.report);
}

#[test]
fn coin_flip_predictor_is_near_half() {
    // Labels independent of the features: any fixed model scores ≈ 0.5.
    let samples: Vec<Sample> = (0..3000)
        .map(|i| Sample {
            features: vec![(i % 17) as f64, (i % 5) as f64],
            label: ((i as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 63) as usize,
        })
        .collect();
    let d = Dataset::from_samples("coin", samples, 2, 0).unwrap();
    let mut m = Model::new(initial_ansatz(), 2, 2).unwrap();
    m.params = TrainConfig::default().initial_params(m.params.len());
    let acc = evaluate(&m, &d.train).unwrap();
    assert!((acc - 0.5).abs() < 0.05, "{acc}");
    assert!(evaluate(&m, &[]).is_err());
}

#[test]
fn csv_loader_reads_feature_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vowel.csv");
    let mut f = std::fs::File::create(&path).unwrap();
    let header: Vec<String> = (0..10).map(|j| format!("f{j}")).collect();
    writeln!(f, "{},label", header.join(",")).unwrap();
    for i in 0..60 {
        let row: Vec<String> = (0..10).map(|j| ((i * 7 + j * 3) % 13).to_string()).collect();
        writeln!(f, "{},{}", row.join(","), i % 4).unwrap();
    }
    drop(f);
    let d = load_dataset(&DatasetSpec::parse(&format!("csv:{}", path.display())).unwrap(), 0).unwrap();
    assert_eq!((d.num_features, d.num_classes, d.len()), (10, 4, 60));

    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    assert!(load_csv(&path, 0).is_err());
    assert!(load_csv(dir.path().join("missing.csv"), 0).is_err());
}

#[test]
fn image_pipeline_pools_to_sixteen_features() {
    let d = load_image_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/mnist"), &[3, 6], 0).unwrap();
    assert_eq!((d.num_features, d.num_classes, d.len()), (16, 2, 1500));

    // A 28×28 image whose centre crop is split into four constant quadrants.
    let mut px = vec![0u8; 28 * 28];
    for y in 0..28 {
        for x in 0..28 {
            px[y * 28 + x] = match (y >= 14, x >= 14) {
                (false, false) => 0,
                (false, true) => 51,
                (true, false) => 102,
                (true, true) => 255,
            };
        }
    }
    let f = pool_image(&px, 28, 28).unwrap();
    assert_eq!(f.len(), 16);
    assert_eq!(f[0], 0.0);
    assert_eq!(f[3], 0.2);
    assert_eq!(f[12], 0.4);
    assert_eq!(f[15], 1.0);
    assert!(pool_image(&px[..100], 10, 10).is_err());
}
