mod common;

use common::*;
use qansatz::metrics::{haar_bin_masses, haar_fidelity_pdf, mw_entanglement, single_qubit_purities};
use qansatz::qasm::{export_qasm, parse_qasm};
use qansatz::qnn::{softmax, Model};
use qansatz::rng::stream_rng;
use qansatz::sim::{circuit_unitary, simulate, Statevector};
use qansatz::topology::{enumerate_subgraphs, route, CouplingGraph, PhysicalMapping};
use qansatz::ParamCircuit;
use rand::Rng;

fn random_params(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
}

#[test]
fn simulator_matches_kronecker_unitary() {
    let mut rng = stream_rng(11, 0);
    for n in 1..=4 {
        for _ in 0..10 {
            let mut c = random_line_circuit(n, 25, &mut rng);
            c.h(0).sx(n - 1);
            if n > 2 {
                c.swap(0, 2);
            }
            let p = random_params(c.num_params(), &mut rng);
            let oracle = dense_unitary(&c, &p);
            let got = circuit_unitary(&c, &p).unwrap();
            let diff = max_entry_diff(got.matrix(), &oracle);
            assert!(diff < 1e-10, "n={n}: {diff}");
        }
    }
}

#[test]
fn mw_matches_partial_trace() {
    let mut rng = stream_rng(12, 0);
    for n in 2..=5 {
        for _ in 0..10 {
            let c = random_line_circuit(n, 30, &mut rng);
            let p = random_params(c.num_params(), &mut rng);
            let s = simulate(&c, &p, &Statevector::zero(n)).unwrap();
            let v = to_dvector(s.amplitudes());
            let q = mw_entanglement(&s).unwrap();
            assert!((q - meyer_wallach(&v, n)).abs() < 1e-10);
            for (k, purity) in single_qubit_purities(&s).into_iter().enumerate() {
                let r = reduced_density(&v, n, k);
                assert!((purity - (&r * &r).trace().re).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn haar_masses_match_integrated_pdf() {
    for n in 1..=4 {
        let bins = 75;
        let masses = haar_bin_masses(n, bins);
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for (i, m) in masses.iter().enumerate() {
            // Composite Simpson over the bin.
            let (a, b) = (i as f64 / bins as f64, (i + 1) as f64 / bins as f64);
            let k = 200;
            let h = (b - a) / k as f64;
            let mut s = haar_fidelity_pdf(n, a) + haar_fidelity_pdf(n, b);
            for j in 1..k {
                s += haar_fidelity_pdf(n, a + j as f64 * h) * if j % 2 == 1 { 4.0 } else { 2.0 };
            }
            assert!((s * h / 3.0 - m).abs() < 1e-9, "n={n} bin {i}");
        }
    }
}

#[test]
fn subgraph_enumeration_matches_brute_force() {
    let graphs = [
        CouplingGraph::line(6),
        CouplingGraph::grid(3, 3),
        CouplingGraph::tshape5(),
        CouplingGraph::new(6, [(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap(),
    ];
    for g in &graphs {
        let edges: Vec<(usize, usize)> = g.edges().collect();
        for size in 1..=g.num_qubits() {
            let got: Vec<Vec<usize>> = enumerate_subgraphs(g, size).into_iter().map(|s| s.qubits).collect();
            assert_eq!(got, brute_force_subgraphs(g.num_qubits(), &edges, size), "size {size}");
        }
    }
}

#[test]
fn forward_matches_dense_pipeline() {
    let mut rng = stream_rng(13, 0);
    for (n, features, classes) in [(2, 2, 2), (3, 5, 3), (4, 16, 2), (4, 4, 4)] {
        let c = random_line_circuit(n, 20, &mut rng);
        let mut model = Model::new(line_ansatz(c), features, classes).unwrap();
        model.params = random_params(model.params.len(), &mut rng);
        let x: Vec<f64> = (0..features).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect();

        let enc = model.encoder.circuit();
        let angles = model.encoder.angles(&x).unwrap();
        let u = dense_unitary(model.circuit(), &model.params) * dense_unitary(&enc, &angles);
        let z = z_expectations(&(u * zero_state(n)), n);
        let scores: Vec<f64> = (0..classes)
            .map(|k| {
                let g: Vec<f64> = (k..n).step_by(classes).map(|q| z[q]).collect();
                g.iter().sum::<f64>() / g.len() as f64
            })
            .collect();
        let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
        let want: Vec<f64> = e.iter().map(|v| v / e.iter().sum::<f64>()).collect();

        let got = model.forward(&x).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!((softmax(&scores).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = stream_rng(14, 0);
    for _ in 0..20 {
        let n = rng.random_range(2..=4);
        let c = random_line_circuit(n, 12, &mut rng);
        let mut model = Model::new(line_ansatz(c), n, 2).unwrap();
        model.params = random_params(model.params.len(), &mut rng);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
        let label = rng.random_range(0..2);
        let s = model.encoder.encode(&x).unwrap();
        let loss = |p: &[f64]| -model.forward_encoded(&s, p).unwrap()[label].max(1e-12).ln();
        let (l0, grad) = model.sample_gradient(&s, label, &model.params).unwrap();
        assert!((l0 - loss(&model.params)).abs() < 1e-12);
        let h = 1e-4;
        for j in 0..grad.len() {
            let mut p = model.params.clone();
            p[j] += h;
            let up = loss(&p);
            p[j] -= 2.0 * h;
            let down = loss(&p);
            let fd = (up - down) / (2.0 * h);
            assert!((grad[j] - fd).abs() < 1e-4, "component {j}: {} vs {fd}", grad[j]);
        }
    }
}

/// Routing is correct iff the routed circuit equals the original followed by
/// the qubit permutation `initial mapping → final mapping`, on inputs whose
/// unused device qubits are |0⟩.
#[test]
fn routed_circuit_implements_original() {
    let mut rng = stream_rng(15, 0);
    let devices = [CouplingGraph::tshape5(), CouplingGraph::line(5), CouplingGraph::grid(2, 3)];
    for device in &devices {
        let d = device.num_qubits();
        for _ in 0..8 {
            let n = 4;
            let mut c = ParamCircuit::new(n);
            for _ in 0..15 {
                if rng.random_bool(0.5) {
                    let a = rng.random_range(0..n);
                    let b = (a + rng.random_range(1..n)) % n;
                    c.cx(a, b);
                } else {
                    c.ry(rng.random_range(0..n));
                }
            }
            let p = random_params(c.num_params(), &mut rng);
            let mut phys: Vec<usize> = (0..d).collect();
            for i in (1..d).rev() {
                phys.swap(i, rng.random_range(0..=i));
            }
            let mapping = PhysicalMapping::new(phys[..n].to_vec(), d).unwrap();
            let routed = route(&c, &mapping, device).unwrap();
            let fin = &routed.final_mapping;
            let placed = c.relabel(d, mapping.as_slice()).unwrap();
            let u_routed = dense_unitary(&routed.circuit, &p);
            let u_placed = dense_unitary(&placed, &p);
            for x in 0..1usize << n {
                let mut input = 0;
                for l in 0..n {
                    input |= (x >> l & 1) << mapping.physical(l);
                }
                let a = u_routed.column(input);
                let b = u_placed.column(input);
                for y in 0..1usize << n {
                    let (mut from, mut to) = (0, 0);
                    for l in 0..n {
                        from |= (y >> l & 1) << mapping.physical(l);
                        to |= (y >> l & 1) << fin.physical(l);
                    }
                    assert!((a[to] - b[from]).norm() < 1e-10);
                }
            }
        }
    }
}

#[test]
fn qasm_round_trip_preserves_unitary() {
    let mut rng = stream_rng(16, 0);
    for _ in 0..10 {
        let mut c = random_line_circuit(3, 20, &mut rng);
        c.h(1).sx(2).swap(0, 2);
        let p = random_params(c.num_params(), &mut rng);
        let text = export_qasm(&c, &p).unwrap();
        let (back, angles) = parse_qasm(&text).unwrap();
        assert_eq!(back.len(), c.len());
        assert_eq!(angles, p);
        assert!(max_entry_diff(&dense_unitary(&back, &angles), &dense_unitary(&c, &p)) < 1e-12);
    }
}
