mod common;

use common::{pair, problem, sample};
use qapnet::autodiff::Tape;
use qapnet::classic::discretize;
use qapnet::ngm::{
    check_sample_grads, forward, forward_ngm, forward_ngm_plus, sinkhorn_head, train, Adam, NetConfig, NetParams, OptimConfig, Problem, Variant,
};
use qapnet::numerics::{DenseMatrix, SparseTensor3};

fn grad_check(variant: Variant, seed: u64) {
    let inst = pair(4, seed, 0.05, variant == Variant::Nhgm);
    let cfg = NetConfig::for_variant(variant);
    let params = NetParams::<f64>::init(&cfg, seed).unwrap();
    let report = check_sample_grads(&sample(&inst), &params, &cfg, 1e-5).unwrap();
    assert!(report.max_rel_err < 1e-4, "{variant}: {report:?}");
}

#[test]
fn ngm_gradients_match_finite_differences() {
    grad_check(Variant::Ngm, 1);
}

#[test]
fn ngm_plus_gradients_match_finite_differences() {
    grad_check(Variant::NgmPlus, 2);
}

#[test]
fn nhgm_gradients_match_finite_differences() {
    grad_check(Variant::Nhgm, 3);
}

#[test]
fn ngm_v_gradients_match_finite_differences() {
    grad_check(Variant::NgmV, 4);
}

#[test]
fn layer_shapes_with_sinkhorn_embedding() {
    let inst = pair(3, 0, 0.0, false);
    let cfg = NetConfig::default();
    let fwd = forward(&problem(&inst), &NetParams::init(&cfg, 0).unwrap(), &cfg).unwrap();
    for (&m, &v) in fwd.trace.messages.iter().zip(&fwd.trace.embeddings) {
        assert_eq!(fwd.tape.shape(m), (9, 16));
        assert_eq!(fwd.tape.shape(v), (9, 17));
    }
    assert_eq!(fwd.soft().shape(), (3, 3));
}

#[test]
fn output_rows_are_stochastic() {
    for (seed, outliers) in [(0, false), (1, true)] {
        let inst = if outliers {
            let cfg = qapnet::bench::SynthConfig {
                num_sets: 1,
                train_per_set: 1,
                test_per_set: 0,
                inliers: 5,
                outliers: 2,
                sigma2: common::TEST_SIGMA2,
                seed,
                ..Default::default()
            };
            qapnet::bench::gen_synthetic(&cfg).unwrap().train[0].pair(0, 1, &cfg).unwrap()
        } else {
            pair(6, seed, 0.05, false)
        };
        let cfg = NetConfig::default();
        let fwd = forward(&problem(&inst), &NetParams::init(&cfg, seed).unwrap(), &cfg).unwrap();
        for s in fwd.soft().row_sums() {
            assert!((s - 1.0).abs() < 1e-6, "{s}");
        }
    }
}

#[test]
fn widely_spread_scores_keep_every_row() {
    // row 0 sits 40 below the rest: exp(-800) underflows without the floor
    let cfg = NetConfig::default();
    let mut tape = Tape::<f64>::new();
    let scores = DenseMatrix::from_fn(9, 1, |k, _| if k % 3 == 0 { 0.0 } else { 40.0 + k as f64 });
    let s = tape.leaf(scores);
    let out = sinkhorn_head(&mut tape, s, 3, 3, &cfg).unwrap();
    for r in tape.value(out).row_sums() {
        assert!((r - 1.0).abs() < 1e-9, "{r}");
    }
}

#[test]
fn constant_scores_give_uniform_rows() {
    let inst = pair(4, 0, 0.05, false);
    let cfg = NetConfig::default();
    let mut params = NetParams::<f64>::init(&cfg, 0).unwrap();
    let names = params.names().to_vec();
    for (name, m) in names.iter().zip(params.values_mut()) {
        let fill = if name == "f_c.bias" { 0.3 } else { 0.0 };
        m.data_mut().iter_mut().for_each(|v| *v = fill);
    }
    let fwd = forward(&problem(&inst), &params, &cfg).unwrap();
    for v in fwd.soft().data() {
        assert!((v - 0.25).abs() < 1e-12);
    }
}

#[test]
fn ngm_v_matches_ngm_in_the_first_layer() {
    let inst = pair(5, 3, 0.05, false);
    let p = problem(&inst);
    let ngm = NetConfig::for_variant(Variant::Ngm);
    let ngm_v = NetConfig::for_variant(Variant::NgmV);
    let a = forward(&p, &NetParams::init(&ngm, 7).unwrap(), &ngm).unwrap();
    let b = forward(&p, &NetParams::init(&ngm_v, 7).unwrap(), &ngm_v).unwrap();
    assert_eq!(a.tape.value(a.trace.messages[0]), b.tape.value(b.trace.messages[0]));
    assert_ne!(a.tape.value(a.trace.messages[1]), b.tape.value(b.trace.messages[1]));
}

#[test]
fn nhgm_without_third_order_weight_is_ngm() {
    let inst = pair(5, 4, 0.05, true);
    let p = problem(&inst);
    let ngm = NetConfig::default();
    let nhgm = NetConfig {
        hyper: true,
        lambda3: 0.0,
        ..NetConfig::default()
    };
    let a = forward_ngm(&p, &NetParams::init(&ngm, 5).unwrap(), &ngm).unwrap();
    let b = forward(&p, &NetParams::init(&nhgm, 5).unwrap(), &nhgm).unwrap();
    assert_eq!(a.soft(), b.soft());
}

#[test]
fn nhgm_with_empty_tensor_is_ngm() {
    let inst = pair(4, 5, 0.05, false);
    let base = Problem::new(&inst.association().unwrap()).unwrap();
    let hyper = base.clone().with_hyper(&SparseTensor3::empty(16)).unwrap();
    let ngm = NetConfig::default();
    let nhgm = NetConfig::for_variant(Variant::Nhgm);
    let a = forward_ngm(&base, &NetParams::init(&ngm, 2).unwrap(), &ngm).unwrap();
    let b = forward(&hyper, &NetParams::init(&nhgm, 2).unwrap(), &nhgm).unwrap();
    assert_eq!(a.soft(), b.soft());
}

#[test]
fn hyper_contraction_matches_triple_loop() {
    let inst = pair(4, 6, 0.05, true);
    let h = inst.tensor.as_ref().unwrap();
    let p = problem(&inst);
    let n = 16;
    let x = DenseMatrix::from_fn(n, 3, |i, c| ((i * 7 + c * 3) % 11) as f64 / 11.0 - 0.4);
    let mut tape = Tape::new();
    let xv = tape.leaf(x.clone());
    let y = tape.hyper_contract(p.hyper.clone().unwrap(), xv).unwrap();
    let mut count = vec![0usize; n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if h.get([i, j, k]) > 0.0 {
                    count[i] += 1;
                }
            }
        }
    }
    for i in 0..n {
        for c in 0..3 {
            let mut acc = 0.0;
            for j in 0..n {
                for k in 0..n {
                    let w = h.get([i, j, k]);
                    if w > 0.0 {
                        acc += w / count[i] as f64 * x[(j, c)] * x[(k, c)];
                    }
                }
            }
            assert!((tape.value(y)[(i, c)] - acc).abs() < 1e-10);
        }
    }
}

#[test]
fn edge_features_stay_on_the_affinity_support() {
    let inst = pair(5, 8, 0.05, false);
    let p = problem(&inst);
    let cfg = NetConfig::for_variant(Variant::NgmPlus);
    let fwd = forward_ngm_plus(&p, &NetParams::init(&cfg, 1).unwrap(), &cfg).unwrap();
    let k = inst.affinity();
    for (e, (&d, &s)) in p.edges.dst.iter().zip(&p.edges.src).enumerate() {
        assert!(k.get(d, s) != 0.0, "edge {e} off the support");
    }
    for &w in &fwd.trace.edge_features {
        assert_eq!(fwd.tape.shape(w), (p.edges.len(), cfg.channels));
    }
}

#[test]
fn single_pair_overfits() {
    let inst = pair(10, 9, 0.0, false);
    let cfg = NetConfig::default();
    let opt = OptimConfig {
        epochs: 200,
        seed: 3,
        ..OptimConfig::default()
    };
    let out = train(&[sample(&inst)], &cfg, &opt).unwrap();
    let fwd = forward(&problem(&inst), &out.params, &cfg).unwrap();
    assert_eq!(discretize(fwd.soft()).unwrap(), inst.gt, "{:?}", out.log.last());
}

#[test]
fn zero_learning_rate_keeps_parameters() {
    let inst = pair(4, 1, 0.05, false);
    let cfg = NetConfig::default();
    let params = NetParams::<f64>::init(&cfg, 1).unwrap();
    let opt = OptimConfig {
        lr: 0.0,
        epochs: 3,
        ..OptimConfig::default()
    };
    let adam = Adam::new(opt, params.values().iter().map(|m| m.shape()));
    let out = qapnet::ngm::train_from(&[sample(&inst)], &cfg, params.clone(), adam, |_| {}).unwrap();
    assert_eq!(out.params.values(), params.values());
}

#[test]
fn training_is_deterministic() {
    let data: Vec<_> = (0..4).map(|s| sample(&pair(5, s, 0.05, false))).collect();
    let cfg = NetConfig::default();
    let opt = OptimConfig {
        epochs: 3,
        seed: 11,
        ..OptimConfig::default()
    };
    let a = train(&data, &cfg, &opt).unwrap();
    let b = train(&data, &cfg, &opt).unwrap();
    assert_eq!(a.log, b.log);
    assert_eq!(a.params.values(), b.params.values());
}

#[test]
fn single_precision_forward() {
    let inst = pair(4, 2, 0.05, false);
    let cfg = NetConfig::default();
    let p32: Problem<f32> = problem(&inst).cast();
    let fwd = forward(&p32, &NetParams::<f32>::init(&cfg, 0).unwrap(), &cfg).unwrap();
    let f64_out = forward(&problem(&inst), &NetParams::<f64>::init(&cfg, 0).unwrap(), &cfg).unwrap();
    assert!(fwd.soft().cast::<f64>().max_abs_diff(f64_out.soft()) < 1e-3);
}
