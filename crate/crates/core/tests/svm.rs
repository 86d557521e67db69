mod common;

use chansel::chanfeat::{FeatureKind, SelectionDescriptor};
use chansel::imagecore::Channel;
use chansel::mlselect::svm::{primal_objective, train_binary, Gram};
use chansel::mlselect::{predict, select_from_scores, train_ova_svm, ChannelLabelVector, LabeledCorpusEntry, SelectorModel};
use common::*;
use proptest::prelude::*;
use rand::Rng;

fn rows(x: &[Vec<f64>]) -> Vec<&[f64]> {
    x.iter().map(|v| v.as_slice()).collect()
}

#[test]
fn primal_matches_dual_oracle() {
    for (k, (x, y, c)) in svm_fixtures().into_iter().enumerate() {
        let r = rows(&x);
        let m = train_binary(&Gram::new(&r), &y, c);
        let primal = primal_objective(&m.weights, m.bias, &r, &y, c);
        let opt = svm_dual_optimum(&x, &y, c);
        assert!((primal - opt).abs() <= 1e-3 * opt.abs(), "fixture {k}: {primal} vs {opt}");
    }
}

#[test]
fn slack_recomputation_reproduces_objective() {
    for (x, y, c) in svm_fixtures() {
        let r = rows(&x);
        let m = train_binary(&Gram::new(&r), &y, c);
        let w2: f64 = m.weights.iter().map(|w| w * w).sum();
        let slack: f64 = r
            .iter()
            .zip(&y)
            .map(|(xi, yi)| {
                let f: f64 = xi.iter().zip(&m.weights).map(|(a, b)| a * b).sum::<f64>() + m.bias;
                (1.0 - yi * f).max(0.0)
            })
            .sum();
        let direct = 0.5 * w2 + c * slack;
        let reported = primal_objective(&m.weights, m.bias, &r, &y, c);
        assert!((direct - reported).abs() <= 1e-6 * reported.abs().max(1.0));
    }
}

fn separable_set(seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut r = rng(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..30 {
        let label = if i % 2 == 0 { 1.0 } else { -1.0 };
        let a: f64 = r.random_range(0.2..2.0);
        x.push(vec![label * a, r.random_range(-3.0..3.0)]);
        y.push(label);
    }
    (x, y)
}

fn training_accuracy(x: &[Vec<f64>], y: &[f64], c: f64) -> f64 {
    let r = rows(x);
    let m = train_binary(&Gram::new(&r), y, c);
    let correct = r.iter().zip(y).filter(|(xi, yi)| m.decision(xi) * **yi > 0.0).count();
    correct as f64 / y.len() as f64
}

#[test]
fn larger_c_never_lowers_training_accuracy_on_separable_data() {
    for seed in 0..5 {
        let (x, y) = separable_set(seed);
        let mut last = 0.0;
        for c in [0.01, 0.1, 1.0, 10.0, 100.0] {
            let acc = training_accuracy(&x, &y, c);
            assert!(acc >= last, "seed {seed}, C {c}: {acc} < {last}");
            last = acc;
        }
        assert_eq!(last, 1.0);
    }
}

fn random_entries(seed: u64, n: usize) -> Vec<LabeledCorpusEntry> {
    let mut r = rng(seed);
    let kind = FeatureKind::Wavelet;
    (0..n)
        .map(|i| {
            let labels = random_labels(&mut r);
            let mut values: Vec<f64> = (0..kind.descriptor_len()).map(|_| r.random_range(0.0..1.0)).collect();
            // Make the positive channel blocks brighter so classes are learnable.
            for (k, c) in Channel::SELECTABLE.iter().enumerate() {
                if labels.positives().contains(c) {
                    let len = kind.per_channel_len();
                    values[k * len..(k + 1) * len].iter_mut().for_each(|v| *v += 1.0);
                }
            }
            let n = values.iter().map(|v| v * v).sum::<f64>().sqrt();
            values.iter_mut().for_each(|v| *v /= n);
            LabeledCorpusEntry {
                id: format!("{i}"),
                descriptor: SelectionDescriptor {
                    kind,
                    values,
                    per_channel_len: kind.per_channel_len(),
                },
                labels,
            }
        })
        .collect()
}

#[test]
fn selector_round_trips_bit_stably() {
    let data = random_entries(3, 40);
    let model = train_ova_svm(&data, 1.0).unwrap();
    assert_eq!(model.classifiers.len(), 8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("selector.model");
    model.save(&path).unwrap();
    let back = SelectorModel::load(&path).unwrap();
    assert_eq!(back, model);
    let again = dir.path().join("again.model");
    back.save(&again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    for e in &data {
        assert_eq!(predict(&model, &e.descriptor).unwrap(), predict(&back, &e.descriptor).unwrap());
    }
}

#[test]
fn selector_rejects_wrong_dimension() {
    let model = train_ova_svm(&random_entries(4, 20), 1.0).unwrap();
    let d = SelectionDescriptor {
        kind: FeatureKind::Wavelet,
        values: vec![0.0; 5],
        per_channel_len: 24,
    };
    assert!(predict(&model, &d).is_err());
}

#[test]
fn learns_separable_labels() {
    let data = random_entries(5, 80);
    let model = train_ova_svm(&data, 10.0).unwrap();
    let truth: Vec<ChannelLabelVector> = data.iter().map(|e| e.labels).collect();
    let pred: Vec<ChannelLabelVector> = data.iter().map(|e| predict(&model, &e.descriptor).unwrap().labels).collect();
    let m = chansel::evalkit::multilabel_metrics(&truth, &pred).unwrap();
    assert!(m.accuracy > 0.9, "{m:?}");
}

proptest! {
    #[test]
    fn selection_ignores_positive_scaling(scores in proptest::array::uniform8(-5.0f64..5.0), k in 1e-3f64..1e3) {
        let scaled = scores.map(|s| s * k);
        prop_assert_eq!(select_from_scores(&scores), select_from_scores(&scaled));
    }

    #[test]
    fn prediction_is_repeatable(seed in 0u64..1000) {
        let data = random_entries(6, 16);
        let model = train_ova_svm(&data, 1.0).unwrap();
        let probe = &random_entries(seed, 1)[0].descriptor;
        let a = predict(&model, probe).unwrap();
        let b = predict(&model, probe).unwrap();
        prop_assert_eq!(a.scores.map(f64::to_bits), b.scores.map(f64::to_bits));
        prop_assert_eq!(a.labels, b.labels);
    }
}
