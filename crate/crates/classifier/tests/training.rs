mod common;

use common::{separable, small_config};
use mgtd_classifier::{train, Error, ModelKind, TrainConfig};
use mgtd_core::features::FeatureColumn;
use mgtd_core::features::FeatureSequence;
use mgtd_core::Label;

fn overfit_config() -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        learning_rate: 3e-3,
        epochs: 100,
        weight_decay: 0.0,
        seed: 1,
        early_stop_patience: None,
    }
}

#[test]
fn every_kind_overfits_separable_data() {
    let data = separable(64, 20, 3);
    let val = separable(8, 20, 4);
    for kind in ModelKind::ALL {
        let det = train(kind, &small_config(), &data, &val, &overfit_config()).unwrap();
        let hist = &det.history;
        assert_eq!(hist.len(), 100);
        let last = hist.last().unwrap();
        println!("{kind}: final loss {:.4}, val F1 {:.1}", last.train_loss, last.val_f1);
        assert!(hist.iter().any(|r| r.train_loss < 0.1), "{kind} never reached loss 0.1");
        assert_eq!(last.val_f1, 100.0);
    }
}

#[test]
fn same_seed_gives_same_history() {
    let data = separable(32, 12, 5);
    let val = separable(8, 12, 6);
    let cfg = TrainConfig {
        epochs: 5,
        ..overfit_config()
    };
    let mut enc = small_config();
    enc.dropout = 0.3;
    enc.head_dropout = 0.5;
    for kind in ModelKind::ALL {
        let a = train(kind, &enc, &data, &val, &cfg).unwrap();
        let b = train(kind, &enc, &data, &val, &cfg).unwrap();
        for (x, y) in a.history.iter().zip(&b.history) {
            assert!((x.train_loss - y.train_loss).abs() <= 1e-6);
            assert_eq!(x.val_f1, y.val_f1);
        }
        assert_eq!(a.logits(&val).unwrap(), b.logits(&val).unwrap());
    }
}

#[test]
fn early_stopping_truncates_history() {
    let data = separable(32, 12, 5);
    let val = separable(8, 12, 6);
    let cfg = TrainConfig {
        epochs: 50,
        early_stop_patience: Some(2),
        ..overfit_config()
    };
    let det = train(ModelKind::Recurrent, &small_config(), &data, &val, &cfg).unwrap();
    assert!(det.history.len() < 50);
}

#[test]
fn rejects_bad_training_sets() {
    let data = separable(16, 10, 1);
    let val = separable(4, 10, 2);
    let cfg = TrainConfig {
        epochs: 1,
        ..overfit_config()
    };
    let enc = small_config();
    let kind = ModelKind::AttentionEncoder;

    let err = train(kind, &enc, &data, &[], &cfg).unwrap_err();
    assert!(matches!(err, Error::EmptySet("validation")));

    let machines: Vec<_> = data.iter().filter(|s| s.label == Label::Machine).cloned().collect();
    assert!(matches!(train(kind, &enc, &machines, &val, &cfg), Err(Error::SingleClass)));

    let mut mixed = data.clone();
    let short = FeatureSequence::new("odd", Label::Human, "test", vec![FeatureColumn::Probability], 10, vec![0.5; 10]).unwrap();
    mixed.push(short);
    assert!(matches!(train(kind, &enc, &mixed, &val, &cfg), Err(Error::Shape(_))));

    let bad = TrainConfig {
        batch_size: 0,
        ..cfg
    };
    assert!(matches!(train(kind, &enc, &data, &val, &bad), Err(Error::Config(_))));
}
