//! Training harness behaviour on synthetic data.

use vmp_core::{
    generate_synthetic, lambda_sweep, train, Dataset, Pipeline, SyntheticConfig, TrainConfig,
};

fn dataset(seed: u64, noise: f64, camera: f64) -> Dataset {
    generate_synthetic(&SyntheticConfig {
        seed,
        noise,
        camera,
        ..SyntheticConfig::default()
    })
    .unwrap()
}

fn config(seed: u64, lambda: f64) -> TrainConfig {
    TrainConfig {
        seed,
        lambda,
        ..TrainConfig::default()
    }
}

#[test]
fn static_camera_task_is_learned() {
    let report = train(&dataset(0, 0.0, 0.0), &config(0, 0.0)).unwrap();
    let last = report.last();
    assert!(last.train_acc >= 0.95, "train accuracy {}", last.train_acc);
    assert!(last.val_acc >= 0.9, "validation accuracy {}", last.val_acc);
    assert_eq!(report.records.len(), TrainConfig::default().epochs + 1);
}

#[test]
fn training_is_deterministic() {
    let data = dataset(3, 0.05, 2.0);
    let cfg = TrainConfig {
        epochs: 5,
        ..config(3, 0.5)
    };
    let a = train(&data, &cfg).unwrap();
    let b = train(&data, &cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a, b);
}

#[test]
fn slope_and_shift_stay_confined() {
    let data = dataset(1, 0.05, 2.0);
    for lambda in [0.0, 10.0] {
        let report = train(&data, &config(1, lambda)).unwrap();
        for r in &report.records {
            assert!(
                (100.0 / 11.0 - 1e-9..=50.0 + 1e-9).contains(&r.slope),
                "slope {} at epoch {}",
                r.slope,
                r.epoch
            );
            assert!(
                r.shift.abs() <= 0.6,
                "shift {} at epoch {}",
                r.shift,
                r.epoch
            );
        }
    }
}

#[test]
fn loss_descends() {
    let report = train(&dataset(2, 0.05, 2.0), &config(2, 0.0)).unwrap();
    let first = report.records[0].task_loss;
    let last = report.last();
    assert!(
        (first - 4f64.ln()).abs() < 1e-12,
        "zero classifier starts at ln 4, got {first}"
    );
    assert!(
        last.task_loss < first - 0.1,
        "loss {first} -> {}",
        last.task_loss
    );
    assert!(last.total_loss <= report.records[1].total_loss);
    assert!(report.records.iter().all(|r| r.total_loss.is_finite()));
}

#[test]
fn strong_penalty_lowers_variation() {
    let data = dataset(4, 0.05, 2.0);
    let free = train(&data, &config(4, 0.0)).unwrap();
    let strong = train(&data, &config(4, 10.0)).unwrap();
    assert!(
        strong.last().variation < free.last().variation,
        "{} vs {}",
        strong.last().variation,
        free.last().variation
    );
}

#[test]
fn sweep_variation_falls_with_lambda() {
    let data = dataset(0, 0.05, 2.0);
    let lambdas = [0.0, 0.5, 2.5, 5.0];
    let sweep = lambda_sweep(&data, &config(0, 0.0), &lambdas).unwrap();
    let v: Vec<f64> = sweep.runs.iter().map(|r| r.last().variation).collect();
    assert!(v.windows(2).all(|w| w[1] <= w[0]), "{v:?}");
    let a: Vec<f64> = sweep.runs.iter().map(|r| r.last().slope).collect();
    assert!(a[3] <= a[0], "{a:?}");
    let csv = sweep.summary_csv();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("lambda,a,b,variation,train_acc,val_acc\n"));
}

#[test]
fn raw_pipeline_keeps_initial_pn() {
    let report = train(
        &dataset(0, 0.05, 2.0),
        &TrainConfig {
            pipeline: Pipeline::RawFrames,
            epochs: 3,
            ..config(0, 0.0)
        },
    )
    .unwrap();
    let first = report.records[0];
    assert!(report
        .records
        .iter()
        .all(|r| r.slope == first.slope && r.shift == first.shift));
    assert!(report.records.iter().all(|r| r.variation == 0.0));
}
