//! SGD training of `(m, n)` jointly with the pooled classifier, per-epoch
//! logging and penalty-weight sweeps.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::classifier::{LinearClassifier, PoolLayout};
use crate::error::{Error, Result};
use crate::model::{batch_pass, LabeledClip, Pipeline, PreparedClip};
use crate::pn::{PnHyper, PnParams};
use crate::synthetic::Dataset;

pub const CSV_HEADER: &str = "epoch,a,b,task_loss,variation,total_loss,train_acc,val_acc";
pub const SWEEP_HEADER: &str = "lambda,a,b,variation,train_acc,val_acc";

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub lr: f64,
    pub momentum: f64,
    /// Applied to classifier weights only.
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lambda: f64,
    pub init_mean: f64,
    pub init_std: f64,
    pub seed: u64,
    /// Pooling grid side of the classifier.
    pub grid: usize,
    pub val_fraction: f64,
    pub pipeline: Pipeline,
    pub hyper: PnHyper,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 0.005,
            momentum: 0.9,
            weight_decay: 1e-4,
            epochs: 40,
            batch_size: 8,
            lambda: 0.0,
            init_mean: 1e-5,
            init_std: 1.0,
            seed: 0,
            grid: 4,
            val_fraction: 0.25,
            pipeline: Pipeline::MotionPrompt,
            hyper: PnHyper::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Config(format!(
                "momentum must lie in [0, 1), got {}",
                self.momentum
            )));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(Error::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        if !(0.0..=10.0).contains(&self.lambda) {
            return Err(Error::Config(format!(
                "lambda must lie in [0, 10], got {}",
                self.lambda
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.init_std >= 0.0 && self.init_std.is_finite() && self.init_mean.is_finite()) {
            return Err(Error::Config("invalid initialization distribution".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::Config(format!(
                "val_fraction must lie in (0, 1), got {}",
                self.val_fraction
            )));
        }
        self.hyper.validate()
    }
}

/// Metrics logged after each epoch; epoch 0 is the initial state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub slope: f64,
    pub shift: f64,
    pub task_loss: f64,
    pub variation: f64,
    pub total_loss: f64,
    pub train_acc: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub lambda: f64,
    pub records: Vec<EpochRecord>,
    pub params: PnParams,
    pub classifier: LinearClassifier,
}

impl TrainReport {
    pub fn last(&self) -> &EpochRecord {
        self.records
            .last()
            .expect("report always holds the initial record")
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.epoch,
                r.slope,
                r.shift,
                r.task_loss,
                r.variation,
                r.total_loss,
                r.train_acc,
                r.val_acc
            );
        }
        out
    }
}

/// Momentum SGD over one flat parameter group.
#[derive(Debug, Clone)]
struct Momentum {
    velocity: Vec<f64>,
}

impl Momentum {
    fn new(len: usize) -> Self {
        Self {
            velocity: vec![0.0; len],
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig, decay: f64) {
        for ((p, &g), v) in params.iter_mut().zip(grads).zip(&mut self.velocity) {
            *v = cfg.momentum * *v + g + decay * *p;
            *p -= cfg.lr * *v;
        }
    }
}

fn prepare_refs(clips: &[&LabeledClip]) -> Result<Vec<PreparedClip>> {
    let owned: Vec<LabeledClip> = clips.iter().map(|c| (*c).clone()).collect();
    crate::model::prepare(&owned)
}

fn layout_of(clips: &[PreparedClip], grid: usize) -> Result<PoolLayout> {
    let first = clips.first().ok_or(Error::Empty("dataset"))?;
    if let Some(c) = clips.iter().find(|c| {
        c.frames.height() != first.frames.height() || c.frames.width() != first.frames.width()
    }) {
        return Err(Error::ShapeMismatch(format!(
            "clips of {}x{} and {}x{}",
            first.frames.height(),
            first.frames.width(),
            c.frames.height(),
            c.frames.width()
        )));
    }
    PoolLayout::new(first.frames.height(), first.frames.width(), grid)
}

/// Fraction of clips whose top-scoring class is the label.
pub fn evaluate(
    params: &PnParams,
    classifier: &LinearClassifier,
    clips: &[LabeledClip],
    pipeline: Pipeline,
) -> Result<f64> {
    if clips.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let prepared = crate::model::prepare(clips)?;
    accuracy(&prepared, params, classifier, pipeline)
}

fn accuracy(
    clips: &[PreparedClip],
    params: &PnParams,
    classifier: &LinearClassifier,
    pipeline: Pipeline,
) -> Result<f64> {
    let layout = layout_of(clips, classifier.grid)?;
    let refs: Vec<&PreparedClip> = clips.iter().collect();
    let pass = batch_pass(&refs, params, classifier, &layout, 0.0, pipeline, false)?;
    Ok(pass.correct as f64 / clips.len() as f64)
}

/// Trains on the stratified training split and reports per-epoch metrics.
pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let (train_clips, val_clips) = dataset.split(config.val_fraction);
    if train_clips.is_empty() || val_clips.is_empty() {
        return Err(Error::Config(format!(
            "split of {} clips at val_fraction {} leaves an empty side",
            dataset.len(),
            config.val_fraction
        )));
    }
    let train_set = prepare_refs(&train_clips)?;
    let val_set = prepare_refs(&val_clips)?;
    let layout = layout_of(&train_set, config.grid)?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let init =
        Normal::new(config.init_mean, config.init_std).map_err(|e| Error::Config(e.to_string()))?;
    let mut pn = [init.sample(&mut rng), init.sample(&mut rng)];
    let mut classifier = LinearClassifier::zeros(dataset.classes, config.grid)?;
    let learn_pn = config.pipeline == Pipeline::MotionPrompt;

    let mut pn_opt = Momentum::new(2);
    let mut w_opt = Momentum::new(classifier.weights.len());
    let mut b_opt = Momentum::new(classifier.bias.len());

    let params_of = |pn: &[f64; 2]| PnParams::new(pn[0], pn[1], config.hyper);
    let all: Vec<&PreparedClip> = train_set.iter().collect();

    let record = |epoch: usize, pn: &[f64; 2], clf: &LinearClassifier| -> Result<EpochRecord> {
        let params = params_of(pn);
        let full = batch_pass(
            &all,
            &params,
            clf,
            &layout,
            config.lambda,
            config.pipeline,
            false,
        )?;
        Ok(EpochRecord {
            epoch,
            slope: params.slope(),
            shift: params.shift(),
            task_loss: full.loss.task_loss,
            variation: full.loss.variation,
            total_loss: full.loss.total,
            train_acc: full.correct as f64 / all.len() as f64,
            val_acc: accuracy(&val_set, &params, clf, config.pipeline)?,
        })
    };

    let mut records = vec![record(0, &pn, &classifier)?];
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        for (step, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&PreparedClip> = chunk.iter().map(|&i| &train_set[i]).collect();
            let params = params_of(&pn);
            let grad = batch_pass(
                &batch,
                &params,
                &classifier,
                &layout,
                config.lambda,
                config.pipeline,
                true,
            )?;
            let finite = grad.loss.total.is_finite()
                && grad.d_m.is_finite()
                && grad.d_n.is_finite()
                && grad.d_weights.iter().all(|g| g.is_finite());
            if !finite {
                return Err(Error::Diverged {
                    epoch,
                    step,
                    loss: grad.loss.total,
                    m: pn[0],
                    n: pn[1],
                    slope: params.slope(),
                    shift: params.shift(),
                    weight_norm: classifier.weight_norm(),
                });
            }
            if learn_pn {
                pn_opt.step(&mut pn, &[grad.d_m, grad.d_n], config, 0.0);
            }
            w_opt.step(
                &mut classifier.weights,
                &grad.d_weights,
                config,
                config.weight_decay,
            );
            b_opt.step(&mut classifier.bias, &grad.d_bias, config, 0.0);
        }
        let rec = record(epoch, &pn, &classifier)?;
        if !rec.total_loss.is_finite() {
            return Err(Error::Diverged {
                epoch,
                step: usize::MAX,
                loss: rec.total_loss,
                m: pn[0],
                n: pn[1],
                slope: rec.slope,
                shift: rec.shift,
                weight_norm: classifier.weight_norm(),
            });
        }
        records.push(rec);
    }

    Ok(TrainReport {
        lambda: config.lambda,
        records,
        params: params_of(&pn),
        classifier,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub runs: Vec<TrainReport>,
}

impl SweepReport {
    pub fn summary_csv(&self) -> String {
        let mut out = String::from(SWEEP_HEADER);
        out.push('\n');
        for run in &self.runs {
            let r = run.last();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                run.lambda, r.slope, r.shift, r.variation, r.train_acc, r.val_acc
            );
        }
        out
    }
}

/// One training run per penalty weight, same dataset and seed.
pub fn lambda_sweep(
    dataset: &Dataset,
    config: &TrainConfig,
    lambdas: &[f64],
) -> Result<SweepReport> {
    if lambdas.is_empty() {
        return Err(Error::Empty("lambda list"));
    }
    let runs = lambdas
        .iter()
        .map(|&lambda| {
            train(
                dataset,
                &TrainConfig {
                    lambda,
                    ..config.clone()
                },
            )
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport { runs })
}
