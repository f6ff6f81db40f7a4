//! Analytic derivatives of the learnable PN and of the regularized loss.
//!
//! With `g = a(m) (d - b(n))` and `s = sigmoid(g)`:
//!
//! ```text
//! df/dm     = s(1-s) * a'(m) * (d - b(n))
//! a'(m)     = -alpha beta sgn(tanh m) (1 - tanh^2 m) / (beta |tanh m| + eps)^2
//! df/dn     = s(1-s) * (-a(m) gamma (1 - tanh^2 n))
//! df/dalpha = s(1-s) * (d - gamma tanh n) / (beta |tanh m| + eps)
//! df/dbeta  = s(1-s) * (-alpha (d - gamma tanh n) |tanh m|) / (beta |tanh m| + eps)^2
//! df/dgamma = s(1-s) * (-alpha tanh n) / (beta |tanh m| + eps)
//! ```
//!
//! `df/dm` carries both the leading minus and `sgn(tanh m)` from `a'(m)`.
//! Without them the expression has the wrong sign for every `m > 0`.
//! The subgradient at the kink `m = 0` is taken as 0.

use std::fmt;
use std::str::FromStr;

use crate::classifier::{LinearClassifier, PoolLayout};
use crate::error::{Error, Result};
use crate::model::{
    batch_pass, prepare, shift_derivative, slope_derivative, LabeledClip, Pipeline, PreparedClip,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pn::{pn_exponent, sigmoid_derivative, PnHyper, PnParams};
use crate::regularization::LossBreakdown;
use crate::synthetic::{generate_synthetic, SyntheticConfig};

/// Derivative of the PN output at one input value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PnGradients {
    pub d_m: f64,
    pub d_n: f64,
    pub d_alpha: Option<f64>,
    pub d_beta: Option<f64>,
    pub d_gamma: Option<f64>,
}

impl PnGradients {
    pub fn at(d: f64, params: &PnParams, with_hyper: bool) -> Self {
        let hyper = |which| with_hyper.then(|| pn_partial_hyper(d, params, which));
        Self {
            d_m: pn_partial_m(d, params),
            d_n: pn_partial_n(d, params),
            d_alpha: hyper(HyperParam::Alpha),
            d_beta: hyper(HyperParam::Beta),
            d_gamma: hyper(HyperParam::Gamma),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.d_m, self.d_n]
            .into_iter()
            .chain(self.d_alpha)
            .chain(self.d_beta)
            .chain(self.d_gamma)
            .all(f64::is_finite)
    }
}

#[inline]
fn sigmoid_slope(d: f64, params: &PnParams) -> f64 {
    sigmoid_derivative(pn_exponent(d, params))
}

pub fn pn_partial_m(d: f64, params: &PnParams) -> f64 {
    sigmoid_slope(d, params) * slope_derivative(params) * (d - params.shift())
}

pub fn pn_partial_n(d: f64, params: &PnParams) -> f64 {
    -sigmoid_slope(d, params) * params.slope() * shift_derivative(params)
}

/// Fixed hyper-parameter selector for sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HyperParam {
    Alpha,
    Beta,
    Gamma,
}

impl HyperParam {
    pub const ALL: [HyperParam; 3] = [HyperParam::Alpha, HyperParam::Beta, HyperParam::Gamma];
}

impl fmt::Display for HyperParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            HyperParam::Alpha => "alpha",
            HyperParam::Beta => "beta",
            HyperParam::Gamma => "gamma",
        })
    }
}

impl FromStr for HyperParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "alpha" => Ok(HyperParam::Alpha),
            "beta" => Ok(HyperParam::Beta),
            "gamma" => Ok(HyperParam::Gamma),
            _ => Err(Error::Unknown {
                what: "hyper-parameter",
                name: s.to_string(),
            }),
        }
    }
}

pub fn pn_partial_hyper(d: f64, params: &PnParams, which: HyperParam) -> f64 {
    let h = &params.hyper;
    let abs_tm = params.m.tanh().abs();
    let tn = params.n.tanh();
    let denom = h.beta * abs_tm + h.epsilon;
    let centered = d - h.gamma * tn;
    let inner = match which {
        HyperParam::Alpha => centered / denom,
        HyperParam::Beta => -h.alpha * centered * abs_tm / (denom * denom),
        HyperParam::Gamma => -h.alpha * tn / denom,
    };
    sigmoid_slope(d, params) * inner
}

/// Central difference `(f(x + h) - f(x - h)) / 2h`.
pub fn finite_difference<F>(f: F, point: f64, h: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let (hi, lo) = (f(point + h), f(point - h));
    if !hi.is_finite() || !lo.is_finite() {
        return Err(Error::NonFinite(format!(
            "f({}) = {hi}, f({}) = {lo}",
            point + h,
            point - h
        )));
    }
    Ok((hi - lo) / (2.0 * h))
}

/// Loss of a batch and its gradient with respect to `m`, `n` and the
/// classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradients {
    pub loss: LossBreakdown,
    pub d_m: f64,
    pub d_n: f64,
    pub d_weights: Vec<f64>,
    pub d_bias: Vec<f64>,
}

fn layout_for(batch: &[PreparedClip], classifier: &LinearClassifier) -> Result<PoolLayout> {
    let first = batch.first().ok_or(Error::Empty("batch"))?;
    PoolLayout::new(first.frames.height(), first.frames.width(), classifier.grid)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda >= 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "penalty weight must be non-negative, got {lambda}"
        )))
    }
}

/// Batch-mean `CE + lambda * V` through the motion prompt layer.
pub fn batch_loss(
    batch: &[LabeledClip],
    params: &PnParams,
    classifier: &LinearClassifier,
    lambda: f64,
) -> Result<LossBreakdown> {
    check_lambda(lambda)?;
    let prepared = prepare(batch)?;
    let layout = layout_for(&prepared, classifier)?;
    let refs: Vec<&PreparedClip> = prepared.iter().collect();
    Ok(batch_pass(
        &refs,
        params,
        classifier,
        &layout,
        lambda,
        Pipeline::MotionPrompt,
        false,
    )?
    .loss)
}

/// Exact gradient of the batch-mean regularized loss.
pub fn loss_gradients(
    batch: &[LabeledClip],
    params: &PnParams,
    classifier: &LinearClassifier,
    lambda: f64,
) -> Result<LossGradients> {
    check_lambda(lambda)?;
    let prepared = prepare(batch)?;
    let layout = layout_for(&prepared, classifier)?;
    let refs: Vec<&PreparedClip> = prepared.iter().collect();
    let pass = batch_pass(
        &refs,
        params,
        classifier,
        &layout,
        lambda,
        Pipeline::MotionPrompt,
        true,
    )?;
    Ok(LossGradients {
        loss: pass.loss,
        d_m: pass.d_m,
        d_n: pass.d_n,
        d_weights: pass.d_weights,
        d_bias: pass.d_bias,
    })
}

/// Settings for [`gradient_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    /// Random `(d, m, n)` points for the pointwise checks.
    pub points: usize,
    pub seed: u64,
    pub pn_step: f64,
    pub pn_tolerance: f64,
    pub loss_step: f64,
    pub loss_tolerance: f64,
    /// Penalty weights for the end-to-end loss checks.
    pub lambdas: Vec<f64>,
    pub hyper: PnHyper,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            points: 1000,
            seed: 0,
            pn_step: 1e-6,
            pn_tolerance: 1e-6,
            loss_step: 1e-5,
            loss_tolerance: 1e-4,
            lambdas: vec![0.0, 0.5, 2.5],
            hyper: PnHyper::default(),
        }
    }
}

/// Worst relative error of one derivative over all checked points.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckLine {
    pub name: String,
    pub checked: usize,
    pub worst: f64,
    pub tolerance: f64,
}

impl GradCheckLine {
    pub fn passed(&self) -> bool {
        self.checked > 0 && self.worst < self.tolerance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub lines: Vec<GradCheckLine>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(GradCheckLine::passed)
    }
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

#[derive(Debug, Clone, Copy)]
enum Direction {
    M,
    N,
    Hyper(HyperParam),
}

/// `(f(x + h) - f(x - h)) / 2h` for the PN along one parameter. The
/// numerator comes from `sigmoid(g1) - sigmoid(g2) =
/// sinh(dg / 2) / (2 cosh(g1 / 2) cosh(g2 / 2))` and
/// `tanh(u) - tanh(v) = sinh(u - v) / (cosh u cosh v)`, with `dg` built
/// from the step directly, so nearly equal values are never subtracted.
fn pn_central_difference(d: f64, params: &PnParams, dir: Direction, h: f64) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Domain(format!("step must be positive, got {h}")));
    }
    let nudge = |delta: f64| {
        let mut p = *params;
        match dir {
            Direction::M => p.m += delta,
            Direction::N => p.n += delta,
            Direction::Hyper(HyperParam::Alpha) => p.hyper.alpha += delta,
            Direction::Hyper(HyperParam::Beta) => p.hyper.beta += delta,
            Direction::Hyper(HyperParam::Gamma) => p.hyper.gamma += delta,
        }
        p
    };
    let (hi, lo) = (nudge(h), nudge(-h));
    let coord = |p: &PnParams| match dir {
        Direction::M => p.m,
        Direction::N => p.n,
        Direction::Hyper(HyperParam::Alpha) => p.hyper.alpha,
        Direction::Hyper(HyperParam::Beta) => p.hyper.beta,
        Direction::Hyper(HyperParam::Gamma) => p.hyper.gamma,
    };
    let step = coord(&hi) - coord(&lo);
    let hy = &params.hyper;
    let denom = |p: &PnParams| p.hyper.beta * p.m.tanh().abs() + hy.epsilon;
    let centred = d - params.shift();
    let dg = match dir {
        Direction::M => {
            if hi.m.signum() != lo.m.signum() {
                return Err(Error::Domain("step straddles the kink at m = 0".into()));
            }
            let dt = step.sinh() / (hi.m.cosh() * lo.m.cosh());
            -hy.alpha * hy.beta * params.m.signum() * dt / (denom(&hi) * denom(&lo)) * centred
        }
        Direction::N => {
            let dt = step.sinh() / (hi.n.cosh() * lo.n.cosh());
            -params.slope() * hy.gamma * dt
        }
        Direction::Hyper(HyperParam::Alpha) => step * centred / denom(params),
        Direction::Hyper(HyperParam::Beta) => {
            -hy.alpha * params.m.tanh().abs() * step / (denom(&hi) * denom(&lo)) * centred
        }
        Direction::Hyper(HyperParam::Gamma) => -params.slope() * params.n.tanh() * step,
    };
    let (g1, g2) = (pn_exponent(d, &hi), pn_exponent(d, &lo));
    let value = (dg / 2.0).sinh() / (2.0 * (g1 / 2.0).cosh() * (g2 / 2.0).cosh()) / step;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite(format!("central difference at d = {d}")))
    }
}

fn pointwise_lines(config: &GradCheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<GradCheckLine>> {
    const NAMES: [&str; 5] = ["df/dm", "df/dn", "df/dalpha", "df/dbeta", "df/dgamma"];
    let mut lines: Vec<GradCheckLine> = NAMES
        .iter()
        .map(|name| GradCheckLine {
            name: name.to_string(),
            checked: 0,
            worst: 0.0,
            tolerance: config.pn_tolerance,
        })
        .collect();
    let mut drawn = 0;
    while drawn < config.points {
        let d = rng.random_range(-1.0..=1.0);
        let m: f64 = rng.random_range(-3.0..=3.0);
        let n = rng.random_range(-3.0..=3.0);
        if m.abs() < 1e-4 {
            continue;
        }
        drawn += 1;
        let base = PnParams::new(m, n, config.hyper);
        let fd = |dir| pn_central_difference(d, &base, dir, config.pn_step);
        let checks: [(f64, f64); 5] = [
            (pn_partial_m(d, &base), fd(Direction::M)?),
            (pn_partial_n(d, &base), fd(Direction::N)?),
            (
                pn_partial_hyper(d, &base, HyperParam::Alpha),
                fd(Direction::Hyper(HyperParam::Alpha))?,
            ),
            (
                pn_partial_hyper(d, &base, HyperParam::Beta),
                fd(Direction::Hyper(HyperParam::Beta))?,
            ),
            (
                pn_partial_hyper(d, &base, HyperParam::Gamma),
                fd(Direction::Hyper(HyperParam::Gamma))?,
            ),
        ];
        for (line, (analytic, numeric)) in lines.iter_mut().zip(checks) {
            if analytic.abs() < 1e-8 {
                continue;
            }
            line.checked += 1;
            line.worst = line.worst.max(relative_error(analytic, numeric));
        }
    }
    Ok(lines)
}

fn check_batch(seed: u64) -> Result<Vec<LabeledClip>> {
    let data = generate_synthetic(&SyntheticConfig {
        height: 14,
        width: 14,
        frames: 5,
        square: 3,
        speed: 1.0,
        classes: 4,
        clips_per_class: 1,
        noise: 0.05,
        camera: 1.0,
        seed,
        ..SyntheticConfig::default()
    })?;
    Ok(data.clips)
}

fn loss_lines(config: &GradCheckConfig, rng: &mut ChaCha8Rng) -> Result<Vec<GradCheckLine>> {
    let clips = check_batch(config.seed)?;
    let mut lines = Vec::new();
    for &lambda in &config.lambdas {
        let mut classifier = LinearClassifier::zeros(4, 2)?;
        classifier
            .weights
            .iter_mut()
            .for_each(|w| *w = rng.random_range(-2.0..2.0));
        classifier
            .bias
            .iter_mut()
            .for_each(|b| *b = rng.random_range(-0.5..0.5));
        let (m, n) = (rng.random_range(0.1..1.5), rng.random_range(-1.5..1.5));
        let params = PnParams::new(m, n, config.hyper);
        let grads = loss_gradients(&clips, &params, &classifier, lambda)?;
        let loss_at = |p: &PnParams, c: &LinearClassifier| -> f64 {
            batch_loss(&clips, p, c, lambda).map_or(f64::NAN, |l| l.total)
        };
        let step = config.loss_step;
        let mut pairs = vec![
            (
                grads.d_m,
                finite_difference(
                    |x| loss_at(&PnParams { m: x, ..params }, &classifier),
                    m,
                    step,
                )?,
            ),
            (
                grads.d_n,
                finite_difference(
                    |x| loss_at(&PnParams { n: x, ..params }, &classifier),
                    n,
                    step,
                )?,
            ),
        ];
        for idx in [
            0,
            classifier.weights.len() / 2,
            classifier.weights.len() - 1,
        ] {
            let numeric = finite_difference(
                |x| {
                    let mut c = classifier.clone();
                    c.weights[idx] = x;
                    loss_at(&params, &c)
                },
                classifier.weights[idx],
                step,
            )?;
            pairs.push((grads.d_weights[idx], numeric));
        }
        let worst = pairs
            .iter()
            .map(|&(a, n)| relative_error(a, n))
            .fold(0.0, f64::max);
        lines.push(GradCheckLine {
            name: format!("loss lambda={lambda}"),
            checked: pairs.len(),
            worst,
            tolerance: config.loss_tolerance,
        });
    }
    Ok(lines)
}

/// Compares every analytic derivative with central differences.
pub fn gradient_check(config: &GradCheckConfig) -> Result<GradCheckReport> {
    config.hyper.validate()?;
    if config.points == 0 {
        return Err(Error::Config(
            "gradient check needs at least one point".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut lines = pointwise_lines(config, &mut rng)?;
    lines.extend(loss_lines(config, &mut rng)?);
    Ok(GradCheckReport { lines })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{cross_entropy, pool_prompts};
    use crate::framediff::{diff_maps, FrameSequence};
    use crate::pn::pn_value;
    use crate::prompt::{attention_sequence, motion_prompts};
    use crate::regularization::temporal_variation;

    #[test]
    fn central_difference_basics() {
        let g = finite_difference(|x| x * x, 3.0, 1e-5).unwrap();
        assert!((g - 6.0).abs() < 1e-8);
        assert_eq!(finite_difference(|_| 4.2, 1.0, 1e-3).unwrap(), 0.0);
        assert!(finite_difference(|x| x, 0.0, 0.0).is_err());
        assert!(matches!(
            finite_difference(|x| 1.0 / x, 1e-9, 1e-9),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn partial_m_zero_cases() {
        assert_eq!(pn_partial_m(0.3, &PnParams::with_defaults(0.0, 0.4)), 0.0);
        let p = PnParams::with_defaults(0.8, 0.4);
        assert_eq!(pn_partial_m(p.shift(), &p), 0.0);
    }

    #[test]
    fn partial_n_is_negative_and_saturates() {
        for &(m, n, d) in &[(0.0, 0.2, -0.1), (1.0, -0.5, 0.3), (-2.0, 0.0, 0.9)] {
            assert!(pn_partial_n(d, &PnParams::with_defaults(m, n)) < 0.0);
        }
        assert!(pn_partial_n(0.0, &PnParams::with_defaults(0.3, 30.0)).abs() < 1e-20);
    }

    #[test]
    fn hyper_partial_zero_cases() {
        let p = PnParams::with_defaults(0.0, 0.5);
        assert_eq!(pn_partial_hyper(0.2, &p, HyperParam::Beta), 0.0);
        let p = PnParams::with_defaults(0.7, 0.0);
        assert_eq!(pn_partial_hyper(0.2, &p, HyperParam::Gamma), 0.0);
        let p = PnParams::with_defaults(0.7, 0.3);
        assert_eq!(pn_partial_hyper(p.shift(), &p, HyperParam::Alpha), 0.0);
        assert!("delta".parse::<HyperParam>().is_err());
    }

    #[test]
    fn spot_checks_against_central_differences() {
        let h = 1e-6;
        let p = PnParams::with_defaults(0.5, 0.0);
        let fd = finite_difference(
            |m| crate::pn::pn_value(0.3, &PnParams::with_defaults(m, 0.0)),
            0.5,
            h,
        )
        .unwrap();
        assert!((pn_partial_m(0.3, &p) - fd).abs() <= 1e-6 * fd.abs());

        let p = PnParams::with_defaults(0.0, 0.2);
        let fd = finite_difference(
            |n| crate::pn::pn_value(-0.1, &PnParams::with_defaults(0.0, n)),
            0.2,
            h,
        )
        .unwrap();
        assert!((pn_partial_n(-0.1, &p) - fd).abs() <= 1e-6 * fd.abs());

        let base = PnParams::with_defaults(0.9, -0.4);
        let fd = finite_difference(
            |g| {
                let hy = PnHyper {
                    gamma: g,
                    ..base.hyper
                };
                crate::pn::pn_value(0.1, &PnParams::new(base.m, base.n, hy))
            },
            base.hyper.gamma,
            h,
        )
        .unwrap();
        let an = pn_partial_hyper(0.1, &base, HyperParam::Gamma);
        assert!((an - fd).abs() <= 1e-6 * fd.abs(), "{an} vs {fd}");
    }

    #[test]
    fn all_gradients_finite() {
        for &m in &[-30.0, -1.0, 0.0, 1e-8, 2.0, 30.0] {
            for &n in &[-30.0, 0.0, 0.4, 30.0] {
                for &d in &[-1.0, 0.0, 0.5, 1.0] {
                    assert!(PnGradients::at(d, &PnParams::with_defaults(m, n), true).is_finite());
                }
            }
        }
    }

    fn toy_batch() -> Vec<LabeledClip> {
        (0..3)
            .map(|k| {
                let data = (0..4 * 4 * 3 * 4)
                    .map(|i| (((i * (7 + 2 * k) + 3 * k) % 23) as f64) / 22.0)
                    .collect();
                LabeledClip {
                    frames: FrameSequence::new(4, 4, 4, data).unwrap(),
                    label: k % 2,
                }
            })
            .collect()
    }

    #[test]
    fn forward_matches_public_composition() {
        let batch = toy_batch();
        let params = PnParams::with_defaults(0.6, -0.2);
        let mut clf = LinearClassifier::zeros(2, 2).unwrap();
        for (i, w) in clf.weights.iter_mut().enumerate() {
            *w = ((i % 5) as f64 - 2.0) * 0.3;
        }
        clf.bias = vec![0.1, -0.2];
        let layout = PoolLayout::new(4, 4, 2).unwrap();

        let (mut task, mut var) = (0.0, 0.0);
        for clip in &batch {
            let attn = attention_sequence(&diff_maps(&clip.frames).unwrap(), &params).unwrap();
            let z = motion_prompts(&clip.frames, &attn).unwrap();
            let feats = pool_prompts(&z, &layout).unwrap();
            task += cross_entropy(&clf.scores(&feats), clip.label);
            var += temporal_variation(&attn).unwrap();
        }
        let loss = batch_loss(&batch, &params, &clf, 0.5).unwrap();
        assert!((loss.task_loss - task / 3.0).abs() < 1e-12);
        assert!((loss.variation - var / 3.0).abs() < 1e-12);
        assert!((loss.total - (task + 0.5 * var) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_classifier_gradient_is_softmax_residual() {
        let batch = toy_batch();
        let clf = LinearClassifier::zeros(2, 1).unwrap();
        let g = loss_gradients(&batch, &PnParams::with_defaults(0.3, 0.1), &clf, 0.0).unwrap();
        // mean over clips of (1/2 - onehot)
        let counts = [2.0, 1.0];
        for (c, &db) in g.d_bias.iter().enumerate() {
            assert!((db - (0.5 - counts[c] / 3.0)).abs() < 1e-15);
        }
        assert!(g.d_m.is_finite() && g.d_n.is_finite());
        // zero weights: no signal reaches m or n through the classifier
        assert_eq!((g.d_m, g.d_n), (0.0, 0.0));
    }

    #[test]
    fn negative_lambda_rejected() {
        let clf = LinearClassifier::zeros(2, 1).unwrap();
        assert!(
            loss_gradients(&toy_batch(), &PnParams::with_defaults(0.0, 0.0), &clf, -1.0).is_err()
        );
        assert!(loss_gradients(&[], &PnParams::with_defaults(0.0, 0.0), &clf, 1.0).is_err());
    }

    #[test]
    fn default_suite_passes() {
        let report = gradient_check(&GradCheckConfig::default()).unwrap();
        for line in &report.lines {
            assert!(line.passed(), "{line:?}");
        }
        assert_eq!(report.lines.len(), 8);
    }

    #[test]
    fn suite_rejects_zero_points() {
        let cfg = GradCheckConfig {
            points: 0,
            ..GradCheckConfig::default()
        };
        assert!(gradient_check(&cfg).is_err());
    }

    #[test]
    fn identity_difference_matches_plain_difference() {
        let params = PnParams::with_defaults(0.7, -0.4);
        let d = 0.2;
        let plain = |f: &dyn Fn(f64) -> f64, x: f64| finite_difference(f, x, 1e-4).unwrap();
        let with = |m: f64, n: f64, h: PnHyper| pn_value(d, &PnParams::new(m, n, h));
        let hy = params.hyper;
        let cases = [
            (Direction::M, plain(&|x| with(x, -0.4, hy), 0.7)),
            (Direction::N, plain(&|x| with(0.7, x, hy), -0.4)),
            (
                Direction::Hyper(HyperParam::Alpha),
                plain(&|x| with(0.7, -0.4, PnHyper { alpha: x, ..hy }), hy.alpha),
            ),
            (
                Direction::Hyper(HyperParam::Beta),
                plain(&|x| with(0.7, -0.4, PnHyper { beta: x, ..hy }), hy.beta),
            ),
            (
                Direction::Hyper(HyperParam::Gamma),
                plain(&|x| with(0.7, -0.4, PnHyper { gamma: x, ..hy }), hy.gamma),
            ),
        ];
        for (dir, want) in cases {
            let got = pn_central_difference(d, &params, dir, 1e-4).unwrap();
            assert!(
                (got - want).abs() <= 1e-9 * want.abs().max(1e-3),
                "{dir:?}: {got} vs {want}"
            );
        }
    }

    #[test]
    fn identity_difference_rejects_the_kink() {
        let params = PnParams::with_defaults(1e-7, 0.0);
        assert!(pn_central_difference(0.1, &params, Direction::M, 1e-6).is_err());
        assert!(pn_central_difference(0.1, &params, Direction::N, 0.0).is_err());
    }
}
