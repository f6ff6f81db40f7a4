//! Video motion prompts: learnable power normalization of frame differences
//! into attention maps, attention-highlighted frames, a temporal attention
//! variation penalty, analytic gradients for the two learnable parameters,
//! and a small training harness on synthetic clips.
//!
//! The pipeline for a clip of `T` RGB frames:
//!
//! 1. [`to_grayscale`] and [`frame_differencing`] give `T - 1` maps in `[-1, 1]`.
//! 2. [`attention_sequence`] applies the learnable PN, a sigmoid with slope
//!    `a(m)` and shift `b(n)`, producing attention in `[0, 1]`.
//! 3. [`motion_prompts`] multiplies attention map `t` into frame `t + 1`.
//! 4. [`temporal_variation`] penalizes change between consecutive maps.

pub mod autograd;
pub mod classifier;
pub mod error;
pub mod framediff;
pub mod io;
pub mod model;
pub mod pn;
pub mod prompt;
pub mod regularization;
pub mod synthetic;
pub mod train;

pub use autograd::{
    batch_loss, finite_difference, gradient_check, loss_gradients, pn_partial_hyper, pn_partial_m,
    pn_partial_n, GradCheckConfig, GradCheckLine, GradCheckReport, HyperParam, LossGradients,
    PnGradients,
};
pub use classifier::{LinearClassifier, PoolLayout};
pub use error::{Error, Result};
pub use framediff::{
    diff_maps, frame_differencing, to_grayscale, DiffMap, DiffMapSequence, FrameSequence,
    GrayscaleSequence, Plane,
};
pub use model::{LabeledClip, Pipeline};
pub use pn::{
    apply_pn, classic_pn, constraint_check, invert_shift, invert_slope, shift, slope, slope_bounds,
    AttentionMap, ConstraintReport, PnHyper, PnKind, PnParams,
};
pub use prompt::{attention_sequence, motion_prompts, AttentionMapSequence, MotionPromptSequence};
pub use regularization::{temporal_variation, total_loss, LossBreakdown};
pub use synthetic::{generate_synthetic, Dataset, SyntheticConfig};
pub use train::{
    evaluate, lambda_sweep, train, EpochRecord, SweepReport, TrainConfig, TrainReport,
};
