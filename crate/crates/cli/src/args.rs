use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "vmp",
    version,
    about = "Video motion prompts from frame differences"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Color-mapped frame differences, blue negative and orange positive.
    Diff {
        #[command(flatten)]
        io: FrameIo,
    },
    /// Attention maps from the learnable PN.
    Attn {
        #[command(flatten)]
        io: FrameIo,
        #[command(flatten)]
        pn: PnArgs,
    },
    /// Motion prompts: attention map t applied to frame t + 1.
    Prompt {
        #[command(flatten)]
        io: FrameIo,
        #[command(flatten)]
        pn: PnArgs,
    },
    /// The four fixed PN baselines next to the learnable one, for one map.
    ComparePn {
        #[command(flatten)]
        io: FrameIo,
        #[command(flatten)]
        pn: PnArgs,
        /// Difference map to render.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Exponent for every baseline, overriding the per-kind defaults.
        #[arg(long)]
        power: Option<f64>,
    },
    /// Analytic derivatives against central differences; exits 3 on failure.
    Gradcheck {
        #[arg(long, default_value_t = 1000)]
        points: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        hyper: HyperArgs,
    },
    /// Train on synthetic clips and write the per-epoch CSV and sample maps.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Penalty weight on temporal attention variation.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// One training run per penalty weight.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated penalty weights.
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Write synthetic clips as numbered PPM frames.
    Synth {
        #[command(flatten)]
        run: RunArgs,
        /// Number of clips to write, in generation order.
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
}

#[derive(Debug, Args)]
pub struct FrameIo {
    /// Directory of .ppm/.pgm frames or a glob; sorted by file name.
    #[arg(long)]
    pub frames: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Default)]
pub struct HyperArgs {
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
}

/// PN parameters, given either raw `(m, n)` or target `(a, b)`.
#[derive(Debug, Args)]
pub struct PnArgs {
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["a", "b"])]
    pub m: Option<f64>,
    #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["a", "b"])]
    pub n: Option<f64>,
    /// Target slope, inverted to m >= 0.
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    /// Target shift, inverted to n.
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `key = value` file; keys not given keep their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Seeds both data generation and training.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}
