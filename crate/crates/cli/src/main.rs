mod args;

use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use vmp_core::io::{write_colormapped, write_frames, write_prompts, ColorMapSpec, RunConfig};
use vmp_core::{
    attention_sequence, classic_pn, diff_maps, generate_synthetic, gradient_check, invert_shift,
    invert_slope, lambda_sweep, motion_prompts, train, DiffMapSequence, FrameSequence,
    GradCheckConfig, PnHyper, PnKind, PnParams, TrainReport,
};

use args::{Cli, Command, FrameIo, HyperArgs, PnArgs, RunArgs};

const USAGE: u8 = 1;
const DATA: u8 = 2;
const CHECK: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(DATA)
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Diff { io } => diff(&io),
        Command::Attn { io, pn } => attn(&io, &pn),
        Command::Prompt { io, pn } => prompt(&io, &pn),
        Command::ComparePn {
            io,
            pn,
            index,
            power,
        } => compare_pn(&io, &pn, index, power),
        Command::Gradcheck {
            points,
            seed,
            hyper,
        } => return gradcheck(points, seed, &hyper),
        Command::Train { run, lambda } => train_cmd(&run, lambda),
        Command::Sweep { run, lambdas } => sweep(&run, lambdas),
        Command::Synth { run, count } => synth(&run, count),
    }?;
    Ok(ExitCode::SUCCESS)
}

fn hyper_of(args: &HyperArgs, base: PnHyper) -> Result<PnHyper> {
    let hyper = PnHyper {
        alpha: args.alpha.unwrap_or(base.alpha),
        beta: args.beta.unwrap_or(base.beta),
        gamma: args.gamma.unwrap_or(base.gamma),
        epsilon: args.epsilon.unwrap_or(base.epsilon),
    };
    hyper.validate()?;
    Ok(hyper)
}

fn params_of(args: &PnArgs) -> Result<PnParams> {
    let hyper = hyper_of(&args.hyper, PnHyper::default())?;
    let m = match args.a {
        // tanh(20) is 1.0 in f64, so the cap loses nothing at the gentle end.
        Some(a) => invert_slope(a, &hyper)?.atanh().min(20.0),
        None => args.m.unwrap_or(0.0),
    };
    let n = match args.b {
        Some(b) => invert_shift(b, &hyper)?,
        None => args.n.unwrap_or(0.0),
    };
    Ok(PnParams::new(m, n, hyper))
}

fn load(io: &FrameIo) -> Result<(FrameSequence, DiffMapSequence)> {
    let frames = vmp_core::io::read_frames(&io.frames)?;
    let diffs = diff_maps(&frames)?;
    std::fs::create_dir_all(&io.out).with_context(|| format!("creating {}", io.out.display()))?;
    Ok((frames, diffs))
}

fn numbered(dir: &Path, prefix: &str, t: usize) -> std::path::PathBuf {
    dir.join(format!("{prefix}_{t:04}.ppm"))
}

fn diff(io: &FrameIo) -> Result<()> {
    let (_, diffs) = load(io)?;
    let spec = ColorMapSpec::diverging();
    for t in 0..diffs.len() {
        write_colormapped(&diffs.plane(t), &spec, &numbered(&io.out, "diff", t))?;
    }
    println!(
        "wrote {} difference maps to {}",
        diffs.len(),
        io.out.display()
    );
    Ok(())
}

fn attn(io: &FrameIo, pn: &PnArgs) -> Result<()> {
    let params = params_of(pn)?;
    let (_, diffs) = load(io)?;
    let attn = attention_sequence(&diffs, &params)?;
    let spec = ColorMapSpec::attention();
    for t in 0..attn.len() {
        write_colormapped(&attn.plane(t), &spec, &numbered(&io.out, "attn", t))?;
    }
    println!(
        "wrote {} attention maps (a={}, b={}) to {}",
        attn.len(),
        params.slope(),
        params.shift(),
        io.out.display()
    );
    Ok(())
}

fn prompt(io: &FrameIo, pn: &PnArgs) -> Result<()> {
    let params = params_of(pn)?;
    let (frames, diffs) = load(io)?;
    let prompts = motion_prompts(&frames, &attention_sequence(&diffs, &params)?)?;
    write_prompts(&io.out, "prompt", &prompts)?;
    println!("wrote {} prompts to {}", prompts.len(), io.out.display());
    Ok(())
}

fn default_power(kind: PnKind) -> f64 {
    match kind {
        PnKind::Gamma => 0.5,
        PnKind::MaxExp | PnKind::AsinhE | PnKind::SigmE => 5.0,
    }
}

fn compare_pn(io: &FrameIo, pn: &PnArgs, index: usize, power: Option<f64>) -> Result<()> {
    let params = params_of(pn)?;
    let (_, diffs) = load(io)?;
    if index >= diffs.len() {
        anyhow::bail!(
            "map index {index} out of range, clip has {} maps",
            diffs.len()
        );
    }
    let map = diffs.plane(index);
    let attn = vmp_core::apply_pn(&map, &params)?;
    write_colormapped(
        &attn,
        &ColorMapSpec::attention(),
        &io.out.join("learnable.ppm"),
    )?;
    for kind in PnKind::ALL {
        let p = power.unwrap_or_else(|| default_power(kind));
        let out = classic_pn(kind, &map, p)?;
        write_colormapped(
            &out,
            &ColorMapSpec::diverging(),
            &io.out.join(format!("{kind}.ppm")),
        )?;
    }
    println!(
        "wrote 5 maps for difference {index} to {}",
        io.out.display()
    );
    Ok(())
}

fn gradcheck(points: usize, seed: u64, hyper: &HyperArgs) -> Result<ExitCode> {
    let config = GradCheckConfig {
        points,
        seed,
        hyper: hyper_of(hyper, PnHyper::default())?,
        ..GradCheckConfig::default()
    };
    let report = gradient_check(&config)?;
    for line in &report.lines {
        println!(
            "{:<4} {:<16} checked={:<5} worst={:.3e} tol={:.0e}",
            if line.passed() { "ok" } else { "FAIL" },
            line.name,
            line.checked,
            line.worst,
            line.tolerance
        );
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(CHECK)
    })
}

fn run_config(args: &RunArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.synthetic.seed = seed;
        cfg.train.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    cfg.train.hyper = hyper_of(&args.hyper, cfg.train.hyper)?;
    Ok(cfg)
}

/// Attention maps and prompts of the first clip under the learned parameters.
fn write_samples(
    dir: &Path,
    tag: &str,
    frames: &FrameSequence,
    report: &TrainReport,
) -> Result<()> {
    let attn = attention_sequence(&diff_maps(frames)?, &report.params)?;
    let spec = ColorMapSpec::attention();
    for t in 0..attn.len() {
        write_colormapped(
            &attn.plane(t),
            &spec,
            &numbered(dir, &format!("{tag}attn"), t),
        )?;
    }
    write_prompts(
        dir,
        &format!("{tag}prompt"),
        &motion_prompts(frames, &attn)?,
    )?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    vmp_core::io::write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn train_cmd(args: &RunArgs, lambda: Option<f64>) -> Result<()> {
    let mut cfg = run_config(args)?;
    if let Some(l) = lambda {
        cfg.train.lambda = l;
    }
    cfg.validate()?;
    let data = generate_synthetic(&cfg.synthetic)?;
    let report = train(&data, &cfg.train)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_text(&args.out.join("train.csv"), &report.to_csv())?;
    write_samples(&args.out, "", &data.clips[0].frames, &report)?;
    let last = report.last();
    println!(
        "epochs={} a={:.4} b={:.4} variation={:.4} train_acc={:.3} val_acc={:.3}",
        last.epoch, last.slope, last.shift, last.variation, last.train_acc, last.val_acc
    );
    Ok(())
}

fn sweep(args: &RunArgs, lambdas: Option<Vec<f64>>) -> Result<()> {
    let mut cfg = run_config(args)?;
    if let Some(l) = lambdas {
        cfg.lambdas = l;
    }
    cfg.validate()?;
    let data = generate_synthetic(&cfg.synthetic)?;
    let report = lambda_sweep(&data, &cfg.train, &cfg.lambdas)?;
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_text(&args.out.join("sweep.csv"), &report.summary_csv())?;
    for (i, run) in report.runs.iter().enumerate() {
        write_text(&args.out.join(format!("train_{i:02}.csv")), &run.to_csv())?;
        write_samples(
            &args.out,
            &format!("run{i:02}_"),
            &data.clips[0].frames,
            run,
        )?;
    }
    print!("{}", report.summary_csv());
    Ok(())
}

fn synth(args: &RunArgs, count: usize) -> Result<()> {
    let cfg = run_config(args)?;
    cfg.synthetic.validate()?;
    let data = generate_synthetic(&cfg.synthetic)?;
    for (i, clip) in data.clips.iter().take(count).enumerate() {
        let dir = args.out.join(format!("clip{i:03}_class{}", clip.label));
        write_frames(&dir, "frame", &clip.frames)?;
    }
    println!(
        "wrote {} clips to {}",
        count.min(data.clips.len()),
        args.out.display()
    );
    Ok(())
}
