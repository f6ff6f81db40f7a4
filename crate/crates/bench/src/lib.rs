//! Fixtures shared by the benchmarks.

use vmp_core::{generate_synthetic, LabeledClip, LinearClassifier, SyntheticConfig};

/// Synthetic moving-camera clips of `size` x `size` pixels and `frames` frames.
pub fn clips(size: usize, frames: usize, count: usize) -> Vec<LabeledClip> {
    let classes = 4;
    let data = generate_synthetic(&SyntheticConfig {
        height: size,
        width: size,
        frames,
        classes,
        clips_per_class: count.div_ceil(classes),
        noise: 0.05,
        camera: 2.0,
        square: size / 4,
        speed: 1.0,
        ..SyntheticConfig::default()
    })
    .expect("fixture configuration is valid");
    data.clips.into_iter().take(count).collect()
}

/// A classifier with small deterministic non-zero weights.
pub fn classifier(classes: usize, grid: usize) -> LinearClassifier {
    let mut clf = LinearClassifier::zeros(classes, grid).expect("valid shape");
    for (i, w) in clf.weights.iter_mut().enumerate() {
        *w = ((i * 37 % 101) as f64 / 101.0 - 0.5) * 0.2;
    }
    clf
}
