#![allow(dead_code)]

use dadapt::losses::{parse_libsvm_str, partition_logistic, Dataset, LossFamily};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Group sizes of a one-hot encoding with 14 categorical attributes and 123
/// binary columns, the layout of the a-series libsvm datasets.
pub const GROUP_SIZES: [usize; 14] = [9, 8, 16, 7, 15, 6, 5, 2, 5, 10, 14, 5, 11, 10];

/// Libsvm text for `samples` rows with exactly one active feature per group
/// and labels drawn from a noisy logistic model, so the data are not
/// separable and the logistic loss has a minimizer.
pub fn one_hot_libsvm(samples: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim: usize = GROUP_SIZES.iter().sum();
    let weights: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.7).collect();
    let mut text = String::new();
    for _ in 0..samples {
        let mut offset = 0;
        let mut active = Vec::with_capacity(GROUP_SIZES.len());
        for size in GROUP_SIZES {
            active.push(offset + rng.random_range(0..size));
            offset += size;
        }
        let score: f64 = active.iter().map(|&j| weights[j]).sum::<f64>() - 1.2;
        let p = 1.0 / (1.0 + (-score).exp());
        let label = if rng.random::<f64>() < p { "+1" } else { "-1" };
        text.push_str(label);
        for j in active {
            text.push_str(&format!(" {}:1", j + 1));
        }
        text.push('\n');
    }
    text
}

/// The a3a stand-in: 3185 samples over 123 binary features.
pub fn a3a_shaped(seed: u64) -> Dataset {
    parse_libsvm_str(&one_hot_libsvm(3185, seed)).expect("generated text is valid libsvm")
}

pub fn logistic_family(m: usize, h: usize, seed: u64) -> LossFamily {
    let data = parse_libsvm_str(&one_hot_libsvm(m * h, seed)).unwrap();
    partition_logistic(&data, m, h, seed).unwrap()
}

/// Where the real a3a file is looked up: `$DADAPT_A3A`, else `data/a3a` at
/// the workspace root.
pub fn a3a_path() -> std::path::PathBuf {
    std::env::var_os("DADAPT_A3A")
        .map(Into::into)
        .unwrap_or_else(|| {
            let crate_dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
            crate_dir.ancestors().nth(2).unwrap_or(crate_dir).join("data/a3a")
        })
}
