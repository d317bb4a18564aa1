use gmatch_core::graphs::{synthesize_with, Dataset, GraphPair, SynthConfig};

use crate::config::{DatasetSpec, TrainSpec, TEST_SEED_OFFSET};
use crate::error::{BenchError, Result};

/// A test pair together with its position in the split.
#[derive(Clone, Debug)]
pub struct TestInstance {
    pub index: usize,
    pub pair: GraphPair,
}

fn synth(spec: &DatasetSpec, noise_sigma: f64) -> SynthConfig {
    SynthConfig {
        n: spec.n,
        noise_sigma,
        rotation_max: spec.rotation_max,
        translation_max: spec.translation_max,
        outliers: spec.outliers,
        shuffle: true,
    }
}

/// Test pairs, level-major: instance `i` uses seed `seed + TEST_SEED_OFFSET + i`.
/// A dataset file, when given, replaces generation.
pub fn test_split(spec: &DatasetSpec) -> Result<Vec<TestInstance>> {
    if let Some(path) = &spec.path {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let ds = Dataset::from_json(&text)?;
        return Ok(ds
            .pairs
            .into_iter()
            .enumerate()
            .map(|(index, pair)| TestInstance { index, pair })
            .collect());
    }
    let mut out = Vec::with_capacity(spec.instances * spec.noise_levels.len());
    for &sigma in &spec.noise_levels {
        let cfg = synth(spec, sigma);
        for _ in 0..spec.instances {
            let index = out.len();
            let pair = synthesize_with(&cfg, spec.seed + TEST_SEED_OFFSET + index as u64)?;
            out.push(TestInstance { index, pair });
        }
    }
    Ok(out)
}

/// Training pairs at the first noise level, seeds `seed .. seed + train_instances`.
pub fn train_split(spec: &DatasetSpec, train: &TrainSpec) -> Result<Vec<GraphPair>> {
    let sigma = *spec
        .noise_levels
        .first()
        .ok_or_else(|| BenchError::Config("dataset.noise_levels is empty".into()))?;
    let cfg = synth(spec, sigma);
    (0..train.train_instances as u64)
        .map(|k| synthesize_with(&cfg, spec.seed + k).map_err(Into::into))
        .collect()
}
