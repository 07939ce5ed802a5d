#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stepsense::dsp::Matrix;
use stepsense::features::bundle::{ImageSlot, ScalarSlot, SequenceSlot};
use stepsense::features::{BundleLayout, FeatureBundle, FeatureFamily};
use stepsense::model::{NetworkConfig, TrainingSample};
use stepsense::signal::EmotionLabel;

/// Small layout covering every branch: 4 scalars, 2 sequences, one image.
pub fn tiny_layout() -> BundleLayout {
    let s = |name: &str, family| ScalarSlot {
        name: name.into(),
        family,
    };
    BundleLayout {
        scalars: vec![
            s("g0", FeatureFamily::Gait),
            s("g1", FeatureFamily::Gait),
            s("v0", FeatureFamily::Vibration),
            s("v1", FeatureFamily::Vibration),
        ],
        sequences: vec![
            SequenceSlot {
                name: "gs".into(),
                family: FeatureFamily::Gait,
                len: 10,
            },
            SequenceSlot {
                name: "vs".into(),
                family: FeatureFamily::Vibration,
                len: 12,
            },
        ],
        images: vec![ImageSlot {
            name: "img".into(),
            family: FeatureFamily::Vibration,
            rows: 16,
            cols: 16,
        }],
    }
}

pub fn tiny_config(seed: u64) -> NetworkConfig {
    NetworkConfig {
        dense_widths: vec![6],
        lstm_units: 3,
        seq_len: 8,
        conv_channels: vec![2, 2, 2, 2],
        conv_dropout: 0.25,
        dropout_rate: 0.25,
        head_widths: vec![5],
        seed,
        ..Default::default()
    }
}

pub fn random_bundle(layout: &BundleLayout, rng: &mut ChaCha8Rng) -> FeatureBundle {
    FeatureBundle {
        scalars: (0..layout.scalars.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        sequences: layout
            .sequences
            .iter()
            .map(|s| (0..s.len).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect(),
        images: layout
            .images
            .iter()
            .map(|i| Matrix {
                rows: i.rows,
                cols: i.cols,
                data: (0..i.rows * i.cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            })
            .collect(),
    }
}

/// Samples whose label is a smooth function of the first scalar.
pub fn tiny_dataset(layout: &BundleLayout, n: usize, seed: u64) -> Vec<TrainingSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let b = random_bundle(layout, &mut rng);
            let v = 5.0 + 3.0 * b.scalars[0];
            let a = 5.0 - 2.0 * b.scalars[2];
            TrainingSample {
                bundle: b,
                label: EmotionLabel::new(v, a).unwrap(),
                weight: 1.0,
                person_id: format!("p{}", i % 4),
                trajectory_id: format!("t{i}"),
            }
        })
        .collect()
}
