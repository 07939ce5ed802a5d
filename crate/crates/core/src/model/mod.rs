//! General emotion-recognition network, its training loop and checkpoints.

pub mod checkpoint;
pub mod layers;
pub mod network;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use network::{InputSpec, Model, Normalizer, Prepared};
pub use train::{loss, train, EpochRecord, TrainConfig, TrainReport, TrainingSample};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    /// Valence and arousal scores.
    Regression,
    /// Four-way quadrant softmax.
    Classification,
}

impl HeadKind {
    pub fn output_dim(self) -> usize {
        match self {
            HeadKind::Regression => 2,
            HeadKind::Classification => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Hidden widths of the scalar branch.
    pub dense_widths: Vec<usize>,
    pub lstm_units: usize,
    /// Every sequence slot is resampled to this many steps.
    pub seq_len: usize,
    /// Output channels of the four conv + average-pool stages.
    pub conv_channels: Vec<usize>,
    /// Dropout after each pooling stage of the image branch.
    pub conv_dropout: f64,
    /// Dropout after the concatenation layer.
    pub dropout_rate: f64,
    /// Hidden widths of the head; the output layer follows.
    pub head_widths: Vec<usize>,
    pub head: HeadKind,
    pub seed: u64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            dense_widths: vec![64],
            lstm_units: 4,
            seq_len: 32,
            conv_channels: vec![4, 8, 8, 8],
            conv_dropout: 0.5,
            dropout_rate: 0.5,
            head_widths: vec![32],
            head: HeadKind::Regression,
            seed: 0,
        }
    }
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, message: String| {
            Err(Error::Config {
                path: format!("network.{path}"),
                message,
            })
        };
        if self.conv_channels.len() != 4 {
            return bad("conv_channels", format!("expected 4 conv layers, got {}", self.conv_channels.len()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate", format!("{} not in [0, 1)", self.dropout_rate));
        }
        if !(0.0..1.0).contains(&self.conv_dropout) {
            return bad("conv_dropout", format!("{} not in [0, 1)", self.conv_dropout));
        }
        if self.lstm_units == 0 || self.seq_len == 0 {
            return bad("lstm_units", "LSTM units and sequence length must be positive".into());
        }
        if self.dense_widths.iter().chain(&self.head_widths).chain(&self.conv_channels).any(|&w| w == 0) {
            return bad("dense_widths", "layer widths must be positive".into());
        }
        Ok(())
    }
}
