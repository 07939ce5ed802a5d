//! Emotion-sensitive features of single-footstep segments.
//!
//! Gait-related features describe the footstep itself (cadence, contact
//! timing, heel/toe balance, energy); vibration-related features describe the
//! structural response (statistics, spectral shape, perturbation measures,
//! spectra, time-frequency images, compact codes). [`extract_bundle`] groups
//! them by data format: scalars, 1-D sequences and 2-D images.

pub mod bundle;
pub mod compact;
pub mod emd;
pub mod frequency;
pub mod gait;
pub mod heatmap;
pub mod spectral;
pub mod statistical;
pub mod table;
pub mod temporal;
pub mod timefreq;

pub use bundle::{
    extract_bundle, BundleLayout, FeatureBundle, FeatureFamily, FeatureSet, TrajectoryContext,
};
pub use heatmap::{feature_deviation_heatmap, Heatmap};

use serde::{Deserialize, Serialize};

use emd::EmdConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Heel-strike band used for peak ratio and FWHM.
    pub hs_band_hz: (f64, f64),
    /// Toe-off band used for peak ratio and FWHM.
    pub to_band_hz: (f64, f64),
    /// Narrower heel-strike band for double support time.
    pub hs_timing_band_hz: (f64, f64),
    /// Narrower toe-off band for double support time.
    pub to_timing_band_hz: (f64, f64),
    /// Reported peak ratio when the toe-off envelope is empty.
    pub ratio_cap: f64,
    pub energy_window_s: f64,
    pub smooth_span_s: f64,
    pub log_epsilon: f64,
    pub rolloff_fraction: f64,
    pub stft_frame: usize,
    pub stft_hop: usize,
    pub stft_nfft: usize,
    pub cepstrum_len: usize,
    /// Band searched for the fundamental used by the harmonic ratio.
    pub harmonic_band_hz: (f64, f64),
    pub cwt_image: (usize, usize),
    pub cwt_range_hz: (f64, f64),
    pub hht_image: (usize, usize),
    pub emd: EmdConfig,
    pub lpc_order: usize,
    pub legendre_order: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            hs_band_hz: (100.0, 250.0),
            to_band_hz: (10.0, 35.0),
            hs_timing_band_hz: (100.0, 200.0),
            to_timing_band_hz: (20.0, 30.0),
            ratio_cap: 100.0,
            energy_window_s: 0.05,
            smooth_span_s: 0.5,
            log_epsilon: 1e-12,
            rolloff_fraction: 0.85,
            stft_frame: 64,
            stft_hop: 16,
            stft_nfft: 128,
            cepstrum_len: 20,
            harmonic_band_hz: (30.0, 70.0),
            cwt_image: (32, 64),
            cwt_range_hz: (5.0, 240.0),
            hht_image: (32, 64),
            emd: EmdConfig::default(),
            lpc_order: 12,
            legendre_order: 10,
        }
    }
}
