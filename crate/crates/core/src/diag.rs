//! Non-fatal conditions raised while processing a signal.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Warning {
    /// A band envelope carried no energy; the derived quantity was set to zero.
    FlatBand(&'static str),
    /// Low-band envelope was zero so the peak ratio was capped.
    RatioCapped,
    /// Fewer than three cycles were found for jitter/shimmer.
    InsufficientCycles,
    /// Spectrum was identically zero.
    ZeroSpectrum,
    /// Signal was identically zero.
    ZeroSignal,
    /// Sifting hit its iteration limit before converging.
    EmdNotConverged { imf: usize },
    /// Autocorrelation matrix was singular.
    SingularAutocorrelation,
    /// A clipped run could not be repaired.
    UnrepairedClip { start: usize, end: usize },
    /// A quadrant had no samples.
    EmptyQuadrant(&'static str),
    /// Trajectory dropped because fewer than two footsteps were detected.
    TooFewFootsteps(String),
    /// Pearson correlation undefined for zero-variance data.
    UndefinedCorrelation,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::FlatBand(band) => write!(f, "flat envelope in {band} band"),
            Warning::RatioCapped => write!(f, "zero low-band envelope, peak ratio capped"),
            Warning::InsufficientCycles => write!(f, "fewer than 3 cycles for jitter/shimmer"),
            Warning::ZeroSpectrum => write!(f, "all-zero spectrum"),
            Warning::ZeroSignal => write!(f, "all-zero signal"),
            Warning::EmdNotConverged { imf } => write!(f, "EMD sifting did not converge for IMF {imf}"),
            Warning::SingularAutocorrelation => write!(f, "singular autocorrelation, LPC set to zero"),
            Warning::UnrepairedClip { start, end } => {
                write!(f, "clipped run [{start}, {end}] left unrepaired")
            }
            Warning::EmptyQuadrant(q) => write!(f, "no samples in quadrant {q}"),
            Warning::TooFewFootsteps(t) => write!(f, "trajectory {t} has fewer than 2 footsteps"),
            Warning::UndefinedCorrelation => write!(f, "Pearson correlation undefined (zero variance)"),
        }
    }
}

/// Collector for warnings emitted along a processing path.
#[derive(Debug, Clone, Default)]
pub struct Diagnostics {
    warnings: Vec<Warning>,
}

impl Diagnostics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn warn(&mut self, w: Warning) {
        log::debug!("{w}");
        self.warnings.push(w);
    }

    pub fn contains(&self, w: &Warning) -> bool {
        self.warnings.contains(w)
    }

    pub fn any(&self, pred: impl Fn(&Warning) -> bool) -> bool {
        self.warnings.iter().any(pred)
    }

    pub fn warnings(&self) -> &[Warning] {
        &self.warnings
    }

    pub fn is_empty(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn extend(&mut self, other: Diagnostics) {
        self.warnings.extend(other.warnings);
    }
}
