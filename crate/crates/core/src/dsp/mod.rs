//! Numerical building blocks shared by preprocessing and feature extraction.

pub mod fft;
pub mod lstsq;
pub mod spline;
pub mod stats;

mod matrix;
pub use matrix::Matrix;
