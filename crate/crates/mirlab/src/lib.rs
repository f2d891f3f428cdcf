//! Information-theoretic and statistical metrics for symbolic-music
//! corpora: entropy and divergence of event distributions, rank-shape
//! statistics, chord-transition network analysis, stationarity and
//! fractal measures of dynamics, spectral rubato classification,
//! interval-distribution fitting, and seeded resampling utilities.

pub mod chordnet;
pub mod cli;
pub mod distributions;
pub mod dynamics;
pub mod error;
pub mod information;
pub mod intervals;
pub mod io;
pub mod rankshape;
pub mod resample;
pub mod rubato;

pub use error::{Error, Result};
