//! Synthetic test problems.

pub mod bundle;
mod matrices;
mod multiscale;
mod noise;
pub mod tomography;
pub mod wavelet;

pub use bundle::{read_bundle, write_bundle, Bundle};
pub use matrices::{logspace_matrix, sparse_spikes};
pub use multiscale::multiscale_model;
pub use noise::{add_noise_and_outliers, NoiseMeta};
pub use tomography::{build_tomography, checkerboard, TomographyConfig, TomographyProblem};
pub use wavelet::{compose_awinv, SynthesisOperator, WaveletBasis};
