//! Noise sampling, mechanism calibration, baseline release strategies and
//! sampled sensitivity estimation.

mod baseline;
mod calibrate;
mod noise;
pub mod rng;
mod sensitivity;

pub use baseline::{input_perturbation, output_perturbation, PrivateDataset};
pub(crate) use calibrate::ceil_tol;
pub use calibrate::{
    calibrate_gaussian, calibrate_laplace, calibrate_laplace_with, privacy_ratio_check, sensitivity_sample_size,
    NormOrder, PrivacyParams, ScaleConvention,
};
pub use noise::{monte_carlo_noise, sample_noise, NoiseFamily, NoiseSpec, MC_CHUNK};
pub use sensitivity::{estimate_sensitivity, AdjacencyModel, SensitivityConfig, SensitivityReport};
