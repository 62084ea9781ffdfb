use nalgebra::DVector;

use super::noise::{sample_noise, NoiseSpec};
use crate::conic::ConicProgram;
use crate::error::{Error, Result};
use crate::solver::{solve, Solution, SolverSettings};

/// A dataset with designated private coordinates that input perturbation may shift.
pub trait PrivateDataset: Sized {
    fn private_values(&self) -> DVector<f64>;

    fn with_private_values(&self, v: &DVector<f64>) -> Self;

    fn program(&self) -> Result<ConicProgram>;
}

/// `value + ζ̂` with `ζ̂` the first row of `sample_noise(spec, seed, 1)`.
pub fn output_perturbation(value: &DVector<f64>, spec: &NoiseSpec, seed: u64) -> Result<DVector<f64>> {
    if value.len() != spec.dim {
        return Err(Error::dim(format!("query has length {}, noise has dim {}", value.len(), spec.dim)));
    }
    let z = sample_noise(spec, seed, 1)?;
    Ok(value + z.row(0).transpose())
}

/// Solves the program of `D + ζ̂`. The returned status may be infeasible.
pub fn input_perturbation<D: PrivateDataset>(
    data: &D,
    spec: &NoiseSpec,
    settings: &SolverSettings,
    seed: u64,
) -> Result<Solution> {
    let v = data.private_values();
    let noisy = output_perturbation(&v, spec, seed)?;
    solve(&data.with_private_values(&noisy).program()?, settings)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_matches_noise_stream() {
        let spec = NoiseSpec::laplace(1, 1.0).unwrap();
        let v = DVector::from_element(1, 5.0);
        let out = output_perturbation(&v, &spec, 42).unwrap();
        assert_eq!(out[0], 5.0 + sample_noise(&spec, 42, 1).unwrap()[(0, 0)]);
    }

    #[test]
    fn zero_noise_is_identity() {
        let spec = NoiseSpec::gaussian(2, 0.0).unwrap();
        let v = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(output_perturbation(&v, &spec, 1).unwrap(), v);
        assert!(output_perturbation(&DVector::zeros(3), &spec, 1).is_err());
    }
}
