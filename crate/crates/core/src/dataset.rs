//! Training data container: input locations, centered outputs, and the
//! per-dimension bounds used for unit-cube scaling.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A regression dataset. Outputs are stored centered (sample mean removed);
/// the subtracted mean is kept in `output_offset` so predictions can be
/// mapped back to the raw scale.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: DMatrix<f64>,
    outputs: DVector<f64>,
    output_offset: f64,
    bounds: Vec<(f64, f64)>,
    scaled: bool,
}

impl Dataset {
    /// Builds a dataset from raw (uncentered) outputs, inferring per-column
    /// bounds as the observed min/max of each input dimension.
    pub fn new(inputs: DMatrix<f64>, raw_outputs: DVector<f64>) -> Result<Self> {
        let bounds = (0..inputs.ncols())
            .map(|j| {
                let col = inputs.column(j);
                let lo = col.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect();
        Self::with_bounds(inputs, raw_outputs, bounds)
    }

    /// Builds a dataset with explicitly known per-dimension bounds (e.g. the
    /// domain of a synthetic test function).
    pub fn with_bounds(
        inputs: DMatrix<f64>,
        raw_outputs: DVector<f64>,
        bounds: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let (n, d) = inputs.shape();
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter(
                "dataset needs at least one row and one input column".into(),
            ));
        }
        if raw_outputs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: raw_outputs.len(),
            });
        }
        if bounds.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: bounds.len(),
            });
        }
        if inputs.iter().any(|v| !v.is_finite()) || raw_outputs.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "dataset values must be finite".into(),
            ));
        }
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::InvalidBounds {
                    dimension: j,
                    low: lo,
                    high: hi,
                });
            }
            if inputs.column(j).iter().any(|&v| v < lo || v > hi) {
                return Err(Error::InvalidBounds {
                    dimension: j,
                    low: lo,
                    high: hi,
                });
            }
        }

        // Two-pass centering: the second pass removes the rounding residue of
        // the first so mean(outputs) is zero to well below the 1e-12 contract.
        let offset = raw_outputs.mean();
        let mut outputs = raw_outputs.map(|y| y - offset);
        let residue = outputs.mean();
        outputs.apply(|y| *y -= residue);

        Ok(Self {
            inputs,
            outputs,
            output_offset: offset + residue,
            bounds,
            scaled: false,
        })
    }

    /// Maps inputs affinely onto [0,1]^d using the stored bounds. Lengthscales
    /// fitted to the result live on the scaled space. Errors if any dimension
    /// has zero width.
    pub fn to_unit_cube(&self) -> Result<Dataset> {
        let d = self.dim();
        let mut scaled = self.inputs.clone();
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            let width = hi - lo;
            if width <= 0.0 {
                return Err(Error::InvalidBounds {
                    dimension: j,
                    low: lo,
                    high: hi,
                });
            }
            for v in scaled.column_mut(j).iter_mut() {
                *v = (*v - lo) / width;
            }
        }
        Ok(Dataset {
            inputs: scaled,
            outputs: self.outputs.clone(),
            output_offset: self.output_offset,
            bounds: vec![(0.0, 1.0); d],
            scaled: true,
        })
    }

    pub fn n(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> &DMatrix<f64> {
        &self.inputs
    }

    /// Centered outputs (sample mean zero).
    pub fn outputs(&self) -> &DVector<f64> {
        &self.outputs
    }

    /// The sample mean subtracted from the raw outputs at construction.
    pub fn output_offset(&self) -> f64 {
        self.output_offset
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// True when inputs have been mapped to the unit cube.
    pub fn is_scaled(&self) -> bool {
        self.scaled
    }
}
