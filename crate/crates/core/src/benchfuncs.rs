//! Latin hypercube designs, the four synthetic test functions with their
//! domains, and delimited-text dataset ingestion.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// The four synthetic benchmark functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestFunction {
    /// 1-d sum of two sines on [0, 10].
    Higdon,
    /// 3-d exponential mixture on the unit cube.
    Hartmann3,
    /// 4-d polynomial on [−10, 10]⁴.
    Colville,
    /// 8-d water-flow model on physical parameter ranges.
    Borehole,
}

impl TestFunction {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "higdon" => Some(Self::Higdon),
            "hartmann3" => Some(Self::Hartmann3),
            "colville" => Some(Self::Colville),
            "borehole" => Some(Self::Borehole),
            _ => None,
        }
    }

    /// All benchmark function names, in the grid's canonical order.
    pub const BENCHMARK_NAMES: [&'static str; 4] = ["higdon", "hartmann3", "colville", "borehole"];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Higdon => "higdon",
            Self::Hartmann3 => "hartmann3",
            Self::Colville => "colville",
            Self::Borehole => "borehole",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Higdon => 1,
            Self::Hartmann3 => 3,
            Self::Colville => 4,
            Self::Borehole => 8,
        }
    }

    pub fn bounds(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Higdon => vec![(0.0, 10.0)],
            Self::Hartmann3 => vec![(0.0, 1.0); 3],
            Self::Colville => vec![(-10.0, 10.0); 4],
            Self::Borehole => vec![
                (0.05, 0.15),        // borehole radius r_w
                (100.0, 50_000.0),   // radius of influence r
                (63_070.0, 115_600.0), // upper-aquifer transmissivity T_u
                (990.0, 1110.0),     // upper-aquifer potentiometric head H_u
                (63.1, 116.0),       // lower-aquifer transmissivity T_l
                (700.0, 820.0),      // lower-aquifer potentiometric head H_l
                (1120.0, 1680.0),    // borehole length L
                (9855.0, 12_045.0),  // hydraulic conductivity K_w
            ],
        }
    }

    /// Exact formula evaluation; total over all real inputs of the right
    /// length.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        assert_eq!(
            x.len(),
            self.dimension(),
            "{} takes {} inputs",
            self.name(),
            self.dimension()
        );
        use std::f64::consts::PI;
        match self {
            Self::Higdon => {
                let t = x[0];
                (2.0 * PI * t / 10.0).sin() + 0.2 * (2.0 * PI * t / 2.5).sin()
            }
            Self::Hartmann3 => {
                const ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
                const A: [[f64; 3]; 4] = [
                    [3.0, 10.0, 30.0],
                    [0.1, 10.0, 35.0],
                    [3.0, 10.0, 30.0],
                    [0.1, 10.0, 35.0],
                ];
                const P: [[f64; 3]; 4] = [
                    [0.3689, 0.1170, 0.2673],
                    [0.4699, 0.4387, 0.7470],
                    [0.1091, 0.8732, 0.5547],
                    [0.0381, 0.5743, 0.8828],
                ];
                -(0..4)
                    .map(|i| {
                        let e: f64 = (0..3)
                            .map(|j| A[i][j] * (x[j] - P[i][j]) * (x[j] - P[i][j]))
                            .sum();
                        ALPHA[i] * (-e).exp()
                    })
                    .sum::<f64>()
            }
            Self::Colville => {
                let (x1, x2, x3, x4) = (x[0], x[1], x[2], x[3]);
                100.0 * (x1 * x1 - x2).powi(2)
                    + (x1 - 1.0).powi(2)
                    + (x3 - 1.0).powi(2)
                    + 90.0 * (x3 * x3 - x4).powi(2)
                    + 10.1 * ((x2 - 1.0).powi(2) + (x4 - 1.0).powi(2))
                    + 19.8 * (x2 - 1.0) * (x4 - 1.0)
            }
            Self::Borehole => {
                let (r_w, r, t_u, h_u, t_l, h_l, l, k_w) =
                    (x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]);
                let log_rr = (r / r_w).ln();
                let numerator = 2.0 * PI * t_u * (h_u - h_l);
                let denominator =
                    log_rr * (1.0 + 2.0 * l * t_u / (log_rr * r_w * r_w * k_w) + t_u / t_l);
                numerator / denominator
            }
        }
    }

    /// Evaluates the function on every row of an already-scaled input matrix.
    pub fn evaluate_rows(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(x.nrows());
        let mut row = vec![0.0; self.dimension()];
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                row[j] = x[(i, j)];
            }
            out[i] = self.evaluate(&row);
        }
        out
    }
}

/// A Latin hypercube design on [0,1)^d: per column, exactly one point in
/// each of the n equal-width strata.
#[derive(Debug, Clone)]
pub struct Design {
    pub points: DMatrix<f64>,
    pub seed: u64,
}

/// Plain random LHS: per column, a random stratum permutation with uniform
/// jitter inside each stratum. Deterministic per seed.
pub fn latin_hypercube(n: usize, d: usize, seed: u64) -> Design {
    assert!(n >= 1 && d >= 1, "design needs n >= 1 and d >= 1");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = DMatrix::zeros(n, d);
    let mut strata: Vec<usize> = (0..n).collect();
    for j in 0..d {
        strata.shuffle(&mut rng);
        for (i, &s) in strata.iter().enumerate() {
            let jitter: f64 = rng.gen();
            points[(i, j)] = (s as f64 + jitter) / n as f64;
        }
    }
    Design { points, seed }
}

/// Affine map of a unit-cube design onto per-dimension (low, high) bounds.
pub fn scale_to_domain(design: &Design, bounds: &[(f64, f64)]) -> Result<DMatrix<f64>> {
    let d = design.points.ncols();
    if bounds.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            actual: bounds.len(),
        });
    }
    for (j, &(low, high)) in bounds.iter().enumerate() {
        if !low.is_finite() || !high.is_finite() || low >= high {
            return Err(Error::InvalidBounds {
                dimension: j,
                low,
                high,
            });
        }
    }
    let mut scaled = design.points.clone();
    for j in 0..d {
        let (low, high) = bounds[j];
        for i in 0..scaled.nrows() {
            scaled[(i, j)] = low + scaled[(i, j)] * (high - low);
        }
    }
    Ok(scaled)
}

/// Reads a comma-separated file with one header row: the first
/// `input_columns` columns become inputs, the next column the output.
/// Bounds are inferred per column and outputs are centered.
pub fn load_dataset(path: &Path, input_columns: usize) -> Result<Dataset> {
    if input_columns == 0 {
        return Err(Error::InvalidParameter(
            "need at least one input column".into(),
        ));
    }
    let required = input_columns + 1;
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let header_width = match lines.next() {
        Some((_, header)) => header.split(',').count(),
        None => {
            return Err(Error::MalformedRow { line: 1 });
        }
    };
    if header_width < required {
        return Err(Error::TooFewColumns {
            line: 1,
            found: header_width,
            required,
        });
    }

    let mut inputs: Vec<f64> = Vec::new();
    let mut outputs: Vec<f64> = Vec::new();
    let mut n = 0usize;
    for (idx, raw) in lines {
        let line = idx + 1; // 1-based for error reporting
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != header_width {
            return Err(Error::MalformedRow { line });
        }
        for (column, field) in fields.iter().take(required).enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| Error::NonNumericField {
                line,
                column,
                field: field.trim().to_string(),
            })?;
            if column < input_columns {
                inputs.push(value);
            } else {
                outputs.push(value);
            }
        }
        n += 1;
    }

    let x = DMatrix::from_row_slice(n, input_columns, &inputs);
    let y = DVector::from_vec(outputs);
    Dataset::new(x, y)
}
