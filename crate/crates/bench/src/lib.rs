//! Fixture builders shared by the benchmark targets: datasets at the sizes
//! the experiment protocol actually visits (10 points per input dimension).

use priorgp::benchfuncs::{latin_hypercube, scale_to_domain, TestFunction};
use priorgp::{Dataset, Lengthscales};

/// Training dataset for a named test function on the unit cube.
pub fn function_dataset(name: &str, design_seed: u64) -> Dataset {
    let f = TestFunction::from_name(name).expect("known test function");
    let n = 10 * f.dimension();
    let design = latin_hypercube(n, f.dimension(), design_seed);
    let x = scale_to_domain(&design, &f.bounds()).expect("bounds match dimension");
    let y = f.evaluate_rows(&x);
    Dataset::with_bounds(x, y, f.bounds())
        .expect("valid dataset")
        .to_unit_cube()
        .expect("positive-width bounds")
}

/// Mid-range lengthscales for a scaled dataset of the given dimension.
pub fn moderate_lengthscales(d: usize) -> Lengthscales {
    Lengthscales::new(vec![0.25; d]).expect("positive lengthscales")
}
