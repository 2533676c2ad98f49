//! Small reference datasets used by tests, examples and the README.

use crate::linalg::Matrix;
use crate::model::Instance;

/// Ten points close to the line `y = x` plus one far-off point.
pub const FIGURE1_POINTS: [[f64; 2]; 11] = [
    [-0.5763, -0.4971],
    [-1.0606, -0.9408],
    [-0.0914, -0.1326],
    [0.4123, 0.2850],
    [1.5009, 1.5670],
    [-1.0224, -1.0361],
    [0.8172, 0.9383],
    [-1.1646, -1.2677],
    [0.3191, 0.1952],
    [0.5238, 0.6348],
    [-3.5000, 2.5000],
];

/// Row index of the far-off point in [`FIGURE1_POINTS`].
pub const FIGURE1_OUTLIER: usize = 10;

/// Two points in the plane whose equidistance set splits the unit circle into
/// four arcs and four boundary points.
pub const FIGURE2_POINTS: [[f64; 2]; 2] = [[3.5, 3.0], [-3.5, 0.0]];

pub fn figure1(rank: usize, outliers: usize) -> Instance {
    let data = Matrix::from_rows(2, &FIGURE1_POINTS).expect("static data");
    Instance::new(data, rank, outliers).expect("static data")
}

/// The two-point instance with `r = 1`, `k = 1`.
pub fn figure2() -> Instance {
    let data = Matrix::from_rows(2, &FIGURE2_POINTS).expect("static data");
    Instance::new(data, 1, 1).expect("static data")
}
