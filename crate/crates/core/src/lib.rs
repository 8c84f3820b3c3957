//! Sparse, outlier-insensitive line fitting.
//!
//! Finds a line through the origin minimizing the total L1 distance from the
//! points to their projections plus an L1 penalty on the direction, under the
//! restriction that every point projects along the same set of unit
//! directions (one coordinate is preserved). The penalty can be fixed
//! ([`fit_line`]) or swept over `(0, inf)` to obtain the whole piecewise
//! constant solution path ([`solution_path`]).
//!
//! ```
//! use l1fit::{fit_line, solution_path, DataMatrix};
//!
//! let data = DataMatrix::from_rows(&[[2.0, 1.0], [4.0, 2.1], [-1.0, -0.4]]).unwrap();
//! let fit = fit_line(&data, 0.5).unwrap();
//! assert_eq!(fit.preserved, Some(0));
//! let path = solution_path(&data).unwrap();
//! assert!(path.intervals.last().unwrap().hi.is_unbounded());
//! ```

pub mod baseline;
pub mod coordinate;
pub mod error;
pub mod fixed;
pub mod model;
pub mod path;
pub mod synth;

pub use baseline::{l2_best_fit_line, L2Fit};
pub use coordinate::{
    build_dual_certificate, oracle_subproblem, solve_subproblem, DualCertificate, RatioEntry, RatioList, Subsolution,
};
pub use error::{FitError, Result};
pub use fixed::{fit_line, fit_line_preserving, LineFitter};
pub use model::{
    discordance, evaluate_objective, l0_count, reconstruct, residual, DataMatrix, LineFit, PenaltyInterval,
    SolutionPath, UpperBound,
};
pub use path::{
    breakpoints_for_preserved, merge_path, per_coordinate_paths, query_path, query_path_right, solution_path,
    solution_path_with_parts, PerCoordinatePath,
};
pub use synth::{generate, lambda_summaries, SimConfig};

#[cfg(test)]
pub(crate) fn example_points() -> DataMatrix {
    DataMatrix::from_rows(&[
        [4.0, -2.0, 3.0, -6.0],
        [-3.0, 4.0, 2.0, -1.0],
        [2.0, 3.0, -3.0, -2.0],
        [-3.0, 4.0, 2.0, 3.0],
        [5.0, 3.0, 2.0, -1.0],
    ])
    .unwrap()
}
