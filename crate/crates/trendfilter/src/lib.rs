//! Trend filtering of a time series with confidence bands for the trend
//! projected onto the selected knots.
//!
//! Knots are chosen from one part of a Gaussian fission of the series and
//! bands are built from the other, so the bands remain valid after an
//! arbitrary, data-driven choice of knots.

mod admm;
mod band;
mod basis;
mod diff;
mod ipm;
mod io;
mod pipeline;
mod select;
mod variance;

pub use admm::{
    knot_position, knot_threshold, objective, trendfilter_admm, AdmmOptions, Solver, TrendFilter, TrendFit,
    WarmStart, MAX_ITERATIONS,
};
pub use band::{
    curve_length, pointwise_band, projected_mean, solve_multiplier, tube_lhs, uniform_band, uniform_multiplier,
    write_bands_csv, Band, BandKind, UniformMultiplier,
};
pub use basis::{falling_factorial_basis, Projection};
pub use diff::{diff_matrix, DiffMatrix};
pub use ipm::InteriorPointOptions;
pub use io::{read_series, read_series_file, Series};
pub use pipeline::{fission_bands, full_data_bands, BandOptions, BandResult};
pub use select::{cv_errors, knot_select, sure_score, KnotRule, LambdaGrid, SelectionDiagnostics, SureDf, CV_FOLDS};
pub use variance::estimate_sigma_differences;

#[derive(Debug, thiserror::Error)]
pub enum TrendError {
    #[error("series of length {n} is too short (need at least {needed})")]
    TooShort { n: usize, needed: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("solver did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("basis columns are linearly dependent")]
    RankDeficientBasis,
    #[error("uniform multiplier equation has no root")]
    NoRoot,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error(transparent)]
    Num(#[from] numkit::NumError),
    #[error(transparent)]
    Fission(#[from] fission_rules::FissionError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for TrendError {
    fn eq(&self, other: &Self) -> bool {
        self.to_string() == other.to_string()
    }
}
