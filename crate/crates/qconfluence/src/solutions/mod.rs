//! Fundamental solutions on both sides of the confluence and the metrics
//! comparing them.

pub mod confluence;
pub mod connection;
pub mod diagonal;
pub mod offdiag;

pub use confluence::{
    boundedness_sample, confluence_error, diff_residual, finite_n_identity_residual, q_residual, sample_diff,
    sample_q, sample_rows, write_csv, BoundednessSample, ConfluenceRow, EntryError, GridSpec, SampleRow,
};
pub use connection::{connection_matrix, estimate_connection, ConnectionConstant};
pub use diagonal::{DiffDiagonal, QDiagonal};
pub use offdiag::{ConnectionMode, DiffFundamental, QFundamental, Scaled, SpiralTable};
