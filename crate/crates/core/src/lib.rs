//! Numerical toolkit for planar immersions with prescribed Jacobian
//! determinant, curl and boundary values.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! evaluate per-node work with rayon; results are bit-identical either way.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

mod band;
pub mod compat;
pub mod counterexample3d;
mod error;
pub mod field;
pub mod ga2;
pub mod geodesic;
pub mod maps;
mod math;
pub mod metric;
mod par;
pub mod solver;

pub use error::{Error, Result};
pub use field::{Grid2, MapField, Mat2, ScalarField};
pub use ga2::{Multivector2, Vector2};
pub use maps::AnalyticMap;
pub use metric::{EigenData, Metric2, MetricField};
