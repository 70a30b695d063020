//! Simulation and verification toolbox for Brownian local time and excursion theory.
//!
//! The crate is organised around a handful of layers:
//!
//! * [`paths`]: seed-reproducible samplers (Brownian motion, bridges, Bessel and
//!   squared-Bessel processes, Euler SDEs, the Walsh spider, and a streaming
//!   [`paths::Walker`] for experiments that run until a random time).
//! * [`localtime`] and [`excursions`]: path functionals (occupation and Tanaka
//!   local-time estimators, zeros, extrema, excursion decompositions).
//! * [`reflaws`]: closed-form reference laws and transforms.
//! * [`stats`]: goodness-of-fit and moment tests producing [`stats::TestReport`]s.
//! * [`diffusions`], [`sturm`], [`skorokhod`], [`intersect2d`]: scale functions and
//!   speed measures, Sturm–Liouville / Feynman–Kac solvers, the Azéma–Yor embedding
//!   and planar self-intersection local time.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diffusions;
pub mod error;
pub mod excursions;
pub mod intersect2d;
pub mod localtime;
pub mod paths;
pub mod quad;
pub mod reflaws;
pub mod rng;
pub mod skorokhod;
pub mod special;
pub mod stats;
pub mod sturm;

pub use error::{Error, Result};
pub use paths::{Path, TimeGrid, TimeSeries};
pub use stats::TestReport;
