//! Numerical workbench for Riesz means of Dirichlet series with Euler
//! products: coefficient sieves, Perron kernels, contour checks, growth scans
//! and the Ingham averaging reduction.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod coeffs;
pub mod error;
pub mod fit;
pub mod ingham;
pub mod perron;
pub mod quad;
pub mod report;
pub mod riesz;
pub mod sum;
pub mod testbeds;

pub use error::{Error, ErrorClass, Result};
