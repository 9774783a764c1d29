//! IO companion to `isopair-core`: JSON file formats for polynomials,
//! colligations, and exact rational polynomials, plus the `isopair-lab`
//! command-line interface.

pub mod cli;
pub mod formats;
