//! Command-line front end, file formats and experiment drivers for
//! [`roughpath_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod app;
pub mod config;
pub mod error;
pub mod experiments;
pub mod expr;
pub mod fields;
pub mod io;
pub mod oracle;
pub mod parallel;
