//! Library side of the kernelfill CLI: file formats, subcommand
//! implementations and the missing-ratio sweep, kept callable so integration
//! tests can drive them in-process.

// `!(x >= 0.0)` validation deliberately rejects NaN; index loops mirror the
// matrix math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod commands;
pub mod error;
pub mod io;
pub mod logging;
pub mod sweep;

pub use error::{CliError, CliResult};
