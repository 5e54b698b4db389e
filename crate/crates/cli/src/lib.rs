//! Library side of the `modal-sim` binary: the batch commands and the live
//! steering server, kept here so they can be tested in-process.

pub mod commands;
pub mod server;

pub use commands::CliError;
