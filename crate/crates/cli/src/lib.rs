//! Library side of the `edm` command: dataset files, the built-in tables,
//! report documents and the subcommands themselves.

pub mod builtin;
pub mod commands;
pub mod dataset;
pub mod report;
pub mod svg;
