//! Surface formats and command-line front end for the stateful proof kernel.
//!
//! The core crate works on in-memory syntax trees; this crate gives those
//! trees a concrete life on disk.  A *bundle* is a pair of files sharing a
//! stem: `NAME.slt` declares a theory (signature, axiom schemas, defining
//! equations, and the state model it runs against) and an optional `NAME.slp`
//! holds named derivations over that theory.  The [`parse`] and [`print`]
//! modules are inverses on well-formed input, [`load`] turns a bundle into
//! checked kernel data, and [`commands`] implements the subcommands exposed
//! by the `hoare-extract` binary: `check`, `extract`, `run`, `verify`, and
//! `selftest`.

pub mod commands;
pub mod diag;
pub mod lex;
pub mod load;
pub mod parse;
pub mod print;
pub mod surface;
