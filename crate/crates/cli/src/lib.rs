//! Spec files, the fixture catalog, result serialization and the command
//! line front end over `subweyl-core`.

pub mod app;
pub mod catalog;
pub mod output;
pub mod specfile;

pub use specfile::{load, parse_spec, LoadError, Spec};
