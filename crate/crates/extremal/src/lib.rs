//! Command-line front end for `extremal-core`: TOML scenarios, parallel
//! replicate runners, builtin verification suites and CSV/JSON/SVG output.

pub mod commands;
pub mod config;
pub mod output;
pub mod par;
pub mod suites;
