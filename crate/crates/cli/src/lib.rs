//! Chain orchestration, verification suites and file output around
//! `gist-nuts-core`. The `gist-nuts` binary exposes all of it on the command
//! line; see the crate README for usage.

pub mod output;
pub mod run;
pub mod verify;
