//! Command-line driver: configuration parsing, study orchestration,
//! CSV/SVG emission and run manifests.

pub mod config;
pub mod manifest;
pub mod run;
pub mod svg;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Entry point shared by the binary and the integration tests. Returns the
/// process exit code; diagnostics go to stderr.
pub fn cli_main(args: &[String]) -> i32 {
    match run::dispatch(args) {
        Ok(()) => 0,
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}
