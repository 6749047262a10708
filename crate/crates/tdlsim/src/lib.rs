//! Command-line front end for the TDL TDC simulator: config files, data
//! formats, threaded experiment execution, and the subcommands that tie
//! them together. The physics lives in `tdlsim-core`; this crate owns
//! everything that touches a file, a flag, or a thread.

pub mod cli;
pub mod commands;
pub mod config;
pub mod files;
pub mod parallel;

pub use cli::Cli;
pub use commands::CliError;

/// Runs a parsed invocation and maps the outcome to a process exit code,
/// printing failures as one JSON object on stderr.
pub fn run_to_exit_code(cli: Cli) -> i32 {
    match commands::run(cli) {
        Ok(()) => 0,
        Err(e) => {
            let diag = serde_json::json!({ "kind": e.kind(), "error": e.to_string() });
            eprintln!("{diag}");
            e.exit_code()
        }
    }
}
