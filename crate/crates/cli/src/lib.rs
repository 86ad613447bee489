//! Command-line front end for `affdim-core`: spec files, JSON reports and
//! the analysis commands.

pub mod args;
pub mod commands;
pub mod error;
pub mod report;
pub mod spec;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;

pub use args::Cli;
pub use error::{CliError, ExitCode};
pub use report::Report;
pub use spec::IfsSpecFile;

/// Parses `args` (including the program name), runs the command and writes
/// the report to `--out` or `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::Input.code() } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(pool) => pool,
        Err(e) => {
            let _ = writeln!(stderr, "error: cannot start worker threads: {e}");
            return ExitCode::Input.code();
        }
    };
    let outcome = pool.install(|| commands::execute(&cli, &argv));
    match outcome {
        Ok(outcome) => {
            let text = report::to_json(&outcome.report);
            let written = match &cli.out {
                Some(path) => std::fs::write(path, &text)
                    .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display()))),
                None => stdout
                    .write_all(text.as_bytes())
                    .map_err(|e| CliError::io(format!("cannot write report: {e}"))),
            };
            match written {
                Ok(()) => outcome.code.code(),
                Err(e) => {
                    let _ = writeln!(stderr, "error: {e}");
                    e.code.code()
                }
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code.code()
        }
    }
}
