//! The `avglab` harness: argument handling, CSV output, subcommands and the
//! acceptance suite.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod output;

/// Runs an invocation and returns the process exit code: 0 on success, 1 when
/// a tolerance check fails, 2 for invalid usage or a failed run.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let inv = match config::parse_args(argv) {
        Ok(inv) => inv,
        Err(config::UsageError::Clap(e)) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
        Err(e) => {
            eprintln!("{e}");
            return 2;
        }
    };
    if let Some(n) = inv.command.common().threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n as usize).build_global();
    }
    match commands::execute(&inv) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {}", e.0);
            2
        }
    }
}
