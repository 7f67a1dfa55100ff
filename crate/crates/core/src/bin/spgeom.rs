use std::io::Write;
use std::process::ExitCode;

use siegel_fiber::cli::{run, EXIT_FAIL, EXIT_PASS};

fn main() -> ExitCode {
    let (code, text) = run(std::env::args_os());
    // A closed pipe downstream is not an error of ours.
    let _ = if code == EXIT_PASS || code == EXIT_FAIL {
        writeln!(std::io::stdout(), "{text}")
    } else {
        writeln!(std::io::stderr(), "{text}")
    };
    ExitCode::from(code as u8)
}
