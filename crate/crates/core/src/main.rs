use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use freshsim::cli::{self, Cli};

fn main() -> ExitCode {
    let args = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match cli::execute(&args, &mut out).and_then(|()| Ok(out.flush()?)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            if let Some(h) = cli::hint(&err) {
                eprintln!("hint: {h}");
            }
            ExitCode::from(2)
        }
    }
}
