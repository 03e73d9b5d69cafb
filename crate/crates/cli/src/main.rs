use std::process::ExitCode;

use clap::Parser;
use futaki_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    ExitCode::from(run(&cli, &mut std::io::stdout(), &mut std::io::stderr()))
}
