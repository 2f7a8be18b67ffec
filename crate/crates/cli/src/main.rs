use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = arcfem_cli::Cli::parse();
    match arcfem_cli::execute(&cli, &mut std::io::stdout()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
