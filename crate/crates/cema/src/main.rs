use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(cema::cli::run_cli(std::env::args_os()))
}
