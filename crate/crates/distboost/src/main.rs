use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(distboost::cli::run_cli(std::env::args()) as u8)
}
