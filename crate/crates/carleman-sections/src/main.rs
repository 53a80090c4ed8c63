use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(carleman_sections::cli::run(std::env::args_os()) as u8)
}
