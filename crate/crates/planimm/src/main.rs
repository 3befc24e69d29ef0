use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(planimm::cli::run(std::env::args_os()))
}
