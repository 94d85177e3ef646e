use std::process::ExitCode;

fn main() -> ExitCode {
    almost_safe::cli::run(std::env::args_os())
}
