use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(riesz_lab_cli::main_with_args(std::env::args_os()))
}
