use std::process::ExitCode;

fn main() -> ExitCode {
    quadgit_cli::cli::main_with(std::env::args_os())
}
