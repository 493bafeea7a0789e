use std::process::ExitCode;

fn main() -> ExitCode {
    open_majorana::cli::run(std::env::args_os())
}
