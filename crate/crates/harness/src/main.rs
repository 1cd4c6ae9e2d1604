use std::process::ExitCode;

fn main() -> ExitCode {
    mgd_harness::cli::main_with(std::env::args_os())
}
