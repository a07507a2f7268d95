use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = smm_detect::cli::run_cli(std::env::args_os(), &mut io::stdout(), &mut io::stderr());
    ExitCode::from(code as u8)
}
