use std::process::ExitCode;

fn main() -> ExitCode {
    let code = match perisolve::cli::parse_args(std::env::args_os()) {
        Ok(config) => perisolve::cli::run(config),
        Err(e) => {
            e.print();
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
