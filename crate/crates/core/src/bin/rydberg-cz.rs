use std::process::ExitCode;

fn main() -> ExitCode {
    match rydberg_cz::cli::run_from_args(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(rydberg_cz::cli::exit_code(&e))
        }
    }
}
