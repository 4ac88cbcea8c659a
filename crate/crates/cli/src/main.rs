use clap::Parser;
use fockdu::args::{execute, Cli};
use fockdu::exit;

fn main() {
    let cli = Cli::parse();
    let code = match execute(&cli) {
        Ok(outcome) if outcome.failures.is_empty() => exit::SUCCESS,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("FAILED: {f}");
            }
            exit::ACCEPTANCE
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    std::process::exit(code);
}
