use clap::Parser;
use optospring::cli::{self, Cli};

fn main() {
    // Usage errors exit with code 2 via clap.
    let cli = Cli::parse();
    match cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{}", cli::error_json(&e));
            std::process::exit(1);
        }
    }
}
