use clap::Parser;
use lpembed_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("lpembed: error: {err}");
        std::process::exit(err.exit_code());
    }
}
