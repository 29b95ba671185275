mod args;
mod emit;
mod error;
mod load;
mod run;

use clap::Parser;

fn main() {
    let cli = args::Cli::parse();
    if let Err(e) = run::dispatch(cli) {
        eprintln!("error: {e}");
        let mut source = std::error::Error::source(&e);
        while let Some(s) = source {
            eprintln!("  caused by: {s}");
            source = s.source();
        }
        std::process::exit(1);
    }
}
