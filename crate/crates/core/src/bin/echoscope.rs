use clap::Parser;
use echoscope::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
