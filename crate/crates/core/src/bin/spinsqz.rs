use clap::Parser;
use spinsqz::cli::{run, RunConfig};

fn main() {
    std::process::exit(run(&RunConfig::parse()));
}
