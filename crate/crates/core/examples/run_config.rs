//! Run any subcommand from a TOML file without the binary, then print the
//! manifest. Same arguments as `ddfiber`.
//!
//! cargo run --example run_config -- w-curve --config configs/w_curve.toml --out /tmp/w

use clap::Parser;
use ddfiber::cli::{run, Args};

fn main() {
    let args = Args::parse();
    match run(&args) {
        Ok(manifest) => println!(
            "{}",
            serde_json::to_string_pretty(&manifest["results"]).unwrap()
        ),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
