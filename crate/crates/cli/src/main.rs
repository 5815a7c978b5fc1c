use clap::Parser;

use schottky_mem_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(cli.command, &cli.overrides) {
        Ok(outcome) => {
            println!("{}", outcome.dir.display());
        }
        Err(e) => {
            eprintln!("smem {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
