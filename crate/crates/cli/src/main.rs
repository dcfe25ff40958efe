use clap::Parser;

fn main() {
    let cli = seriation_cli::Cli::parse();
    if let Err(e) = seriation_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
