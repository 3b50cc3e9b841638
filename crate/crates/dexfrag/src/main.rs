use clap::Parser;

fn main() {
    let cli = dexfrag::cli::Cli::parse();
    if let Err(err) = dexfrag::cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
