use clap::Parser;

fn main() {
    let cli = weldkg_cli::Cli::parse();
    if let Err(e) = weldkg_cli::run(&cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
