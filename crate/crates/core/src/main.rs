use clap::Parser;

fn main() {
    let cli = fbsr::cli::Cli::parse();
    if let Err(err) = fbsr::cli::run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}
