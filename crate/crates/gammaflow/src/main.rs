use clap::Parser;

fn main() {
    let cli = gammaflow::cli::Cli::parse();
    std::process::exit(gammaflow::cli::execute(cli));
}
