use clap::Parser;

fn main() {
    let cli = isopair_lab::cli::Cli::parse();
    std::process::exit(isopair_lab::cli::run(cli));
}
