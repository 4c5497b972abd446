use clap::Parser;

fn main() {
    let cli = mu_probe::cli::Cli::parse();
    std::process::exit(mu_probe::cli::run(&cli));
}
