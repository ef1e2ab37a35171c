use clap::Parser;

fn main() {
    let cli = eddy_dipole::cli::Cli::parse();
    std::process::exit(eddy_dipole::cli::run(cli));
}
