use clap::Parser;

fn main() {
    let cli = tdlsim::Cli::parse();
    std::process::exit(tdlsim::run_to_exit_code(cli));
}
