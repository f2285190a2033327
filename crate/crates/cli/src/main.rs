use clap::Parser;

fn main() {
    let cli = afbench_cli::Cli::parse();
    if let Err(e) = afbench_cli::run(&cli) {
        eprintln!("afbench: {}", e);
        std::process::exit(e.exit_code());
    }
}
