use clap::Parser;

fn main() {
    let cli = pvstab_cli::Cli::parse();
    std::process::exit(pvstab_cli::main_with(cli));
}
