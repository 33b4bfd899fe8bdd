use clap::Parser;

fn main() {
    let cli = latree::cli::Cli::parse();
    if let Err(e) = latree::cli::run(cli) {
        eprintln!("error: {:#}", e);
        std::process::exit(latree::exit::code_for(&e));
    }
}
