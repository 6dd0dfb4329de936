use basis_cli::{run, Cli, EXIT_ERROR};
use clap::Parser;

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    };
    std::process::exit(code);
}
