use clap::Parser;

fn main() {
    let cli = capsearch_cli::Cli::parse();
    let code = capsearch_cli::run(
        cli,
        &mut std::io::stdout().lock(),
        &mut std::io::stderr().lock(),
    );
    std::process::exit(code);
}
