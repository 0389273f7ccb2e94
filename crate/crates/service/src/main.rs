use clap::Parser;

fn main() {
    let cli = ntrl_service::cli::Cli::parse();
    match ntrl_service::cli::run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("{}", serde_json::to_string(&e.body()).expect("error body serializes"));
            std::process::exit(1);
        }
    }
}
