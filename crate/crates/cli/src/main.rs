use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = scoretest_cli::args::Cli::parse();
    if let Err(e) = scoretest_cli::run(&cli) {
        log::error!("{e}");
        std::process::exit(e.exit_code());
    }
}
