use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).format_timestamp(None).init();
    let cli = zonalgrav::cli::Cli::parse();
    std::process::exit(zonalgrav::cli::run(cli));
}
