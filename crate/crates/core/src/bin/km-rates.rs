use clap::Parser;
use km_rates::cli::{run, Cli};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("KM_RATES_LOG", "warn")).init();
    std::process::exit(run(Cli::parse()));
}
