use clap::Parser;

use mvmc::cli::{exit_code, run, Cli, Status};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = run(Cli::parse());
    match &result {
        Ok(Status::NotConverged) => eprintln!("warning: solver stopped at max_outer_iters before converging"),
        Err(e) => eprintln!("error: {e}"),
        Ok(Status::Ok) => {}
    }
    std::process::exit(exit_code(&result));
}
