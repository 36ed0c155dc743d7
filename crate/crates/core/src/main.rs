use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("LOGIGAN_LOG", "error")).init();
    std::process::exit(logigan::cli::main_with_args(std::env::args_os()));
}
