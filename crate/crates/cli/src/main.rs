fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("MOPO_LOG", "warn")).init();
    std::process::exit(mopo_cli::main_from(std::env::args_os()));
}
