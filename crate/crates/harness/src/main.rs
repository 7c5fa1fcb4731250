fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = da_harness::init_thread_pool() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
    std::process::exit(da_harness::cli::run(std::env::args_os()));
}
