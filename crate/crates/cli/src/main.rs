fn main() {
    rpls_cli::init_logging();
    std::process::exit(rpls_cli::run(std::env::args_os()));
}
