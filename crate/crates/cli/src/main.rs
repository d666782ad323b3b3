fn main() {
    std::process::exit(bbm_cli::cli::run(std::env::args_os()));
}
