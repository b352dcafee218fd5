fn main() {
    std::process::exit(espa::cli::run_cli(std::env::args_os()));
}
