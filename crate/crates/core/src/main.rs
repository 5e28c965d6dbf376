fn main() {
    std::process::exit(aic_core::cli::run_cli(std::env::args_os()));
}
