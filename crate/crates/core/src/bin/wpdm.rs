fn main() {
    std::process::exit(wpdm_core::cli::run(std::env::args_os()));
}
