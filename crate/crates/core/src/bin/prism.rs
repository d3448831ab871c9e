fn main() {
    std::process::exit(prism_core::cli::run(std::env::args_os()));
}
