fn main() {
    std::process::exit(cascade_core::cli::run(std::env::args_os()));
}
