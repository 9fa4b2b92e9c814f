fn main() {
    std::process::exit(nullctl::cli::run(std::env::args_os()));
}
