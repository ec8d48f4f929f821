fn main() {
    std::process::exit(ecmkit::cli::run(std::env::args_os()));
}
