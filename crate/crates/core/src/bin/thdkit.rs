fn main() {
    std::process::exit(thdkit::cli::run(std::env::args_os()));
}
