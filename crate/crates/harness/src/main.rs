fn main() {
    std::process::exit(whittle_harness::cli::run(std::env::args_os()));
}
