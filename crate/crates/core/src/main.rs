fn main() {
    std::process::exit(bugbrief::harness::cli::run(std::env::args_os()));
}
