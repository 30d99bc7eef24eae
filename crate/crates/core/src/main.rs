fn main() {
    std::process::exit(prefattach::cli::run(std::env::args_os()));
}
