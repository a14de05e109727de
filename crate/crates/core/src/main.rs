fn main() {
    std::process::exit(numtok::cli::run(std::env::args_os()));
}
