fn main() {
    std::process::exit(lzforge::cli::run(std::env::args_os()));
}
