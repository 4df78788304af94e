fn main() {
    std::process::exit(exlasso::cli::run(std::env::args_os()));
}
