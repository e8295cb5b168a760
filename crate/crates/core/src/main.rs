fn main() {
    std::process::exit(freeclt::cli::run(std::env::args_os()));
}
