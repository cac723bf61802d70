fn main() {
    std::process::exit(pws::cli::run(std::env::args_os()));
}
