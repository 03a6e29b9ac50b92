fn main() {
    std::process::exit(kpzlab::cli::run(std::env::args_os()));
}
